//! Corpus comparison statistics: selection overlap, sentence length, OOV
//! counts, Hellinger distance and the perplexity-by-cut curve.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::{self, Smoothing};
use crate::par;
use crate::selection::SelectionResult;

/// `|A ∩ B| / max(|A|, |B|)` over the index sets; 0 when both are empty.
pub fn overlap(a: &[usize], b: &[usize]) -> f64 {
    let sa: FxHashSet<usize> = a.iter().copied().collect();
    let sb: FxHashSet<usize> = b.iter().copied().collect();
    let denom = sa.len().max(sb.len());
    if denom == 0 {
        log::info!("overlap of two empty selections taken as 0");
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / denom as f64
}

pub fn avg_sentence_length(corpus: &Corpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(corpus.origin().to_owned()));
    }
    Ok(corpus.total_tokens() as f64 / corpus.len() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OovCount {
    /// Token occurrences missing from the reference vocabulary.
    pub tokens: u64,
    /// Distinct missing tokens.
    pub types: usize,
}

pub fn oov_count(target: &Corpus, reference: &Vocabulary) -> OovCount {
    let mut counts = vec![0u64; target.symbols().len()];
    for s in target.sentences() {
        for &id in s.ids() {
            counts[id as usize] += 1;
        }
    }
    let mut out = OovCount::default();
    for (id, &c) in counts.iter().enumerate() {
        if c > 0 && !reference.contains(target.symbols().name(id as u32)) {
            out.tokens += c;
            out.types += 1;
        }
    }
    out
}

/// An explicit, sorted token list that distributions are defined over.
pub type SharedVocab = Arc<[String]>;

/// Sorted union of the corpora's token types.
pub fn shared_vocab(corpora: &[&Corpus]) -> SharedVocab {
    let mut all: BTreeSet<&str> = BTreeSet::new();
    for c in corpora {
        for s in c.sentences() {
            all.extend(s.tokens());
        }
    }
    all.into_iter().map(str::to_owned).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnigramDistribution {
    vocab: SharedVocab,
    probs: Vec<f64>,
}

impl UnigramDistribution {
    /// Normalizes non-negative weights over `vocab`.
    pub fn from_weights(vocab: SharedVocab, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != vocab.len() {
            return Err(Error::LengthMismatch {
                what: "weights and vocabulary",
                left: weights.len(),
                right: vocab.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(UnigramDistribution { vocab, probs })
    }

    /// Relative frequencies of `corpus` over `vocab`, which must cover it.
    pub fn from_corpus(corpus: &Corpus, vocab: SharedVocab) -> Result<Self> {
        let mut weights = vec![0.0; vocab.len()];
        {
            let index: FxHashMap<&str, usize> = vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
            for s in corpus.sentences() {
                for tok in s.tokens() {
                    let i = *index
                        .get(tok)
                        .ok_or_else(|| Error::invalid(format!("token `{tok}` is outside the shared vocabulary")))?;
                    weights[i] += 1.0;
                }
            }
        }
        Self::from_weights(vocab, weights)
    }

    pub fn vocab(&self) -> &SharedVocab {
        &self.vocab
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `(1/√2) · ‖√P − √Q‖₂`, for distributions over the same vocabulary.
pub fn hellinger(p: &UnigramDistribution, q: &UnigramDistribution) -> Result<f64> {
    if !Arc::ptr_eq(&p.vocab, &q.vocab) && p.vocab != q.vocab {
        return Err(Error::VocabularyMismatch);
    }
    let sum: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok((sum / 2.0).sqrt().min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmParams {
    pub order: usize,
    pub smoothing: Smoothing,
}

impl Default for LmParams {
    fn default() -> Self {
        LmParams {
            order: lm::DEFAULT_ORDER,
            smoothing: Smoothing::ModifiedKneserNey,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub cut: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerplexityCurve {
    pub points: Vec<CurvePoint>,
    /// Cut with the lowest in-domain perplexity (smallest cut on ties).
    pub argmin_cut: usize,
}

/// In-domain perplexity under LMs trained on growing top-ranked subsets of
/// `pool`. Low perplexity cutoffs need not coincide with the best cutoffs for
/// downstream translation quality.
///
/// `workers == 1` trains one model at a time; otherwise cuts are trained
/// concurrently on that many workers (0 = all cores).
pub fn perplexity_selection_curve(
    in_domain: &Corpus,
    pool: &Corpus,
    ranking: &SelectionResult,
    cuts: &[usize],
    params: LmParams,
    workers: usize,
) -> Result<PerplexityCurve> {
    if cuts.is_empty() {
        return Err(Error::invalid("no cut sizes given"));
    }
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("cut sizes must be strictly ascending"));
    }
    if *cuts.last().unwrap() > ranking.len() {
        return Err(Error::invalid(format!(
            "cut {} exceeds ranking length {}",
            cuts.last().unwrap(),
            ranking.len()
        )));
    }
    let point = |&cut: &usize| -> Result<CurvePoint> {
        let top: Vec<usize> = ranking.ranking[..cut].iter().map(|s| s.index).collect();
        let model = lm::train_with(&pool.subset(&top), params.order, params.smoothing)?;
        Ok(CurvePoint {
            cut,
            value: lm::perplexity(&model, in_domain),
        })
    };
    let points: Vec<CurvePoint> = if workers == 1 {
        cuts.iter().map(point).collect::<Result<_>>()?
    } else {
        par::with_workers(workers, || cuts.par_iter().map(point).collect::<Result<Vec<_>>>())??
    };
    let argmin_cut = points
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.cut.cmp(&b.cut)))
        .map(|p| p.cut)
        .expect("non-empty");
    Ok(PerplexityCurve { points, argmin_cut })
}

/// Statistics of one top-`cut` selection relative to the in-domain corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutStats {
    pub cut: usize,
    pub avg_sentence_length: f64,
    pub oov_tokens: u64,
    pub oov_types: usize,
    pub hellinger: f64,
    /// Overlap with a second ranking's top `cut`, when one is given.
    pub overlap: Option<f64>,
}

/// Per-cut statistics for nested cuts of one ranking. Hellinger distances use
/// the union vocabulary of the in-domain corpus and the whole pool.
pub fn cut_report(
    in_domain: &Corpus,
    pool: &Corpus,
    ranking: &SelectionResult,
    other: Option<&SelectionResult>,
    cuts: &[usize],
) -> Result<Vec<CutStats>> {
    if cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("cut sizes must be strictly ascending"));
    }
    for r in std::iter::once(ranking).chain(other) {
        if let Some(&last) = cuts.last() {
            if last > r.len() {
                return Err(Error::invalid(format!("cut {last} exceeds ranking length {}", r.len())));
            }
        }
    }
    if cuts.first() == Some(&0) {
        return Err(Error::invalid("cut sizes must be positive"));
    }
    let vocab = shared_vocab(&[in_domain, pool]);
    let index: FxHashMap<&str, usize> = vocab.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let p_in = UnigramDistribution::from_corpus(in_domain, vocab.clone())?;
    let pool_ids: Vec<usize> = (0..pool.symbols().len())
        .map(|id| index.get(pool.symbols().name(id as u32)).copied().unwrap_or(usize::MAX))
        .collect();

    let mut weights = vec![0.0; vocab.len()];
    let mut selected = Vocabulary::default();
    let mut tokens = 0usize;
    let mut done = 0usize;
    let mut out = Vec::with_capacity(cuts.len());
    for &cut in cuts {
        for s in &ranking.ranking[done..cut] {
            let sentence = pool.sentence(s.index);
            tokens += sentence.len();
            for (&id, tok) in sentence.ids().iter().zip(sentence.tokens()) {
                weights[pool_ids[id as usize]] += 1.0;
                selected.add(tok, 1);
            }
        }
        done = cut;
        let q = UnigramDistribution::from_weights(vocab.clone(), weights.clone())?;
        let oov = oov_count(in_domain, &selected);
        let overlap = other.map(|o| {
            let a: Vec<usize> = ranking.ranking[..cut].iter().map(|s| s.index).collect();
            let b: Vec<usize> = o.ranking[..cut].iter().map(|s| s.index).collect();
            overlap(&a, &b)
        });
        out.push(CutStats {
            cut,
            avg_sentence_length: tokens as f64 / cut as f64,
            oov_tokens: oov.tokens,
            oov_types: oov.types,
            hellinger: hellinger(&p_in, &q)?,
            overlap,
        });
    }
    Ok(out)
}

pub fn write_cut_report_tsv(rows: &[CutStats], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "cut\tavg_sentence_length\toov_tokens\toov_types\thellinger\toverlap").map_err(io)?;
    for r in rows {
        let overlap = r.overlap.map_or_else(|| "NA".to_owned(), |o| o.to_string());
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.cut, r.avg_sentence_length, r.oov_tokens, r.oov_types, r.hellinger, overlap
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Plot-ready `cut,value` CSV.
pub fn write_curve_csv(points: &[CurvePoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "cut,value").map_err(io)?;
    for p in points {
        writeln!(w, "{},{}", p.cut, p.value).map_err(io)?;
    }
    w.flush().map_err(io)
}
