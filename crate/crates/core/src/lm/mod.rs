//! Back-off n-gram language models.
//!
//! Training uses interpolated modified Kneser-Ney smoothing. The trained model
//! is stored the way an ARPA file describes it: for every observed n-gram the
//! interpolated probability, and for every observed context its back-off
//! weight. Scoring walks from the longest matching n-gram down, adding back-off
//! weights of the contexts it skips. All internal values are log base 2.

mod arpa;
mod counts;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use arpa::{export_arpa, import_arpa, read_arpa, write_arpa};
pub use counts::{CountTable, Discounts, FALLBACK_DISCOUNT};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_ORDER: usize = 5;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

pub const UNK_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    #[default]
    ModifiedKneserNey,
    /// Add-one unigram estimate. Only meant for tests with hand-computed values.
    AddOne,
}

impl std::fmt::Display for Smoothing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Smoothing::ModifiedKneserNey => "modified-kneser-ney",
            Smoothing::AddOne => "add-one",
        })
    }
}

impl std::str::FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modified-kneser-ney" | "mkn" => Ok(Smoothing::ModifiedKneserNey),
            "add-one" => Ok(Smoothing::AddOne),
            _ => Err(Error::invalid(format!(
                "unknown smoothing `{s}` (expected modified-kneser-ney or add-one)"
            ))),
        }
    }
}

/// Whether the end-of-sentence event is predicted and counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EndOfSentence {
    #[default]
    Include,
    Exclude,
}

/// Model vocabulary. Ids 0, 1 and 2 are `<unk>`, `<s>` and `</s>`.
#[derive(Debug, Clone)]
pub struct ModelVocab {
    ids: FxHashMap<Box<str>, u32>,
    tokens: Vec<Box<str>>,
}

impl Default for ModelVocab {
    fn default() -> Self {
        let mut v = ModelVocab {
            ids: FxHashMap::default(),
            tokens: Vec::new(),
        };
        v.intern(UNK);
        v.intern(BOS);
        v.intern(EOS);
        v
    }
}

impl ModelVocab {
    pub fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.into());
        self.ids.insert(token.into(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    /// Id of `token`, with out-of-vocabulary tokens mapped to `<unk>`.
    pub fn id(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    /// Number of tokens including `<s>`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Ids that can be predicted: everything except `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = u32> {
        (0..self.tokens.len() as u32).filter(|&id| id != BOS_ID)
    }
}

/// One stored n-gram. Context-only entries (n-grams ending in `<s>`, which is
/// never predicted) carry a probability of negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub log2_prob: f64,
    pub log2_backoff: Option<f64>,
}

impl Entry {
    pub fn is_event(&self) -> bool {
        self.log2_prob.is_finite()
    }
}

pub type NGramTable = FxHashMap<Box<[u32]>, Entry>;

#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: ModelVocab,
    tables: Vec<NGramTable>,
    /// Per-order discounts; empty for add-one and imported models.
    discounts: Vec<Discounts>,
}

fn padded_ids(corpus: &Corpus, order: usize, vocab: &mut ModelVocab) -> (Vec<u32>, Vec<usize>) {
    let mut map = vec![u32::MAX; corpus.symbols().len()];
    let mut flat = Vec::with_capacity(corpus.total_tokens() + corpus.len() * order);
    let mut offsets = vec![0];
    for sentence in corpus.sentences() {
        flat.extend(std::iter::repeat_n(BOS_ID, order - 1));
        for &sym in sentence.ids() {
            if map[sym as usize] == u32::MAX {
                map[sym as usize] = vocab.intern(corpus.symbols().name(sym));
            }
            flat.push(map[sym as usize]);
        }
        flat.push(EOS_ID);
        offsets.push(flat.len());
    }
    (flat, offsets)
}

#[derive(Default, Clone, Copy)]
struct ContextStats {
    total: u64,
    n1: u64,
    n2: u64,
    n3plus: u64,
}

impl ContextStats {
    fn gamma(&self, d: &Discounts) -> f64 {
        (d.d1 * self.n1 as f64 + d.d2 * self.n2 as f64 + d.d3plus * self.n3plus as f64) / self.total as f64
    }
}

/// Trains an interpolated modified Kneser-Ney model of the given order.
pub fn train(corpus: &Corpus, order: usize) -> Result<NGramModel> {
    train_with(corpus, order, Smoothing::ModifiedKneserNey)
}

pub fn train_with(corpus: &Corpus, order: usize, smoothing: Smoothing) -> Result<NGramModel> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(corpus.origin().to_owned()));
    }
    if order == 0 {
        return Err(Error::invalid("LM order must be at least 1"));
    }
    if smoothing == Smoothing::AddOne && order != 1 {
        return Err(Error::invalid("add-one smoothing is only defined for order 1"));
    }
    let mut vocab = ModelVocab::default();
    let (flat, offsets) = padded_ids(corpus, order, &mut vocab);
    let counts = CountTable::from_padded(order, offsets.windows(2).map(|w| &flat[w[0]..w[1]]));
    match smoothing {
        Smoothing::ModifiedKneserNey => Ok(estimate_kneser_ney(vocab, &counts)),
        Smoothing::AddOne => Ok(estimate_add_one(vocab, &counts)),
    }
}

/// Count tables for `corpus`, together with the vocabulary the ids refer to.
pub fn count_ngrams(corpus: &Corpus, order: usize) -> (ModelVocab, CountTable) {
    let mut vocab = ModelVocab::default();
    let (flat, offsets) = padded_ids(corpus, order, &mut vocab);
    let counts = CountTable::from_padded(order, offsets.windows(2).map(|w| &flat[w[0]..w[1]]));
    (vocab, counts)
}

fn estimate_add_one(vocab: ModelVocab, counts: &CountTable) -> NGramModel {
    let unigrams = counts.counts(1);
    let total: u64 = unigrams.values().sum();
    let size = vocab.predictable().count() as f64;
    let denom = total as f64 + size;
    let mut table = NGramTable::default();
    for id in vocab.predictable() {
        let c = unigrams.get(&[id][..]).copied().unwrap_or(0);
        table.insert(
            Box::new([id]),
            Entry {
                log2_prob: ((c as f64 + 1.0) / denom).log2(),
                log2_backoff: None,
            },
        );
    }
    NGramModel {
        order: 1,
        vocab,
        tables: vec![table],
        discounts: Vec::new(),
    }
}

fn estimate_kneser_ney(vocab: ModelVocab, counts: &CountTable) -> NGramModel {
    let order = counts.order();
    let uniform = 1.0 / vocab.predictable().count() as f64;
    let mut tables: Vec<NGramTable> = vec![NGramTable::default(); order];
    let mut discounts = Vec::with_capacity(order);

    for n in 1..=order {
        let grams = counts.counts(n);
        let d = Discounts::estimate(counts.counts_of_counts(n)).unwrap_or_else(|| {
            log::warn!("order {n}: counts-of-counts too sparse for discount estimation, using {FALLBACK_DISCOUNT}");
            Discounts::flat(FALLBACK_DISCOUNT)
        });

        let mut contexts: FxHashMap<&[u32], ContextStats> = FxHashMap::default();
        for (gram, &c) in grams {
            let st = contexts.entry(&gram[..n - 1]).or_default();
            st.total += c;
            match c {
                1 => st.n1 += 1,
                2 => st.n2 += 1,
                _ => st.n3plus += 1,
            }
        }

        let mut table = NGramTable::default();
        table.reserve(grams.len());
        for (gram, &c) in grams {
            let st = &contexts[&gram[..n - 1]];
            let lower = if n == 1 {
                uniform
            } else {
                tables[n - 2][&gram[1..]].log2_prob.exp2()
            };
            let p = (c as f64 - d.for_count(c)) / st.total as f64 + st.gamma(&d) * lower;
            table.insert(
                gram.clone(),
                Entry {
                    log2_prob: p.log2(),
                    log2_backoff: None,
                },
            );
        }

        if n == 1 {
            let root = contexts[&[][..]];
            for id in vocab.predictable() {
                table.entry(Box::new([id])).or_insert(Entry {
                    log2_prob: (root.gamma(&d) * uniform).log2(),
                    log2_backoff: None,
                });
            }
        } else {
            let lower = &mut tables[n - 2];
            for (ctx, st) in &contexts {
                let entry = lower.entry((*ctx).into()).or_insert(Entry {
                    log2_prob: f64::NEG_INFINITY,
                    log2_backoff: None,
                });
                entry.log2_backoff = Some(st.gamma(&d).log2());
            }
        }
        tables[n - 1] = table;
        discounts.push(d);
    }

    NGramModel {
        order,
        vocab,
        tables,
        discounts,
    }
}

/// Sum of log2 probabilities and number of predicted events for one sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LogProb {
    pub log2: f64,
    pub events: usize,
}

impl LogProb {
    /// Per-event cross-entropy in bits.
    pub fn bits_per_word(&self) -> f64 {
        -self.log2 / self.events as f64
    }
}

impl std::ops::AddAssign for LogProb {
    fn add_assign(&mut self, rhs: Self) {
        self.log2 += rhs.log2;
        self.events += rhs.events;
    }
}

impl NGramModel {
    pub(crate) fn from_parts(order: usize, vocab: ModelVocab, tables: Vec<NGramTable>) -> Self {
        NGramModel {
            order,
            vocab,
            tables,
            discounts: Vec::new(),
        }
    }

    /// A unigram model assigning equal probability to `tokens`, `</s>` and `<unk>`.
    pub fn uniform<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut vocab = ModelVocab::default();
        for t in tokens {
            vocab.intern(t);
        }
        let p = (1.0 / vocab.predictable().count() as f64).log2();
        let table = vocab
            .predictable()
            .map(|id| {
                (
                    Box::from([id]),
                    Entry {
                        log2_prob: p,
                        log2_backoff: None,
                    },
                )
            })
            .collect();
        NGramModel::from_parts(1, vocab, vec![table])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &ModelVocab {
        &self.vocab
    }

    pub fn discounts(&self) -> &[Discounts] {
        &self.discounts
    }

    /// Stored n-grams of length `n` (1-based).
    pub fn table(&self, n: usize) -> &NGramTable {
        &self.tables[n - 1]
    }

    pub fn entry(&self, gram: &[u32]) -> Option<&Entry> {
        self.tables.get(gram.len().checked_sub(1)?)?.get(gram)
    }

    /// Log2 back-off weight of a context; 0 when the context was never observed.
    pub fn backoff(&self, context: &[u32]) -> f64 {
        if context.is_empty() {
            return 0.0;
        }
        self.entry(context).and_then(|e| e.log2_backoff).unwrap_or(0.0)
    }

    /// log2 P(word | context). Only the last `order - 1` context ids are used.
    pub fn log2_prob(&self, context: &[u32], word: u32) -> f64 {
        let mut buf = Vec::with_capacity(self.order);
        self.log2_prob_buf(context, word, &mut buf)
    }

    fn log2_prob_buf(&self, context: &[u32], word: u32, buf: &mut Vec<u32>) -> f64 {
        let max_ctx = context.len().min(self.order - 1);
        let context = &context[context.len() - max_ctx..];
        let mut backoff = 0.0;
        for ctx_len in (0..=max_ctx).rev() {
            let h = &context[max_ctx - ctx_len..];
            buf.clear();
            buf.extend_from_slice(h);
            buf.push(word);
            if let Some(e) = self.tables[ctx_len].get(&buf[..]) {
                if e.is_event() {
                    return backoff + e.log2_prob;
                }
            }
            if ctx_len > 0 {
                if let Some(bo) = self.tables[ctx_len - 1].get(h).and_then(|e| e.log2_backoff) {
                    backoff += bo;
                }
            }
        }
        f64::NEG_INFINITY
    }

    /// Maps tokens to model ids, out-of-vocabulary tokens to `<unk>`.
    pub fn ids<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<u32> {
        tokens.into_iter().map(|t| self.vocab.id(t)).collect()
    }

    /// Symbol id of `corpus` → model id.
    pub fn symbol_map(&self, corpus: &Corpus) -> Vec<u32> {
        corpus.symbols().names().map(|t| self.vocab.id(t)).collect()
    }

    /// Scores a sentence given as model ids. `<s>` padding conditions the first
    /// tokens but is never predicted.
    pub fn log_prob_ids(&self, ids: &[u32], eos: EndOfSentence) -> LogProb {
        let pad = self.order - 1;
        let mut history = Vec::with_capacity(pad + ids.len());
        history.extend(std::iter::repeat_n(BOS_ID, pad));
        history.extend_from_slice(ids);
        let mut buf = Vec::with_capacity(self.order);
        let mut log2 = 0.0;
        for i in 0..ids.len() {
            log2 += self.log2_prob_buf(&history[i..i + pad], ids[i], &mut buf);
        }
        let mut events = ids.len();
        if eos == EndOfSentence::Include {
            log2 += self.log2_prob_buf(&history[history.len() - pad..], EOS_ID, &mut buf);
            events += 1;
        }
        LogProb { log2, events }
    }

    pub fn log_prob<S: AsRef<str>>(&self, tokens: &[S], eos: EndOfSentence) -> LogProb {
        let ids = self.ids(tokens.iter().map(|t| t.as_ref()));
        self.log_prob_ids(&ids, eos)
    }

    /// Per-word cross-entropy in bits, `</s>` included.
    pub fn cross_entropy<S: AsRef<str>>(&self, tokens: &[S]) -> f64 {
        self.log_prob(tokens, EndOfSentence::Include).bits_per_word()
    }

    /// Per-sentence log probabilities of a whole corpus, computed on `workers`
    /// threads (0 = all cores).
    pub fn score_corpus(&self, corpus: &Corpus, workers: usize) -> Result<Vec<LogProb>> {
        let map = self.symbol_map(corpus);
        par::with_workers(workers, || {
            (0..corpus.len())
                .into_par_iter()
                .map(|i| {
                    let ids: Vec<u32> = corpus.sentence(i).ids().iter().map(|&s| map[s as usize]).collect();
                    self.log_prob_ids(&ids, EndOfSentence::Include)
                })
                .collect()
        })
    }

    pub fn corpus_log_prob(&self, corpus: &Corpus) -> LogProb {
        let map = self.symbol_map(corpus);
        let mut ids = Vec::new();
        let mut total = LogProb::default();
        for s in corpus.sentences() {
            ids.clear();
            ids.extend(s.ids().iter().map(|&x| map[x as usize]));
            total += self.log_prob_ids(&ids, EndOfSentence::Include);
        }
        total
    }
}

/// Per-word cross-entropy of `sentence` in bits, including the `</s>` event.
pub fn sentence_cross_entropy<S: AsRef<str>>(model: &NGramModel, sentence: &[S]) -> f64 {
    model.cross_entropy(sentence)
}

/// Corpus perplexity: 2 raised to the total bits over the total number of
/// predicted events.
pub fn perplexity(model: &NGramModel, corpus: &Corpus) -> f64 {
    let lp = model.corpus_log_prob(corpus);
    lp.bits_per_word().exp2()
}

/// Writes `sentence_index<TAB>bits_per_word` lines.
pub fn write_scores_tsv(scores: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for (i, s) in scores.iter().enumerate() {
        writeln!(w, "{i}\t{s}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
