//! Ranking unlabeled-domain sentences by similarity to an in-domain corpus.
//!
//! Every method produces a [`SelectionResult`] whose ranking is ordered from
//! most to least in-domain. Ties are broken by ascending sentence index.

mod cynical;
mod moore_lewis;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cynical::{cynical_select, cynical_select_with, CynicalState, DEFAULT_ALPHA, TIE_EPSILON};
pub use moore_lewis::{moore_lewis_bilingual, moore_lewis_scores, moore_lewis_stream, moore_lewis_with};

use crate::corpus::sample_indices;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MooreLewis,
    MooreLewisBilingual,
    Cynical,
    Random,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::MooreLewis => "moore_lewis",
            Method::MooreLewisBilingual => "moore_lewis_bilingual",
            Method::Cynical => "cynical",
            Method::Random => "random",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub index: usize,
    /// Lower is more in-domain.
    pub score: f64,
}

/// One greedy step of cynical selection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CynicalStep {
    pub step: usize,
    pub index: usize,
    pub delta_h: f64,
    /// Cross-entropy of the selected set against the in-domain corpus after this step.
    pub entropy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult {
    pub method: Method,
    pub ranking: Vec<SentenceScore>,
    /// Filled for cynical selection only.
    pub trace: Vec<CynicalStep>,
}

impl SelectionResult {
    /// Sorts per-sentence scores ascending, ties by index.
    pub fn from_scores(method: Method, scores: &[f64]) -> Self {
        let mut ranking: Vec<SentenceScore> = scores
            .iter()
            .enumerate()
            .map(|(index, &score)| SentenceScore { index, score })
            .collect();
        ranking.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.index.cmp(&b.index)));
        SelectionResult {
            method,
            ranking,
            trace: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranking.iter().map(|s| s.index)
    }

    /// Position of each sentence index in the ranking (`None` if unranked).
    pub fn ranks(&self, pool_size: usize) -> Vec<Option<usize>> {
        let mut ranks = vec![None; pool_size];
        for (rank, s) in self.ranking.iter().enumerate() {
            ranks[s.index] = Some(rank);
        }
        ranks
    }
}

/// Random baseline: a seeded permutation, scored by position.
pub fn random_ranking(pool_size: usize, seed: u64) -> SelectionResult {
    let order = sample_indices(pool_size, pool_size, seed).expect("k == n");
    SelectionResult {
        method: Method::Random,
        ranking: order
            .into_iter()
            .enumerate()
            .map(|(rank, index)| SentenceScore {
                index,
                score: rank as f64,
            })
            .collect(),
        trace: Vec::new(),
    }
}

/// The first `n` sentence indices of the ranking.
pub fn rank_and_cut(result: &SelectionResult, n: usize) -> Result<Vec<usize>> {
    if n > result.len() {
        return Err(Error::invalid(format!(
            "cut of {n} exceeds ranking length {}",
            result.len()
        )));
    }
    Ok(result.ranking[..n].iter().map(|s| s.index).collect())
}

/// Subset sizes of the experiment grid, 64k doubling up to 4096k.
pub fn default_cut_sizes() -> Vec<usize> {
    (0..7).map(|i| 64_000 << i).collect()
}

/// Writes `rank<TAB>sentence_index<TAB>score` with 1-based ranks.
pub fn write_ranking_tsv(result: &SelectionResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (rank, s) in result.ranking.iter().enumerate() {
        writeln!(w, "{}\t{}\t{}", rank + 1, s.index, s.score).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `step<TAB>index<TAB>delta_H<TAB>H_n` with 1-based steps.
pub fn write_trace_tsv(trace: &[CynicalStep], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in trace {
        writeln!(w, "{}\t{}\t{}\t{}", s.step, s.index, s.delta_h, s.entropy).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_ranking_tsv(path: impl AsRef<Path>, method: Method) -> Result<SelectionResult> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut ranking = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let bad = || Error::invalid(format!("{}: malformed ranking line {}", path.display(), i + 1));
        let mut fields = line.split('\t');
        let (_rank, index, score) = (fields.next(), fields.next(), fields.next());
        let index: usize = index.and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let score: f64 = score.and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        ranking.push(SentenceScore { index, score });
    }
    Ok(SelectionResult {
        method,
        ranking,
        trace: Vec::new(),
    })
}
