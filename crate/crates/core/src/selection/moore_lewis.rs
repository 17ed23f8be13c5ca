use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::{Method, SelectionResult};
use crate::corpus::{Corpus, ParallelCorpus};
use crate::error::{Error, Result};
use crate::lm::{EndOfSentence, NGramModel};
use crate::par;

fn difference(lm_in: &NGramModel, lm_gen: &NGramModel, corpus: &Corpus, workers: usize) -> Result<Vec<f64>> {
    let h_in = lm_in.score_corpus(corpus, workers)?;
    let h_gen = lm_gen.score_corpus(corpus, workers)?;
    Ok(h_in
        .iter()
        .zip(&h_gen)
        .map(|(a, b)| a.bits_per_word() - b.bits_per_word())
        .collect())
}

/// Cross-entropy difference `H_in(s) - H_gen(s)` for every candidate.
pub fn moore_lewis_scores(lm_in: &NGramModel, lm_gen: &NGramModel, candidates: &Corpus) -> Result<SelectionResult> {
    moore_lewis_with(lm_in, lm_gen, candidates, 0)
}

pub fn moore_lewis_with(
    lm_in: &NGramModel,
    lm_gen: &NGramModel,
    candidates: &Corpus,
    workers: usize,
) -> Result<SelectionResult> {
    if candidates.is_empty() {
        return Err(Error::EmptyCorpus(candidates.origin().to_owned()));
    }
    let scores = difference(lm_in, lm_gen, candidates, workers)?;
    Ok(SelectionResult::from_scores(Method::MooreLewis, &scores))
}

/// Sum of the source-side and target-side cross-entropy differences.
pub fn moore_lewis_bilingual(
    lm_in_src: &NGramModel,
    lm_gen_src: &NGramModel,
    lm_in_trg: &NGramModel,
    lm_gen_trg: &NGramModel,
    candidates: &ParallelCorpus,
    workers: usize,
) -> Result<SelectionResult> {
    if candidates.src.len() != candidates.trg.len() {
        return Err(Error::LengthMismatch {
            what: "parallel corpus sides",
            left: candidates.src.len(),
            right: candidates.trg.len(),
        });
    }
    if candidates.is_empty() {
        return Err(Error::EmptyCorpus(candidates.src.origin().to_owned()));
    }
    let src = difference(lm_in_src, lm_gen_src, &candidates.src, workers)?;
    let trg = difference(lm_in_trg, lm_gen_trg, &candidates.trg, workers)?;
    let scores: Vec<f64> = src.iter().zip(&trg).map(|(a, b)| a + b).collect();
    Ok(SelectionResult::from_scores(Method::MooreLewisBilingual, &scores))
}

const STREAM_CHUNK: usize = 16_384;

/// Scores a line-per-sentence stream without holding it in memory, writing
/// `sentence_index<TAB>score` in input order. Returns the number of sentences.
pub fn moore_lewis_stream<R: BufRead, W: Write>(
    lm_in: &NGramModel,
    lm_gen: &NGramModel,
    reader: R,
    mut writer: W,
    workers: usize,
) -> Result<usize> {
    let io = |e| Error::io("<stream>", e);
    let mut lines = reader.lines();
    let mut chunk: Vec<String> = Vec::with_capacity(STREAM_CHUNK);
    let mut scores: Vec<f64> = Vec::with_capacity(STREAM_CHUNK);
    let mut next_index = 0usize;
    loop {
        chunk.clear();
        for line in lines.by_ref().take(STREAM_CHUNK) {
            chunk.push(line.map_err(io)?);
        }
        if chunk.is_empty() {
            break;
        }
        if let Some(pos) = chunk.iter().position(|l| l.split(' ').all(str::is_empty)) {
            return Err(Error::EmptySentence {
                path: "<stream>".into(),
                line: next_index + pos + 1,
            });
        }
        par::with_workers(workers, || {
            chunk
                .par_iter()
                .map(|line| {
                    let tokens: Vec<&str> = line.split(' ').filter(|t| !t.is_empty()).collect();
                    let a = lm_in.log_prob(&tokens, EndOfSentence::Include).bits_per_word();
                    let b = lm_gen.log_prob(&tokens, EndOfSentence::Include).bits_per_word();
                    a - b
                })
                .collect_into_vec(&mut scores)
        })?;
        for s in &scores {
            writeln!(writer, "{next_index}\t{s}").map_err(io)?;
            next_index += 1;
        }
    }
    writer.flush().map_err(io)?;
    Ok(next_index)
}
