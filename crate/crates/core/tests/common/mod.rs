//! Reference implementations shared by the integration tests. They work on
//! plain strings and recompute everything from scratch, so they share no code
//! with the library paths they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dacl::corpus::{Corpus, Side};
use rand::Rng;

pub mod s4case;

pub fn corpus(lines: &[String]) -> Corpus {
    Corpus::from_sentences(lines, Side::Source, "fixture").unwrap()
}

pub fn random_lines<R: Rng>(rng: &mut R, n: usize, vocab: usize, max_len: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            (0..len)
                .map(|_| format!("w{}", rng.gen_range(0..vocab)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Cross-entropy of the selected multiset against `p_in`, add-α over `vocab`.
pub fn cynical_entropy(
    p_in: &BTreeMap<String, f64>,
    selected: &BTreeMap<String, f64>,
    vocab: usize,
    alpha: f64,
) -> f64 {
    let total: f64 = selected.values().sum();
    let z = total + alpha * vocab as f64;
    let mut h = 0.0;
    for (w, p) in p_in {
        let c = selected.get(w).copied().unwrap_or(0.0);
        h -= p * ((c + alpha) / z).log2();
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleStep {
    pub index: usize,
    pub delta_h: f64,
    pub entropy: f64,
}

/// Greedy cynical selection by brute force: every remaining candidate's
/// ΔH is two full entropy evaluations. Values within `tie` count as equal and
/// the lowest index wins.
pub fn cynical_oracle(in_domain: &[String], pool: &[String], budget: usize, alpha: f64, tie: f64) -> Vec<OracleStep> {
    let mut vocab: BTreeSet<&str> = BTreeSet::new();
    let mut in_counts: BTreeMap<String, f64> = BTreeMap::new();
    let mut in_total = 0.0;
    for line in in_domain {
        for w in line.split(' ') {
            vocab.insert(w);
            *in_counts.entry(w.to_owned()).or_default() += 1.0;
            in_total += 1.0;
        }
    }
    for line in pool {
        vocab.extend(line.split(' '));
    }
    let p_in: BTreeMap<String, f64> = in_counts.into_iter().map(|(w, c)| (w, c / in_total)).collect();
    let v = vocab.len();

    let mut selected: BTreeMap<String, f64> = BTreeMap::new();
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    let mut h = cynical_entropy(&p_in, &selected, v, alpha);
    let mut steps = Vec::new();
    for _ in 0..budget {
        let mut scored: Vec<(f64, usize)> = remaining
            .iter()
            .map(|&i| {
                let mut next = selected.clone();
                for w in pool[i].split(' ') {
                    *next.entry(w.to_owned()).or_default() += 1.0;
                }
                (cynical_entropy(&p_in, &next, v, alpha) - h, i)
            })
            .collect();
        let min = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        scored.retain(|s| s.0 <= min + tie);
        let (delta, index) = *scored.iter().min_by_key(|s| s.1).unwrap();
        for w in pool[index].split(' ') {
            *selected.entry(w.to_owned()).or_default() += 1.0;
        }
        remaining.retain(|&i| i != index);
        h = cynical_entropy(&p_in, &selected, v, alpha);
        steps.push(OracleStep {
            index,
            delta_h: delta,
            entropy: h,
        });
    }
    steps
}

/// Add-one unigram cross-entropy in bits per event, `</s>` included, with
/// vocabulary = training types + `</s>` + `<unk>`.
pub fn add_one_bits(train: &[&str], sentence: &str) -> f64 {
    let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
    let mut total = 0.0;
    for line in train {
        for w in line.split(' ').chain(["</s>"]) {
            *counts.entry(w).or_default() += 1.0;
            total += 1.0;
        }
    }
    let v = counts.len() as f64 + 1.0;
    let events: Vec<&str> = sentence.split(' ').chain(["</s>"]).collect();
    let bits: f64 = events
        .iter()
        .map(|w| -((counts.get(w).copied().unwrap_or(0.0) + 1.0) / (total + v)).log2())
        .sum();
    bits / events.len() as f64
}

/// Hellinger distance evaluated term by term.
pub fn hellinger_direct(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    s.sqrt() / 2f64.sqrt()
}

/// Parses `i-j` pairs.
pub fn links(line: &str) -> Vec<(usize, usize)> {
    line.split_whitespace()
        .map(|t| {
            let (a, b) = t.split_once('-').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

pub struct S4Side<'a> {
    pub src: &'a [String],
    pub trg: &'a [String],
    pub align: &'a [String],
}

/// Literal transcription of the counting loop: unique source words in order
/// of first occurrence, reference words aligned to each, branch tests in
/// nesting order. Returns (correct, seen, sense, score).
pub fn s4_oracle(train: &S4Side, reference: &S4Side, hyp_trg: &[String], hyp_align: &[String]) -> [u64; 4] {
    let mut lexicon: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for ((s, t), a) in train.src.iter().zip(train.trg).zip(train.align) {
        let (s, t): (Vec<&str>, Vec<&str>) = (s.split(' ').collect(), t.split(' ').collect());
        for (i, j) in links(a) {
            lexicon.entry(s[i].to_owned()).or_default().insert(t[j].to_owned());
        }
    }
    let mut out = [0u64; 4];
    for k in 0..reference.src.len() {
        let src: Vec<&str> = reference.src[k].split(' ').collect();
        let r: Vec<&str> = reference.trg[k].split(' ').collect();
        let h: Vec<&str> = hyp_trg[k].split(' ').collect();
        let (rl, hl) = (links(&reference.align[k]), links(&hyp_align[k]));
        let mut unique: Vec<&str> = Vec::new();
        for w in &src {
            if !unique.contains(w) {
                unique.push(w);
            }
        }
        for f in unique {
            let e_r: BTreeSet<&str> = rl.iter().filter(|l| src[l.0] == f).map(|l| r[l.1]).collect();
            let e_h: BTreeSet<&str> = hl.iter().filter(|l| src[l.0] == f).map(|l| h[l.1]).collect();
            for e in e_r {
                if e_h.contains(e) {
                    out[0] += 1;
                } else if !lexicon.contains_key(f) {
                    out[1] += 1;
                } else if !lexicon[f].contains(e) {
                    out[2] += 1;
                } else {
                    out[3] += 1;
                }
            }
        }
    }
    out
}
