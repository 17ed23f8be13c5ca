//! Word-level translation error taxonomy from alignments.
//!
//! For each distinct source word `f` of a test sentence and each reference
//! word `e` aligned to it, the outcome is *correct* when the hypothesis also
//! aligns `e` to `f`. Otherwise it is *seen* when `f` never received an
//! alignment in training, *sense* when `e` is not among `f`'s training
//! translations, and *score* when it is (the system knew the translation but
//! preferred another). The checks apply in that order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ParallelCorpus};
use crate::error::{Error, Result};

/// 0-based `(source, target)` links per sentence, sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentSet {
    sentences: Vec<Vec<(usize, usize)>>,
}

impl AlignmentSet {
    pub fn new(sentences: Vec<Vec<(usize, usize)>>) -> Self {
        let sentences = sentences
            .into_iter()
            .map(|mut links| {
                links.sort_unstable();
                links.dedup();
                links
            })
            .collect();
        AlignmentSet { sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn links(&self, sentence: usize) -> &[(usize, usize)] {
        &self.sentences[sentence]
    }

    /// Every link must point inside its sentence pair.
    pub fn validate(&self, src: &Corpus, trg: &Corpus) -> Result<()> {
        for (what, n) in [("source", src.len()), ("target", trg.len())] {
            if n != self.len() {
                return Err(Error::Alignment {
                    line: self.len().min(n) + 1,
                    message: format!("{} alignment lines but {n} {what} sentences", self.len()),
                });
            }
        }
        for (i, links) in self.sentences.iter().enumerate() {
            let (ls, lt) = (src.sentence_len(i), trg.sentence_len(i));
            if let Some(&(s, t)) = links.iter().find(|&&(s, t)| s >= ls || t >= lt) {
                return Err(Error::Alignment {
                    line: i + 1,
                    message: format!("link {s}-{t} outside a {ls}-token source / {lt}-token target pair"),
                });
            }
        }
        Ok(())
    }
}

/// Parses fast-align style `i-j` lines; a blank line is an unaligned sentence.
pub fn read_alignments<R: BufRead>(reader: R) -> Result<AlignmentSet> {
    let mut sentences = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<alignments>", e))?;
        let mut links = Vec::new();
        for tok in line.split_whitespace() {
            let parsed = tok
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
            match parsed {
                Some(link) => links.push(link),
                None => {
                    return Err(Error::Alignment {
                        line: i + 1,
                        message: format!("malformed link `{tok}`"),
                    })
                }
            }
        }
        sentences.push(links);
    }
    Ok(AlignmentSet::new(sentences))
}

pub fn load_alignments(path: impl AsRef<Path>) -> Result<AlignmentSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_alignments(BufReader::new(file))
}

/// Source word → target words it was aligned to anywhere in training.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TranslationLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl TranslationLexicon {
    pub fn get(&self, source: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(source)
    }

    pub fn contains(&self, source: &str) -> bool {
        self.entries.contains_key(source)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn merge(mut self, other: Self) -> Self {
        for (k, v) in other.entries {
            self.entries.entry(k).or_default().extend(v);
        }
        self
    }
}

pub fn build_lexicon(train: &ParallelCorpus, align: &AlignmentSet) -> Result<TranslationLexicon> {
    align.validate(&train.src, &train.trg)?;
    Ok((0..train.len())
        .into_par_iter()
        .fold(TranslationLexicon::default, |mut lex, i| {
            let (src, trg) = (train.src.sentence(i), train.trg.sentence(i));
            for &(s, t) in align.links(i) {
                let f = train.src.symbols().name(src.ids()[s]);
                let e = train.trg.symbols().name(trg.ids()[t]);
                lex.entries.entry(f.to_owned()).or_default().insert(e.to_owned());
            }
            lex
        })
        .reduce(TranslationLexicon::default, TranslationLexicon::merge))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct S4Counts {
    pub correct: u64,
    pub seen: u64,
    pub sense: u64,
    pub score: u64,
}

impl S4Counts {
    pub fn total(&self) -> u64 {
        self.correct + self.seen + self.sense + self.score
    }

    fn add(mut self, o: S4Counts) -> Self {
        self.correct += o.correct;
        self.seen += o.seen;
        self.sense += o.sense;
        self.score += o.score;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S4Rates {
    pub correct: f64,
    pub seen: f64,
    pub sense: f64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct S4Report {
    pub totals: S4Counts,
    pub per_sentence: Vec<S4Counts>,
}

#[derive(Serialize)]
struct ReportJson {
    correct: u64,
    seen: u64,
    sense: u64,
    score: u64,
    totals: u64,
    rates: S4Rates,
    sentences: usize,
}

impl S4Report {
    pub fn rates(&self) -> S4Rates {
        let n = self.totals.total().max(1) as f64;
        S4Rates {
            correct: self.totals.correct as f64 / n,
            seen: self.totals.seen as f64 / n,
            sense: self.totals.sense as f64 / n,
            score: self.totals.score as f64 / n,
        }
    }

    pub fn to_json(&self) -> String {
        let t = self.totals;
        let doc = ReportJson {
            correct: t.correct,
            seen: t.seen,
            sense: t.sense,
            score: t.score,
            totals: t.total(),
            rates: self.rates(),
            sentences: self.per_sentence.len(),
        };
        serde_json::to_string_pretty(&doc).expect("plain data")
    }

    /// `sentence<TAB>correct<TAB>seen<TAB>sense<TAB>score`, 0-based sentences.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        writeln!(w, "sentence\tcorrect\tseen\tsense\tscore").map_err(io)?;
        for (i, c) in self.per_sentence.iter().enumerate() {
            writeln!(w, "{i}\t{}\t{}\t{}\t{}", c.correct, c.seen, c.sense, c.score).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Target words aligned to each distinct source word of one sentence.
fn aligned_words<'a>(
    src: &'a Corpus,
    trg: &'a Corpus,
    i: usize,
    links: &[(usize, usize)],
) -> BTreeMap<&'a str, BTreeSet<&'a str>> {
    let (s, t) = (src.sentence(i), trg.sentence(i));
    let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for &(a, b) in links {
        out.entry(src.symbols().name(s.ids()[a]))
            .or_default()
            .insert(trg.symbols().name(t.ids()[b]));
    }
    out
}

/// Counts outcomes over every (distinct source word, aligned reference word)
/// pair of the test set.
pub fn s4_count(
    test_src: &Corpus,
    reference: &Corpus,
    ref_align: &AlignmentSet,
    hypothesis: &Corpus,
    hyp_align: &AlignmentSet,
    lexicon: &TranslationLexicon,
) -> Result<S4Report> {
    ref_align.validate(test_src, reference)?;
    hyp_align.validate(test_src, hypothesis)?;
    let per_sentence: Vec<S4Counts> = (0..test_src.len())
        .into_par_iter()
        .map(|i| {
            let e_ref = aligned_words(test_src, reference, i, ref_align.links(i));
            let e_hyp = aligned_words(test_src, hypothesis, i, hyp_align.links(i));
            let mut c = S4Counts::default();
            for (f, refs) in &e_ref {
                let hyp = e_hyp.get(f);
                let train = lexicon.get(f);
                for e in refs {
                    if hyp.is_some_and(|h| h.contains(e)) {
                        c.correct += 1;
                    } else if let Some(train) = train {
                        if train.contains(*e) {
                            c.score += 1;
                        } else {
                            c.sense += 1;
                        }
                    } else {
                        c.seen += 1;
                    }
                }
            }
            c
        })
        .collect();
    let totals = per_sentence.iter().fold(S4Counts::default(), |a, &b| a.add(b));
    Ok(S4Report { totals, per_sentence })
}
