//! Synthetic two-domain corpora for tests, benchmarks and the demo fixture.
//!
//! Each grammar expands clause templates whose slots draw words from
//! Zipf-weighted word classes. Function words and a class of general nouns are
//! shared between the two grammars; everything else is domain specific.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, CorpusBuilder, Side};

#[derive(Debug, Clone)]
enum Slot {
    Word(&'static str),
    Class(usize),
}

#[derive(Debug, Clone)]
struct WordClass {
    words: Vec<String>,
    weights: WeightedIndex<f64>,
}

impl WordClass {
    fn new(prefix: &str, size: usize) -> Self {
        let words = (0..size).map(|i| format!("{prefix}{i}")).collect();
        let weights = WeightedIndex::new((0..size).map(|r| 1.0 / (r as f64 + 1.0))).unwrap();
        WordClass { words, weights }
    }
}

#[derive(Debug, Clone)]
pub struct Grammar {
    name: &'static str,
    classes: Vec<WordClass>,
    clauses: Vec<Vec<Slot>>,
    max_clauses: usize,
}

// class indices
const NOUN: usize = 0;
const VERB: usize = 1;
const ADJ: usize = 2;
const GENERAL: usize = 3;

impl Grammar {
    /// "Lecture" domain: short conversational clauses.
    pub fn a() -> Self {
        use Slot::*;
        Grammar {
            name: "A",
            classes: vec![
                WordClass::new("tn", 300),
                WordClass::new("tv", 80),
                WordClass::new("ta", 60),
                WordClass::new("gn", 150),
            ],
            clauses: vec![
                vec![Word("we"), Class(VERB), Word("the"), Class(NOUN)],
                vec![
                    Word("the"),
                    Class(ADJ),
                    Class(NOUN),
                    Class(VERB),
                    Word("a"),
                    Class(GENERAL),
                ],
                vec![Word("i"), Word("think"), Class(NOUN), Word("is"), Class(ADJ)],
                vec![
                    Word("so"),
                    Word("the"),
                    Class(GENERAL),
                    Class(VERB),
                    Word("to"),
                    Class(NOUN),
                ],
                vec![Class(NOUN), Word("and"), Class(NOUN), Class(VERB)],
            ],
            max_clauses: 3,
        }
    }

    /// "Patent" domain: long formulaic clauses.
    pub fn b() -> Self {
        use Slot::*;
        Grammar {
            name: "B",
            classes: vec![
                WordClass::new("pn", 300),
                WordClass::new("pv", 80),
                WordClass::new("pa", 60),
                WordClass::new("gn", 150),
            ],
            clauses: vec![
                vec![
                    Word("wherein"),
                    Word("the"),
                    Class(NOUN),
                    Word("is"),
                    Class(VERB),
                    Word("by"),
                    Word("the"),
                    Class(ADJ),
                    Class(NOUN),
                ],
                vec![
                    Word("a"),
                    Class(GENERAL),
                    Word("comprising"),
                    Word("a"),
                    Class(NOUN),
                    Word("and"),
                    Word("a"),
                    Class(NOUN),
                ],
                vec![
                    Word("the"),
                    Class(NOUN),
                    Word("of"),
                    Word("claim"),
                    Class(VERB),
                    Word("the"),
                    Class(GENERAL),
                ],
                vec![
                    Word("said"),
                    Class(ADJ),
                    Class(NOUN),
                    Class(VERB),
                    Word("to"),
                    Word("the"),
                    Class(NOUN),
                ],
            ],
            max_clauses: 4,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn sentence<R: Rng>(&self, rng: &mut R, out: &mut Vec<String>) {
        out.clear();
        let clauses = rng.gen_range(1..=self.max_clauses);
        for c in 0..clauses {
            if c > 0 {
                out.push(if rng.gen_bool(0.5) { "and".into() } else { ",".into() });
            }
            let template = &self.clauses[rng.gen_range(0..self.clauses.len())];
            for slot in template {
                match slot {
                    Slot::Word(w) => out.push((*w).to_owned()),
                    Slot::Class(k) => {
                        let class = &self.classes[*k];
                        out.push(class.words[class.weights.sample(rng)].clone());
                    }
                }
            }
        }
    }

    pub fn line<R: Rng>(&self, rng: &mut R) -> String {
        let mut buf = Vec::new();
        self.sentence(rng, &mut buf);
        buf.join(" ")
    }

    pub fn corpus(&self, n: usize, seed: u64) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut builder = CorpusBuilder::new(Side::Source, format!("synthetic-{}", self.name));
        let mut buf = Vec::new();
        for _ in 0..n {
            self.sentence(&mut rng, &mut buf);
            builder.push(buf.iter().map(String::as_str));
        }
        builder.finish()
    }
}

/// A pool mixing both grammars. Returns the corpus and, per sentence, whether
/// it was drawn from grammar A.
pub fn mixed_pool(n: usize, fraction_a: f64, seed: u64) -> (Corpus, Vec<bool>) {
    let (a, b) = (Grammar::a(), Grammar::b());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = CorpusBuilder::new(Side::Source, "synthetic-pool");
    let mut labels = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for _ in 0..n {
        let is_a = rng.gen_bool(fraction_a);
        if is_a {
            a.sentence(&mut rng, &mut buf);
        } else {
            b.sentence(&mut rng, &mut buf);
        }
        builder.push(buf.iter().map(String::as_str));
        labels.push(is_a);
    }
    (builder.finish(), labels)
}
