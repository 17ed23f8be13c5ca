//! Small S4 fixtures built from plain strings.

use dacl::corpus::ParallelCorpus;
use dacl::s4::{build_lexicon, read_alignments, s4_count, S4Counts, S4Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{corpus, links, random_lines, s4_oracle, S4Side};

pub fn strings(lines: &[&str]) -> Vec<String> {
    lines.iter().map(|s| s.to_string()).collect()
}

/// One line per sentence, each newline-terminated, as fast-align writes them.
pub fn file_text(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

pub struct Case {
    pub train_src: Vec<String>,
    pub train_trg: Vec<String>,
    pub train_align: Vec<String>,
    pub test_src: Vec<String>,
    pub reference: Vec<String>,
    pub ref_align: Vec<String>,
    pub hypothesis: Vec<String>,
    pub hyp_align: Vec<String>,
}

impl Case {
    pub fn run(&self) -> S4Report {
        let train = ParallelCorpus::new(corpus(&self.train_src), corpus(&self.train_trg)).unwrap();
        let lex = build_lexicon(
            &train,
            &read_alignments(file_text(&self.train_align).as_bytes()).unwrap(),
        )
        .unwrap();
        s4_count(
            &corpus(&self.test_src),
            &corpus(&self.reference),
            &read_alignments(file_text(&self.ref_align).as_bytes()).unwrap(),
            &corpus(&self.hypothesis),
            &read_alignments(file_text(&self.hyp_align).as_bytes()).unwrap(),
            &lex,
        )
        .unwrap()
    }

    pub fn oracle(&self) -> [u64; 4] {
        let train = S4Side {
            src: &self.train_src,
            trg: &self.train_trg,
            align: &self.train_align,
        };
        let reference = S4Side {
            src: &self.test_src,
            trg: &self.reference,
            align: &self.ref_align,
        };
        s4_oracle(&train, &reference, &self.hypothesis, &self.hyp_align)
    }
}

pub fn counts(c: S4Counts) -> [u64; 4] {
    [c.correct, c.seen, c.sense, c.score]
}

/// Training teaches x→u, y→v, z→{w,t}; q is never seen.
pub fn branch_fixture() -> Case {
    Case {
        train_src: strings(&["x y z", "z"]),
        train_trg: strings(&["u v w", "t"]),
        train_align: strings(&["0-0 1-1 2-2", "0-0"]),
        // sentence 0: x correct, y→p sense, z→t score, q→r seen (x repeats)
        // sentence 1: y and z both correct
        test_src: strings(&["x y z q x", "y z"]),
        reference: strings(&["u p t r u", "v w"]),
        ref_align: strings(&["0-0 1-1 2-2 3-3 4-4", "0-0 1-1"]),
        hypothesis: strings(&["u v w s", "v w"]),
        hyp_align: strings(&["0-0 1-1 2-2 3-3 4-0", "0-0 1-1"]),
    }
}

pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let align = |rng: &mut ChaCha8Rng, s: &[String], t: &[String]| -> Vec<String> {
        s.iter()
            .zip(t)
            .map(|(a, b)| {
                let (ls, lt) = (a.split(' ').count(), b.split(' ').count());
                let n = rng.gen_range(0..=ls + 1);
                (0..n)
                    .map(|_| format!("{}-{}", rng.gen_range(0..ls), rng.gen_range(0..lt)))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    };
    let train_src = random_lines(&mut rng, 6, 10, 5);
    let train_trg = random_lines(&mut rng, 6, 8, 5);
    let test_src = random_lines(&mut rng, 5, 12, 5);
    let reference = random_lines(&mut rng, 5, 8, 5);
    let hypothesis = random_lines(&mut rng, 5, 8, 5);
    Case {
        train_align: align(&mut rng, &train_src, &train_trg),
        ref_align: align(&mut rng, &test_src, &reference),
        hyp_align: align(&mut rng, &test_src, &hypothesis),
        train_src,
        train_trg,
        test_src,
        reference,
        hypothesis,
    }
}

/// Number of (distinct source word, distinct aligned reference word) pairs.
pub fn events(case: &Case) -> u64 {
    let mut n = 0;
    for (k, line) in case.ref_align.iter().enumerate() {
        let src: Vec<&str> = case.test_src[k].split(' ').collect();
        let r: Vec<&str> = case.reference[k].split(' ').collect();
        let pairs: std::collections::BTreeSet<(&str, &str)> =
            links(line).into_iter().map(|(i, j)| (src[i], r[j])).collect();
        n += pairs.len() as u64;
    }
    n
}
