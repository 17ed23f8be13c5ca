use rustc_hash::FxHashMap;

/// N-gram counts per order. The highest order holds raw counts; every lower
/// order holds Kneser-Ney continuation counts, the number of distinct tokens
/// observed immediately to the left of the n-gram.
#[derive(Debug, Clone)]
pub struct CountTable {
    order: usize,
    counts: Vec<FxHashMap<Box<[u32]>, u64>>,
}

impl CountTable {
    /// Counts padded id sequences. Each sentence must already carry `order - 1`
    /// leading `<s>` ids and a trailing `</s>` id; only n-grams ending after the
    /// padding are events.
    pub fn from_padded<'a>(order: usize, sentences: impl IntoIterator<Item = &'a [u32]>) -> Self {
        assert!(order >= 1);
        let mut counts: Vec<FxHashMap<Box<[u32]>, u64>> = vec![FxHashMap::default(); order];
        let top = &mut counts[order - 1];
        for padded in sentences {
            for end in order - 1..padded.len() {
                let gram = &padded[end + 1 - order..=end];
                match top.get_mut(gram) {
                    Some(c) => *c += 1,
                    None => {
                        top.insert(gram.into(), 1);
                    }
                }
            }
        }
        for k in (1..order).rev() {
            let (lower, higher) = counts.split_at_mut(k);
            let lower = &mut lower[k - 1];
            for gram in higher[0].keys() {
                *lower.entry(gram[1..].into()).or_insert(0) += 1;
            }
        }
        CountTable { order, counts }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Counts of n-grams of length `n` (1-based).
    pub fn counts(&self, n: usize) -> &FxHashMap<Box<[u32]>, u64> {
        &self.counts[n - 1]
    }

    pub fn get(&self, gram: &[u32]) -> u64 {
        self.counts[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }

    /// Counts-of-counts n1..n4 of order `n`.
    pub fn counts_of_counts(&self, n: usize) -> [u64; 4] {
        let mut coc = [0u64; 4];
        for &c in self.counts(n).values() {
            if (1..=4).contains(&c) {
                coc[c as usize - 1] += 1;
            }
        }
        coc
    }
}

/// Modified Kneser-Ney discounts for one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
    /// Set when counts-of-counts were insufficient and the flat fallback was used.
    pub fallback: bool,
}

pub const FALLBACK_DISCOUNT: f64 = 0.75;

impl Discounts {
    pub fn flat(d: f64) -> Self {
        Discounts {
            d1: d,
            d2: d,
            d3plus: d,
            fallback: true,
        }
    }

    /// Closed-form estimate from counts-of-counts `[n1, n2, n3, n4]`.
    /// Returns `None` if any is zero or a discount falls outside `(0, c)`.
    pub fn estimate(coc: [u64; 4]) -> Option<Self> {
        if coc.contains(&0) {
            return None;
        }
        let [n1, n2, n3, n4] = coc.map(|n| n as f64);
        let y = n1 / (n1 + 2.0 * n2);
        let d1 = 1.0 - 2.0 * y * n2 / n1;
        let d2 = 2.0 - 3.0 * y * n3 / n2;
        let d3plus = 3.0 - 4.0 * y * n4 / n3;
        let ok = d1 > 0.0 && d1 < 1.0 && d2 > 0.0 && d2 < 2.0 && d3plus > 0.0 && d3plus < 3.0;
        ok.then_some(Discounts {
            d1,
            d2,
            d3plus,
            fallback: false,
        })
    }

    pub fn for_count(&self, c: u64) -> f64 {
        match c {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }
}
