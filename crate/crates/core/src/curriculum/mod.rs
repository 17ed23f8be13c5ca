//! Shards and phase schedules for curriculum training.
//!
//! Shard 0 holds the in-domain sentences and shards `1..K` hold the selected
//! pool sentences in rank order. Phase `p` (1-based) makes the first
//! `min(p, K)` shards of the availability order trainable. Within a phase the
//! available shards take turns producing batches; each batch comes from one
//! length bucket of one shard and is filled greedily up to the token budget.

mod file;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use file::{load_schedule, read_schedule, BatchIter};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::selection::SelectionResult;

pub const DEFAULT_NUM_SHARDS: usize = 40;
pub const DEFAULT_PHASE_LEN: usize = 1000;
pub const DEFAULT_BATCH_WORDS: usize = 4096;
pub const DEFAULT_BUCKET_WIDTH: usize = 10;

/// Full-pool phases appended once every shard is unlocked.
pub const EXTRA_PHASES: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Standard,
    /// Least similar shard first; the in-domain shard unlocks last.
    Reverse,
    /// Pool sentences are dealt to shards at random before scheduling.
    Scrambled,
    /// Standard availability, but shards take turns in ascending order.
    NoShuffle,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Standard => "standard",
            Mode::Reverse => "reverse",
            Mode::Scrambled => "scrambled",
            Mode::NoShuffle => "noshuffle",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Mode::Standard),
            "reverse" => Ok(Mode::Reverse),
            "scrambled" => Ok(Mode::Scrambled),
            "noshuffle" => Ok(Mode::NoShuffle),
            _ => Err(Error::invalid(format!(
                "unknown mode `{s}` (expected standard, reverse, scrambled or noshuffle)"
            ))),
        }
    }
}

/// Shard 0 indexes the in-domain corpus; every other shard indexes the pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardPlan {
    shards: Vec<Vec<usize>>,
}

impl ShardPlan {
    /// Pool shards must be pairwise disjoint.
    pub fn new(shards: Vec<Vec<usize>>) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::invalid("a shard plan needs at least one shard"));
        }
        let mut seen = rustc_hash::FxHashSet::default();
        for (k, shard) in shards.iter().enumerate() {
            if shard.is_empty() {
                return Err(Error::invalid(format!("shard {k} is empty")));
            }
            if k > 0 {
                for &i in shard {
                    if !seen.insert(i) {
                        return Err(Error::invalid(format!("pool sentence {i} is in more than one shard")));
                    }
                }
            }
        }
        Ok(ShardPlan { shards })
    }

    pub fn num_shards(&self) -> usize {
        self.shards.len()
    }

    pub fn shard(&self, k: usize) -> &[usize] {
        &self.shards[k]
    }

    pub fn shards(&self) -> &[Vec<usize>] {
        &self.shards
    }

    /// Number of sentences across all shards.
    pub fn total(&self) -> usize {
        self.shards.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ShardPlan = serde_json::from_str(text)?;
        ShardPlan::new(raw.shards)
    }
}

/// Splits `items` into `parts` contiguous runs whose sizes differ by at most
/// one, larger runs first.
fn split_even(items: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let (base, extra) = (items.len() / parts, items.len() % parts);
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for k in 0..parts {
        let size = base + usize::from(k < extra);
        out.push(items[start..start + size].to_vec());
        start += size;
    }
    out
}

/// Shard 0 = the whole in-domain corpus; the top `cut` ranked candidates are
/// split rank-contiguously into `num_shards - 1` near-equal shards.
pub fn build_shards(in_domain: &Corpus, ranking: &SelectionResult, cut: usize, num_shards: usize) -> Result<ShardPlan> {
    if num_shards < 2 {
        return Err(Error::invalid("num_shards must be at least 2"));
    }
    if cut > ranking.len() {
        return Err(Error::invalid(format!(
            "cut {cut} exceeds ranking length {}",
            ranking.len()
        )));
    }
    if cut < num_shards - 1 {
        return Err(Error::invalid(format!(
            "cut {cut} cannot populate {} candidate shards",
            num_shards - 1
        )));
    }
    if in_domain.is_empty() {
        return Err(Error::EmptyCorpus(in_domain.origin().to_owned()));
    }
    let top: Vec<usize> = ranking.ranking[..cut].iter().map(|s| s.index).collect();
    let mut shards = vec![(0..in_domain.len()).collect::<Vec<_>>()];
    shards.extend(split_even(&top, num_shards - 1));
    ShardPlan::new(shards)
}

/// Deals the pool sentences of shards `1..K` to shards uniformly at random,
/// keeping every shard's size.
pub fn scramble_plan<R: Rng>(plan: &ShardPlan, rng: &mut R) -> ShardPlan {
    let mut pool: Vec<usize> = plan.shards[1..].iter().flatten().copied().collect();
    pool.shuffle(rng);
    let mut shards = vec![plan.shards[0].clone()];
    let mut start = 0;
    for shard in &plan.shards[1..] {
        shards.push(pool[start..start + shard.len()].to_vec());
        start += shard.len();
    }
    ShardPlan { shards }
}

/// Order in which shards become available.
pub fn availability_order(mode: Mode, num_shards: usize) -> Vec<usize> {
    match mode {
        Mode::Reverse => (0..num_shards).rev().collect(),
        _ => (0..num_shards).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub mode: Mode,
    pub phase_len: usize,
    pub batch_budget: usize,
    pub bucket_width: usize,
    /// `None` means `num_shards + EXTRA_PHASES`.
    pub num_phases: Option<usize>,
    pub seed: u64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            mode: Mode::Standard,
            phase_len: DEFAULT_PHASE_LEN,
            batch_budget: DEFAULT_BATCH_WORDS,
            bucket_width: DEFAULT_BUCKET_WIDTH,
            num_phases: None,
            seed: 0,
        }
    }
}

/// First line of a schedule file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleHeader {
    pub mode: Mode,
    pub num_shards: usize,
    pub phase_len: usize,
    pub batch_budget: usize,
    pub bucket_width: usize,
    pub num_phases: usize,
    pub seed: u64,
    pub availability: Vec<usize>,
    /// SHA-256 of every line after the header, newlines included.
    pub checksum: String,
}

impl ScheduleHeader {
    /// Shards trainable in `phase` (1-based), in availability order.
    pub fn available(&self, phase: usize) -> &[usize] {
        &self.availability[..phase.min(self.num_shards)]
    }

    pub fn is_available(&self, phase: usize, shard: usize) -> bool {
        self.available(phase).contains(&shard)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub phase: usize,
    pub shard: usize,
    pub bucket: usize,
    pub indices: Vec<usize>,
}

impl BatchSpec {
    /// Token count, given the lengths of the corpus this batch's shard indexes.
    pub fn tokens(&self, lengths: &[usize]) -> usize {
        self.indices.iter().map(|&i| lengths[i]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub header: ScheduleHeader,
    pub batches: Vec<BatchSpec>,
}

impl Schedule {
    /// Batches of one phase.
    pub fn phase(&self, phase: usize) -> &[BatchSpec] {
        let len = self.header.phase_len;
        let start = (phase - 1) * len;
        &self.batches[start.min(self.batches.len())..(start + len).min(self.batches.len())]
    }

    /// Batches in order, each checked against the availability rule.
    pub fn iter(&self) -> BatchIter<'_> {
        BatchIter::new(self)
    }
}

/// Remaining sentences of one shard, by length bucket.
struct ShardPool {
    buckets: Vec<Vec<usize>>,
    full: Vec<Vec<usize>>,
    remaining: usize,
}

impl ShardPool {
    fn new(indices: &[usize], lengths: &[usize], width: usize) -> Self {
        let mut full: Vec<Vec<usize>> = Vec::new();
        for &i in indices {
            let b = (lengths[i] - 1) / width;
            if full.len() <= b {
                full.resize_with(b + 1, Vec::new);
            }
            full[b].push(i);
        }
        let remaining = indices.len();
        ShardPool {
            buckets: full.clone(),
            full,
            remaining,
        }
    }

    fn replenish(&mut self) {
        self.buckets.clone_from(&self.full);
        self.remaining = self.full.iter().map(Vec::len).sum();
    }

    /// Random non-empty bucket, random picks until one overflows the budget,
    /// then a scan that adds whatever still fits.
    fn draw<R: Rng>(&mut self, rng: &mut R, lengths: &[usize], budget: usize) -> (usize, Vec<usize>) {
        if self.remaining == 0 {
            self.replenish();
        }
        let nonempty: Vec<usize> = (0..self.buckets.len())
            .filter(|&b| !self.buckets[b].is_empty())
            .collect();
        let b = nonempty[rng.gen_range(0..nonempty.len())];
        let bucket = &mut self.buckets[b];
        let mut room = budget;
        let mut batch = Vec::new();
        while !bucket.is_empty() {
            let pick = rng.gen_range(0..bucket.len());
            let len = lengths[bucket[pick]];
            if len > room {
                break;
            }
            room -= len;
            batch.push(bucket.swap_remove(pick));
        }
        let mut i = 0;
        while i < bucket.len() {
            let len = lengths[bucket[i]];
            if len <= room {
                room -= len;
                batch.push(bucket.swap_remove(i));
            } else {
                i += 1;
            }
        }
        self.remaining -= batch.len();
        (b, batch)
    }
}

/// Generates the full schedule. `in_lengths` are the in-domain sentence
/// lengths (shard 0) and `pool_lengths` those of the pool (other shards).
pub fn make_schedule(
    plan: &ShardPlan,
    in_lengths: &[usize],
    pool_lengths: &[usize],
    params: &ScheduleParams,
) -> Result<Schedule> {
    let k = plan.num_shards();
    if params.phase_len == 0 || params.batch_budget == 0 || params.bucket_width == 0 {
        return Err(Error::invalid(
            "phase_len, batch_budget and bucket_width must be positive",
        ));
    }
    let num_phases = params.num_phases.unwrap_or(k + EXTRA_PHASES);
    if num_phases == 0 {
        return Err(Error::invalid("num_phases must be positive"));
    }
    if num_phases < k {
        log::warn!("{num_phases} phases never unlock all {k} shards");
    }
    for (s, shard) in plan.shards().iter().enumerate() {
        let lengths = if s == 0 { in_lengths } else { pool_lengths };
        for &i in shard {
            let len = *lengths
                .get(i)
                .ok_or_else(|| Error::invalid(format!("shard {s} refers to sentence {i}, beyond its corpus")))?;
            if len == 0 || len > params.batch_budget {
                return Err(Error::invalid(format!(
                    "sentence {i} of shard {s} has {len} tokens, outside 1..={}",
                    params.batch_budget
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let scrambled;
    let plan = if params.mode == Mode::Scrambled {
        scrambled = scramble_plan(plan, &mut rng);
        &scrambled
    } else {
        plan
    };
    let availability = availability_order(params.mode, k);
    let mut pools: Vec<ShardPool> = plan
        .shards()
        .iter()
        .enumerate()
        .map(|(s, shard)| {
            let lengths = if s == 0 { in_lengths } else { pool_lengths };
            ShardPool::new(shard, lengths, params.bucket_width)
        })
        .collect();

    let mut batches = Vec::with_capacity(num_phases * params.phase_len);
    for phase in 1..=num_phases {
        let mut order = availability[..phase.min(k)].to_vec();
        if params.mode == Mode::NoShuffle {
            order.sort_unstable();
        } else {
            order.shuffle(&mut rng);
        }
        for pool in &mut pools {
            pool.replenish();
        }
        for j in 0..params.phase_len {
            let shard = order[j % order.len()];
            let lengths = if shard == 0 { in_lengths } else { pool_lengths };
            let (bucket, indices) = pools[shard].draw(&mut rng, lengths, params.batch_budget);
            batches.push(BatchSpec {
                phase,
                shard,
                bucket,
                indices,
            });
        }
    }

    let header = ScheduleHeader {
        mode: params.mode,
        num_shards: k,
        phase_len: params.phase_len,
        batch_budget: params.batch_budget,
        bucket_width: params.bucket_width,
        num_phases,
        seed: params.seed,
        availability,
        checksum: String::new(),
    };
    let mut schedule = Schedule { header, batches };
    schedule.header.checksum = file::checksum(&file::body(&schedule.batches));
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{Method, SelectionResult};

    fn ranking(n: usize) -> SelectionResult {
        let scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        SelectionResult::from_scores(Method::MooreLewis, &scores)
    }

    fn in_domain(n: usize) -> Corpus {
        let lines: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
        Corpus::from_sentences(&lines, crate::corpus::Side::Source, "in").unwrap()
    }

    #[test]
    fn shard_sizes_are_near_equal() {
        let plan = build_shards(&in_domain(5), &ranking(100), 100, 40).unwrap();
        assert_eq!(plan.num_shards(), 40);
        assert_eq!(plan.shard(0), &[0, 1, 2, 3, 4]);
        let sizes: Vec<usize> = plan.shards()[1..].iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 100);
        assert_eq!(sizes[..22], [3; 22]);
        assert_eq!(sizes[22..], [2; 17]);
        assert_eq!(plan.shard(1), &[0, 1, 2]);
    }

    #[test]
    fn shard_boundaries() {
        let two = build_shards(&in_domain(2), &ranking(10), 7, 2).unwrap();
        assert_eq!(two.shard(1), &[0, 1, 2, 3, 4, 5, 6]);
        let singles = build_shards(&in_domain(2), &ranking(39), 39, 40).unwrap();
        assert!(singles.shards()[1..].iter().all(|s| s.len() == 1));
        assert!(build_shards(&in_domain(2), &ranking(50), 38, 40).is_err());
        assert!(build_shards(&in_domain(2), &ranking(50), 51, 40).is_err());
        assert!(build_shards(&in_domain(2), &ranking(50), 10, 1).is_err());
    }

    #[test]
    fn draws_are_maximal() {
        let lengths = vec![3, 4, 5, 6, 7, 8, 9];
        let mut pool = ShardPool::new(&[0, 1, 2, 3, 4, 5, 6], &lengths, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (b, batch) = pool.draw(&mut rng, &lengths, 12);
        assert_eq!(b, 0);
        let used: usize = batch.iter().map(|&i| lengths[i]).sum();
        assert!(used <= 12);
        assert!(pool.buckets[0].iter().all(|&i| lengths[i] > 12 - used));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [Mode::Standard, Mode::Reverse, Mode::Scrambled, Mode::NoShuffle] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{m}\""));
        }
        assert!("fast".parse::<Mode>().is_err());
    }
}
