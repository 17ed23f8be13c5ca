//! Greedy cynical data selection over an add-α unigram model.
//!
//! The selected set is modelled by `p_n(v) = (c_n(v) + α) / (W_n + α|V|)` over
//! the joint vocabulary `V` of both corpora, and
//! `H_n = -Σ_v P_I(v) log2 p_n(v)` is its cross-entropy against the in-domain
//! unigram distribution `P_I`. Each step picks the candidate minimizing
//! `ΔH = H_{n+s} - H_n`, which splits into
//!
//! ```text
//! ΔH(s) = log2((W_n + w_s + α|V|) / (W_n + α|V|))                       length penalty
//!       - Σ_{v ∈ s} P_I(v) log2((c_n(v) + c_s(v) + α) / (c_n(v) + α))   word gain
//! ```
//!
//! The length penalty depends only on `w_s`, and the word gain of a sentence can
//! only grow as counts grow. Candidates are therefore grouped by length and
//! kept in per-length min-heaps of possibly stale gains; a stale gain is a lower
//! bound, so a heap top whose recomputed gain is unchanged is that length's
//! exact minimum. Sentences with the same length and the same in-domain token
//! counts always score identically and share one heap entry. Each step visits
//! the groups in order of their stale lower bound and stops once no remaining
//! group can reach the best ΔH found so far.

use std::cmp::{Ordering, Reverse};
use std::collections::binary_heap::{BinaryHeap, PeekMut};
use std::f64::consts::LOG2_E;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::{CynicalStep, Method, SelectionResult, SentenceScore};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_ALPHA: f64 = 1.0;

/// ΔH values closer than this are treated as equal; ties go to the lowest index.
pub const TIE_EPSILON: f64 = 1e-11;

/// Counts of the selected set and the in-domain distribution, over the joint vocabulary.
#[derive(Debug, Clone)]
pub struct CynicalState {
    counts: Vec<u64>,
    selected_tokens: u64,
    in_domain: Vec<f64>,
    alpha: f64,
}

impl CynicalState {
    pub fn new(in_domain: Vec<f64>, alpha: f64) -> Self {
        CynicalState {
            counts: vec![0; in_domain.len()],
            selected_tokens: 0,
            in_domain,
            alpha,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.in_domain.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn selected_tokens(&self) -> u64 {
        self.selected_tokens
    }

    pub fn in_domain(&self) -> &[f64] {
        &self.in_domain
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn normalizer(&self) -> f64 {
        self.selected_tokens as f64 + self.alpha * self.in_domain.len() as f64
    }

    /// `H_n` computed over the whole vocabulary.
    pub fn entropy(&self) -> f64 {
        let z = self.normalizer();
        -self
            .in_domain
            .iter()
            .zip(&self.counts)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &c)| p * ((c as f64 + self.alpha) / z).log2())
            .sum::<f64>()
    }

    pub fn length_penalty(&self, len: usize) -> f64 {
        (len as f64 / self.normalizer()).ln_1p() * LOG2_E
    }

    /// Word gain of a sentence given its `(token, count)` pairs.
    pub fn word_gain(&self, token_counts: &[(u32, u32)]) -> f64 {
        let mut gain = 0.0;
        for &(v, k) in token_counts {
            let p = self.in_domain[v as usize];
            if p > 0.0 {
                let c = self.counts[v as usize] as f64 + self.alpha;
                gain -= p * (k as f64 / c).ln_1p() * LOG2_E;
            }
        }
        gain
    }

    pub fn delta(&self, len: usize, token_counts: &[(u32, u32)]) -> f64 {
        self.length_penalty(len) + self.word_gain(token_counts)
    }

    /// `ΔH` as the difference of two full entropy evaluations.
    pub fn delta_from_scratch(&self, tokens: &[u32]) -> f64 {
        let mut next = self.clone();
        next.add(tokens);
        next.entropy() - self.entropy()
    }

    pub fn add(&mut self, tokens: &[u32]) {
        for &v in tokens {
            self.counts[v as usize] += 1;
        }
        self.selected_tokens += tokens.len() as u64;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Gain(f64);

impl Eq for Gain {}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Sentence length and sorted `(in-domain token, count)` pairs.
type ClassKey = (usize, Vec<(u32, u32)>);

/// Candidates sharing length and in-domain token counts.
#[derive(Clone, Copy, Debug)]
struct Class {
    /// Start and length of this class's run in `GainTable::slots`.
    slots: u32,
    num_slots: u32,
    /// Next unselected member in `Classes::members`, and one past the last.
    cursor: u32,
    end: u32,
}

/// Classes numbered by length, then initial gain, so the heap tops a step
/// revisits sit close together in memory.
struct Classes {
    info: Vec<Class>,
    members: Vec<u32>,
}

impl Classes {
    fn head(&self, c: usize) -> Option<usize> {
        let info = self.info[c];
        (info.cursor < info.end).then(|| self.members[info.cursor as usize] as usize)
    }
}

/// Per-word terms `P_I(v) log2(1 + k / (c_n(v) + α))` for every count `k` some
/// candidate has, so recomputing a gain is a handful of lookups. Only the
/// words of a selected sentence need refreshing after each step.
struct GainTable {
    offsets: Vec<usize>,
    terms: Vec<f64>,
    /// Index into `terms` of every `(token, count)` of every class, back to back.
    slots: Vec<u32>,
}

impl GainTable {
    fn new(state: &CynicalState, max_k: &[u32]) -> Self {
        let mut offsets = Vec::with_capacity(max_k.len() + 1);
        let mut total = 0;
        for &k in max_k {
            offsets.push(total);
            total += k as usize;
        }
        offsets.push(total);
        assert!(total <= u32::MAX as usize, "gain table exceeds 2^32 terms");
        let mut table = GainTable {
            offsets,
            terms: vec![0.0; total],
            slots: Vec::new(),
        };
        for v in 0..max_k.len() {
            table.refresh(state, v);
        }
        table
    }

    fn slot(&self, v: u32, k: u32) -> u32 {
        (self.offsets[v as usize] + k as usize - 1) as u32
    }

    fn refresh(&mut self, state: &CynicalState, v: usize) {
        let p = state.in_domain[v];
        let c = state.counts[v] as f64 + state.alpha;
        let slots = &mut self.terms[self.offsets[v]..self.offsets[v + 1]];
        for (i, t) in slots.iter_mut().enumerate() {
            *t = p * ((i + 1) as f64 / c).ln_1p() * LOG2_E;
        }
    }

    /// Same value, bit for bit, as [`CynicalState::word_gain`].
    fn gain(&self, class: &Class) -> f64 {
        let start = class.slots as usize;
        let mut gain = 0.0;
        for &s in &self.slots[start..start + class.num_slots as usize] {
            gain -= self.terms[s as usize];
        }
        gain
    }
}

/// `(stale gain, class cursor when computed, class)`, compact to keep the heaps cache friendly.
type HeapEntry = Reverse<(Gain, u32, u32)>;

#[derive(Debug)]
struct LengthGroup {
    len: usize,
    heap: BinaryHeap<HeapEntry>,
}

struct Contender {
    delta: f64,
    index: usize,
    class: usize,
}

impl LengthGroup {
    /// Lower bound on this group's ΔH from the stale heap top.
    fn bound(&self, state: &CynicalState) -> Option<f64> {
        let Reverse((Gain(stale), _, _)) = self.heap.peek()?;
        Some(state.length_penalty(self.len) + stale)
    }

    /// Contenders within `TIE_EPSILON` of this group's minimum ΔH, or none
    /// once every ΔH left in the group is known to exceed `limit`.
    fn contenders(&mut self, state: &CynicalState, table: &GainTable, classes: &Classes, limit: f64) -> Vec<Contender> {
        let penalty = state.length_penalty(self.len);
        let (g_best, top) = loop {
            let Some(mut entry) = self.heap.peek_mut() else {
                return Vec::new();
            };
            let Reverse((Gain(stale), cursor, cls)) = *entry;
            if penalty + stale > limit {
                return Vec::new();
            }
            let class = &classes.info[cls as usize];
            if class.cursor == class.end {
                PeekMut::pop(entry);
                continue;
            }
            let g = table.gain(class);
            if g == stale && class.cursor == cursor {
                PeekMut::pop(entry);
                break (g, (g, cursor, cls));
            }
            *entry = Reverse((Gain(g), class.cursor, cls));
        };

        let head = |cls: u32| classes.head(cls as usize).expect("class has members");
        let mut popped = vec![top];
        let mut out = vec![Contender {
            delta: penalty + top.0,
            index: head(top.2),
            class: top.2 as usize,
        }];
        while let Some(&Reverse((Gain(stale), _, cls))) = self.heap.peek() {
            if stale > g_best + TIE_EPSILON {
                break;
            }
            self.heap.pop();
            let class = &classes.info[cls as usize];
            if class.cursor == class.end {
                continue;
            }
            let g = table.gain(class);
            if g <= g_best + TIE_EPSILON {
                out.push(Contender {
                    delta: penalty + g,
                    index: head(cls),
                    class: cls as usize,
                });
            }
            popped.push((g, class.cursor, cls));
        }
        for (g, cursor, cls) in popped {
            self.heap.push(Reverse((Gain(g), cursor, cls)));
        }
        out
    }
}

/// Symbol id of `corpus` → joint id, assigned to tokens that occur.
fn joint_ids<'c>(corpus: &'c Corpus, joint: &mut FxHashMap<&'c str, u32>) -> Vec<u32> {
    let mut map = vec![u32::MAX; corpus.symbols().len()];
    for s in corpus.sentences() {
        for &sym in s.ids() {
            if map[sym as usize] == u32::MAX {
                let next = joint.len() as u32;
                map[sym as usize] = *joint.entry(corpus.symbols().name(sym)).or_insert(next);
            }
        }
    }
    map
}

/// Cynical selection with α = 1 on all cores.
pub fn cynical_select(in_domain: &Corpus, candidates: &Corpus, budget: usize) -> Result<SelectionResult> {
    cynical_select_with(in_domain, candidates, budget, DEFAULT_ALPHA, 0)
}

pub fn cynical_select_with(
    in_domain: &Corpus,
    candidates: &Corpus,
    budget: usize,
    alpha: f64,
    workers: usize,
) -> Result<SelectionResult> {
    if budget == 0 {
        return Err(Error::invalid("selection budget must be positive"));
    }
    if budget > candidates.len() {
        return Err(Error::invalid(format!(
            "budget {budget} exceeds pool of {} candidates",
            candidates.len()
        )));
    }
    if in_domain.is_empty() {
        return Err(Error::EmptyCorpus(in_domain.origin().to_owned()));
    }
    if candidates.len() > u32::MAX as usize || candidates.total_tokens() > u32::MAX as usize {
        return Err(Error::invalid("candidate pool exceeds 2^32 sentences or tokens"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha must be positive"));
    }

    // joint vocabulary over tokens that actually occur
    let mut joint: FxHashMap<&str, u32> = FxHashMap::default();
    let in_map = joint_ids(in_domain, &mut joint);
    let cand_map = joint_ids(candidates, &mut joint);
    let vocab_size = joint.len();
    drop(joint);

    let mut in_counts = vec![0u64; vocab_size];
    for s in in_domain.sentences() {
        for &sym in s.ids() {
            in_counts[in_map[sym as usize] as usize] += 1;
        }
    }
    let in_total = in_domain.total_tokens() as f64;
    let p_in: Vec<f64> = in_counts.iter().map(|&c| c as f64 / in_total).collect();
    let mut state = CynicalState::new(p_in, alpha);

    let mut class_of: FxHashMap<ClassKey, Vec<u32>> = FxHashMap::default();
    let mut scratch: Vec<u32> = Vec::new();
    for (i, s) in candidates.sentences().enumerate() {
        scratch.clear();
        scratch.extend(
            s.ids()
                .iter()
                .map(|&sym| cand_map[sym as usize])
                .filter(|&v| state.in_domain[v as usize] > 0.0),
        );
        scratch.sort_unstable();
        let mut tc: Vec<(u32, u32)> = Vec::new();
        for &v in &scratch {
            match tc.last_mut() {
                Some((last, k)) if *last == v => *k += 1,
                _ => tc.push((v, 1)),
            }
        }
        class_of.entry((s.len(), tc)).or_default().push(i as u32);
    }
    // (initial gain, key, members)
    let mut raw: Vec<(f64, ClassKey, Vec<u32>)> = class_of
        .into_iter()
        .map(|(key, members)| (state.word_gain(&key.1), key, members))
        .collect();
    raw.sort_by(|a, b| a.1 .0.cmp(&b.1 .0).then(a.0.total_cmp(&b.0)).then(a.2[0].cmp(&b.2[0])));

    let mut max_k = vec![0u32; vocab_size];
    for (_, (_, tc), _) in &raw {
        for &(v, k) in tc {
            max_k[v as usize] = max_k[v as usize].max(k);
        }
    }
    let mut table = GainTable::new(&state, &max_k);
    let mut classes = Classes {
        info: Vec::with_capacity(raw.len()),
        members: Vec::with_capacity(candidates.len()),
    };
    let mut groups: Vec<LengthGroup> = Vec::new();
    for (c, (_, (len, tc), members)) in raw.into_iter().enumerate() {
        let info = Class {
            slots: table.slots.len() as u32,
            num_slots: tc.len() as u32,
            cursor: classes.members.len() as u32,
            end: (classes.members.len() + members.len()) as u32,
        };
        for &(v, k) in &tc {
            let slot = table.slot(v, k);
            table.slots.push(slot);
        }
        classes.members.extend(members);
        classes.info.push(info);
        if groups.last().is_none_or(|g| g.len != len) {
            groups.push(LengthGroup {
                len,
                heap: BinaryHeap::new(),
            });
        }
        let g = table.gain(&info);
        groups
            .last_mut()
            .unwrap()
            .heap
            .push(Reverse((Gain(g), info.cursor, c as u32)));
    }

    let mut entropy = state.entropy();
    let mut trace = Vec::with_capacity(budget);
    let mut tokens: Vec<u32> = Vec::new();
    par::with_workers(workers, || {
        for step in 1..=budget {
            // Lower bounds let most groups skip refreshing: a group is only
            // resolved while its bound can still reach the best ΔH so far.
            let mut order: Vec<(f64, usize)> = groups
                .iter()
                .enumerate()
                .filter_map(|(g, grp)| grp.bound(&state).map(|b| (b, g)))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut contenders: Vec<Contender> = Vec::new();
            let mut best = f64::INFINITY;
            let mut next = 0;
            while best == f64::INFINITY && next < order.len() {
                let found = groups[order[next].1].contenders(&state, &table, &classes, f64::INFINITY);
                best = found.iter().map(|c| c.delta).fold(best, f64::min);
                contenders.extend(found);
                next += 1;
            }
            let rest: Vec<usize> = order[next..]
                .iter()
                .take_while(|(b, _)| *b <= best + TIE_EPSILON)
                .map(|&(_, g)| g)
                .collect();
            if workers == 1 || rest.len() < 2 {
                for g in rest {
                    let found = groups[g].contenders(&state, &table, &classes, best + TIE_EPSILON);
                    best = found.iter().map(|c| c.delta).fold(best, f64::min);
                    contenders.extend(found);
                }
            } else {
                let mut wanted = vec![false; groups.len()];
                for g in rest {
                    wanted[g] = true;
                }
                let limit = best + TIE_EPSILON;
                contenders.par_extend(
                    groups
                        .par_iter_mut()
                        .enumerate()
                        .filter(|(g, _)| wanted[*g])
                        .flat_map_iter(|(_, grp)| grp.contenders(&state, &table, &classes, limit)),
                );
            }
            let min = contenders.iter().map(|c| c.delta).fold(f64::INFINITY, f64::min);
            let chosen = contenders
                .iter()
                .filter(|c| c.delta <= min + TIE_EPSILON)
                .min_by_key(|c| c.index)
                .expect("pool is non-empty while step <= budget");

            tokens.clear();
            tokens.extend(
                candidates
                    .sentence(chosen.index)
                    .ids()
                    .iter()
                    .map(|&sym| cand_map[sym as usize]),
            );
            state.add(&tokens);
            tokens.sort_unstable();
            tokens.dedup();
            for &v in &tokens {
                table.refresh(&state, v as usize);
            }
            classes.info[chosen.class].cursor += 1;
            entropy += chosen.delta;
            trace.push(CynicalStep {
                step,
                index: chosen.index,
                delta_h: chosen.delta,
                entropy,
            });
        }
    })?;

    let ranking = trace
        .iter()
        .map(|s| SentenceScore {
            index: s.index,
            score: (s.step - 1) as f64,
        })
        .collect();
    Ok(SelectionResult {
        method: Method::Cynical,
        ranking,
        trace,
    })
}
