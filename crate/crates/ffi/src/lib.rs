//! C ABI over the `dacl` library.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `dacl_*_new`/`_load`/`_train` call and released by the matching `_free`.
//! Functions return a [`DaclStatus`]; on failure the message is available
//! from [`dacl_last_error`] on the same thread until the next failing call.
//! Panics never unwind into C: they are reported as `DACL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use dacl::corpus::{self, Corpus, Side};
use dacl::curriculum::{self, Mode, Schedule, ScheduleParams};
use dacl::diagnostics::{hellinger, shared_vocab, UnigramDistribution};
use dacl::lm::{self, NGramModel};
use dacl::selection::{self, SelectionResult};
use dacl::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DaclStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A parameter was out of range or a string was not UTF-8.
    InvalidArgument = 2,
    /// A file could not be read or written.
    Io = 3,
    /// Input data was malformed.
    Data = 4,
    /// An iterator has no further items.
    End = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DaclMode {
    Standard = 0,
    Reverse = 1,
    Scrambled = 2,
    NoShuffle = 3,
}

impl From<DaclMode> for Mode {
    fn from(m: DaclMode) -> Mode {
        match m {
            DaclMode::Standard => Mode::Standard,
            DaclMode::Reverse => Mode::Reverse,
            DaclMode::Scrambled => Mode::Scrambled,
            DaclMode::NoShuffle => Mode::NoShuffle,
        }
    }
}

/// A loaded corpus.
pub struct DaclCorpus(Corpus);

/// A trained or imported n-gram language model.
pub struct DaclModel(NGramModel);

/// A ranking of pool sentences, most in-domain first.
pub struct DaclRanking(SelectionResult);

/// A curriculum schedule.
pub struct DaclSchedule(Arc<Schedule>);

/// Cursor over the batches of a schedule. Keeps the schedule alive.
pub struct DaclBatchIter {
    schedule: Arc<Schedule>,
    next: usize,
}

/// One batch. `indices` points into memory owned by the iterator that
/// produced it and stays valid until that iterator is freed.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DaclBatch {
    /// 1-based phase.
    pub phase: usize,
    /// Shard 0 indexes the in-domain corpus, other shards the pool.
    pub shard: usize,
    pub bucket: usize,
    pub indices: *const usize,
    pub len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("NULs removed")));
}

fn status_of(err: &Error) -> DaclStatus {
    match err {
        Error::Io { .. } => DaclStatus::Io,
        e if e.is_config_error() => DaclStatus::InvalidArgument,
        _ => DaclStatus::Data,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (DaclStatus, String)>) -> DaclStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DaclStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            set_error(format!("internal error: {msg}"));
            DaclStatus::Panic
        }
    }
}

fn lib<T>(r: dacl::Result<T>) -> Result<T, (DaclStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (DaclStatus, String) {
    (DaclStatus::NullArgument, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> (DaclStatus, String) {
    (DaclStatus::InvalidArgument, msg.into())
}

/// # Safety
/// `p` is NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DaclStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` is NULL or points to a live `T`.
unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, (DaclStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` is NULL or valid for writes.
unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), (DaclStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message of the last failing call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dacl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dacl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a whitespace-tokenized corpus, one sentence per line, dropping
/// sentences longer than `max_len` tokens.
///
/// # Safety
/// `path` is a NUL-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_corpus_load(
    path: *const c_char,
    max_len: usize,
    out: *mut *mut DaclCorpus,
) -> DaclStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let loaded = lib(corpus::load_corpus(path, max_len))?;
        put(out, boxed(DaclCorpus(loaded.corpus)), "out")
    })
}

/// Builds a corpus from newline-separated text.
///
/// # Safety
/// `text` is a NUL-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_corpus_from_text(text: *const c_char, out: *mut *mut DaclCorpus) -> DaclStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let lines: Vec<&str> = text.lines().collect();
        let c = lib(Corpus::from_sentences(&lines, Side::Source, "<memory>"))?;
        put(out, boxed(DaclCorpus(c)), "out")
    })
}

/// Number of sentences, or 0 for NULL.
///
/// # Safety
/// `corpus` is NULL or a live corpus handle.
#[no_mangle]
pub unsafe extern "C" fn dacl_corpus_len(corpus: *const DaclCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `corpus` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dacl_corpus_free(corpus: *mut DaclCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Trains an interpolated modified Kneser-Ney model of the given order.
///
/// # Safety
/// `corpus` is a live corpus handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_model_train(
    corpus: *const DaclCorpus,
    order: usize,
    out: *mut *mut DaclModel,
) -> DaclStatus {
    guard(|| {
        let c = obj(corpus, "corpus")?;
        let m = lib(lm::train(&c.0, order))?;
        put(out, boxed(DaclModel(m)), "out")
    })
}

/// # Safety
/// `path` is a NUL-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_model_load_arpa(path: *const c_char, out: *mut *mut DaclModel) -> DaclStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let m = lib(lm::import_arpa(path))?;
        put(out, boxed(DaclModel(m)), "out")
    })
}

/// # Safety
/// `model` is a live model handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dacl_model_save_arpa(model: *const DaclModel, path: *const c_char) -> DaclStatus {
    guard(|| {
        let m = obj(model, "model")?;
        let path = str_arg(path, "path")?;
        lib(lm::export_arpa(&m.0, path))
    })
}

/// Cross-entropy of one whitespace-tokenized sentence in bits per word,
/// end of sentence included.
///
/// # Safety
/// `model` is a live model handle, `sentence` a NUL-terminated string and
/// `bits` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_model_cross_entropy(
    model: *const DaclModel,
    sentence: *const c_char,
    bits: *mut f64,
) -> DaclStatus {
    guard(|| {
        let m = obj(model, "model")?;
        let tokens: Vec<&str> = str_arg(sentence, "sentence")?.split_whitespace().collect();
        if tokens.is_empty() {
            return Err(invalid("sentence is empty"));
        }
        put(bits, lm::sentence_cross_entropy(&m.0, &tokens), "bits")
    })
}

/// In-domain perplexity of a whole corpus.
///
/// # Safety
/// Handles are live and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_model_perplexity(
    model: *const DaclModel,
    corpus: *const DaclCorpus,
    out: *mut f64,
) -> DaclStatus {
    guard(|| {
        let m = obj(model, "model")?;
        let c = obj(corpus, "corpus")?;
        put(out, lm::perplexity(&m.0, &c.0), "out")
    })
}

/// # Safety
/// `model` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dacl_model_free(model: *mut DaclModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Ranks `pool` by `H_in(s) - H_gen(s)`. `workers` = 0 uses all cores.
///
/// # Safety
/// Handles are live and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_moore_lewis(
    lm_in: *const DaclModel,
    lm_gen: *const DaclModel,
    pool: *const DaclCorpus,
    workers: usize,
    out: *mut *mut DaclRanking,
) -> DaclStatus {
    guard(|| {
        let (a, b) = (obj(lm_in, "lm_in")?, obj(lm_gen, "lm_gen")?);
        let pool = obj(pool, "pool")?;
        let r = lib(selection::moore_lewis_with(&a.0, &b.0, &pool.0, workers))?;
        put(out, boxed(DaclRanking(r)), "out")
    })
}

/// Greedy cynical selection of `budget` pool sentences with add-`alpha`
/// smoothing.
///
/// # Safety
/// Handles are live and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_cynical(
    in_domain: *const DaclCorpus,
    pool: *const DaclCorpus,
    budget: usize,
    alpha: f64,
    workers: usize,
    out: *mut *mut DaclRanking,
) -> DaclStatus {
    guard(|| {
        let i = obj(in_domain, "in_domain")?;
        let p = obj(pool, "pool")?;
        let r = lib(selection::cynical_select_with(&i.0, &p.0, budget, alpha, workers))?;
        put(out, boxed(DaclRanking(r)), "out")
    })
}

/// # Safety
/// `ranking` is NULL or a live ranking handle.
#[no_mangle]
pub unsafe extern "C" fn dacl_ranking_len(ranking: *const DaclRanking) -> usize {
    ranking.as_ref().map_or(0, |r| r.0.len())
}

/// Sentence index and score at `rank` (0-based).
///
/// # Safety
/// `ranking` is a live handle; `index` and `score` are valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_ranking_get(
    ranking: *const DaclRanking,
    rank: usize,
    index: *mut usize,
    score: *mut f64,
) -> DaclStatus {
    guard(|| {
        let r = obj(ranking, "ranking")?;
        let s =
            r.0.ranking
                .get(rank)
                .ok_or_else(|| invalid(format!("rank {rank} out of range 0..{}", r.0.len())))?;
        put(index, s.index, "index")?;
        put(score, s.score, "score")
    })
}

/// # Safety
/// `ranking` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dacl_ranking_free(ranking: *mut DaclRanking) {
    if !ranking.is_null() {
        drop(Box::from_raw(ranking));
    }
}

/// Hellinger distance between the unigram distributions of two corpora over
/// their joint vocabulary.
///
/// # Safety
/// Handles are live and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_hellinger(a: *const DaclCorpus, b: *const DaclCorpus, out: *mut f64) -> DaclStatus {
    guard(|| {
        let (a, b) = (obj(a, "a")?, obj(b, "b")?);
        let vocab = shared_vocab(&[&a.0, &b.0]);
        let p = lib(UnigramDistribution::from_corpus(&a.0, vocab.clone()))?;
        let q = lib(UnigramDistribution::from_corpus(&b.0, vocab))?;
        put(out, lib(hellinger(&p, &q))?, "out")
    })
}

/// Shards the in-domain corpus and the top `cut` of `ranking`, then draws a
/// schedule. `num_phases` = 0 means shards + 20.
///
/// # Safety
/// Handles are live and `out` is valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn dacl_schedule_new(
    in_domain: *const DaclCorpus,
    pool: *const DaclCorpus,
    ranking: *const DaclRanking,
    cut: usize,
    num_shards: usize,
    mode: DaclMode,
    phase_len: usize,
    batch_words: usize,
    num_phases: usize,
    seed: u64,
    out: *mut *mut DaclSchedule,
) -> DaclStatus {
    guard(|| {
        let i = obj(in_domain, "in_domain")?;
        let p = obj(pool, "pool")?;
        let r = obj(ranking, "ranking")?;
        let plan = lib(curriculum::build_shards(&i.0, &r.0, cut, num_shards))?;
        let params = ScheduleParams {
            mode: mode.into(),
            phase_len,
            batch_budget: batch_words,
            num_phases: (num_phases > 0).then_some(num_phases),
            seed,
            ..Default::default()
        };
        let s = lib(curriculum::make_schedule(
            &plan,
            &i.0.lengths(),
            &p.0.lengths(),
            &params,
        ))?;
        put(out, boxed(DaclSchedule(Arc::new(s))), "out")
    })
}

/// Reads a schedule file, verifying its checksum.
///
/// # Safety
/// `path` is a NUL-terminated string and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_schedule_load(path: *const c_char, out: *mut *mut DaclSchedule) -> DaclStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let s = lib(curriculum::load_schedule(path))?;
        put(out, boxed(DaclSchedule(Arc::new(s))), "out")
    })
}

/// # Safety
/// `schedule` is a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dacl_schedule_save(schedule: *const DaclSchedule, path: *const c_char) -> DaclStatus {
    guard(|| {
        let s = obj(schedule, "schedule")?;
        let path = str_arg(path, "path")?;
        lib(s.0.emit(path))
    })
}

/// # Safety
/// `schedule` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dacl_schedule_num_batches(schedule: *const DaclSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.batches.len())
}

/// # Safety
/// `schedule` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dacl_schedule_num_phases(schedule: *const DaclSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.0.header.num_phases)
}

/// # Safety
/// `schedule` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dacl_schedule_free(schedule: *mut DaclSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Starts iterating from the first batch. The iterator may outlive the
/// schedule handle.
///
/// # Safety
/// `schedule` is a live handle and `out` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_batch_iter_new(
    schedule: *const DaclSchedule,
    out: *mut *mut DaclBatchIter,
) -> DaclStatus {
    guard(|| {
        let s = obj(schedule, "schedule")?;
        let it = DaclBatchIter {
            schedule: Arc::clone(&s.0),
            next: 0,
        };
        put(out, boxed(it), "out")
    })
}

/// Writes the next batch to `batch`, or returns `DACL_STATUS_END`.
///
/// # Safety
/// `iter` is a live handle and `batch` is valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dacl_batch_iter_next(iter: *mut DaclBatchIter, batch: *mut DaclBatch) -> DaclStatus {
    let mut end = false;
    let status = guard(|| {
        let it = iter.as_mut().ok_or_else(|| null("iter"))?;
        let Some(b) = it.schedule.batches.get(it.next) else {
            end = true;
            return Ok(());
        };
        if !it.schedule.header.is_available(b.phase, b.shard) {
            return Err((
                DaclStatus::Data,
                format!(
                    "batch {} uses shard {} before phase {} unlocks it",
                    it.next, b.shard, b.phase
                ),
            ));
        }
        let out = DaclBatch {
            phase: b.phase,
            shard: b.shard,
            bucket: b.bucket,
            indices: b.indices.as_ptr(),
            len: b.indices.len(),
        };
        put(batch, out, "batch")?;
        it.next += 1;
        Ok(())
    });
    if end {
        DaclStatus::End
    } else {
        status
    }
}

/// # Safety
/// `iter` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dacl_batch_iter_free(iter: *mut DaclBatchIter) {
    if !iter.is_null() {
        drop(Box::from_raw(iter));
    }
}
