//! One function per subcommand. Each reads its inputs, writes its artifacts
//! into `out`, and records a manifest there.
//!
//! Corpora are length-filtered on load. When the other side of a bitext is
//! given (`--*-pair`), pairs are filtered jointly so that sentence indices
//! agree across every step that loads the same files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use crate::corpus::{self, Corpus, ParallelCorpus, DEFAULT_IN_DOMAIN_SAMPLE, DEFAULT_MAX_LEN};
use crate::curriculum::{
    build_shards, make_schedule, Mode, ScheduleParams, ShardPlan, DEFAULT_BATCH_WORDS, DEFAULT_BUCKET_WIDTH,
    DEFAULT_NUM_SHARDS, DEFAULT_PHASE_LEN,
};
use crate::diagnostics::{self, LmParams};
use crate::error::{Error, Result};
use crate::lm::{self, NGramModel, Smoothing, DEFAULT_ORDER};
use crate::s4;
use crate::selection::{self, Method, SelectionResult, DEFAULT_ALPHA};

pub const SAMPLE_FILE: &str = "sample.txt";
pub const SAMPLE_PAIR_FILE: &str = "sample.pair.txt";
pub const SAMPLE_INDEX_FILE: &str = "sample.idx";
pub const MODEL_FILE: &str = "model.arpa";
pub const RANKING_FILE: &str = "ranking.tsv";
pub const SCORES_FILE: &str = "scores.tsv";
pub const CONTRAST_INDEX_FILE: &str = "contrast.idx";
pub const TRACE_FILE: &str = "trace.tsv";
pub const SHARDS_FILE: &str = "shards.json";
pub const SCHEDULE_FILE: &str = "schedule.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const CUTS_FILE: &str = "cuts.tsv";
pub const HELLINGER_FILE: &str = "hellinger.csv";
pub const PERPLEXITY_FILE: &str = "perplexity.csv";
pub const S4_JSON_FILE: &str = "s4.json";
pub const S4_TSV_FILE: &str = "s4.tsv";

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}

fn default_order() -> usize {
    DEFAULT_ORDER
}

fn default_seed() -> u64 {
    1
}

pub(crate) fn require_file(field: &str, path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::config(field, format!("no such file: {}", path.display())))
    }
}

pub(crate) fn require_positive(field: &str, value: usize) -> Result<()> {
    if value == 0 {
        Err(Error::config(field, "must be positive"))
    } else {
        Ok(())
    }
}

fn check_order(order: usize, smoothing: Smoothing) -> Result<()> {
    require_positive("--order", order)?;
    if smoothing == Smoothing::AddOne && order != 1 {
        return Err(Error::config("--smoothing", "add-one smoothing requires --order 1"));
    }
    Ok(())
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// A corpus loaded for one step, with the jointly filtered other side if any.
struct Loaded {
    corpus: Corpus,
    pair: Option<Corpus>,
    dropped: usize,
}

fn load(path: &Path, pair: Option<&Path>, max_len: usize) -> Result<Loaded> {
    match pair {
        None => {
            let l = corpus::load_corpus(path, max_len)?;
            Ok(Loaded {
                corpus: l.corpus,
                pair: None,
                dropped: l.dropped,
            })
        }
        Some(p) => {
            let (pc, dropped) = corpus::load_parallel(path, p, max_len)?;
            Ok(Loaded {
                corpus: pc.src,
                pair: Some(pc.trg),
                dropped,
            })
        }
    }
}

fn record_corpus(m: &mut Manifest, role: &str, l: &Loaded) {
    m.stat(&format!("{role}_sentences"), l.corpus.len());
    m.stat(&format!("{role}_dropped"), l.dropped);
}

fn write_indices(indices: &[usize], path: &Path) -> Result<()> {
    corpus::save_provenance(indices, path)
}

/// Uniformly samples an in-domain training set.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleArgs {
    /// Corpus to sample, one tokenized sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Other side of the bitext; pairs are sampled together.
    #[arg(long)]
    pub pair: Option<PathBuf>,
    /// Sample size. A corpus no larger than this is kept whole, in file order.
    #[arg(long, default_value_t = DEFAULT_IN_DOMAIN_SAMPLE)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn sample(a: &SampleArgs) -> Result<Manifest> {
    require_file("--input", &a.input)?;
    if let Some(p) = &a.pair {
        require_file("--pair", p)?;
    }
    require_positive("--size", a.size)?;
    require_positive("--max-len", a.max_len)?;
    let l = load(&a.input, a.pair.as_deref(), a.max_len)?;
    let n = l.corpus.len();
    let indices: Vec<usize> = if a.size >= n {
        log::info!("{}: {n} sentences, keeping all", a.input.display());
        (0..n).collect()
    } else {
        corpus::sample_indices(n, a.size, a.seed)?
    };
    create_out(&a.out)?;
    corpus::save_corpus(&l.corpus.subset(&indices), a.out.join(SAMPLE_FILE))?;
    if let Some(pair) = &l.pair {
        corpus::save_corpus(&pair.subset(&indices), a.out.join(SAMPLE_PAIR_FILE))?;
    }
    write_indices(&indices, &a.out.join(SAMPLE_INDEX_FILE))?;

    let mut m = Manifest::new("sample", a);
    m.seed("sample", a.seed);
    m.input("input", &a.input)?;
    m.input_opt("pair", a.pair.as_deref())?;
    record_corpus(&mut m, "input", &l);
    m.stat("sampled", indices.len());
    m.output("sample", &a.out, SAMPLE_FILE)?;
    if l.pair.is_some() {
        m.output("sample_pair", &a.out, SAMPLE_PAIR_FILE)?;
    }
    m.output("indices", &a.out, SAMPLE_INDEX_FILE)?;
    m.write(&a.out)?;
    Ok(m)
}

/// Trains an n-gram model and writes it in ARPA format.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmTrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    #[serde(default = "default_order")]
    pub order: usize,
    #[arg(long, default_value_t = Smoothing::ModifiedKneserNey)]
    #[serde(default)]
    pub smoothing: Smoothing,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn lm_train(a: &LmTrainArgs) -> Result<Manifest> {
    require_file("--corpus", &a.corpus)?;
    check_order(a.order, a.smoothing)?;
    require_positive("--max-len", a.max_len)?;
    let l = load(&a.corpus, None, a.max_len)?;
    let model = lm::train_with(&l.corpus, a.order, a.smoothing)?;
    create_out(&a.out)?;
    lm::export_arpa(&model, a.out.join(MODEL_FILE))?;

    let mut m = Manifest::new("lm-train", a);
    m.input("corpus", &a.corpus)?;
    record_corpus(&mut m, "corpus", &l);
    m.output("model", &a.out, MODEL_FILE)?;
    m.write(&a.out)?;
    Ok(m)
}

/// Ranks the pool by cross-entropy difference against an in-domain model.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreMlArgs {
    #[arg(long)]
    pub in_domain: PathBuf,
    /// Other side of the in-domain bitext.
    #[arg(long)]
    pub in_domain_pair: Option<PathBuf>,
    #[arg(long)]
    pub pool: PathBuf,
    /// Other side of the pool bitext.
    #[arg(long)]
    pub pool_pair: Option<PathBuf>,
    /// Sum the differences of both sides (needs both `--*-pair` files).
    #[arg(long)]
    #[serde(default)]
    pub bilingual: bool,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    #[serde(default = "default_order")]
    pub order: usize,
    #[arg(long, default_value_t = Smoothing::ModifiedKneserNey)]
    #[serde(default)]
    pub smoothing: Smoothing,
    /// Size of the pool sample the general model is trained on
    /// (default: in-domain size).
    #[arg(long)]
    pub contrast_size: Option<usize>,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_seed")]
    pub contrast_seed: u64,
    /// Pretrained in-domain model (ARPA) instead of training one.
    #[arg(long, requires = "lm_gen")]
    pub lm_in: Option<PathBuf>,
    /// Pretrained general model (ARPA) instead of a pool sample.
    #[arg(long, requires = "lm_in")]
    pub lm_gen: Option<PathBuf>,
    /// Score the pool line by line without loading it (needs both models).
    /// No length filter applies, so indices are raw line numbers.
    #[arg(long)]
    #[serde(default)]
    pub stream: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

impl ScoreMlArgs {
    fn validate(&self) -> Result<()> {
        require_file("--in-domain", &self.in_domain)?;
        require_file("--pool", &self.pool)?;
        for (field, p) in [
            ("--in-domain-pair", &self.in_domain_pair),
            ("--pool-pair", &self.pool_pair),
            ("--lm-in", &self.lm_in),
            ("--lm-gen", &self.lm_gen),
        ] {
            if let Some(p) = p {
                require_file(field, p)?;
            }
        }
        check_order(self.order, self.smoothing)?;
        require_positive("--max-len", self.max_len)?;
        if let Some(k) = self.contrast_size {
            require_positive("--contrast-size", k)?;
        }
        if self.bilingual {
            if self.in_domain_pair.is_none() || self.pool_pair.is_none() {
                return Err(Error::config("--bilingual", "needs --in-domain-pair and --pool-pair"));
            }
            if self.lm_in.is_some() || self.stream {
                return Err(Error::config(
                    "--bilingual",
                    "cannot be combined with --lm-in or --stream",
                ));
            }
        }
        if self.stream {
            if self.lm_in.is_none() {
                return Err(Error::config("--stream", "needs --lm-in and --lm-gen"));
            }
            if self.pool_pair.is_some() {
                return Err(Error::config("--stream", "cannot filter pairs; drop --pool-pair"));
            }
        }
        Ok(())
    }
}

fn contrast_indices(pool_len: usize, requested: usize, seed: u64) -> Result<Vec<usize>> {
    let k = if requested > pool_len {
        log::warn!("contrast sample of {requested} exceeds pool of {pool_len}; using the whole pool");
        pool_len
    } else {
        requested
    };
    corpus::sample_indices(pool_len, k, seed)
}

fn train(corpus: &Corpus, a: &ScoreMlArgs) -> Result<NGramModel> {
    lm::train_with(corpus, a.order, a.smoothing)
}

pub fn score_ml(a: &ScoreMlArgs, workers: usize) -> Result<Manifest> {
    a.validate()?;
    create_out(&a.out)?;
    let mut m = Manifest::new("score-ml", a);
    m.input("in_domain", &a.in_domain)?;
    m.input_opt("in_domain_pair", a.in_domain_pair.as_deref())?;
    m.input("pool", &a.pool)?;
    m.input_opt("pool_pair", a.pool_pair.as_deref())?;
    m.input_opt("lm_in", a.lm_in.as_deref())?;
    m.input_opt("lm_gen", a.lm_gen.as_deref())?;

    if a.stream {
        let lm_in = lm::import_arpa(a.lm_in.as_ref().expect("validated"))?;
        let lm_gen = lm::import_arpa(a.lm_gen.as_ref().expect("validated"))?;
        let pool = File::open(&a.pool).map_err(|e| Error::io(&a.pool, e))?;
        let scores_path = a.out.join(SCORES_FILE);
        let sink = File::create(&scores_path).map_err(|e| Error::io(&scores_path, e))?;
        let n = selection::moore_lewis_stream(&lm_in, &lm_gen, BufReader::new(pool), BufWriter::new(sink), workers)?;
        let scores = read_scores(&scores_path, n)?;
        selection::write_ranking_tsv(
            &SelectionResult::from_scores(Method::MooreLewis, &scores),
            a.out.join(RANKING_FILE),
        )?;
        m.stat("pool_sentences", n);
        m.output("scores", &a.out, SCORES_FILE)?;
        m.output("ranking", &a.out, RANKING_FILE)?;
        m.write(&a.out)?;
        return Ok(m);
    }

    let in_domain = load(&a.in_domain, a.in_domain_pair.as_deref(), a.max_len)?;
    let pool = load(&a.pool, a.pool_pair.as_deref(), a.max_len)?;
    record_corpus(&mut m, "in_domain", &in_domain);
    record_corpus(&mut m, "pool", &pool);

    let mut contrast = None;
    let result = if a.bilingual {
        let in_pc = ParallelCorpus::new(in_domain.corpus.clone(), in_domain.pair.clone().expect("validated"))?;
        let pool_pc = ParallelCorpus::new(pool.corpus.clone(), pool.pair.clone().expect("validated"))?;
        let k = a.contrast_size.unwrap_or(in_pc.len());
        let idx = contrast_indices(pool_pc.len(), k, a.contrast_seed)?;
        let sample = pool_pc.subset(&idx);
        contrast = Some(idx);
        selection::moore_lewis_bilingual(
            &train(&in_pc.src, a)?,
            &train(&sample.src, a)?,
            &train(&in_pc.trg, a)?,
            &train(&sample.trg, a)?,
            &pool_pc,
            workers,
        )?
    } else {
        let (lm_in, lm_gen) = match (&a.lm_in, &a.lm_gen) {
            (Some(i), Some(g)) => (lm::import_arpa(i)?, lm::import_arpa(g)?),
            _ => {
                let k = a.contrast_size.unwrap_or(in_domain.corpus.len());
                let idx = contrast_indices(pool.corpus.len(), k, a.contrast_seed)?;
                let lm_gen = train(&pool.corpus.subset(&idx), a)?;
                contrast = Some(idx);
                (train(&in_domain.corpus, a)?, lm_gen)
            }
        };
        selection::moore_lewis_with(&lm_in, &lm_gen, &pool.corpus, workers)?
    };

    selection::write_ranking_tsv(&result, a.out.join(RANKING_FILE))?;
    m.output("ranking", &a.out, RANKING_FILE)?;
    if let Some(idx) = contrast {
        m.seed("contrast", a.contrast_seed);
        write_indices(&idx, &a.out.join(CONTRAST_INDEX_FILE))?;
        m.output("contrast", &a.out, CONTRAST_INDEX_FILE)?;
    }
    m.write(&a.out)?;
    Ok(m)
}

fn read_scores(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut scores = Vec::with_capacity(n);
    for line in text.lines() {
        let score = line
            .split('\t')
            .nth(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::invalid(format!("{}: malformed score line", path.display())))?;
        scores.push(score);
    }
    Ok(scores)
}

/// Greedy cynical selection of a pool subset.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectCdsArgs {
    #[arg(long)]
    pub in_domain: PathBuf,
    #[arg(long)]
    pub in_domain_pair: Option<PathBuf>,
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub pool_pair: Option<PathBuf>,
    /// Number of sentences to select (default: the whole pool).
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

pub fn select_cds(a: &SelectCdsArgs, workers: usize) -> Result<Manifest> {
    require_file("--in-domain", &a.in_domain)?;
    require_file("--pool", &a.pool)?;
    if let Some(p) = &a.in_domain_pair {
        require_file("--in-domain-pair", p)?;
    }
    if let Some(p) = &a.pool_pair {
        require_file("--pool-pair", p)?;
    }
    if !(a.alpha > 0.0 && a.alpha.is_finite()) {
        return Err(Error::config("--alpha", "must be a positive number"));
    }
    if let Some(b) = a.budget {
        require_positive("--budget", b)?;
    }
    require_positive("--max-len", a.max_len)?;
    let in_domain = load(&a.in_domain, a.in_domain_pair.as_deref(), a.max_len)?;
    let pool = load(&a.pool, a.pool_pair.as_deref(), a.max_len)?;
    let budget = a.budget.unwrap_or(pool.corpus.len());
    let result = selection::cynical_select_with(&in_domain.corpus, &pool.corpus, budget, a.alpha, workers)?;
    create_out(&a.out)?;
    selection::write_ranking_tsv(&result, a.out.join(RANKING_FILE))?;
    selection::write_trace_tsv(&result.trace, a.out.join(TRACE_FILE))?;

    let mut m = Manifest::new("select-cds", a);
    m.input("in_domain", &a.in_domain)?;
    m.input_opt("in_domain_pair", a.in_domain_pair.as_deref())?;
    m.input("pool", &a.pool)?;
    m.input_opt("pool_pair", a.pool_pair.as_deref())?;
    record_corpus(&mut m, "in_domain", &in_domain);
    record_corpus(&mut m, "pool", &pool);
    m.output("ranking", &a.out, RANKING_FILE)?;
    m.output("trace", &a.out, TRACE_FILE)?;
    m.write(&a.out)?;
    Ok(m)
}

/// Splits the in-domain corpus and the top of a ranking into shards.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShardArgs {
    #[arg(long)]
    pub in_domain: PathBuf,
    #[arg(long)]
    pub in_domain_pair: Option<PathBuf>,
    /// Ranking TSV from `score-ml` or `select-cds`.
    #[arg(long)]
    pub ranking: PathBuf,
    /// Number of top-ranked pool sentences to keep (default: the whole ranking).
    #[arg(long)]
    pub cut: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_NUM_SHARDS)]
    #[serde(default = "default_num_shards")]
    pub num_shards: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn default_num_shards() -> usize {
    DEFAULT_NUM_SHARDS
}

pub fn shard(a: &ShardArgs) -> Result<Manifest> {
    require_file("--in-domain", &a.in_domain)?;
    if let Some(p) = &a.in_domain_pair {
        require_file("--in-domain-pair", p)?;
    }
    require_file("--ranking", &a.ranking)?;
    if a.num_shards < 2 {
        return Err(Error::config("--num-shards", "must be at least 2"));
    }
    require_positive("--max-len", a.max_len)?;
    let in_domain = load(&a.in_domain, a.in_domain_pair.as_deref(), a.max_len)?;
    let ranking = selection::read_ranking_tsv(&a.ranking, Method::Random)?;
    let cut = a.cut.unwrap_or(ranking.len());
    let plan = build_shards(&in_domain.corpus, &ranking, cut, a.num_shards)?;
    create_out(&a.out)?;
    let path = a.out.join(SHARDS_FILE);
    fs::write(&path, plan.to_json() + "\n").map_err(|e| Error::io(&path, e))?;

    let mut m = Manifest::new("shard", a);
    m.input("in_domain", &a.in_domain)?;
    m.input_opt("in_domain_pair", a.in_domain_pair.as_deref())?;
    m.input("ranking", &a.ranking)?;
    record_corpus(&mut m, "in_domain", &in_domain);
    m.stat("cut", cut);
    m.output("shards", &a.out, SHARDS_FILE)?;
    m.write(&a.out)?;
    Ok(m)
}

/// Emits a curriculum schedule from a shard plan.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleArgs {
    /// Shard plan from `shard`.
    #[arg(long)]
    pub shards: PathBuf,
    #[arg(long)]
    pub in_domain: PathBuf,
    #[arg(long)]
    pub in_domain_pair: Option<PathBuf>,
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub pool_pair: Option<PathBuf>,
    #[arg(long, default_value_t = Mode::Standard)]
    #[serde(default)]
    pub mode: Mode,
    /// Batches per phase.
    #[arg(long, default_value_t = DEFAULT_PHASE_LEN)]
    #[serde(default = "default_phase_len")]
    pub phase_len: usize,
    /// Token budget per batch.
    #[arg(long, default_value_t = DEFAULT_BATCH_WORDS)]
    #[serde(default = "default_batch_words")]
    pub batch_words: usize,
    #[arg(long, default_value_t = DEFAULT_BUCKET_WIDTH)]
    #[serde(default = "default_bucket_width")]
    pub bucket_width: usize,
    /// Number of phases (default: shards + 20).
    #[arg(long)]
    pub num_phases: Option<usize>,
    #[arg(long, default_value_t = 1)]
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn default_phase_len() -> usize {
    DEFAULT_PHASE_LEN
}

fn default_batch_words() -> usize {
    DEFAULT_BATCH_WORDS
}

fn default_bucket_width() -> usize {
    DEFAULT_BUCKET_WIDTH
}

pub fn schedule(a: &ScheduleArgs) -> Result<Manifest> {
    require_file("--shards", &a.shards)?;
    require_file("--in-domain", &a.in_domain)?;
    require_file("--pool", &a.pool)?;
    if let Some(p) = &a.in_domain_pair {
        require_file("--in-domain-pair", p)?;
    }
    if let Some(p) = &a.pool_pair {
        require_file("--pool-pair", p)?;
    }
    require_positive("--phase-len", a.phase_len)?;
    require_positive("--batch-words", a.batch_words)?;
    require_positive("--bucket-width", a.bucket_width)?;
    require_positive("--max-len", a.max_len)?;
    if let Some(n) = a.num_phases {
        require_positive("--num-phases", n)?;
    }
    let text = fs::read_to_string(&a.shards).map_err(|e| Error::io(&a.shards, e))?;
    let plan = ShardPlan::from_json(&text)?;
    let in_domain = load(&a.in_domain, a.in_domain_pair.as_deref(), a.max_len)?;
    let pool = load(&a.pool, a.pool_pair.as_deref(), a.max_len)?;
    let params = ScheduleParams {
        mode: a.mode,
        phase_len: a.phase_len,
        batch_budget: a.batch_words,
        bucket_width: a.bucket_width,
        num_phases: a.num_phases,
        seed: a.seed,
    };
    let schedule = make_schedule(&plan, &in_domain.corpus.lengths(), &pool.corpus.lengths(), &params)?;
    create_out(&a.out)?;
    schedule.emit(a.out.join(SCHEDULE_FILE))?;

    let mut m = Manifest::new("schedule", a);
    m.seed("schedule", a.seed);
    m.input("shards", &a.shards)?;
    m.input("in_domain", &a.in_domain)?;
    m.input_opt("in_domain_pair", a.in_domain_pair.as_deref())?;
    m.input("pool", &a.pool)?;
    m.input_opt("pool_pair", a.pool_pair.as_deref())?;
    record_corpus(&mut m, "in_domain", &in_domain);
    record_corpus(&mut m, "pool", &pool);
    m.stat("batches", schedule.batches.len());
    m.stat("num_phases", schedule.header.num_phases);
    m.output("schedule", &a.out, SCHEDULE_FILE)?;
    m.write(&a.out)?;
    Ok(m)
}

/// Per-cut statistics of a ranking, optionally with a perplexity curve.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub in_domain: PathBuf,
    #[arg(long)]
    pub in_domain_pair: Option<PathBuf>,
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub pool_pair: Option<PathBuf>,
    #[arg(long)]
    pub ranking: PathBuf,
    /// Second ranking to measure overlap against.
    #[arg(long, conflicts_with = "random_baseline")]
    pub other: Option<PathBuf>,
    /// Compare against a seeded random ranking of the pool.
    #[arg(long)]
    pub random_baseline: Option<u64>,
    /// Ascending cut sizes, comma separated (default: 1/8, 1/4, 1/2 and all
    /// of the ranking).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub cuts: Vec<usize>,
    /// Also train an LM per cut and report in-domain perplexity.
    #[arg(long)]
    #[serde(default)]
    pub perplexity: bool,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    #[serde(default = "default_order")]
    pub order: usize,
    #[arg(long, default_value_t = Smoothing::ModifiedKneserNey)]
    #[serde(default)]
    pub smoothing: Smoothing,
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct DiagnosticsReport<'a> {
    reference: Option<String>,
    cuts: &'a [diagnostics::CutStats],
    perplexity: Option<&'a diagnostics::PerplexityCurve>,
}

fn default_cuts(len: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = [8, 4, 2, 1].iter().map(|d| len / d).filter(|&c| c > 0).collect();
    cuts.dedup();
    cuts
}

pub fn diagnose(a: &DiagnoseArgs, workers: usize) -> Result<Manifest> {
    require_file("--in-domain", &a.in_domain)?;
    require_file("--pool", &a.pool)?;
    require_file("--ranking", &a.ranking)?;
    for (field, p) in [
        ("--in-domain-pair", &a.in_domain_pair),
        ("--pool-pair", &a.pool_pair),
        ("--other", &a.other),
    ] {
        if let Some(p) = p {
            require_file(field, p)?;
        }
    }
    if a.cuts.first() == Some(&0) || a.cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("--cuts", "must be positive and strictly ascending"));
    }
    if a.perplexity {
        check_order(a.order, a.smoothing)?;
    }
    require_positive("--max-len", a.max_len)?;
    let in_domain = load(&a.in_domain, a.in_domain_pair.as_deref(), a.max_len)?;
    let pool = load(&a.pool, a.pool_pair.as_deref(), a.max_len)?;
    let ranking = selection::read_ranking_tsv(&a.ranking, Method::Random)?;
    let (other, reference) = match (&a.other, a.random_baseline) {
        (Some(p), _) => (
            Some(selection::read_ranking_tsv(p, Method::Random)?),
            Some(p.display().to_string()),
        ),
        (None, Some(seed)) => (
            Some(selection::random_ranking(pool.corpus.len(), seed)),
            Some(format!("random (seed {seed})")),
        ),
        (None, None) => (None, None),
    };
    let cuts = if a.cuts.is_empty() {
        default_cuts(ranking.len())
    } else {
        a.cuts.clone()
    };
    let rows = diagnostics::cut_report(&in_domain.corpus, &pool.corpus, &ranking, other.as_ref(), &cuts)?;
    let curve = if a.perplexity {
        let params = LmParams {
            order: a.order,
            smoothing: a.smoothing,
        };
        Some(diagnostics::perplexity_selection_curve(
            &in_domain.corpus,
            &pool.corpus,
            &ranking,
            &cuts,
            params,
            workers,
        )?)
    } else {
        None
    };

    create_out(&a.out)?;
    diagnostics::write_cut_report_tsv(&rows, a.out.join(CUTS_FILE))?;
    let hellinger: Vec<diagnostics::CurvePoint> = rows
        .iter()
        .map(|r| diagnostics::CurvePoint {
            cut: r.cut,
            value: r.hellinger,
        })
        .collect();
    diagnostics::write_curve_csv(&hellinger, a.out.join(HELLINGER_FILE))?;
    if let Some(c) = &curve {
        diagnostics::write_curve_csv(&c.points, a.out.join(PERPLEXITY_FILE))?;
    }
    let report = DiagnosticsReport {
        reference,
        cuts: &rows,
        perplexity: curve.as_ref(),
    };
    let path = a.out.join(REPORT_FILE);
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").map_err(|e| Error::io(&path, e))?;

    let mut m = Manifest::new("diagnose", a);
    if let Some(seed) = a.random_baseline {
        m.seed("random_baseline", seed);
    }
    m.input("in_domain", &a.in_domain)?;
    m.input_opt("in_domain_pair", a.in_domain_pair.as_deref())?;
    m.input("pool", &a.pool)?;
    m.input_opt("pool_pair", a.pool_pair.as_deref())?;
    m.input("ranking", &a.ranking)?;
    m.input_opt("other", a.other.as_deref())?;
    record_corpus(&mut m, "in_domain", &in_domain);
    record_corpus(&mut m, "pool", &pool);
    m.output("report", &a.out, REPORT_FILE)?;
    m.output("cuts", &a.out, CUTS_FILE)?;
    m.output("hellinger", &a.out, HELLINGER_FILE)?;
    if curve.is_some() {
        m.output("perplexity", &a.out, PERPLEXITY_FILE)?;
    }
    m.write(&a.out)?;
    Ok(m)
}

/// Word-level error analysis of a translation against a reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct S4Args {
    pub train_src: PathBuf,
    pub train_trg: PathBuf,
    pub train_align: PathBuf,
    pub test_src: PathBuf,
    pub reference: PathBuf,
    pub ref_align: PathBuf,
    pub hypothesis: PathBuf,
    pub hyp_align: PathBuf,
    pub out: PathBuf,
}

impl S4Args {
    fn files(&self) -> [(&'static str, &Path); 8] {
        [
            ("train_src", &self.train_src),
            ("train_trg", &self.train_trg),
            ("train_align", &self.train_align),
            ("test_src", &self.test_src),
            ("reference", &self.reference),
            ("ref_align", &self.ref_align),
            ("hypothesis", &self.hypothesis),
            ("hyp_align", &self.hyp_align),
        ]
    }
}

fn load_all(path: &Path) -> Result<Corpus> {
    Ok(corpus::load_corpus(path, usize::MAX)?.corpus)
}

pub fn s4(a: &S4Args) -> Result<Manifest> {
    for (role, p) in a.files() {
        require_file(&format!("--{}", role.replace('_', "-")), p)?;
    }
    let train = ParallelCorpus::new(load_all(&a.train_src)?, load_all(&a.train_trg)?)?;
    let lexicon = s4::build_lexicon(&train, &s4::load_alignments(&a.train_align)?)?;
    let report = s4::s4_count(
        &load_all(&a.test_src)?,
        &load_all(&a.reference)?,
        &s4::load_alignments(&a.ref_align)?,
        &load_all(&a.hypothesis)?,
        &s4::load_alignments(&a.hyp_align)?,
        &lexicon,
    )?;
    create_out(&a.out)?;
    let path = a.out.join(S4_JSON_FILE);
    fs::write(&path, report.to_json() + "\n").map_err(|e| Error::io(&path, e))?;
    report.write_tsv(a.out.join(S4_TSV_FILE))?;

    let mut m = Manifest::new("s4", a);
    for (role, p) in a.files() {
        m.input(role, p)?;
    }
    m.stat("lexicon_entries", lexicon.len());
    m.output("report", &a.out, S4_JSON_FILE)?;
    m.output("per_sentence", &a.out, S4_TSV_FILE)?;
    m.write(&a.out)?;
    Ok(m)
}
