//! Command-line front end: one subcommand per workflow step, plus `pipeline`
//! chaining them from a TOML config.
//!
//! Exit status is 0 on success, 2 for configuration or usage errors and 3
//! for data errors. Logs go to standard error; results go to files only.

mod config;
mod manifest;
mod steps;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{
    AnalysisConfig, CurriculumConfig, DataConfig, DiagnosticsConfig, PipelineConfig, SeedConfig, SelectionConfig,
    SidePaths,
};
pub use manifest::{sha256_file, FileDigest, Manifest, MANIFEST_FILE};
pub use steps::*;

use crate::error::{Error, Result};
use crate::par;
use crate::selection::Method;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "dacl",
    version,
    about = "Domain data selection and curriculum schedules for continued training"
)]
pub struct Cli {
    /// Worker threads for parallel steps (0 = all cores). Outputs do not
    /// depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Uniformly sample an in-domain training set.
    Sample(SampleArgs),
    /// Train an n-gram LM and write it as ARPA.
    LmTrain(LmTrainArgs),
    /// Rank a pool by Moore-Lewis cross-entropy difference.
    ScoreMl(ScoreMlArgs),
    /// Rank a pool by greedy cynical selection.
    SelectCds(SelectCdsArgs),
    /// Split in-domain data and the top of a ranking into shards.
    Shard(ShardArgs),
    /// Emit a curriculum batch schedule from a shard plan.
    Schedule(ScheduleArgs),
    /// Report per-cut statistics of a ranking.
    Diagnose(DiagnoseArgs),
    /// Count word-level translation outcomes from alignments.
    S4(S4Cli),
    /// Run sample, selection, sharding, diagnostics and scheduling from a
    /// config file.
    Pipeline(PipelineArgs),
    /// Regenerate the artifacts described by a manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
pub struct S4Cli {
    /// Read unset paths from the `[analysis]` section of a pipeline config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train_src: Option<PathBuf>,
    #[arg(long)]
    pub train_trg: Option<PathBuf>,
    /// Training alignments, `i-j` links per line.
    #[arg(long)]
    pub train_align: Option<PathBuf>,
    #[arg(long)]
    pub test_src: Option<PathBuf>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub ref_align: Option<PathBuf>,
    #[arg(long)]
    pub hypothesis: Option<PathBuf>,
    #[arg(long)]
    pub hyp_align: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

impl S4Cli {
    fn resolve(&self) -> Result<S4Args> {
        let analysis = match &self.config {
            Some(path) => {
                let cfg = PipelineConfig::load(path, &[])?;
                Some(
                    cfg.analysis
                        .ok_or_else(|| Error::config("analysis", "section missing from config"))?,
                )
            }
            None => None,
        };
        let pick = |field: &str, flag: &Option<PathBuf>, from: fn(&AnalysisConfig) -> &PathBuf| {
            flag.clone()
                .or_else(|| analysis.as_ref().map(|a| from(a).clone()))
                .ok_or_else(|| Error::config(field, "required"))
        };
        Ok(S4Args {
            train_src: pick("--train-src", &self.train_src, |a| &a.train_src)?,
            train_trg: pick("--train-trg", &self.train_trg, |a| &a.train_trg)?,
            train_align: pick("--train-align", &self.train_align, |a| &a.train_align)?,
            test_src: pick("--test-src", &self.test_src, |a| &a.test_src)?,
            reference: pick("--reference", &self.reference, |a| &a.reference)?,
            ref_align: pick("--ref-align", &self.ref_align, |a| &a.ref_align)?,
            hypothesis: pick("--hypothesis", &self.hypothesis, |a| &a.hypothesis)?,
            hyp_align: pick("--hyp-align", &self.hyp_align, |a| &a.hyp_align)?,
            out: self.out.clone(),
        })
    }
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// TOML pipeline configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config value, e.g. `--set curriculum.mode=reverse`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Override `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RerunArgs {
    /// A `manifest.json` written by any subcommand.
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the whole workflow up to schedule emission. Each step writes into
/// its own subdirectory of `output_dir` exactly as the matching subcommand
/// would.
pub fn pipeline(cfg: &PipelineConfig, workers: usize) -> Result<Manifest> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let d = &cfg.data;
    let side = cfg.side_paths();
    let mut steps: Vec<(&str, Manifest)> = Vec::new();

    let (in_domain, in_domain_pair) = if d.in_domain_sample > 0 {
        let a = SampleArgs {
            input: side.in_domain.clone(),
            pair: side.in_domain_pair.clone(),
            size: d.in_domain_sample,
            seed: cfg.seeds.sample,
            max_len: d.max_len,
            out: out.join("sample"),
        };
        steps.push(("sample", sample(&a)?));
        let pair = a.pair.as_ref().map(|_| a.out.join(SAMPLE_PAIR_FILE));
        (a.out.join(SAMPLE_FILE), pair)
    } else {
        (side.in_domain.clone(), side.in_domain_pair.clone())
    };
    let pool = side.pool.clone();
    let pool_pair = side.pool_pair.clone();

    let ranking = match cfg.selection.method {
        Method::Cynical => {
            let a = SelectCdsArgs {
                in_domain: in_domain.clone(),
                in_domain_pair: in_domain_pair.clone(),
                pool: pool.clone(),
                pool_pair: pool_pair.clone(),
                budget: cfg.selection.budget.or(cfg.curriculum.cut),
                alpha: cfg.selection.alpha,
                max_len: d.max_len,
                out: out.join("select"),
            };
            steps.push(("select", select_cds(&a, workers)?));
            a.out.join(RANKING_FILE)
        }
        method => {
            let a = ScoreMlArgs {
                in_domain: in_domain.clone(),
                in_domain_pair: in_domain_pair.clone(),
                pool: pool.clone(),
                pool_pair: pool_pair.clone(),
                bilingual: method == Method::MooreLewisBilingual,
                order: cfg.selection.order,
                smoothing: cfg.selection.smoothing,
                contrast_size: cfg.selection.contrast_size,
                contrast_seed: cfg.seeds.contrast,
                lm_in: None,
                lm_gen: None,
                stream: false,
                max_len: d.max_len,
                out: out.join("score"),
            };
            steps.push(("score", score_ml(&a, workers)?));
            a.out.join(RANKING_FILE)
        }
    };

    let shard_args = ShardArgs {
        in_domain: in_domain.clone(),
        in_domain_pair: in_domain_pair.clone(),
        ranking: ranking.clone(),
        cut: cfg.curriculum.cut,
        num_shards: cfg.curriculum.num_shards,
        max_len: d.max_len,
        out: out.join("shard"),
    };
    steps.push(("shard", shard(&shard_args)?));

    let diag = DiagnoseArgs {
        in_domain: in_domain.clone(),
        in_domain_pair: in_domain_pair.clone(),
        pool: pool.clone(),
        pool_pair: pool_pair.clone(),
        ranking,
        other: None,
        random_baseline: cfg.diagnostics.random_baseline.then_some(cfg.seeds.random),
        cuts: cfg.diagnostics.cuts.clone(),
        perplexity: cfg.diagnostics.perplexity,
        order: cfg.selection.order,
        smoothing: cfg.selection.smoothing,
        max_len: d.max_len,
        out: out.join("diagnose"),
    };
    steps.push(("diagnose", diagnose(&diag, workers)?));

    let c = &cfg.curriculum;
    let sched = ScheduleArgs {
        shards: shard_args.out.join(SHARDS_FILE),
        in_domain,
        in_domain_pair,
        pool,
        pool_pair,
        mode: c.mode,
        phase_len: c.phase_len,
        batch_words: c.batch_words,
        bucket_width: c.bucket_width,
        num_phases: c.num_phases,
        seed: cfg.seeds.schedule,
        max_len: d.max_len,
        out: out.join("schedule"),
    };
    steps.push(("schedule", schedule(&sched)?));

    let mut m = Manifest::new("pipeline", cfg);
    for (name, value) in [
        ("sample", cfg.seeds.sample),
        ("contrast", cfg.seeds.contrast),
        ("schedule", cfg.seeds.schedule),
        ("random", cfg.seeds.random),
    ] {
        m.seed(name, value);
    }
    for (role, path) in [("in_domain", &side.in_domain), ("pool", &side.pool)] {
        m.input(role, path)?;
    }
    m.input_opt("in_domain_pair", side.in_domain_pair.as_deref())?;
    m.input_opt("pool_pair", side.pool_pair.as_deref())?;
    for (step, sm) in steps {
        for (role, d) in sm.outputs {
            m.outputs.insert(
                format!("{step}.{role}"),
                FileDigest {
                    path: Path::new(step).join(d.path),
                    sha256: d.sha256,
                },
            );
        }
        m.outputs.insert(
            format!("{step}.manifest"),
            FileDigest {
                path: Path::new(step).join(MANIFEST_FILE),
                sha256: sha256_file(out.join(step).join(MANIFEST_FILE))?,
            },
        );
    }
    m.write(out)?;
    Ok(m)
}

fn from_params<T: serde::de::DeserializeOwned>(m: &Manifest) -> Result<T> {
    serde_json::from_value(m.params.clone()).map_err(|e| {
        Error::config(
            "params",
            format!("manifest parameters do not match `{}`: {e}", m.command),
        )
    })
}

/// Re-executes the command recorded in a manifest after checking that its
/// inputs are unchanged.
pub fn rerun(a: &RerunArgs, workers: usize) -> Result<Manifest> {
    let m = Manifest::load(&a.manifest)?;
    m.verify_inputs()?;
    let out = a.out.clone();
    macro_rules! with_out {
        ($ty:ty) => {{
            let mut args: $ty = from_params(&m)?;
            if let Some(o) = out {
                args.out = o;
            }
            args
        }};
    }
    match m.command.as_str() {
        "sample" => sample(&with_out!(SampleArgs)),
        "lm-train" => lm_train(&with_out!(LmTrainArgs)),
        "score-ml" => score_ml(&with_out!(ScoreMlArgs), workers),
        "select-cds" => select_cds(&with_out!(SelectCdsArgs), workers),
        "shard" => shard(&with_out!(ShardArgs)),
        "schedule" => schedule(&with_out!(ScheduleArgs)),
        "diagnose" => diagnose(&with_out!(DiagnoseArgs), workers),
        "s4" => s4(&with_out!(S4Args)),
        "pipeline" => {
            let mut cfg: PipelineConfig = from_params(&m)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            pipeline(&cfg, workers)
        }
        other => Err(Error::config(
            "command",
            format!("unknown command `{other}` in manifest"),
        )),
    }
}

pub fn execute(cli: &Cli) -> Result<Manifest> {
    let workers = cli.workers;
    par::with_workers(workers, || match &cli.command {
        Command::Sample(a) => sample(a),
        Command::LmTrain(a) => lm_train(a),
        Command::ScoreMl(a) => score_ml(a, workers),
        Command::SelectCds(a) => select_cds(a, workers),
        Command::Shard(a) => shard(a),
        Command::Schedule(a) => schedule(a),
        Command::Diagnose(a) => diagnose(a, workers),
        Command::S4(a) => a.resolve().and_then(|a| s4(&a)),
        Command::Pipeline(a) => {
            let mut cfg = PipelineConfig::load(&a.config, &a.overrides)?;
            if let Some(o) = &a.out {
                cfg.output_dir = o.clone();
            }
            pipeline(&cfg, workers)
        }
        Command::Rerun(a) => rerun(a, workers),
    })?
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_DATA
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(m) => {
            log::info!("{} finished: {} artifacts", m.command, m.outputs.len());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
