//! TOML configuration for `dacl pipeline`.
//!
//! Relative paths are taken relative to the working directory. Values given
//! with `--set section.key=value` replace those from the file before
//! validation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::steps::require_file;
use crate::corpus::{Side, DEFAULT_IN_DOMAIN_SAMPLE, DEFAULT_MAX_LEN};
use crate::curriculum::{Mode, DEFAULT_BATCH_WORDS, DEFAULT_BUCKET_WIDTH, DEFAULT_NUM_SHARDS, DEFAULT_PHASE_LEN};
use crate::error::{Error, Result};
use crate::lm::{Smoothing, DEFAULT_ORDER};
use crate::selection::{Method, DEFAULT_ALPHA};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    /// Test-set files for `dacl s4 --config`. The pipeline itself stops at
    /// schedule emission and does not read them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub in_domain_src: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_domain_trg: Option<PathBuf>,
    pub pool_src: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_trg: Option<PathBuf>,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// In-domain sample size; 0 uses the in-domain corpus as is.
    #[serde(default = "default_in_domain_sample")]
    pub in_domain_sample: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    #[serde(default = "default_method")]
    pub method: Method,
    /// Side scored by the monolingual methods.
    #[serde(default)]
    pub side: Side,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub smoothing: Smoothing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contrast_size: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Cynical selection budget (default: the curriculum cut, else the pool).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<usize>,
    #[serde(default = "default_num_shards")]
    pub num_shards: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_phase_len")]
    pub phase_len: usize,
    #[serde(default = "default_batch_words")]
    pub batch_words: usize,
    #[serde(default = "default_bucket_width")]
    pub bucket_width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_phases: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub cuts: Vec<usize>,
    #[serde(default)]
    pub perplexity: bool,
    /// Overlap and Hellinger reference: a seeded random ranking.
    #[serde(default = "yes")]
    pub random_baseline: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default = "one")]
    pub sample: u64,
    #[serde(default = "one")]
    pub contrast: u64,
    #[serde(default = "one")]
    pub schedule: u64,
    #[serde(default = "one")]
    pub random: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub train_src: PathBuf,
    pub train_trg: PathBuf,
    pub train_align: PathBuf,
    pub test_src: PathBuf,
    pub reference: PathBuf,
    pub ref_align: PathBuf,
    pub hypothesis: PathBuf,
    pub hyp_align: PathBuf,
}

fn default_max_len() -> usize {
    DEFAULT_MAX_LEN
}
fn default_in_domain_sample() -> usize {
    DEFAULT_IN_DOMAIN_SAMPLE
}
fn default_method() -> Method {
    Method::MooreLewis
}
fn default_order() -> usize {
    DEFAULT_ORDER
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_num_shards() -> usize {
    DEFAULT_NUM_SHARDS
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
fn yes() -> bool {
    true
}
fn one() -> u64 {
    1
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            method: default_method(),
            side: Side::Source,
            order: DEFAULT_ORDER,
            smoothing: Smoothing::ModifiedKneserNey,
            contrast_size: None,
            alpha: DEFAULT_ALPHA,
            budget: None,
        }
    }
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            cut: None,
            num_shards: DEFAULT_NUM_SHARDS,
            mode: Mode::Standard,
            phase_len: DEFAULT_PHASE_LEN,
            batch_words: DEFAULT_BATCH_WORDS,
            bucket_width: DEFAULT_BUCKET_WIDTH,
            num_phases: None,
        }
    }
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            cuts: Vec::new(),
            perplexity: false,
            random_baseline: true,
        }
    }
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            sample: 1,
            contrast: 1,
            schedule: 1,
            random: 1,
        }
    }
}

/// Files of one side as seen by the steps: the side being scored, and the
/// other side of the bitext when there is one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SidePaths {
    pub in_domain: PathBuf,
    pub in_domain_pair: Option<PathBuf>,
    pub pool: PathBuf,
    pub pool_pair: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.message().to_owned()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    /// Reads a config file and applies `key.path=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("--config", e.message().to_owned()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: PipelineConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config("config", e.message().to_owned()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("output_dir", "must not be empty"));
        }
        let d = &self.data;
        require_file("data.in_domain_src", &d.in_domain_src)?;
        require_file("data.pool_src", &d.pool_src)?;
        if let Some(p) = &d.in_domain_trg {
            require_file("data.in_domain_trg", p)?;
        }
        if let Some(p) = &d.pool_trg {
            require_file("data.pool_trg", p)?;
        }
        if d.in_domain_trg.is_some() != d.pool_trg.is_some() {
            return Err(Error::config(
                "data.pool_trg",
                "in_domain_trg and pool_trg must be given together",
            ));
        }
        positive("data.max_len", d.max_len)?;

        let s = &self.selection;
        let bitext = d.pool_trg.is_some();
        match s.method {
            Method::MooreLewisBilingual if !bitext => {
                return Err(Error::config(
                    "selection.method",
                    "moore_lewis_bilingual needs target-side files",
                ))
            }
            Method::Random => {
                return Err(Error::config(
                    "selection.method",
                    "expected moore_lewis, moore_lewis_bilingual or cynical",
                ))
            }
            _ => {}
        }
        if s.side == Side::Target && !bitext {
            return Err(Error::config("selection.side", "target side needs target-side files"));
        }
        positive("selection.order", s.order)?;
        if s.smoothing == Smoothing::AddOne && s.order != 1 {
            return Err(Error::config(
                "selection.smoothing",
                "add-one smoothing requires order 1",
            ));
        }
        if let Some(k) = s.contrast_size {
            positive("selection.contrast_size", k)?;
        }
        if !(s.alpha > 0.0 && s.alpha.is_finite()) {
            return Err(Error::config("selection.alpha", "must be a positive number"));
        }
        if let Some(b) = s.budget {
            positive("selection.budget", b)?;
        }

        let c = &self.curriculum;
        if c.num_shards < 2 {
            return Err(Error::config("curriculum.num_shards", "must be at least 2"));
        }
        if let Some(cut) = c.cut {
            if cut < c.num_shards - 1 {
                return Err(Error::config(
                    "curriculum.cut",
                    format!("{cut} sentences cannot fill {} pool shards", c.num_shards - 1),
                ));
            }
        }
        positive("curriculum.phase_len", c.phase_len)?;
        positive("curriculum.batch_words", c.batch_words)?;
        positive("curriculum.bucket_width", c.bucket_width)?;
        if let Some(n) = c.num_phases {
            positive("curriculum.num_phases", n)?;
        }

        let cuts = &self.diagnostics.cuts;
        if cuts.first() == Some(&0) || cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "diagnostics.cuts",
                "must be positive and strictly ascending",
            ));
        }

        if let Some(a) = &self.analysis {
            for (field, p) in [
                ("analysis.train_src", &a.train_src),
                ("analysis.train_trg", &a.train_trg),
                ("analysis.train_align", &a.train_align),
                ("analysis.test_src", &a.test_src),
                ("analysis.reference", &a.reference),
                ("analysis.ref_align", &a.ref_align),
                ("analysis.hypothesis", &a.hypothesis),
                ("analysis.hyp_align", &a.hyp_align),
            ] {
                require_file(field, p)?;
            }
        }
        Ok(())
    }

    /// Paths in the orientation of `selection.side`.
    pub fn side_paths(&self) -> SidePaths {
        let d = &self.data;
        match (self.selection.side, &d.in_domain_trg, &d.pool_trg) {
            (Side::Target, Some(it), Some(pt)) => SidePaths {
                in_domain: it.clone(),
                in_domain_pair: Some(d.in_domain_src.clone()),
                pool: pt.clone(),
                pool_pair: Some(d.pool_src.clone()),
            },
            _ => SidePaths {
                in_domain: d.in_domain_src.clone(),
                in_domain_pair: d.in_domain_trg.clone(),
                pool: d.pool_src.clone(),
                pool_pair: d.pool_trg.clone(),
            },
        }
    }
}

fn positive(field: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::config(field, "must be positive"))
    } else {
        Ok(())
    }
}

/// `a.b.c=value`, where the value is read as a TOML literal and falls back to
/// a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config("--set", format!("`{spec}` is not of the form key=value")))?;
    let key = key.trim();
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_owned()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::config("--set", "empty key"))?;
    let mut node = table;
    for part in parts {
        let entry = node
            .entry(part.to_owned())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a section")))?;
    }
    node.insert(last.to_owned(), value);
    Ok(())
}
