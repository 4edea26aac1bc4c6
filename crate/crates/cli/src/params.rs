use std::path::{Path, PathBuf};

use clap::Args;
use hdc_core::codebook::CodebookKind;
use hdc_core::HdcError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("resource cap exceeded: {0} (pass --allow-large to override)")]
    Cap(String),
    #[error(transparent)]
    Core(HdcError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<HdcError> for CliError {
    fn from(e: HdcError) -> Self {
        match e {
            HdcError::InvalidParameter(m) => CliError::Schema(m),
            HdcError::ResourceCap(m) => CliError::Cap(m),
            HdcError::Io(e) => CliError::Io(e),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn schema(msg: impl Into<String>) -> CliError {
    CliError::Schema(msg.into())
}

/// Experiment parameters. Every field can come from a flag or from the
/// config file; flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Alphabet size
    #[arg(long)]
    pub m: Option<usize>,
    /// Hypervector dimension
    #[arg(long)]
    pub d: Option<usize>,
    /// Set size (maximum set size for set-estimates)
    #[arg(long)]
    pub s: Option<usize>,
    /// Input dimension, window length or feature count
    #[arg(long)]
    pub n: Option<usize>,
    /// Sparsity of a target or separator
    #[arg(long)]
    pub k: Option<usize>,
    /// Quantization levels for position-ID
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Sets per codebook draw
    #[arg(long)]
    pub sets: Option<usize>,
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Non-member probes for bloom-fpr
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub pushes: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Points per set or cluster
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Stream length per run
    #[arg(long)]
    pub length: Option<usize>,
    /// Feature count of a record
    #[arg(long)]
    pub features: Option<usize>,
    /// Independent codebook draws shared by the trials
    #[arg(long)]
    pub draws: Option<usize>,
    /// Training examples per class
    #[arg(long)]
    pub train: Option<usize>,
    /// Test examples per class
    #[arg(long)]
    pub test: Option<usize>,
    #[arg(long)]
    pub centroids: Option<usize>,
    /// Number of set bits per sparse codeword (fixed weight)
    #[arg(long)]
    pub hashes: Option<usize>,
    /// Failure probability
    #[arg(long)]
    pub delta: Option<f64>,
    /// Kernel bandwidth or separation margin
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Sparse codeword density
    #[arg(long)]
    pub p: Option<f64>,
    /// Noise parameter as a fraction of its tolerance
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub eps2: Option<f64>,
    /// Constant in front of the sparse-separator dimension formula
    #[arg(long)]
    pub multiplier: Option<f64>,
    /// Per-coordinate noise around cluster centres
    #[arg(long)]
    pub spread: Option<f64>,
    /// Distance between the two class means
    #[arg(long)]
    pub separation: Option<f64>,
    /// Half-width of the empty slab between two point sets
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Codebook kind: bipolar, gaussian, sparse, sparse-fixed
    #[arg(long)]
    pub kind: Option<String>,
    /// Noise model name or "all"
    #[arg(long)]
    pub model: Option<String>,
    /// Encoder: srp, projection, posid, rff
    #[arg(long)]
    pub encoder: Option<String>,
    /// CSV dataset to classify instead of synthetic blobs
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column, by index or header name
    #[arg(long)]
    pub label_col: Option<String>,
    /// Whether the CSV has a header row (detected when omitted)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub header: Option<bool>,
    /// Plant the separator itself as a projection row
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub inject: Option<bool>,
    /// Independent level codebook per feature
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub per_feature: Option<bool>,
    /// Quantized random Fourier features
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub quantized: Option<bool>,
}

impl Params {
    /// `self` with every field set in `over` replaced.
    pub fn overlay(&self, over: &Params) -> Params {
        let mut base = serde_json::to_value(self).expect("params serialize");
        let top = serde_json::to_value(over).expect("params serialize");
        if let (Value::Object(b), Value::Object(t)) = (&mut base, top) {
            for (k, v) in t {
                if !v.is_null() {
                    b.insert(k, v);
                }
            }
        }
        serde_json::from_value(base).expect("overlay of valid params")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// A config file: optional `experiment`, `out` and `format` keys next to
/// the parameter keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| schema(e.to_string()))?;
        let take_str = |t: &mut toml::Table, key: &str| -> CliResult<Option<String>> {
            match t.remove(key) {
                None => Ok(None),
                Some(toml::Value::String(s)) => Ok(Some(s)),
                Some(v) => Err(schema(format!("`{key}` must be a string, got {v}"))),
            }
        };
        let experiment = take_str(&mut table, "experiment")?;
        let out = take_str(&mut table, "out")?.map(PathBuf::from);
        let format = match take_str(&mut table, "format")?.as_deref() {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("jsonl") => Some(Format::Jsonl),
            Some(f) => return Err(schema(format!("unknown format `{f}`"))),
        };
        let params = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| schema(e.to_string()))?;
        Ok(Self { experiment, out, format, params })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_d: usize,
    pub max_trials: usize,
    pub allow_large: bool,
}

impl Default for Caps {
    fn default() -> Self {
        Self { max_d: 1 << 17, max_trials: 100_000, allow_large: false }
    }
}

/// Parameters plus caps, with typed accessors used by the runners.
#[derive(Debug, Clone, Default)]
pub struct Ctx {
    pub p: Params,
    pub caps: Caps,
}

impl Ctx {
    pub fn new(p: Params) -> Self {
        Self { p, caps: Caps::default() }
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.p.seed.ok_or_else(|| schema("--seed is required; runs are never seeded implicitly"))
    }

    /// Checks a dimension against the cap.
    pub fn dim(&self, d: usize) -> CliResult<usize> {
        if d == 0 {
            return Err(schema("dimension must be positive"));
        }
        if d > self.caps.max_d && !self.caps.allow_large {
            return Err(CliError::Cap(format!("d = {d} > {}", self.caps.max_d)));
        }
        Ok(d)
    }

    /// Checks a repetition count against the cap.
    pub fn count(&self, name: &str, v: usize) -> CliResult<usize> {
        if v == 0 {
            return Err(schema(format!("{name} must be positive")));
        }
        if v > self.caps.max_trials && !self.caps.allow_large {
            return Err(CliError::Cap(format!("{name} = {v} > {}", self.caps.max_trials)));
        }
        Ok(v)
    }

    pub fn delta(&self, default: f64) -> CliResult<f64> {
        let d = self.p.delta.unwrap_or(default);
        if !(d > 0.0 && d < 1.0) {
            return Err(schema(format!("delta must lie in (0, 1), got {d}")));
        }
        Ok(d)
    }

    pub fn positive(&self, name: &str, v: Option<f64>, default: f64) -> CliResult<f64> {
        let v = v.unwrap_or(default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(schema(format!("{name} must be positive, got {v}")));
        }
        Ok(v)
    }

    /// Codebook kind from `kind`, `p`, `hashes` and `sigma`.
    pub fn codebook_kind(&self, d: usize, default: &str) -> CliResult<CodebookKind> {
        if let Some(h) = self.p.hashes {
            if h == 0 || h > d {
                return Err(schema(format!("hashes must lie in 1..={d}, got {h}")));
            }
            return Ok(CodebookKind::SparseBinary { p: h as f64 / d as f64, fixed_weight: true });
        }
        let kind = self.p.kind.as_deref().unwrap_or(default);
        let need_p = || self.p.p.ok_or_else(|| schema(format!("kind `{kind}` needs --p")));
        let k = match kind {
            "bipolar" => CodebookKind::DenseBipolar,
            "gaussian" => CodebookKind::Gaussian { sigma: self.p.sigma.unwrap_or(1.0) },
            "sparse" => CodebookKind::SparseBinary { p: need_p()?, fixed_weight: false },
            "sparse-fixed" => CodebookKind::SparseBinary { p: need_p()?, fixed_weight: true },
            other => return Err(schema(format!("unknown codebook kind `{other}`"))),
        };
        Ok(k)
    }
}
