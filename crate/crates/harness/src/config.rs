//! TOML experiment configuration.
//!
//! ```toml
//! [dataset]
//! kind = "synthetic-hetero"     # synthetic-linear | csv
//! n = 1500
//!
//! [graph]
//! k = 6
//!
//! [model]
//! members = ["rbf", "matern-2.5", "matern-1.5"]
//! num_frequencies = 400
//! prior_var = 1.0
//! noise_var = 0.01
//! lengthscale = "median-heuristic"   # or a number
//!
//! [cp]
//! mode = "OCP"                  # FixedCP | BCS
//! alpha = 0.1
//! eta = 0.01
//!
//! [split]
//! init_fraction = 0.3
//!
//! [runs]
//! replicates = 50
//! base_seed = 0
//! ```
//!
//! Every section and field is optional; omitted values take the defaults
//! shown above.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use streamgp_core::{CpMode, KernelFamily};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub graph: GraphConfig,
    pub model: ModelConfig,
    pub cp: CpConfig,
    pub split: SplitConfig,
    pub runs: RunsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetKind {
    #[serde(rename = "synthetic-hetero")]
    SyntheticHetero,
    #[serde(rename = "synthetic-linear")]
    SyntheticLinear,
    #[serde(rename = "csv")]
    Csv,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::SyntheticHetero => "synthetic-hetero",
            DatasetKind::SyntheticLinear => "synthetic-linear",
            DatasetKind::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub path: Option<PathBuf>,
    pub target: Option<String>,
    pub features: Option<Vec<String>>,
    /// Rows to generate for synthetic kinds.
    pub n: Option<usize>,
    pub max_rows: Option<usize>,
    /// Seed for the `max_rows` subsample; defaults to the replicate seed.
    pub subsample_seed: Option<u64>,
    /// CSV field delimiter (single byte).
    pub delimiter: Option<char>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::SyntheticHetero,
            path: None,
            target: None,
            features: None,
            n: None,
            max_rows: None,
            subsample_seed: None,
            delimiter: None,
        }
    }
}

pub const DEFAULT_SYNTHETIC_N: usize = 1500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { k: 6 }
    }
}

/// Kernel family of one ensemble member, written `rbf` or `matern-<nu>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemberKernel(pub KernelFamily);

impl FromStr for MemberKernel {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if t == "rbf" {
            return Ok(MemberKernel(KernelFamily::Rbf));
        }
        let nu = t
            .strip_prefix("matern-")
            .or_else(|| t.strip_prefix("matern"))
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|nu| *nu > 0.0 && nu.is_finite())
            .ok_or_else(|| HarnessError::Config(format!("unknown kernel '{s}' (expected rbf or matern-<nu>)")))?;
        Ok(MemberKernel(KernelFamily::Matern { nu }))
    }
}

impl fmt::Display for MemberKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for MemberKernel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MemberKernel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Lengthscale {
    #[default]
    MedianHeuristic,
    Explicit(f64),
}

pub const MEDIAN_HEURISTIC: &str = "median-heuristic";

impl Serialize for Lengthscale {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lengthscale::MedianHeuristic => s.serialize_str(MEDIAN_HEURISTIC),
            Lengthscale::Explicit(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Lengthscale {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Lengthscale::Explicit(v)),
            Raw::Int(v) => Ok(Lengthscale::Explicit(v as f64)),
            Raw::Name(n) if n == MEDIAN_HEURISTIC => Ok(Lengthscale::MedianHeuristic),
            Raw::Name(n) => Err(serde::de::Error::custom(format!(
                "lengthscale must be a number or \"{MEDIAN_HEURISTIC}\", got \"{n}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub members: Vec<MemberKernel>,
    pub num_frequencies: usize,
    pub prior_var: f64,
    pub noise_var: f64,
    pub lengthscale: Lengthscale,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            members: default_members(),
            num_frequencies: 400,
            prior_var: 1.0,
            noise_var: 0.01,
            lengthscale: Lengthscale::MedianHeuristic,
        }
    }
}

pub fn default_members() -> Vec<MemberKernel> {
    vec![
        MemberKernel(KernelFamily::Rbf),
        MemberKernel(KernelFamily::MATERN_52),
        MemberKernel(KernelFamily::MATERN_32),
    ]
}

/// Parses `OCP`, `FixedCP` (or `CP`) and `BCS`, ignoring case.
pub fn parse_mode(s: &str) -> Result<CpMode> {
    match s.trim().to_ascii_lowercase().as_str() {
        "ocp" => Ok(CpMode::Ocp),
        "fixedcp" | "cp" => Ok(CpMode::FixedCp),
        "bcs" => Ok(CpMode::Bcs),
        _ => Err(HarnessError::Config(format!("unknown cp mode '{s}' (expected OCP, FixedCP or BCS)"))),
    }
}

pub fn mode_name(mode: CpMode) -> &'static str {
    match mode {
        CpMode::Ocp => "OCP",
        CpMode::FixedCp => "FixedCP",
        CpMode::Bcs => "BCS",
    }
}

fn de_mode<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CpMode, D::Error> {
    let s = String::deserialize(d)?;
    parse_mode(&s).map_err(serde::de::Error::custom)
}

fn ser_mode<S: Serializer>(m: &CpMode, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(mode_name(*m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpConfig {
    #[serde(deserialize_with = "de_mode", serialize_with = "ser_mode")]
    pub mode: CpMode,
    pub alpha: f64,
    pub eta: f64,
    pub clamp_bound: Option<f64>,
    /// Credible level for BCS; defaults to `1 - alpha`.
    pub credibility: Option<f64>,
    /// Scores the initial threshold is taken from.
    pub init_scores: InitScores,
}

/// `in-sample`: every init node scored under the ensemble after training on
/// all of them. `prequential`: each init node scored just before it is
/// observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitScores {
    #[default]
    #[serde(rename = "in-sample")]
    InSample,
    #[serde(rename = "prequential")]
    Prequential,
}

impl Default for CpConfig {
    fn default() -> Self {
        Self {
            mode: CpMode::Ocp,
            alpha: 0.1,
            eta: 0.01,
            clamp_bound: None,
            credibility: None,
            init_scores: InitScores::InSample,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub init_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { init_fraction: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunsConfig {
    pub replicates: usize,
    pub base_seed: u64,
}

impl Default for RunsConfig {
    fn default() -> Self {
        Self {
            replicates: 50,
            base_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {}", path.display(), msg)),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.runs.replicates < 1 {
            return bad("runs.replicates must be at least 1".into());
        }
        if !(self.cp.alpha > 0.0 && self.cp.alpha < 1.0) {
            return bad(format!("cp.alpha must lie in (0, 1), got {}", self.cp.alpha));
        }
        if !(self.cp.eta >= 0.0) || !self.cp.eta.is_finite() {
            return bad(format!("cp.eta must be finite and nonnegative, got {}", self.cp.eta));
        }
        if let Some(b) = self.cp.clamp_bound {
            if !(b >= 0.0) || !b.is_finite() {
                return bad(format!("cp.clamp_bound must be finite and nonnegative, got {b}"));
            }
        }
        if let Some(c) = self.cp.credibility {
            if !(c > 0.0 && c < 1.0) {
                return bad(format!("cp.credibility must lie in (0, 1), got {c}"));
            }
        }
        if self.model.num_frequencies < 1 {
            return bad("model.num_frequencies must be at least 1".into());
        }
        if self.model.members.is_empty() {
            return bad("model.members must list at least one kernel".into());
        }
        if !(self.model.prior_var > 0.0) || !(self.model.noise_var > 0.0) {
            return bad("model.prior_var and model.noise_var must be positive".into());
        }
        if let Lengthscale::Explicit(l) = self.model.lengthscale {
            if !(l > 0.0) || !l.is_finite() {
                return bad(format!("model.lengthscale must be positive, got {l}"));
            }
        }
        if self.graph.k < 1 {
            return bad("graph.k must be at least 1".into());
        }
        if !(self.split.init_fraction > 0.0 && self.split.init_fraction < 1.0) {
            return bad(format!("split.init_fraction must lie in (0, 1), got {}", self.split.init_fraction));
        }
        if let Some(d) = self.dataset.delimiter {
            if !d.is_ascii() {
                return bad(format!("dataset.delimiter must be a single ASCII character, got '{d}'"));
            }
        }
        if self.dataset.kind == DatasetKind::Csv {
            if self.dataset.path.is_none() {
                return bad("dataset.path is required for kind = \"csv\"".into());
            }
            if self.dataset.target.is_none() {
                return bad("dataset.target is required for kind = \"csv\"".into());
            }
        }
        Ok(())
    }
}
