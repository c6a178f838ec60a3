//! Replicates and method comparisons.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use streamgp_core::{CpMode, KernelFamily};

use crate::config::{mode_name, ExperimentConfig, MemberKernel};
use crate::error::{HarnessError, Result};
use crate::pipeline::{prepare, run_prepared, ReplicateRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelChoice {
    /// Members from `model.members`.
    Egp,
    /// A single RBF member.
    RbfSingle,
}

impl ModelChoice {
    pub fn members(&self, cfg: &ExperimentConfig) -> Vec<MemberKernel> {
        match self {
            ModelChoice::Egp => cfg.model.members.clone(),
            ModelChoice::RbfSingle => vec![MemberKernel(KernelFamily::Rbf)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Method {
    pub model: ModelChoice,
    pub mode: CpMode,
}

/// Row order of the comparison table.
pub const ALL_METHODS: [Method; 6] = [
    Method { model: ModelChoice::Egp, mode: CpMode::Ocp },
    Method { model: ModelChoice::RbfSingle, mode: CpMode::Ocp },
    Method { model: ModelChoice::Egp, mode: CpMode::FixedCp },
    Method { model: ModelChoice::RbfSingle, mode: CpMode::FixedCp },
    Method { model: ModelChoice::Egp, mode: CpMode::Bcs },
    Method { model: ModelChoice::RbfSingle, mode: CpMode::Bcs },
];

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let model = match self.model {
            ModelChoice::Egp => "EGP",
            ModelChoice::RbfSingle => "RBF",
        };
        let mode = match self.mode {
            CpMode::Ocp => "OCP",
            CpMode::FixedCp => "CP",
            CpMode::Bcs => "BCS",
        };
        write!(f, "{model}-{mode}")
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || HarnessError::UnknownMethod {
            name: s.to_string(),
            valid: ALL_METHODS.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", "),
        };
        let t = s.trim().to_ascii_uppercase();
        let (model, mode) = t.rsplit_once('-').ok_or_else(unknown)?;
        let model = match model {
            "EGP" => ModelChoice::Egp,
            "RBF" | "RBF-SINGLE" => ModelChoice::RbfSingle,
            _ => return Err(unknown()),
        };
        let mode = match mode {
            "OCP" => CpMode::Ocp,
            "CP" | "FIXEDCP" => CpMode::FixedCp,
            "BCS" => CpMode::Bcs,
            _ => return Err(unknown()),
        };
        Ok(Method { model, mode })
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub seed: u64,
    pub coverage: f64,
    pub mean_width: f64,
    pub empty_rate: f64,
    pub seconds_per_1000: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub members: Vec<String>,
    pub mode: String,
    pub base_seed: u64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub width_mean: f64,
    pub width_std: f64,
    pub empty_rate: f64,
    pub seconds_per_1000: f64,
    /// False when there is a single replicate; the stds are then 0.
    pub std_defined: bool,
    pub replicates: Vec<ReplicateSummary>,
}

/// Mean and sample standard deviation; `None` std for fewer than two values.
pub fn mean_std(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

impl RunSummary {
    pub fn from_replicates(method: String, members: &[MemberKernel], mode: CpMode, base_seed: u64, reps: Vec<ReplicateSummary>) -> Self {
        let cov: Vec<f64> = reps.iter().map(|r| r.coverage).collect();
        let wid: Vec<f64> = reps.iter().map(|r| r.mean_width).collect();
        let (coverage_mean, cs) = mean_std(&cov);
        let (width_mean, ws) = mean_std(&wid);
        let empty_rate = reps.iter().map(|r| r.empty_rate).sum::<f64>() / reps.len() as f64;
        let seconds_per_1000 = reps.iter().map(|r| r.seconds_per_1000).sum::<f64>() / reps.len() as f64;
        Self {
            method,
            members: members.iter().map(|m| m.to_string()).collect(),
            mode: mode_name(mode).to_string(),
            base_seed,
            coverage_mean,
            coverage_std: cs.unwrap_or(0.0),
            width_mean,
            width_std: ws.unwrap_or(0.0),
            empty_rate,
            seconds_per_1000,
            std_defined: cs.is_some(),
            replicates: reps,
        }
    }
}

fn summarize(rec: &ReplicateRecord, mode: CpMode) -> ReplicateSummary {
    let r = rec.result(mode).expect("mode was requested for this replicate");
    let t = &rec.seconds_per_1000;
    ReplicateSummary {
        seed: rec.seed,
        coverage: r.coverage,
        mean_width: r.mean_width,
        empty_rate: r.empty_rate,
        seconds_per_1000: if t.is_empty() { 0.0 } else { t.iter().sum::<f64>() / t.len() as f64 },
    }
}

/// Runs `replicates` copies of the configured method with seeds
/// `base_seed + i`, in parallel, merged in replicate order.
pub fn run_replicates(cfg: &ExperimentConfig, replicates: usize, base_seed: u64) -> Result<(RunSummary, Vec<ReplicateRecord>)> {
    if replicates < 1 {
        return Err(HarnessError::Config("need at least one replicate".into()));
    }
    cfg.validate()?;
    let mode = cfg.cp.mode;
    let records = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let prepared = prepare(cfg, seed)?;
            run_prepared(cfg, &prepared, &cfg.model.members, seed, &[mode], None)
        })
        .collect::<Result<Vec<_>>>()?;
    let label = format!(
        "{}-{}",
        cfg.model.members.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("+"),
        mode_name(mode)
    );
    let reps = records.iter().map(|r| summarize(r, mode)).collect();
    Ok((
        RunSummary::from_replicates(label, &cfg.model.members, mode, base_seed, reps),
        records,
    ))
}

/// One summary per method, in the order given. Replicate `i` of every
/// method shares dataset, split, stream order and frequency seeds; each
/// (model, replicate) pair is streamed once and scored under all the
/// requested modes of that model.
pub fn compare_methods(cfg: &ExperimentConfig, methods: &[Method]) -> Result<Vec<RunSummary>> {
    if methods.is_empty() {
        return Err(HarnessError::Config("no methods to compare".into()));
    }
    cfg.validate()?;
    let mut models: Vec<(ModelChoice, Vec<CpMode>)> = Vec::new();
    for m in methods {
        match models.iter_mut().find(|(mc, _)| *mc == m.model) {
            Some((_, modes)) if !modes.contains(&m.mode) => modes.push(m.mode),
            Some(_) => {}
            None => models.push((m.model, vec![m.mode])),
        }
    }
    let base_seed = cfg.runs.base_seed;
    let per_rep = (0..cfg.runs.replicates)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let prepared = prepare(cfg, seed)?;
            models
                .iter()
                .map(|(mc, modes)| run_prepared(cfg, &prepared, &mc.members(cfg), seed, modes, None))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(methods
        .iter()
        .map(|m| {
            let k = models.iter().position(|(mc, _)| *mc == m.model).expect("grouped above");
            let reps = per_rep.iter().map(|recs| summarize(&recs[k], m.mode)).collect();
            RunSummary::from_replicates(m.to_string(), &m.model.members(cfg), m.mode, base_seed, reps)
        })
        .collect())
}
