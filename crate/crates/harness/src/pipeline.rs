//! One replicate: data, graph, ensemble warm-up, then the labelled stream.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use streamgp_core::conformal::{init_threshold, npll_score, ConformalState, CpMode, CoverageReport};
use streamgp_core::data::{standardize_and_split, Split, SplitSpec};
use streamgp_core::rf::median_pairwise_distance;
use streamgp_core::{EnsembleState, Graph, KernelSpec, Matrix, Propagation};

use crate::config::{mode_name, ExperimentConfig, InitScores, Lengthscale, MemberKernel};
use crate::data_io::load_dataset;
use crate::error::{HarnessError, Result};

/// Rows used for the median heuristic are capped to keep it quadratic in a
/// small number.
pub const MEDIAN_HEURISTIC_MAX_ROWS: usize = 2000;

/// SplitMix64 finaliser; derives independent sub-seeds from a replicate seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn permutation_seed(seed: u64) -> u64 {
    mix_seed(seed, 1)
}

pub fn ensemble_seed(seed: u64) -> u64 {
    mix_seed(seed, 2)
}

/// Everything that depends on the replicate seed but not on the method.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: Split,
    pub graph: Graph,
    pub prop: Propagation,
    pub lengthscale: f64,
}

impl Prepared {
    pub fn n_init(&self) -> usize {
        self.split.init.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }
}

pub fn prepare(cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset, seed)?;
    let split = standardize_and_split(&ds, &SplitSpec::new(cfg.split.init_fraction, permutation_seed(seed))?)?;
    let all = split.combined()?;
    let lengthscale = match cfg.model.lengthscale {
        Lengthscale::Explicit(l) => l,
        Lengthscale::MedianHeuristic => {
            let init = &split.init.features;
            let rows = init.rows().min(MEDIAN_HEURISTIC_MAX_ROWS);
            let head = Matrix::from_vec(rows, init.cols(), init.as_slice()[..rows * init.cols()].to_vec())?;
            median_pairwise_distance(&head)?
        }
    };
    let graph = Graph::knn(all.features, all.labels, cfg.graph.k)?;
    let prop = Propagation::from_adjacency(graph.adjacency())?;
    Ok(Prepared {
        split,
        graph,
        prop,
        lengthscale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub mode: String,
    pub coverage: f64,
    pub mean_width: f64,
    pub empty_rate: f64,
    pub final_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub seed: u64,
    pub n_init: usize,
    pub n_stream: usize,
    pub lengthscale: f64,
    pub initial_threshold: f64,
    pub final_weights: Vec<f64>,
    pub results: Vec<ModeResult>,
    /// Wall-clock seconds per 1000 stream steps, one entry per block (a
    /// trailing partial block is scaled up).
    pub seconds_per_1000: Vec<f64>,
}

impl ReplicateRecord {
    pub fn result(&self, mode: CpMode) -> Option<&ModeResult> {
        self.results.iter().find(|r| r.mode == mode_name(mode))
    }
}

/// One stream step as seen by the first requested mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub node: usize,
    pub mean: f64,
    pub var: f64,
    pub threshold: f64,
    pub lower: f64,
    pub upper: f64,
    pub y: f64,
    pub covered: bool,
    pub width: f64,
}

fn member_specs(members: &[MemberKernel], lengthscale: f64, input_dim: usize, d: usize) -> Result<Vec<KernelSpec>> {
    members
        .iter()
        .map(|m| Ok(KernelSpec::new(m.0, lengthscale, input_dim, d)?))
        .collect()
}

/// Runs the configured method (`cfg.cp.mode`, `cfg.model.members`).
pub fn run_single(cfg: &ExperimentConfig, seed: u64) -> Result<ReplicateRecord> {
    let prepared = prepare(cfg, seed)?;
    run_prepared(cfg, &prepared, &cfg.model.members, seed, &[cfg.cp.mode], None)
}

/// Streams one replicate through an ensemble of `members`, scoring every
/// mode in `modes` against the same predictions. Sets never feed back into
/// the model, so this equals running each mode on its own.
pub fn run_prepared(
    cfg: &ExperimentConfig,
    prepared: &Prepared,
    members: &[MemberKernel],
    seed: u64,
    modes: &[CpMode],
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<ReplicateRecord> {
    if modes.is_empty() {
        return Err(HarnessError::Config("no cp modes requested".into()));
    }
    let step_err = |step: String| move |source| HarnessError::Step { seed, step, source };
    let non_finite = |step: String, what: &str| HarnessError::NonFinite {
        seed,
        step,
        what: what.to_string(),
    };
    let n_init = prepared.n_init();
    let n = prepared.n_nodes();
    let labels = prepared.graph.labels();
    let specs = member_specs(
        members,
        prepared.lengthscale,
        prepared.graph.input_dim(),
        cfg.model.num_frequencies,
    )?;
    let mut ens = EnsembleState::new(
        &prepared.graph,
        &prepared.prop,
        &specs,
        ensemble_seed(seed),
        cfg.model.prior_var,
        cfg.model.noise_var,
    )
    .map_err(step_err("building the ensemble".into()))?;

    let mut scores = Vec::with_capacity(n_init);
    let mut push_score = |node: usize, mean: f64, var: f64, y: f64| -> Result<()> {
        let at = format!("initial score at node {node}");
        let s = npll_score(mean, var, y).map_err(step_err(at.clone()))?;
        if !s.is_finite() {
            return Err(non_finite(at, "score"));
        }
        scores.push(s);
        Ok(())
    };
    for (node, &y) in labels.iter().enumerate().take(n_init) {
        let at = || format!("initial training node {node}");
        let inn = ens.innovations(node).map_err(step_err(at()))?;
        if cfg.cp.init_scores == InitScores::Prequential {
            let f = ens.fuse(&inn).map_err(step_err(at()))?;
            push_score(node, f.mean, f.var, y)?;
        }
        ens.apply(&inn, y).map_err(step_err(at()))?;
    }
    if cfg.cp.init_scores == InitScores::InSample {
        for (node, &y) in labels.iter().enumerate().take(n_init) {
            let f = ens
                .predict_fused(node)
                .map_err(step_err(format!("initial score at node {node}")))?;
            push_score(node, f.mean, f.var, y)?;
        }
    }
    let q0 = init_threshold(&scores, cfg.cp.alpha).map_err(step_err("initial threshold".into()))?;

    let mut states = modes
        .iter()
        .map(|&mode| {
            let mut st = ConformalState::new(mode, cfg.cp.alpha, cfg.cp.eta, q0)?;
            if let Some(c) = cfg.cp.credibility {
                st = st.with_credibility(c)?;
            }
            if let (Some(b), CpMode::Ocp | CpMode::FixedCp) = (cfg.cp.clamp_bound, mode) {
                st = st.with_clamp_bound(b)?;
            }
            Ok(st)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut seconds_per_1000 = Vec::new();
    let mut block_start = Instant::now();
    for (step, node) in (n_init..n).enumerate() {
        let y = labels[node];
        let at = || format!("stream step {step} (node {node})");
        let inn = ens.innovations(node).map_err(step_err(at()))?;
        let fused = ens.fuse(&inn).map_err(step_err(at()))?;
        if !fused.mean.is_finite() {
            return Err(non_finite(at(), "fused mean"));
        }
        if !fused.var.is_finite() || !(fused.var > 0.0) {
            return Err(non_finite(at(), "fused variance"));
        }
        for (i, st) in states.iter_mut().enumerate() {
            let out = st.observe(fused.mean, fused.var, y).map_err(step_err(at()))?;
            if !out.score.is_finite() {
                return Err(non_finite(at(), "score"));
            }
            if i == 0 {
                if let Some(t) = trace.as_deref_mut() {
                    t.push(TraceRow {
                        step,
                        node,
                        mean: fused.mean,
                        var: fused.var,
                        threshold: out.threshold,
                        lower: out.set.lower,
                        upper: out.set.upper,
                        y,
                        covered: out.covered,
                        width: out.set.width(),
                    });
                }
            }
        }
        ens.apply(&inn, y).map_err(step_err(at()))?;
        let done = step + 1;
        if done % 1000 == 0 {
            seconds_per_1000.push(block_start.elapsed().as_secs_f64());
            block_start = Instant::now();
        } else if node + 1 == n {
            let part = (done % 1000) as f64;
            seconds_per_1000.push(block_start.elapsed().as_secs_f64() * 1000.0 / part);
        }
    }

    let results = states
        .iter()
        .map(|st| {
            let CoverageReport {
                coverage,
                mean_width,
                empty_rate,
            } = st.coverage_report().map_err(step_err("coverage report".into()))?;
            Ok(ModeResult {
                mode: mode_name(st.mode()).to_string(),
                coverage,
                mean_width,
                empty_rate,
                final_threshold: st.threshold(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ReplicateRecord {
        seed,
        n_init,
        n_stream: n - n_init,
        lengthscale: prepared.lengthscale,
        initial_threshold: q0,
        final_weights: ens.weights(),
        results,
        seconds_per_1000,
    })
}

/// Per-step dump of one replicate under the configured method.
pub fn run_trace(cfg: &ExperimentConfig, seed: u64) -> Result<(ReplicateRecord, Vec<TraceRow>)> {
    let prepared = prepare(cfg, seed)?;
    let mut rows = Vec::with_capacity(prepared.n_nodes() - prepared.n_init());
    let rec = run_prepared(cfg, &prepared, &cfg.model.members, seed, &[cfg.cp.mode], Some(&mut rows))?;
    Ok((rec, rows))
}
