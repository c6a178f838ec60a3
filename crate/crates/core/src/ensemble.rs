//! Weighted ensemble of graph-aware random-feature GPs.
//!
//! Each member owns its own frequency draw, the propagated feature matrix
//! for every node, and a weight posterior. Member weights are Bayesian
//! model-averaging probabilities updated with each member's prequential
//! predictive likelihood; the mixture predictive is collapsed to a single
//! Gaussian by moment matching.

use alloc::vec::Vec;

use crate::error::{invalid_arg, Result};
use crate::graph::{Graph, Propagation};
use crate::linalg::Matrix;
use crate::posterior::{log_predictive, Innovation, Posterior};
use crate::rf::{sample_frequencies, FrequencyDraw, KernelSpec};

/// Lower bound applied to every member weight after each update.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Member {
    spec: KernelSpec,
    draw: FrequencyDraw,
    posterior: Posterior,
    // Row n holds φ̃_n, the propagated features of node n.
    node_features: Matrix,
}

impl Member {
    pub fn new(spec: KernelSpec, seed: u64, graph: &Graph, prop: &Propagation, prior_var: f64, noise_var: f64) -> Result<Self> {
        if spec.input_dim != graph.input_dim() {
            return Err(invalid_arg!(
                "kernel expects {}-dimensional inputs, graph features have {}",
                spec.input_dim,
                graph.input_dim()
            ));
        }
        if prop.n_nodes() != graph.n_nodes() {
            return Err(invalid_arg!(
                "propagation covers {} nodes, graph has {}",
                prop.n_nodes(),
                graph.n_nodes()
            ));
        }
        let draw = sample_frequencies(&spec, seed)?;
        let raw = draw.feature_matrix(graph.features())?;
        let node_features = prop.apply_node_major(&raw)?;
        let posterior = Posterior::new(spec.feature_dim(), prior_var, noise_var)?;
        Ok(Self {
            spec,
            draw,
            posterior,
            node_features,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn draw(&self) -> &FrequencyDraw {
        &self.draw
    }

    pub fn posterior(&self) -> &Posterior {
        &self.posterior
    }

    pub fn posterior_mut(&mut self) -> &mut Posterior {
        &mut self.posterior
    }

    /// Propagated features `φ̃_node`.
    pub fn node_features(&self, node: usize) -> &[f64] {
        self.node_features.row(node)
    }

    /// Propagated features as a `2D × N` matrix (one column per node).
    pub fn transformed_features(&self) -> Matrix {
        self.node_features.transpose()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_features.rows()
    }

    pub fn predict(&self, node: usize) -> Result<(f64, f64)> {
        self.posterior.predict(self.node_features(node))
    }
}

/// Moment-matched Gaussian of the ensemble mixture at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedPrediction {
    pub mean: f64,
    pub var: f64,
    pub member_means: Vec<f64>,
    pub member_vars: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Mean and variance of the mixture `Σ w_m N(μ_m, σ²_m)`.
pub fn fuse_moments(weights: &[f64], means: &[f64], vars: &[f64]) -> Result<(f64, f64)> {
    if weights.is_empty() || weights.len() != means.len() || weights.len() != vars.len() {
        return Err(invalid_arg!(
            "mixture needs matching nonempty weights/means/vars, got {}/{}/{}",
            weights.len(),
            means.len(),
            vars.len()
        ));
    }
    let mean: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
    let var: f64 = weights
        .iter()
        .zip(means.iter().zip(vars))
        .map(|(w, (m, v))| {
            let d = m - mean;
            w * (v + d * d)
        })
        .sum();
    Ok((mean, var))
}

#[derive(Debug, Clone)]
pub struct EnsembleState {
    members: Vec<Member>,
    log_weights: Vec<f64>,
    weight_floor: f64,
}

impl EnsembleState {
    /// Member `m` draws its frequencies with seed `base_seed + m`; weights
    /// start uniform.
    pub fn new(
        graph: &Graph,
        prop: &Propagation,
        specs: &[KernelSpec],
        base_seed: u64,
        prior_var: f64,
        noise_var: f64,
    ) -> Result<Self> {
        if specs.is_empty() {
            return Err(invalid_arg!("ensemble needs at least one kernel"));
        }
        let members = specs
            .iter()
            .enumerate()
            .map(|(m, spec)| Member::new(*spec, base_seed.wrapping_add(m as u64), graph, prop, prior_var, noise_var))
            .collect::<Result<Vec<_>>>()?;
        Self::from_members(members)
    }

    pub fn from_members(members: Vec<Member>) -> Result<Self> {
        if members.is_empty() {
            return Err(invalid_arg!("ensemble needs at least one member"));
        }
        let n = members[0].n_nodes();
        if members.iter().any(|m| m.n_nodes() != n) {
            return Err(invalid_arg!("all members must cover the same nodes"));
        }
        let uniform = -libm::log(members.len() as f64);
        Ok(Self {
            log_weights: alloc::vec![uniform; members.len()],
            members,
            weight_floor: WEIGHT_FLOOR,
        })
    }

    pub fn with_weight_floor(mut self, floor: f64) -> Result<Self> {
        if !(0.0..1.0 / self.members.len() as f64).contains(&floor) {
            return Err(invalid_arg!(
                "weight floor {} must lie in [0, 1/M) for M = {}",
                floor,
                self.members.len()
            ));
        }
        self.weight_floor = floor;
        Ok(self)
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.members[0].n_nodes()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|&lw| libm::exp(lw)).collect()
    }

    pub fn weight_floor(&self) -> f64 {
        self.weight_floor
    }

    /// Overrides the weights (normalised on the way in).
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.members.len() {
            return Err(invalid_arg!("{} weights for {} members", weights.len(), self.members.len()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid_arg!("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(invalid_arg!("weights must not all be zero"));
        }
        for (lw, w) in self.log_weights.iter_mut().zip(weights) {
            *lw = libm::log(w / total);
        }
        Ok(())
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n_nodes() {
            return Err(invalid_arg!("node {} out of range for {} nodes", node, self.n_nodes()));
        }
        Ok(())
    }

    pub fn predict_fused(&self, node: usize) -> Result<FusedPrediction> {
        let innovations = self.innovations(node)?;
        self.fuse(&innovations)
    }

    /// Per-member innovations at `node`; pair with [`fuse`](Self::fuse) and
    /// [`apply`](Self::apply) to predict and then update with one
    /// matrix-vector product per member.
    pub fn innovations(&self, node: usize) -> Result<Vec<Innovation>> {
        self.check_node(node)?;
        self.members
            .iter()
            .map(|m| m.posterior.innovation(m.node_features(node)))
            .collect()
    }

    pub fn fuse(&self, innovations: &[Innovation]) -> Result<FusedPrediction> {
        let member_means: Vec<f64> = innovations.iter().map(|i| i.mean).collect();
        let member_vars: Vec<f64> = innovations.iter().map(|i| i.var).collect();
        let weights = self.weights();
        let (mean, var) = fuse_moments(&weights, &member_means, &member_vars)?;
        Ok(FusedPrediction {
            mean,
            var,
            member_means,
            member_vars,
            weights,
        })
    }

    /// Reveals label `y` at `node`: reweights members by their predictive
    /// likelihood (computed before conditioning), then conditions every
    /// member posterior on the label.
    pub fn observe(&mut self, node: usize, y: f64) -> Result<()> {
        let innovations = self.innovations(node)?;
        self.apply(&innovations, y)
    }

    /// Second half of [`observe`](Self::observe), reusing innovations taken
    /// from the current state.
    pub fn apply(&mut self, innovations: &[Innovation], y: f64) -> Result<()> {
        if innovations.len() != self.members.len() {
            return Err(invalid_arg!("{} innovations for {} members", innovations.len(), self.members.len()));
        }
        if !y.is_finite() {
            return Err(invalid_arg!("observation is not finite: {}", y));
        }
        let log_liks = innovations
            .iter()
            .map(|inn| log_predictive(inn.mean, inn.var, y))
            .collect::<Result<Vec<_>>>()?;
        reweight(&mut self.log_weights, &log_liks, self.weight_floor)?;
        for (member, inn) in self.members.iter_mut().zip(innovations) {
            member.posterior.apply(inn, y)?;
        }
        Ok(())
    }
}

/// Bayes-rule reweighting in the log domain: adds each member's log
/// likelihood, normalises with log-sum-exp, then lifts weights below `floor`
/// to `floor` and renormalises.
pub fn reweight(log_weights: &mut [f64], log_likelihoods: &[f64], floor: f64) -> Result<()> {
    if log_weights.len() != log_likelihoods.len() || log_weights.is_empty() {
        return Err(invalid_arg!(
            "{} log weights for {} likelihoods",
            log_weights.len(),
            log_likelihoods.len()
        ));
    }
    for (lw, ll) in log_weights.iter_mut().zip(log_likelihoods) {
        *lw += ll;
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(crate::error::Error::NumericalFailure(alloc::format!(
            "ensemble log weights degenerated (max = {})",
            max
        )));
    }
    let lse = max + libm::log(log_weights.iter().map(|lw| libm::exp(lw - max)).sum::<f64>());
    log_weights.iter_mut().for_each(|lw| *lw -= lse);

    if floor > 0.0 && log_weights.iter().any(|&lw| libm::exp(lw) < floor) {
        let floored: Vec<f64> = log_weights.iter().map(|&lw| libm::exp(lw).max(floor)).collect();
        let total: f64 = floored.iter().sum();
        for (lw, w) in log_weights.iter_mut().zip(&floored) {
            *lw = libm::log(w / total);
        }
    }
    Ok(())
}

/// Builds the ensemble; see [`EnsembleState::new`].
pub fn init_ensemble(
    graph: &Graph,
    prop: &Propagation,
    specs: &[KernelSpec],
    base_seed: u64,
    prior_var: f64,
    noise_var: f64,
) -> Result<EnsembleState> {
    EnsembleState::new(graph, prop, specs, base_seed, prior_var, noise_var)
}
