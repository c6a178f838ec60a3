//! Exact graph-GP predictive by dense linear algebra.
//!
//! Reference model for validating the random-feature pipeline on small
//! graphs: `h = P f`, `f ~ GP(0, σ_θ² κ)`, so `cov(h) = σ_θ² P K Pᵀ`.

use alloc::vec::Vec;

use crate::error::{invalid_arg, Error, Result};
use crate::graph::{Graph, Propagation};
use crate::linalg::{dot, Matrix};
use crate::rf::{exact_kernel, FrequencyDraw, KernelSpec};

#[derive(Debug, Clone)]
pub struct ExactGraphGP {
    spec: KernelSpec,
    noise_var: f64,
    signal_var: f64,
    // σ_θ² P K Pᵀ over all nodes
    graph_kernel: Matrix,
    observed: Vec<usize>,
    labels: Vec<f64>,
}

impl ExactGraphGP {
    pub fn new(spec: KernelSpec, graph: &Graph, prop: &Propagation, noise_var: f64) -> Result<Self> {
        Self::with_signal_var(spec, graph, prop, noise_var, 1.0)
    }

    pub fn with_signal_var(
        spec: KernelSpec,
        graph: &Graph,
        prop: &Propagation,
        noise_var: f64,
        signal_var: f64,
    ) -> Result<Self> {
        if !(noise_var > 0.0) || !(signal_var > 0.0) {
            return Err(invalid_arg!(
                "noise and signal variances must be positive, got {} and {}",
                noise_var,
                signal_var
            ));
        }
        if spec.input_dim != graph.input_dim() {
            return Err(invalid_arg!(
                "kernel expects {}-dimensional inputs, graph has {}",
                spec.input_dim,
                graph.input_dim()
            ));
        }
        let n = graph.n_nodes();
        if prop.n_nodes() != n {
            return Err(invalid_arg!("propagation covers {} nodes, graph has {}", prop.n_nodes(), n));
        }
        let x = graph.features();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = signal_var * exact_kernel(x.row(i), x.row(j), &spec)?;
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let p = prop.matrix();
        let graph_kernel = p.matmul(&k)?.matmul(&p.transpose())?;
        Ok(Self {
            spec,
            noise_var,
            signal_var,
            graph_kernel,
            observed: Vec::new(),
            labels: Vec::new(),
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn signal_var(&self) -> f64 {
        self.signal_var
    }

    /// The graph-enhanced covariance `P K Pᵀ` (scaled by the signal variance).
    pub fn graph_kernel(&self) -> &Matrix {
        &self.graph_kernel
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    /// Adds a labelled node. Indices must be distinct and in range.
    pub fn observe(&mut self, node: usize, y: f64) -> Result<()> {
        if node >= self.graph_kernel.rows() {
            return Err(invalid_arg!("node {} out of range", node));
        }
        if self.observed.contains(&node) {
            return Err(invalid_arg!("node {} is already observed", node));
        }
        if !y.is_finite() {
            return Err(invalid_arg!("label must be finite, got {}", y));
        }
        self.observed.push(node);
        self.labels.push(y);
        Ok(())
    }

    /// Predictive `(mean, var)` of the noisy label at an unobserved node.
    pub fn predict(&self, node: usize) -> Result<(f64, f64)> {
        let n_all = self.graph_kernel.rows();
        if node >= n_all {
            return Err(invalid_arg!("node {} out of range", node));
        }
        if self.observed.contains(&node) {
            return Err(invalid_arg!("node {} is already observed", node));
        }
        if self.observed.is_empty() {
            return Err(invalid_arg!("exact predictive needs at least one observed label"));
        }
        let n = self.observed.len();
        let mut gram = Matrix::zeros(n, n);
        for (a, &i) in self.observed.iter().enumerate() {
            for (b, &j) in self.observed.iter().enumerate() {
                gram[(a, b)] = self.graph_kernel[(i, j)];
            }
            gram[(a, a)] += self.noise_var;
        }
        let cross: Vec<f64> = self.observed.iter().map(|&i| self.graph_kernel[(i, node)]).collect();
        let l = gram
            .cholesky()
            .map_err(|e| Error::NumericalFailure(alloc::format!("exact GP solve failed: {}", e)))?;
        let alpha = l_solve(&l, &self.labels);
        let v = l_solve(&l, &cross);
        // mean = k̃ᵀ G⁻¹ y = (L⁻¹k̃)ᵀ(L⁻¹y)
        let mean = dot(&v, &alpha);
        let var = self.graph_kernel[(node, node)] - dot(&v, &v) + self.noise_var;
        Ok((mean, var.max(self.noise_var)))
    }
}

// Forward substitution L z = b.
fn l_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Random-feature GP predictive in function-space form.
///
/// Same model as a [`Member`](crate::ensemble::Member) conditioned on
/// `labels` at `observed`, but solved through the `n × n` Gram matrix
/// `σ_θ² Φ̃ₙᵀΦ̃ₙ + σ_ε² I` instead of the `2D × 2D` weight covariance. Useful
/// when `D` is large and only a handful of labels are observed.
#[allow(clippy::too_many_arguments)]
pub fn rf_function_space_predict(
    draw: &FrequencyDraw,
    graph: &Graph,
    prop: &Propagation,
    prior_var: f64,
    noise_var: f64,
    observed: &[usize],
    labels: &[f64],
    node: usize,
) -> Result<(f64, f64)> {
    if observed.len() != labels.len() || observed.is_empty() {
        return Err(invalid_arg!("need matching, nonempty observed indices and labels"));
    }
    if !(prior_var > 0.0) || !(noise_var > 0.0) {
        return Err(invalid_arg!("variances must be positive"));
    }
    let n_nodes = graph.n_nodes();
    if node >= n_nodes || observed.iter().any(|&i| i >= n_nodes) || prop.n_nodes() != n_nodes {
        return Err(invalid_arg!("node index out of range"));
    }
    let propagated = |i: usize| -> Result<Vec<f64>> {
        let mut out = alloc::vec![0.0; draw.feature_dim()];
        let mut raw = alloc::vec![0.0; draw.feature_dim()];
        for &j in prop.support(i) {
            draw.feature_map_into(graph.features().row(j), &mut raw)?;
            crate::linalg::axpy(prop.matrix()[(i, j)], &raw, &mut out);
        }
        Ok(out)
    };
    let obs: Vec<Vec<f64>> = observed.iter().map(|&i| propagated(i)).collect::<Result<_>>()?;
    let target = propagated(node)?;
    let n = obs.len();
    let mut gram = Matrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = prior_var * dot(&obs[a], &obs[b]);
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
        gram[(a, a)] += noise_var;
    }
    let cross: Vec<f64> = obs.iter().map(|o| prior_var * dot(o, &target)).collect();
    let l = gram.cholesky()?;
    let alpha = l_solve(&l, labels);
    let v = l_solve(&l, &cross);
    let mean = dot(&v, &alpha);
    let var = prior_var * dot(&target, &target) - dot(&v, &v) + noise_var;
    Ok((mean, var.max(noise_var)))
}

/// `(mean, var)` of the exact predictive; see [`ExactGraphGP::predict`].
pub fn exact_predict(model: &ExactGraphGP, node: usize) -> Result<(f64, f64)> {
    model.predict(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::KernelFamily;
    use alloc::vec;

    fn toy(n: usize, spacing: f64) -> Graph {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [i as f64 * spacing]).collect();
        Graph::new(Matrix::zeros(n, n), Matrix::from_rows(&rows).unwrap(), vec![0.0; n]).unwrap()
    }

    #[test]
    fn zero_labels_give_zero_mean() {
        let g = toy(4, 0.5);
        let p = Propagation::identity(4);
        let spec = KernelSpec::new(KernelFamily::Rbf, 1.0, 1, 1).unwrap();
        let mut gp = ExactGraphGP::new(spec, &g, &p, 0.1).unwrap();
        gp.observe(0, 0.0).unwrap();
        gp.observe(2, 0.0).unwrap();
        let (m, v) = gp.predict(1).unwrap();
        assert_eq!(m, 0.0);
        assert!(v >= 0.1);
    }

    #[test]
    fn far_neighbour_is_uninformative() {
        let g = toy(2, 1e3);
        let p = Propagation::identity(2);
        let spec = KernelSpec::new(KernelFamily::MATERN_52, 1.0, 1, 1).unwrap();
        let mut gp = ExactGraphGP::new(spec, &g, &p, 0.01).unwrap();
        gp.observe(0, 5.0).unwrap();
        let (m, v) = gp.predict(1).unwrap();
        assert!(m.abs() < 1e-12);
        assert!((v - 1.01).abs() < 1e-12);
    }

    #[test]
    fn two_point_textbook_gp() {
        // single observation: mean = k y / (1 + s2), var = 1 - k^2/(1 + s2) + s2
        let g = toy(2, 1.0);
        let p = Propagation::identity(2);
        let spec = KernelSpec::new(KernelFamily::Rbf, 1.0, 1, 1).unwrap();
        let s2 = 0.25;
        let mut gp = ExactGraphGP::new(spec, &g, &p, s2).unwrap();
        gp.observe(0, 2.0).unwrap();
        let k = (-0.5f64).exp();
        let (m, v) = gp.predict(1).unwrap();
        assert!((m - k * 2.0 / (1.0 + s2)).abs() < 1e-14);
        assert!((v - (1.0 - k * k / (1.0 + s2) + s2)).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let g = toy(3, 1.0);
        let p = Propagation::identity(3);
        let spec = KernelSpec::new(KernelFamily::Rbf, 1.0, 1, 1).unwrap();
        let mut gp = ExactGraphGP::new(spec, &g, &p, 0.1).unwrap();
        assert!(gp.predict(0).is_err());
        gp.observe(0, 1.0).unwrap();
        assert!(gp.observe(0, 1.0).is_err());
        assert!(gp.predict(0).is_err());
        assert!(gp.predict(3).is_err());
        assert!(ExactGraphGP::new(spec, &g, &p, 0.0).is_err());
    }
}
