//! k-NN graph construction and the closed-neighbourhood propagation operator.
//!
//! The propagation matrix is `P = (D + I)^-1 (I + A)`: row `n` averages over
//! node `n` and its neighbours with equal weight `1 / (deg(n) + 1)`.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{invalid_arg, Result};
use crate::linalg::{axpy, Matrix};

/// An undirected, unweighted graph with node features and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Matrix,
    features: Matrix,
    labels: Vec<f64>,
}

impl Graph {
    /// Validates the adjacency (symmetric, binary, zero diagonal) and shapes.
    pub fn new(adjacency: Matrix, features: Matrix, labels: Vec<f64>) -> Result<Self> {
        let n = adjacency.rows();
        if n == 0 {
            return Err(invalid_arg!("graph must have at least one node"));
        }
        check_adjacency(&adjacency)?;
        if features.rows() != n {
            return Err(invalid_arg!("features have {} rows, graph has {} nodes", features.rows(), n));
        }
        if labels.len() != n {
            return Err(invalid_arg!("{} labels for {} nodes", labels.len(), n));
        }
        Ok(Self {
            adjacency,
            features,
            labels,
        })
    }

    /// Builds the OR-symmetrised k-NN graph of `features`.
    pub fn knn(features: Matrix, labels: Vec<f64>, k: usize) -> Result<Self> {
        let adjacency = build_knn_graph(&features, k)?;
        Self::new(adjacency, features, labels)
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency.row(node).iter().filter(|&&a| a != 0.0).count()
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency
            .row(node)
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, _)| j)
    }
}

fn check_adjacency(adjacency: &Matrix) -> Result<()> {
    if !adjacency.is_square() {
        return Err(invalid_arg!(
            "adjacency must be square, got {}x{}",
            adjacency.rows(),
            adjacency.cols()
        ));
    }
    let n = adjacency.rows();
    for i in 0..n {
        if adjacency[(i, i)] != 0.0 {
            return Err(invalid_arg!("adjacency has a self-loop at node {}", i));
        }
        for j in 0..n {
            let a = adjacency[(i, j)];
            if a != 0.0 && a != 1.0 {
                return Err(invalid_arg!("adjacency entry ({}, {}) = {} is not binary", i, j, a));
            }
            if a != adjacency[(j, i)] {
                return Err(invalid_arg!("adjacency is not symmetric at ({}, {})", i, j));
            }
        }
    }
    Ok(())
}

/// Exact brute-force k-NN adjacency under Euclidean distance.
///
/// `i ~ j` if either is among the other's `k` nearest neighbours. Equal
/// distances are resolved in favour of the lower node index.
pub fn build_knn_graph(features: &Matrix, k: usize) -> Result<Matrix> {
    let n = features.rows();
    if k == 0 {
        return Err(invalid_arg!("k must be at least 1"));
    }
    if n <= k {
        return Err(invalid_arg!("k-NN graph with k = {} needs more than {} nodes, got {}", k, k, n));
    }
    if !features.is_finite() {
        return Err(invalid_arg!("node features must be finite"));
    }

    let mut adjacency = Matrix::zeros(n, n);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    let by_distance_then_index =
        |a: &(f64, usize), b: &(f64, usize)| -> Ordering { a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) };

    for i in 0..n {
        let xi = features.row(i);
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i).map(|j| {
            let d2: f64 = xi
                .iter()
                .zip(features.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, j)
        }));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
        }
        for &(_, j) in &candidates[..k] {
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
    }
    Ok(adjacency)
}

/// Row-stochastic propagation operator `(D + I)^-1 (I + A)`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    matrix: Matrix,
    // Column indices of the nonzero entries of each row.
    support: Vec<Vec<usize>>,
}

impl Propagation {
    pub fn from_adjacency(adjacency: &Matrix) -> Result<Self> {
        check_adjacency(adjacency)?;
        let n = adjacency.rows();
        let mut matrix = Matrix::zeros(n, n);
        let mut support = Vec::with_capacity(n);
        for i in 0..n {
            let mut cols: Vec<usize> = (0..n)
                .filter(|&j| j == i || adjacency[(i, j)] != 0.0)
                .collect();
            cols.sort_unstable();
            let weight = 1.0 / cols.len() as f64;
            for &j in &cols {
                matrix[(i, j)] = weight;
            }
            support.push(cols);
        }
        Ok(Self { matrix, support })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: Matrix::identity(n),
            support: (0..n).map(|i| alloc::vec![i]).collect(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Nonzero column indices of row `node` (the closed neighbourhood).
    pub fn support(&self, node: usize) -> &[usize] {
        &self.support[node]
    }

    /// `P · F` for a node-major matrix `F` (one row per node).
    ///
    /// Row `n` of the result is the average of the rows of `F` over the
    /// closed neighbourhood of `n`.
    pub fn apply_node_major(&self, node_rows: &Matrix) -> Result<Matrix> {
        let n = self.n_nodes();
        if node_rows.rows() != n {
            return Err(invalid_arg!(
                "expected one row per node ({}), got {}",
                n,
                node_rows.rows()
            ));
        }
        let mut out = Matrix::zeros(n, node_rows.cols());
        for i in 0..n {
            let out_row = out.row_mut(i);
            for &j in &self.support[i] {
                axpy(self.matrix[(i, j)], node_rows.row(j), out_row);
            }
        }
        Ok(out)
    }
}

/// `P = (D + I)^-1 (I + A)` for a symmetric binary adjacency.
pub fn propagation_matrix(adjacency: &Matrix) -> Result<Propagation> {
    Propagation::from_adjacency(adjacency)
}

/// `Φ̃ = Φ Pᵀ` for a feature-major `Φ` (one column per node).
pub fn transform_features(rf_features: &Matrix, prop: &Propagation) -> Result<Matrix> {
    if rf_features.cols() != prop.n_nodes() {
        return Err(invalid_arg!(
            "feature matrix has {} columns, graph has {} nodes",
            rf_features.cols(),
            prop.n_nodes()
        ));
    }
    Ok(prop.apply_node_major(&rf_features.transpose())?.transpose())
}
