#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streamgp_core::graph::{Graph, Propagation};
use streamgp_core::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Gauss-Jordan inverse with partial pivoting, kept separate from the crate's
/// Cholesky path.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x][c].abs().partial_cmp(&m[y][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Random graph on `n` nodes with `d`-dimensional features and a k-NN adjacency.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, d: usize, k: usize) -> (Graph, Propagation) {
    let x = random_matrix(rng, n, d, 1.5);
    let labels = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = Graph::knn(x, labels, k).unwrap();
    let p = Propagation::from_adjacency(g.adjacency()).unwrap();
    (g, p)
}

/// Random symmetric binary adjacency with zero diagonal.
pub fn random_adjacency(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(density) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}

/// Batch Gaussian posterior: Σ = (σθ⁻² I + σε⁻² Φ Φᵀ)⁻¹, θ̂ = σε⁻² Σ Φ y
/// with Φ holding one feature vector per column.
pub fn batch_posterior(phis: &[Vec<f64>], ys: &[f64], prior_var: f64, noise_var: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dim = phis[0].len();
    let mut precision = vec![vec![0.0; dim]; dim];
    for (i, row) in precision.iter_mut().enumerate() {
        row[i] = 1.0 / prior_var;
    }
    let mut rhs = vec![0.0; dim];
    for (phi, y) in phis.iter().zip(ys) {
        for i in 0..dim {
            rhs[i] += phi[i] * y / noise_var;
            for j in 0..dim {
                precision[i][j] += phi[i] * phi[j] / noise_var;
            }
        }
    }
    let cov = gauss_jordan_inverse(&precision);
    let mean = (0..dim).map(|i| (0..dim).map(|j| cov[i][j] * rhs[j]).sum()).collect();
    (mean, cov)
}
