//! Gaussian posterior over random-feature weights with rank-one updates.
//!
//! Model: `y = φ̃ᵀθ + ε`, `θ ~ N(0, σ_θ² I)`, `ε ~ N(0, σ_ε²)`. The
//! posterior `N(θ̂, Σ)` is kept in covariance form; each revealed label costs
//! one matrix-vector product and one symmetric rank-one downdate.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid_arg, Result};
use crate::linalg::{dot, Matrix};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    mean: Vec<f64>,
    covariance: Matrix,
    noise_var: f64,
    prior_var: f64,
}

/// Predictive mean/variance of the next observation plus the gain `Σφ̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovation {
    pub mean: f64,
    pub var: f64,
    gain: Vec<f64>,
}

impl Posterior {
    /// Prior `N(0, σ_θ² I)` over `feature_dim` weights.
    pub fn new(feature_dim: usize, prior_var: f64, noise_var: f64) -> Result<Self> {
        if feature_dim == 0 {
            return Err(invalid_arg!("feature dimension must be at least 1"));
        }
        check_variance("prior", prior_var)?;
        check_variance("noise", noise_var)?;
        let mut covariance = Matrix::zeros(feature_dim, feature_dim);
        for i in 0..feature_dim {
            covariance[(i, i)] = prior_var;
        }
        Ok(Self {
            mean: vec![0.0; feature_dim],
            covariance,
            noise_var,
            prior_var,
        })
    }

    /// Reassembles a posterior from stored parts (e.g. a checkpoint).
    pub fn from_parts(mean: Vec<f64>, covariance: Matrix, prior_var: f64, noise_var: f64) -> Result<Self> {
        check_variance("prior", prior_var)?;
        check_variance("noise", noise_var)?;
        if !covariance.is_square() || covariance.rows() != mean.len() || mean.is_empty() {
            return Err(invalid_arg!(
                "covariance {}x{} does not match mean of length {}",
                covariance.rows(),
                covariance.cols(),
                mean.len()
            ));
        }
        if !covariance.is_finite() || mean.iter().any(|v| !v.is_finite()) {
            return Err(invalid_arg!("posterior entries must be finite"));
        }
        Ok(Self {
            mean,
            covariance,
            noise_var,
            prior_var,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn prior_var(&self) -> f64 {
        self.prior_var
    }

    /// Predictive `(mean, var)` of a noisy observation with features `phi`.
    pub fn predict(&self, phi: &[f64]) -> Result<(f64, f64)> {
        let inn = self.innovation(phi)?;
        Ok((inn.mean, inn.var))
    }

    /// Like [`predict`](Self::predict) but keeps `Σφ̃` for a following update.
    pub fn innovation(&self, phi: &[f64]) -> Result<Innovation> {
        self.check_dim(phi)?;
        let gain = self.covariance.matvec(phi)?;
        let mean = dot(phi, &self.mean);
        // φᵀΣφ is nonnegative in exact arithmetic
        let var = dot(phi, &gain).max(0.0) + self.noise_var;
        Ok(Innovation { mean, var, gain })
    }

    /// Conditions on observing `y` at features `phi`.
    pub fn update(&mut self, phi: &[f64], y: f64) -> Result<()> {
        let inn = self.innovation(phi)?;
        self.apply(&inn, y)
    }

    /// Applies an update using an innovation computed from the current state.
    pub fn apply(&mut self, inn: &Innovation, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(invalid_arg!("observation must be finite, got {}", y));
        }
        if inn.gain.len() != self.feature_dim() {
            return Err(invalid_arg!("innovation does not belong to this posterior"));
        }
        let g = &inn.gain;
        let c = inn.var;
        let step = (y - inn.mean) / c;
        for (m, gi) in self.mean.iter_mut().zip(g) {
            *m += gi * step;
        }
        // (g_i g_j) / c is bitwise symmetric in (i, j), so a symmetric Σ stays
        // exactly symmetric and the explicit (Σ + Σᵀ)/2 pass is a no-op.
        let inv_c = 1.0 / c;
        let n = self.feature_dim();
        for i in 0..n {
            let gi = g[i];
            let row = self.covariance.row_mut(i);
            for (s, gj) in row.iter_mut().zip(g) {
                *s -= (gi * gj) * inv_c;
            }
        }
        Ok(())
    }

    fn check_dim(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.feature_dim() {
            return Err(invalid_arg!(
                "feature vector has length {}, posterior expects {}",
                phi.len(),
                self.feature_dim()
            ));
        }
        Ok(())
    }
}

fn check_variance(what: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid_arg!("{} variance must be positive and finite, got {}", what, v));
    }
    Ok(())
}

/// Prior `N(0, σ_θ² I)` over `2D` weights.
pub fn init_posterior(num_frequencies: usize, prior_var: f64, noise_var: f64) -> Result<Posterior> {
    Posterior::new(2 * num_frequencies, prior_var, noise_var)
}

/// Gaussian log-density `log N(y; mean, var)`.
pub fn log_predictive(mean: f64, var: f64, y: f64) -> Result<f64> {
    if !(var > 0.0) {
        return Err(invalid_arg!("predictive variance must be positive, got {}", var));
    }
    let r = y - mean;
    Ok(-0.5 * (LN_2PI + libm::log(var)) - r * r / (2.0 * var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_shapes_and_errors() {
        let p = init_posterior(1, 1.0, 0.01).unwrap();
        assert_eq!(p.mean(), &[0.0, 0.0]);
        assert_eq!(p.covariance(), &Matrix::identity(2));
        let p = init_posterior(2, 0.5, 0.01).unwrap();
        assert_eq!(p.covariance(), &Matrix::from_diag(&[0.5; 4]));
        assert!(init_posterior(1, 0.0, 0.01).is_err());
        assert!(init_posterior(1, 1.0, -1.0).is_err());
    }

    #[test]
    fn prior_predictive() {
        let p = init_posterior(2, 1.0, 0.01).unwrap();
        let phi = [0.5, 0.5, 0.5, 0.5];
        let (m, v) = p.predict(&phi).unwrap();
        assert_eq!(m, 0.0);
        assert!((v - 1.01).abs() < 1e-15);
        assert_eq!(p.predict(&[0.0; 4]).unwrap(), (0.0, 0.01));
        assert!(p.predict(&[1.0; 3]).is_err());
    }

    #[test]
    fn scalar_conjugate_update() {
        let mut p = init_posterior(1, 1.0, 1.0).unwrap();
        p.update(&[1.0, 0.0], 2.0).unwrap();
        assert_eq!(p.mean(), &[1.0, 0.0]);
        assert_eq!(p.covariance()[(0, 0)], 0.5);
        assert_eq!(p.covariance()[(1, 1)], 1.0);
        assert_eq!(p.covariance()[(0, 1)], 0.0);
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let mut p = init_posterior(2, 1.0, 0.1).unwrap();
        p.update(&[0.3, 0.1, -0.2, 0.4], 1.0).unwrap();
        let phi = [0.1, 0.2, 0.3, 0.4];
        let (m, v) = p.predict(&phi).unwrap();
        let before = p.mean().to_vec();
        p.update(&phi, m).unwrap();
        for (a, b) in p.mean().iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(p.predict(&phi).unwrap().1 < v);
    }

    #[test]
    fn non_finite_observation_rejected() {
        let mut p = init_posterior(1, 1.0, 1.0).unwrap();
        assert!(p.update(&[1.0, 0.0], f64::NAN).is_err());
        assert!(p.update(&[1.0, 0.0], f64::INFINITY).is_err());
    }

    #[test]
    fn log_predictive_values() {
        let v = log_predictive(0.0, 1.0, 0.0).unwrap();
        assert!((v + 0.918_938_533_204_672_7).abs() < 1e-15);
        let v = log_predictive(3.0, 1.0 / (2.0 * core::f64::consts::PI), 3.0).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(log_predictive(0.0, 1.0, 0.5).unwrap() < log_predictive(0.0, 1.0, 0.0).unwrap());
        assert!(log_predictive(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn from_parts_validates() {
        assert!(Posterior::from_parts(vec![0.0; 2], Matrix::identity(3), 1.0, 1.0).is_err());
        assert!(Posterior::from_parts(vec![0.0; 2], Matrix::identity(2), 1.0, 0.0).is_err());
        let p = Posterior::from_parts(vec![0.0; 2], Matrix::identity(2), 1.0, 1.0).unwrap();
        assert_eq!(p, init_posterior(1, 1.0, 1.0).unwrap());
    }
}
