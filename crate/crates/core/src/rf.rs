//! Random Fourier features for shift-invariant kernels.
//!
//! Frequencies are drawn from the kernel's normalised spectral density: a
//! Gaussian for the RBF kernel and a multivariate Student-t with `2ν`
//! degrees of freedom for Matérn-ν. The feature map is
//! `φ(x) = D^-1/2 [sin(v₁ᵀx), cos(v₁ᵀx), …, sin(v_Dᵀx), cos(v_Dᵀx)]`,
//! so `φ(x)ᵀφ(x')` is an unbiased estimate of `κ(x - x')`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{invalid_arg, Result};
use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    Rbf,
    /// Matérn with smoothness `nu`.
    Matern { nu: f64 },
}

impl KernelFamily {
    pub const MATERN_32: KernelFamily = KernelFamily::Matern { nu: 1.5 };
    pub const MATERN_52: KernelFamily = KernelFamily::Matern { nu: 2.5 };
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Rbf => write!(f, "rbf"),
            KernelFamily::Matern { nu } => write!(f, "matern-{}", nu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub input_dim: usize,
    pub num_frequencies: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64, input_dim: usize, num_frequencies: usize) -> Result<Self> {
        let spec = Self {
            family,
            lengthscale,
            input_dim,
            num_frequencies,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0) || !self.lengthscale.is_finite() {
            return Err(invalid_arg!("lengthscale must be positive and finite, got {}", self.lengthscale));
        }
        if self.num_frequencies == 0 {
            return Err(invalid_arg!("number of random frequencies must be at least 1"));
        }
        if self.input_dim == 0 {
            return Err(invalid_arg!("input dimension must be at least 1"));
        }
        if let KernelFamily::Matern { nu } = self.family {
            if !(nu > 0.0) || !nu.is_finite() {
                return Err(invalid_arg!("Matérn smoothness must be positive, got {}", nu));
            }
        }
        Ok(())
    }

    /// Length of the feature vector, `2D`.
    pub fn feature_dim(&self) -> usize {
        2 * self.num_frequencies
    }
}

/// `D` spectral frequencies (one per row) drawn for a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDraw {
    frequencies: Matrix,
    seed: u64,
}

impl FrequencyDraw {
    pub fn frequencies(&self) -> &Matrix {
        &self.frequencies
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_frequencies(&self) -> usize {
        self.frequencies.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.cols()
    }

    pub fn feature_dim(&self) -> usize {
        2 * self.frequencies.rows()
    }

    pub fn feature_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.feature_dim()];
        self.feature_map_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes the interleaved sin/cos features of `x` into `out`.
    pub fn feature_map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(invalid_arg!(
                "input has dimension {}, frequencies expect {}",
                x.len(),
                self.input_dim()
            ));
        }
        if out.len() != self.feature_dim() {
            return Err(invalid_arg!(
                "output buffer has length {}, expected {}",
                out.len(),
                self.feature_dim()
            ));
        }
        let scale = 1.0 / libm::sqrt(self.num_frequencies() as f64);
        for (i, pair) in out.chunks_exact_mut(2).enumerate() {
            let (s, c) = libm::sincos(dot(self.frequencies.row(i), x));
            pair[0] = scale * s;
            pair[1] = scale * c;
        }
        Ok(())
    }

    /// Feature vectors of every row of `inputs`, one output row per input row.
    pub fn feature_matrix(&self, inputs: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(inputs.rows(), self.feature_dim());
        for i in 0..inputs.rows() {
            self.feature_map_into(inputs.row(i), out.row_mut(i))?;
        }
        Ok(out)
    }
}

/// Draws `spec.num_frequencies` i.i.d. frequencies from the spectral density
/// of `spec.family`. The same `(spec, seed)` always gives the same draw.
pub fn sample_frequencies(spec: &KernelSpec, seed: u64) -> Result<FrequencyDraw> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.input_dim;
    let mut frequencies = Matrix::zeros(spec.num_frequencies, d);
    let inv_ell = 1.0 / spec.lengthscale;
    match spec.family {
        KernelFamily::Rbf => {
            for v in frequencies.as_mut_slice() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v = g * inv_ell;
            }
        }
        KernelFamily::Matern { nu } => {
            let dof = 2.0 * nu;
            let chi2 = ChiSquared::new(dof).map_err(|e| invalid_arg!("chi-squared with {} dof: {}", dof, e))?;
            for i in 0..spec.num_frequencies {
                let row = frequencies.row_mut(i);
                for v in row.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let u: f64 = chi2.sample(&mut rng);
                let scale = libm::sqrt(dof / u) * inv_ell;
                row.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }
    Ok(FrequencyDraw { frequencies, seed })
}

/// Random-feature map `φ(x)` for a given frequency draw.
pub fn feature_map(x: &[f64], draw: &FrequencyDraw) -> Result<Vec<f64>> {
    draw.feature_map(x)
}

/// Closed-form kernel value `κ(x, x2)` (unit amplitude).
pub fn exact_kernel(x: &[f64], x2: &[f64], spec: &KernelSpec) -> Result<f64> {
    spec.validate()?;
    if x.len() != x2.len() {
        return Err(invalid_arg!("inputs have dimensions {} and {}", x.len(), x2.len()));
    }
    let r2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    let ell = spec.lengthscale;
    match spec.family {
        KernelFamily::Rbf => Ok(libm::exp(-r2 / (2.0 * ell * ell))),
        KernelFamily::Matern { nu } if nu == 1.5 => {
            let s = libm::sqrt(3.0 * r2) / ell;
            Ok((1.0 + s) * libm::exp(-s))
        }
        KernelFamily::Matern { nu } if nu == 2.5 => {
            let s = libm::sqrt(5.0 * r2) / ell;
            Ok((1.0 + s + s * s / 3.0) * libm::exp(-s))
        }
        KernelFamily::Matern { nu } => Err(invalid_arg!(
            "closed-form Matérn kernel is only available for nu = 1.5 or 2.5, got {}",
            nu
        )),
    }
}

/// Median pairwise Euclidean distance between the rows of `points`.
///
/// Used as the default lengthscale. Needs at least two rows.
pub fn median_pairwise_distance(points: &Matrix) -> Result<f64> {
    let n = points.rows();
    if n < 2 {
        return Err(invalid_arg!("median heuristic needs at least two points, got {}", n));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let r2: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(libm::sqrt(r2));
        }
    }
    dists.sort_unstable_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if !(median > 0.0) {
        return Err(invalid_arg!("median pairwise distance is zero; points are degenerate"));
    }
    Ok(median)
}
