//! Synthetic regression datasets and the initial/stream split.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{invalid_arg, Result};
use crate::linalg::Matrix;

/// Smallest dataset accepted by the generators and loaders.
pub const MIN_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<f64>,
    pub seed: u64,
}

impl Dataset {
    /// Checks shapes, finiteness and the minimum row count.
    pub fn new(name: impl Into<String>, feature_names: Vec<String>, features: Matrix, labels: Vec<f64>, seed: u64) -> Result<Self> {
        let ds = Self::unchecked(name.into(), feature_names, features, labels, seed)?;
        if ds.len() < MIN_ROWS {
            return Err(invalid_arg!("dataset '{}' has {} rows, need at least {}", ds.name, ds.len(), MIN_ROWS));
        }
        Ok(ds)
    }

    fn unchecked(name: String, feature_names: Vec<String>, features: Matrix, labels: Vec<f64>, seed: u64) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(invalid_arg!("{} feature rows but {} labels", features.rows(), labels.len()));
        }
        if feature_names.len() != features.cols() {
            return Err(invalid_arg!("{} feature names for {} columns", feature_names.len(), features.cols()));
        }
        if !features.is_finite() || labels.iter().any(|v| !v.is_finite()) {
            return Err(invalid_arg!("dataset '{}' contains non-finite values", name));
        }
        Ok(Self {
            name,
            feature_names,
            features,
            labels,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    fn select(&self, rows: &[usize], name: String) -> Result<Dataset> {
        let d = self.dim();
        let mut data = Vec::with_capacity(rows.len() * d);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.features.row(r));
            labels.push(self.labels[r]);
        }
        Self::unchecked(name, self.feature_names.clone(), Matrix::from_vec(rows.len(), d, data)?, labels, self.seed)
    }

    /// Uniform random subsample of `max_rows` rows (order preserved), or the
    /// full dataset when it is not larger than that.
    pub fn subsample(&self, max_rows: usize, seed: u64) -> Result<Dataset> {
        if max_rows >= self.len() {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = rand::seq::index::sample(&mut rng, self.len(), max_rows).into_vec();
        rows.sort_unstable();
        let ds = self.select(&rows, self.name.clone())?;
        if ds.len() < MIN_ROWS {
            return Err(invalid_arg!("subsample of {} rows is below the minimum of {}", ds.len(), MIN_ROWS));
        }
        Ok(ds)
    }
}

fn uniform_cube(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let unif = Uniform::new_inclusive(-2.0, 2.0).expect("valid bounds");
    let data: Vec<f64> = (0..n * d).map(|_| unif.sample(rng)).collect();
    Matrix::from_vec(n, d, data).expect("n*d buffer")
}

fn xyz_names() -> Vec<String> {
    ["x1", "x2", "x3"].iter().map(|s| String::from(*s)).collect()
}

/// Noise standard deviation of the heteroscedastic generator at `x`.
pub fn heteroscedastic_noise_std(x: &[f64]) -> f64 {
    let norm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    0.1 + 0.2 * norm / libm::sqrt(3.0)
}

/// Mean function of the heteroscedastic generator.
pub fn heteroscedastic_mean(x: &[f64]) -> f64 {
    libm::sin(x[0]) + 0.5 * libm::cos(2.0 * x[1]) + 0.3 * x[2]
}

/// Mean function of the near-linear generator.
pub fn linear_mean(x: &[f64]) -> f64 {
    0.8 * x[0] - 0.5 * x[1] + 0.3 * x[2] + 0.1 * libm::sin(3.0 * x[0])
}

pub const LINEAR_NOISE_STD: f64 = 0.05;

/// `x ~ U[-2,2]³`, `y = sin x₁ + ½cos 2x₂ + 0.3x₃ + ε` with noise std
/// growing linearly in `‖x‖` from 0.1 at the origin to 0.5 at the corners.
pub fn generate_heteroscedastic(n: usize, seed: u64) -> Result<Dataset> {
    if n < MIN_ROWS {
        return Err(invalid_arg!("need at least {} samples, got {}", MIN_ROWS, n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = uniform_cube(&mut rng, n, 3);
    let labels = (0..n)
        .map(|i| {
            let x = features.row(i);
            let eps: f64 = rng.sample(rand_distr::StandardNormal);
            heteroscedastic_mean(x) + heteroscedastic_noise_std(x) * eps
        })
        .collect();
    Dataset::new("synthetic-hetero", xyz_names(), features, labels, seed)
}

/// `x ~ U[-2,2]³`, `y = 0.8x₁ − 0.5x₂ + 0.3x₃ + 0.1 sin 3x₁ + ε`, `ε ~ N(0, 0.05²)`.
pub fn generate_linear(n: usize, seed: u64) -> Result<Dataset> {
    if n < MIN_ROWS {
        return Err(invalid_arg!("need at least {} samples, got {}", MIN_ROWS, n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = uniform_cube(&mut rng, n, 3);
    let noise = Normal::new(0.0, LINEAR_NOISE_STD).expect("valid std");
    let labels = (0..n).map(|i| linear_mean(features.row(i)) + noise.sample(&mut rng)).collect();
    Dataset::new("synthetic-linear", xyz_names(), features, labels, seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub init_fraction: f64,
    pub permutation_seed: u64,
}

impl SplitSpec {
    pub fn new(init_fraction: f64, permutation_seed: u64) -> Result<Self> {
        if !(init_fraction > 0.0 && init_fraction < 1.0) {
            return Err(invalid_arg!("init fraction must lie in (0, 1), got {}", init_fraction));
        }
        Ok(Self {
            init_fraction,
            permutation_seed,
        })
    }

    /// `⌈f N⌉`, kept within `[1, N − 1]`.
    pub fn init_size(&self, n: usize) -> usize {
        let raw = libm::ceil(self.init_fraction * n as f64 - 1e-9) as usize;
        raw.clamp(1, n.saturating_sub(1).max(1))
    }
}

/// Z-scoring parameters estimated on the initial split only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub label_mean: f64,
    pub label_std: f64,
}

impl Scaler {
    pub fn fit(ds: &Dataset) -> Result<Self> {
        let n = ds.len();
        if n == 0 {
            return Err(invalid_arg!("cannot fit a scaler on an empty dataset"));
        }
        let mut feature_mean = Vec::with_capacity(ds.dim());
        let mut feature_std = Vec::with_capacity(ds.dim());
        for j in 0..ds.dim() {
            let col = ds.features.column(j);
            let (m, s) = mean_std(&col);
            if !(s > 0.0) {
                return Err(invalid_arg!(
                    "feature column '{}' has zero standard deviation in the initial split",
                    ds.feature_names[j]
                ));
            }
            feature_mean.push(m);
            feature_std.push(s);
        }
        let (label_mean, label_std) = mean_std(&ds.labels);
        if !(label_std > 0.0) {
            return Err(invalid_arg!("label column has zero standard deviation in the initial split"));
        }
        Ok(Self {
            feature_mean,
            feature_std,
            label_mean,
            label_std,
        })
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.dim() != self.feature_mean.len() {
            return Err(invalid_arg!("scaler fitted on {} features, dataset has {}", self.feature_mean.len(), ds.dim()));
        }
        let mut features = ds.features.clone();
        for i in 0..features.rows() {
            for (j, v) in features.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.feature_mean[j]) / self.feature_std[j];
            }
        }
        let labels = ds.labels.iter().map(|y| (y - self.label_mean) / self.label_std).collect();
        Dataset::unchecked(ds.name.clone(), ds.feature_names.clone(), features, labels, ds.seed)
    }

    /// Converts a width in standardised label units back to original units.
    pub fn width_to_original(&self, width: f64) -> f64 {
        width * self.label_std
    }
}

// Population mean and standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub init: Dataset,
    pub stream: Dataset,
    pub scaler: Scaler,
    /// Source row index of every node, init rows first then stream rows.
    pub order: Vec<usize>,
}

impl Split {
    /// Init and stream rows stacked into one dataset (init first).
    pub fn combined(&self) -> Result<Dataset> {
        let d = self.init.dim();
        let n = self.init.len() + self.stream.len();
        let mut data = Vec::with_capacity(n * d);
        data.extend_from_slice(self.init.features.as_slice());
        data.extend_from_slice(self.stream.features.as_slice());
        let mut labels = self.init.labels.clone();
        labels.extend_from_slice(&self.stream.labels);
        Dataset::unchecked(
            self.init.name.clone(),
            self.init.feature_names.clone(),
            Matrix::from_vec(n, d, data)?,
            labels,
            self.init.seed,
        )
    }
}

/// Shuffles rows with `split.permutation_seed`, takes the first `⌈f N⌉` as
/// the initial set and z-scores features and labels with statistics of the
/// initial set alone.
pub fn standardize_and_split(ds: &Dataset, split: &SplitSpec) -> Result<Split> {
    SplitSpec::new(split.init_fraction, split.permutation_seed)?;
    if ds.len() < 2 {
        return Err(invalid_arg!("need at least two rows to split, got {}", ds.len()));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(split.permutation_seed);
    order.shuffle(&mut rng);
    let n_init = split.init_size(ds.len());
    let raw_init = ds.select(&order[..n_init], format!("{}/init", ds.name))?;
    let raw_stream = ds.select(&order[n_init..], format!("{}/stream", ds.name))?;
    let scaler = Scaler::fit(&raw_init)?;
    Ok(Split {
        init: scaler.transform(&raw_init)?,
        stream: scaler.transform(&raw_stream)?,
        scaler,
        order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(generate_linear(50, 3).unwrap(), generate_linear(50, 3).unwrap());
        assert_ne!(generate_linear(50, 3).unwrap(), generate_linear(50, 4).unwrap());
        assert_eq!(generate_heteroscedastic(50, 3).unwrap(), generate_heteroscedastic(50, 3).unwrap());
        assert!(generate_linear(9, 0).is_err());
        assert!(generate_heteroscedastic(5, 0).is_err());
    }

    #[test]
    fn noise_profile() {
        assert!((heteroscedastic_noise_std(&[0.0; 3]) - 0.1).abs() < 1e-15);
        assert!((heteroscedastic_noise_std(&[2.0; 3]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn features_in_cube() {
        let ds = generate_heteroscedastic(500, 1).unwrap();
        assert!(ds.features.as_slice().iter().all(|v| (-2.0..=2.0).contains(v)));
        assert_eq!(ds.dim(), 3);
    }

    #[test]
    fn split_sizes_and_standardisation() {
        let ds = generate_linear(100, 0).unwrap();
        let s = standardize_and_split(&ds, &SplitSpec::new(0.3, 9).unwrap()).unwrap();
        assert_eq!(s.init.len(), 30);
        assert_eq!(s.stream.len(), 70);
        let (m, sd) = mean_std(&s.init.labels);
        assert!(m.abs() < 1e-10 && (sd - 1.0).abs() < 1e-10);
        for j in 0..3 {
            let (m, sd) = mean_std(&s.init.features.column(j));
            assert!(m.abs() < 1e-10 && (sd - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn permutations_differ_but_cover_all_rows() {
        let ds = generate_linear(60, 0).unwrap();
        let a = standardize_and_split(&ds, &SplitSpec::new(0.3, 1).unwrap()).unwrap();
        let b = standardize_and_split(&ds, &SplitSpec::new(0.3, 2).unwrap()).unwrap();
        assert_ne!(a.order, b.order);
        let mut oa = a.order.clone();
        let mut ob = b.order.clone();
        oa.sort_unstable();
        ob.sort_unstable();
        assert_eq!(oa, ob);
        assert_eq!(oa, (0..60).collect::<Vec<_>>());
    }

    #[test]
    fn scaler_uses_init_rows_only() {
        let ds = generate_heteroscedastic(80, 5).unwrap();
        let s = standardize_and_split(&ds, &SplitSpec::new(0.25, 3).unwrap()).unwrap();
        let init_rows = &s.order[..s.init.len()];
        let ys: Vec<f64> = init_rows.iter().map(|&r| ds.labels[r]).collect();
        let (m, sd) = mean_std(&ys);
        assert_eq!(s.scaler.label_mean, m);
        assert_eq!(s.scaler.label_std, sd);
        // stream rows were transformed with the same parameters
        let r = s.order[s.init.len()];
        assert!((s.stream.labels[0] - (ds.labels[r] - m) / sd).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let mut ds = generate_linear(20, 0).unwrap();
        for i in 0..20 {
            ds.features[(i, 1)] = 4.0;
        }
        let err = standardize_and_split(&ds, &SplitSpec::new(0.5, 0).unwrap()).unwrap_err();
        assert!(format!("{}", err).contains("x2"));
    }

    #[test]
    fn split_spec_validation() {
        assert!(SplitSpec::new(0.0, 0).is_err());
        assert!(SplitSpec::new(1.0, 0).is_err());
        assert_eq!(SplitSpec::new(0.3, 0).unwrap().init_size(1500), 450);
    }

    #[test]
    fn subsample_is_deterministic() {
        let ds = generate_linear(200, 0).unwrap();
        assert_eq!(ds.subsample(200, 1).unwrap(), ds);
        let a = ds.subsample(100, 7).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, ds.subsample(100, 7).unwrap());
    }
}
