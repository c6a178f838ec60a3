//! Conformal post-processing of Gaussian predictives.
//!
//! The nonconformity score is the negative predictive log-likelihood (NPLL)
//! of the fused Gaussian. A prediction set is the sublevel set
//! `{y : s(y) <= q}`, which for a Gaussian is a symmetric interval (or empty).
//! In online mode the threshold follows
//! `q ← q − η (α − 1[s(y) > q])` after every revealed label.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid_arg, Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CpMode {
    /// Online threshold adaptation.
    Ocp,
    /// Threshold frozen at its initial value.
    FixedCp,
    /// Bayes credible interval `mean ± z_β σ`, no conformal threshold.
    Bcs,
}

impl fmt::Display for CpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CpMode::Ocp => "OCP",
            CpMode::FixedCp => "CP",
            CpMode::Bcs => "BCS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionSet {
    pub lower: f64,
    pub upper: f64,
    pub empty: bool,
}

impl PredictionSet {
    pub fn interval(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper);
        Self {
            lower,
            upper,
            empty: false,
        }
    }

    pub fn empty() -> Self {
        Self {
            lower: f64::NAN,
            upper: f64::NAN,
            empty: true,
        }
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        !self.empty && self.lower <= y && y <= self.upper
    }
}

/// `½ log(2π var) + (y − mean)² / (2 var)`.
pub fn npll_score(mean: f64, var: f64, y: f64) -> Result<f64> {
    check_var(var)?;
    let r = y - mean;
    Ok(0.5 * (LN_2PI + libm::log(var)) + r * r / (2.0 * var))
}

/// The sublevel set `{y : npll_score(mean, var, y) <= q}`.
pub fn invert_to_interval(mean: f64, var: f64, q: f64) -> Result<PredictionSet> {
    check_var(var)?;
    let disc = 2.0 * q - (LN_2PI + libm::log(var));
    if disc < 0.0 || disc.is_nan() {
        return Ok(PredictionSet::empty());
    }
    let r = libm::sqrt(var * disc);
    Ok(PredictionSet::interval(mean - r, mean + r))
}

/// Credible interval `mean ± z_β √var`. `z_β = 2` at `β = 0.95`; the exact
/// two-sided normal quantile otherwise.
pub fn bcs_interval(mean: f64, var: f64, credibility: f64) -> Result<PredictionSet> {
    check_var(var)?;
    let z = credible_z(credibility)?;
    let half = z * libm::sqrt(var);
    Ok(PredictionSet::interval(mean - half, mean + half))
}

/// Two-sided standard-normal multiplier for credibility `β`.
pub fn credible_z(credibility: f64) -> Result<f64> {
    if !(credibility > 0.0 && credibility < 1.0) {
        return Err(invalid_arg!("credibility must lie in (0, 1), got {}", credibility));
    }
    if credibility == 0.95 {
        return Ok(2.0);
    }
    Ok(normal_quantile(0.5 * (1.0 + credibility)))
}

/// Standard-normal quantile function for `p` in (0, 1).
///
/// Acklam's rational approximation followed by one Halley step against
/// `erfc`, which brings it to full double precision.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    let p_low = 0.024_25;
    let x = if p < p_low {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * libm::sqrt(2.0 * core::f64::consts::PI) * libm::exp(x * x / 2.0);
    x - u / (1.0 + x * u / 2.0)
}

/// Split-conformal threshold: the `⌈(1−α)(n+1)⌉`-th smallest score, or the
/// largest score when that rank exceeds `n`.
pub fn init_threshold(scores: &[f64], miscoverage: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(invalid_arg!("cannot initialise a threshold from zero scores"));
    }
    check_alpha(miscoverage)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid_arg!("calibration scores must be finite"));
    }
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    // guard against (1-α)(n+1) landing a hair above an integer
    let rank = libm::ceil((1.0 - miscoverage) * (n as f64 + 1.0) - 1e-9) as usize;
    let rank = rank.clamp(1, n);
    Ok(sorted[rank - 1])
}

fn check_var(var: f64) -> Result<()> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(invalid_arg!("predictive variance must be positive and finite, got {}", var));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid_arg!("miscoverage level must lie in (0, 1), got {}", alpha));
    }
    Ok(())
}

/// Running coverage/width accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoverageStats {
    pub steps: u64,
    pub covered: u64,
    pub total_width: f64,
    pub empty: u64,
}

impl CoverageStats {
    fn record_coverage(&mut self, covered: bool) {
        self.steps += 1;
        self.covered += u64::from(covered);
    }

    fn record_set(&mut self, set: &PredictionSet) {
        self.total_width += set.width();
        self.empty += u64::from(set.empty);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub coverage: f64,
    pub mean_width: f64,
    pub empty_rate: f64,
}

/// Result of one predict → reveal → update step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub set: PredictionSet,
    pub score: f64,
    /// Threshold the set was built from (before any update).
    pub threshold: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalState {
    threshold: f64,
    rate: f64,
    miscoverage: f64,
    credibility: f64,
    mode: CpMode,
    clamp_bound: Option<f64>,
    stats: CoverageStats,
}

impl ConformalState {
    /// `rate` is ignored outside [`CpMode::Ocp`]; `threshold` is ignored by
    /// [`CpMode::Bcs`]. BCS credibility defaults to `1 − α`.
    pub fn new(mode: CpMode, miscoverage: f64, rate: f64, threshold: f64) -> Result<Self> {
        check_alpha(miscoverage)?;
        if mode == CpMode::Ocp && !(rate >= 0.0 && rate.is_finite()) {
            return Err(invalid_arg!("learning rate must be finite and nonnegative, got {}", rate));
        }
        if mode != CpMode::Bcs && !threshold.is_finite() {
            return Err(invalid_arg!("initial threshold must be finite, got {}", threshold));
        }
        Ok(Self {
            threshold,
            rate,
            miscoverage,
            credibility: 1.0 - miscoverage,
            mode,
            clamp_bound: None,
            stats: CoverageStats::default(),
        })
    }

    pub fn with_credibility(mut self, credibility: f64) -> Result<Self> {
        credible_z(credibility)?;
        self.credibility = credibility;
        Ok(self)
    }

    /// Clamps revealed scores to `[0, bound]` (the initial threshold too).
    /// The threshold is left to move freely afterwards; it then stays within
    /// `[−ηα, bound + η(1 − α)]` on its own.
    pub fn with_clamp_bound(mut self, bound: f64) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(invalid_arg!("clamp bound must be finite and nonnegative, got {}", bound));
        }
        self.clamp_bound = Some(bound);
        self.threshold = self.threshold.clamp(0.0, bound);
        Ok(self)
    }

    pub fn mode(&self) -> CpMode {
        self.mode
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn miscoverage(&self) -> f64 {
        self.miscoverage
    }

    pub fn credibility(&self) -> f64 {
        self.credibility
    }

    pub fn clamp_bound(&self) -> Option<f64> {
        self.clamp_bound
    }

    pub fn stats(&self) -> &CoverageStats {
        &self.stats
    }

    fn clamp_score(&self, score: f64) -> f64 {
        match self.clamp_bound {
            Some(b) => score.clamp(0.0, b),
            None => score,
        }
    }

    /// The set this state would emit for a fused `(mean, var)`.
    pub fn prediction_set(&self, mean: f64, var: f64) -> Result<PredictionSet> {
        match self.mode {
            CpMode::Ocp | CpMode::FixedCp => invert_to_interval(mean, var, self.threshold),
            CpMode::Bcs => bcs_interval(mean, var, self.credibility),
        }
    }

    /// Online threshold step for a revealed score. Returns whether the score
    /// was covered by the threshold in force before the step.
    pub fn ocp_update(&mut self, score: f64) -> Result<bool> {
        if self.mode != CpMode::Ocp {
            return Err(Error::InvalidState(alloc::format!(
                "threshold updates need OCP mode, state is {}",
                self.mode
            )));
        }
        if score.is_nan() {
            return Err(invalid_arg!("score is NaN"));
        }
        let score = self.clamp_score(score);
        let miscovered = score > self.threshold;
        let err = if miscovered { 1.0 } else { 0.0 };
        self.threshold -= self.rate * (self.miscoverage - err);
        self.stats.record_coverage(!miscovered);
        Ok(!miscovered)
    }

    /// Emits the set for `(mean, var)`, reveals `y`, records coverage and
    /// width, and (OCP only) moves the threshold.
    pub fn observe(&mut self, mean: f64, var: f64, y: f64) -> Result<StepOutcome> {
        if !y.is_finite() {
            return Err(invalid_arg!("revealed label must be finite, got {}", y));
        }
        let set = self.prediction_set(mean, var)?;
        let score = npll_score(mean, var, y)?;
        let threshold = self.threshold;
        let covered = match self.mode {
            CpMode::Ocp => self.ocp_update(score)?,
            CpMode::FixedCp => {
                let covered = self.clamp_score(score) <= threshold;
                self.stats.record_coverage(covered);
                covered
            }
            CpMode::Bcs => {
                let covered = set.contains(y);
                self.stats.record_coverage(covered);
                covered
            }
        };
        self.stats.record_set(&set);
        Ok(StepOutcome {
            set,
            score,
            threshold,
            covered,
        })
    }

    pub fn coverage_report(&self) -> Result<CoverageReport> {
        let s = &self.stats;
        if s.steps == 0 {
            return Err(Error::InvalidState("no steps recorded yet".into()));
        }
        let n = s.steps as f64;
        Ok(CoverageReport {
            coverage: s.covered as f64 / n,
            mean_width: s.total_width / n,
            empty_rate: s.empty as f64 / n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn npll_values() {
        assert!((npll_score(0.0, 1.0, 0.0).unwrap() - 0.918_938_533_204_672_7).abs() < 1e-15);
        assert!(npll_score(2.0, 1.0 / (2.0 * PI), 2.0).unwrap().abs() < 1e-15);
        assert!(npll_score(0.0, 1.0, 0.1).unwrap() > npll_score(0.0, 1.0, 0.0).unwrap());
        assert!(npll_score(0.0, 0.0, 0.0).is_err());
        assert!(npll_score(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn inversion_cases() {
        let v = 1.0 / (2.0 * PI);
        let s = invert_to_interval(1.0, v, 0.0).unwrap();
        assert!(!s.empty);
        assert!(s.width().abs() < 1e-15);
        let s = invert_to_interval(0.0, v, 1.0).unwrap();
        assert!((s.width() - 2.0 * (2.0 / (2.0 * PI)).sqrt()).abs() < 1e-12);
        assert!((s.width() - 1.128_379_167).abs() < 1e-8);
        let s = invert_to_interval(0.0, 1.0, 0.0).unwrap();
        assert!(s.empty);
        assert_eq!(s.width(), 0.0);
        assert!(!s.contains(0.0));
        assert!(invert_to_interval(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn bcs_cases() {
        let s = bcs_interval(0.0, 1.0, 0.95).unwrap();
        assert_eq!((s.lower, s.upper), (-2.0, 2.0));
        let s = bcs_interval(3.0, 4.0, 0.95).unwrap();
        assert_eq!((s.lower, s.upper), (-1.0, 7.0));
        let s = bcs_interval(0.0, 1.0, 0.9).unwrap();
        assert!((s.upper - 1.644_853_626_951_472_2).abs() < 1e-12);
        let half = bcs_interval(0.0, 0.25, 0.9).unwrap();
        assert!((half.width() - 0.5 * s.width()).abs() < 1e-14);
        assert!(bcs_interval(0.0, 1.0, 1.0).is_err());
        assert!(bcs_interval(0.0, 0.0, 0.9).is_err());
    }

    #[test]
    fn normal_quantile_reference_values() {
        assert_eq!(normal_quantile(0.5), 0.0);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.01) + 2.326_347_874_040_841).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-9);
    }

    #[test]
    fn ocp_step_examples() {
        let mut st = ConformalState::new(CpMode::Ocp, 0.1, 0.01, 1.0).unwrap();
        assert!(!st.ocp_update(2.0).unwrap());
        assert!((st.threshold() - 1.009).abs() < 1e-15);
        let mut st = ConformalState::new(CpMode::Ocp, 0.1, 0.01, 1.0).unwrap();
        assert!(st.ocp_update(0.5).unwrap());
        assert!((st.threshold() - 0.999).abs() < 1e-15);
        let mut st = ConformalState::new(CpMode::Ocp, 0.1, 0.0, 1.0).unwrap();
        for s in [5.0, -1.0, 0.3, 9.0] {
            st.ocp_update(s).unwrap();
            assert_eq!(st.threshold(), 1.0);
        }
    }

    #[test]
    fn ocp_update_needs_ocp_mode() {
        let mut st = ConformalState::new(CpMode::FixedCp, 0.1, 0.01, 1.0).unwrap();
        assert!(matches!(st.ocp_update(1.0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn clamped_scores_keep_threshold_in_band() {
        let (eta, alpha, b) = (0.5, 0.1, 1.0);
        let mut st = ConformalState::new(CpMode::Ocp, alpha, eta, 3.0)
            .unwrap()
            .with_clamp_bound(b)
            .unwrap();
        assert_eq!(st.threshold(), 1.0);
        let band = -eta * alpha..=b + eta * (1.0 - alpha);
        for s in [-3.0, -3.0, -3.0, 30.0, 30.0, 30.0, 30.0, 0.5, -1.0, 30.0] {
            st.ocp_update(s).unwrap();
            assert!(band.contains(&st.threshold()), "{}", st.threshold());
        }
    }

    #[test]
    fn init_threshold_ranks() {
        let s: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(init_threshold(&s, 0.1).unwrap(), 10.0);
        assert_eq!(init_threshold(&[5.0], 0.1).unwrap(), 5.0);
        assert_eq!(init_threshold(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        // rank 19 of 20 at alpha = 0.1 would be ceil(0.9 * 21) = 19
        let s: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(init_threshold(&s, 0.1).unwrap(), 19.0);
        assert!(init_threshold(&[], 0.1).is_err());
        assert!(init_threshold(&[1.0], 0.0).is_err());
    }

    #[test]
    fn coverage_report_counts() {
        let mut st = ConformalState::new(CpMode::Ocp, 0.1, 0.01, 1.0).unwrap();
        assert!(matches!(st.coverage_report(), Err(Error::InvalidState(_))));
        for i in 0..10 {
            st.ocp_update(if i == 0 { 100.0 } else { -100.0 }).unwrap();
        }
        assert!((st.coverage_report().unwrap().coverage - 0.9).abs() < 1e-15);

        let mut st = ConformalState::new(CpMode::FixedCp, 0.1, 0.0, -10.0).unwrap();
        for _ in 0..4 {
            let out = st.observe(0.0, 1.0, 0.0).unwrap();
            assert!(out.set.empty && !out.covered);
        }
        let r = st.coverage_report().unwrap();
        assert_eq!((r.coverage, r.mean_width, r.empty_rate), (0.0, 0.0, 1.0));
    }

    #[test]
    fn observe_matches_hand_recount() {
        let steps = vec![(0.0, 1.0, 0.5), (1.0, 0.5, 3.0), (-1.0, 2.0, -1.2), (0.0, 0.1, 0.0)];
        let mut st = ConformalState::new(CpMode::FixedCp, 0.1, 0.0, 1.2).unwrap();
        let (mut covered, mut width) = (0u32, 0.0);
        for &(m, v, y) in &steps {
            st.observe(m, v, y).unwrap();
            let set = invert_to_interval(m, v, 1.2).unwrap();
            if set.contains(y) {
                covered += 1;
            }
            width += set.width();
        }
        let r = st.coverage_report().unwrap();
        assert_eq!(r.coverage, f64::from(covered) / 4.0);
        assert!((r.mean_width - width / 4.0).abs() < 1e-15);
    }

    #[test]
    fn bcs_observe_uses_interval_membership() {
        let mut st = ConformalState::new(CpMode::Bcs, 0.05, 0.0, f64::NAN).unwrap();
        assert!(st.observe(0.0, 1.0, 1.9).unwrap().covered);
        assert!(!st.observe(0.0, 1.0, 2.1).unwrap().covered);
        assert_eq!(st.threshold().is_nan(), true);
        assert!((st.coverage_report().unwrap().mean_width - 4.0).abs() < 1e-15);
    }
}
