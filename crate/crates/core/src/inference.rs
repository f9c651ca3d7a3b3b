//! Confidence intervals for the optimal value of a stochastic program.

use std::fmt;

use crate::divergences::DivergenceSpec;
use crate::error::{Error, Result};
use crate::inner::{best_case_mean, UncertaintyBudget};
use crate::outer::{solve_robust_from, solve_saa, Solution, SolveConfig};
use crate::problems::{LossModel, Sample};
use crate::stats::{chi_square_quantile, mean_var, normal_quantile, student_t_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    ElTwoSided,
    ElOneSidedUpper,
    Normal,
    Sectioned,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ElTwoSided => "el-two-sided",
            Method::ElOneSidedUpper => "el-one-sided-upper",
            Method::Normal => "normal",
            Method::Sectioned => "sectioned",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceInterval {
    /// `-inf` for one-sided upper bounds.
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub method: Method,
    /// Ball size used; `NaN` for the normal interval.
    pub rho_used: f64,
    /// Whether every optimization behind the endpoints met its tolerance.
    pub converged: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Radius used for the robust value on each section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockRadius {
    /// `rho / n`, scaled by the full sample size.
    #[default]
    FullSample,
    /// `rho / b`, scaled by the block length.
    BlockLength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectioningConfig {
    pub sections: usize,
    pub block_radius: BlockRadius,
    /// Overrides `chi2_{1, 1 - alpha}` when set.
    pub rho: Option<f64>,
}

impl SectioningConfig {
    pub fn new(sections: usize) -> Self {
        Self {
            sections,
            block_radius: BlockRadius::default(),
            rho: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats {
    pub m: usize,
    pub b: usize,
    pub block_upper_bounds: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the block bounds (`1/(m-1)` convention).
    pub spread: f64,
    /// `sqrt((rho / b) * var)` of the full-sample losses at the SAA solution.
    pub pivot_correction: f64,
}

fn check_alpha(alpha: f64, upper: f64) -> Result<()> {
    if alpha > 0.0 && alpha < upper {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, {upper}), got {alpha}")))
    }
}

/// `chi2_{1, 1 - alpha}`, the two-sided calibration.
pub fn two_sided_rho(alpha: f64) -> Result<f64> {
    check_alpha(alpha, 1.0)?;
    chi_square_quantile(1, 1.0 - alpha)
}

/// `chi2_{1, 1 - 2 alpha}`, the one-sided calibration.
pub fn one_sided_rho(alpha: f64) -> Result<f64> {
    check_alpha(alpha, 0.5)?;
    chi_square_quantile(1, 1.0 - 2.0 * alpha)
}

fn losses_at(model: &dyn LossModel, sample: &Sample, x: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(sample.len());
    model.losses(x, sample, &mut z);
    z
}

fn robust_upper(
    model: &dyn LossModel,
    sample: &Sample,
    rho: f64,
    div: &DivergenceSpec,
    cfg: &SolveConfig,
    warm: &Solution,
) -> Result<Solution> {
    let budget = UncertaintyBudget::new(rho, sample.len())?;
    let (sol, _) = solve_robust_from(model, sample, div, &budget, cfg, Some(&warm.x))?;
    Ok(sol)
}

/// Empirical value at the better of the two solutions, which keeps the
/// lower endpoint below the upper one.
fn plug_in_point<'a>(
    model: &dyn LossModel,
    sample: &Sample,
    saa: &'a Solution,
    robust: &'a Solution,
) -> (&'a [f64], bool) {
    let mean = |x: &[f64]| losses_at(model, sample, x).iter().sum::<f64>() / sample.len() as f64;
    if mean(&robust.x) < saa.value {
        (&robust.x, robust.converged)
    } else {
        (&saa.x, saa.converged)
    }
}

fn two_sided_from(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    rho: f64,
    div: &DivergenceSpec,
    cfg: &SolveConfig,
    saa: &Solution,
) -> Result<ConfidenceInterval> {
    let robust = robust_upper(model, sample, rho, div, cfg, saa)?;
    let (x_hat, x_conv) = plug_in_point(model, sample, saa, &robust);
    let budget = UncertaintyBudget::new(rho, sample.len())?;
    let lower = best_case_mean(&losses_at(model, sample, x_hat), div, &budget)?.value;
    Ok(ConfidenceInterval {
        lower: lower.min(robust.value),
        upper: robust.value,
        alpha,
        method: Method::ElTwoSided,
        rho_used: rho,
        converged: robust.converged && x_conv,
    })
}

fn one_sided_from(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    rho: f64,
    div: &DivergenceSpec,
    cfg: &SolveConfig,
    saa: &Solution,
) -> Result<ConfidenceInterval> {
    let robust = robust_upper(model, sample, rho, div, cfg, saa)?;
    Ok(ConfidenceInterval {
        lower: f64::NEG_INFINITY,
        upper: robust.value,
        alpha,
        method: Method::ElOneSidedUpper,
        rho_used: rho,
        converged: robust.converged,
    })
}

fn normal_from(model: &dyn LossModel, sample: &Sample, alpha: f64, saa: &Solution) -> Result<ConfidenceInterval> {
    check_alpha(alpha, 1.0)?;
    let (_, var) = mean_var(&losses_at(model, sample, &saa.x));
    let half = normal_quantile(1.0 - 0.5 * alpha)? * (var / sample.len() as f64).sqrt();
    Ok(ConfidenceInterval {
        lower: saa.value - half,
        upper: saa.value + half,
        alpha,
        method: Method::Normal,
        rho_used: f64::NAN,
        converged: saa.converged,
    })
}

/// Two-sided interval `[l_n, u_n]` with `rho = chi2_{1, 1 - alpha}`. The
/// upper end is the robust optimal value; the lower end is the best-case
/// reweighting of the losses at the empirical minimizer.
pub fn two_sided_interval(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    div: &DivergenceSpec,
    cfg: &SolveConfig,
) -> Result<ConfidenceInterval> {
    two_sided_interval_with_rho(model, sample, alpha, two_sided_rho(alpha)?, div, cfg)
}

pub fn two_sided_interval_with_rho(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    rho: f64,
    div: &DivergenceSpec,
    cfg: &SolveConfig,
) -> Result<ConfidenceInterval> {
    let saa = solve_saa(model, sample, cfg)?;
    two_sided_from(model, sample, alpha, rho, div, cfg, &saa)
}

/// One-sided bound `(-inf, u_n]` with `rho = chi2_{1, 1 - 2 alpha}`.
pub fn one_sided_upper(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    div: &DivergenceSpec,
    cfg: &SolveConfig,
) -> Result<ConfidenceInterval> {
    one_sided_upper_with_rho(model, sample, alpha, one_sided_rho(alpha)?, div, cfg)
}

pub fn one_sided_upper_with_rho(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    rho: f64,
    div: &DivergenceSpec,
    cfg: &SolveConfig,
) -> Result<ConfidenceInterval> {
    let saa = solve_saa(model, sample, cfg)?;
    one_sided_from(model, sample, alpha, rho, div, cfg, &saa)
}

/// SAA value plus or minus `z_{1 - alpha/2} * sqrt(var / n)`.
pub fn normal_interval(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    cfg: &SolveConfig,
) -> Result<ConfidenceInterval> {
    let saa = solve_saa(model, sample, cfg)?;
    normal_from(model, sample, alpha, &saa)
}

/// Which intervals `interval_suite` builds, and the ball sizes to use.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub alpha: f64,
    /// Overrides both calibrated ball sizes when set.
    pub rho: Option<f64>,
    pub two_sided: bool,
    pub one_sided: bool,
    pub normal: bool,
}

impl SuiteConfig {
    pub fn all(alpha: f64) -> Self {
        Self {
            alpha,
            rho: None,
            two_sided: true,
            one_sided: true,
            normal: true,
        }
    }
}

/// The selected intervals from one shared empirical solve, in the order
/// two-sided, one-sided, normal.
pub fn interval_suite(
    model: &dyn LossModel,
    sample: &Sample,
    div: &DivergenceSpec,
    suite: &SuiteConfig,
    cfg: &SolveConfig,
) -> Result<Vec<ConfidenceInterval>> {
    let alpha = suite.alpha;
    check_alpha(alpha, 1.0)?;
    let saa = solve_saa(model, sample, cfg)?;
    let mut out = Vec::new();
    if suite.two_sided {
        let rho = match suite.rho {
            Some(r) => r,
            None => two_sided_rho(alpha)?,
        };
        out.push(two_sided_from(model, sample, alpha, rho, div, cfg, &saa)?);
    }
    if suite.one_sided {
        let rho = match suite.rho {
            Some(r) => r,
            None => one_sided_rho(alpha)?,
        };
        out.push(one_sided_from(model, sample, alpha, rho, div, cfg, &saa)?);
    }
    if suite.normal {
        out.push(normal_from(model, sample, alpha, &saa)?);
    }
    Ok(out)
}

/// One-sided upper bound for dependent data. The first `m * b` scenarios
/// are cut into `m` contiguous blocks of length `b = n / m`; each block's
/// robust value `U_j` is computed, and the bound is
/// `mean(U) - sqrt((rho / b) var) + s_m t_{m-1, 1-alpha}`, with `var` the
/// full-sample loss variance at the empirical minimizer.
pub fn sectioned_upper_bound(
    model: &dyn LossModel,
    sample: &Sample,
    alpha: f64,
    div: &DivergenceSpec,
    sec: &SectioningConfig,
    cfg: &SolveConfig,
) -> Result<(ConfidenceInterval, BlockStats)> {
    check_alpha(alpha, 1.0)?;
    let (n, m) = (sample.len(), sec.sections);
    if m < 2 {
        return Err(Error::invalid(format!("sectioning needs at least 2 sections, got {m}")));
    }
    if n < 2 * m {
        return Err(Error::invalid(format!(
            "sectioning {n} scenarios into {m} blocks leaves fewer than 2 per block"
        )));
    }
    let rho = match sec.rho {
        Some(r) => r,
        None => two_sided_rho(alpha)?,
    };
    let b = n / m;
    let block_rho = match sec.block_radius {
        BlockRadius::FullSample => rho * b as f64 / n as f64,
        BlockRadius::BlockLength => rho,
    };
    let budget = UncertaintyBudget::new(block_rho, b)?;
    let mut uppers = Vec::with_capacity(m);
    let mut converged = true;
    for j in 0..m {
        let block = sample.slice(j * b, (j + 1) * b)?;
        let saa = solve_saa(model, &block, cfg)?;
        let (sol, u) = solve_robust_from(model, &block, div, &budget, cfg, Some(&saa.x))
            .map_err(|e| e.with_context(format!("section {j}")))?;
        converged &= sol.converged;
        uppers.push(u);
    }
    let saa = solve_saa(model, sample, cfg)?;
    converged &= saa.converged;
    let (_, var) = mean_var(&losses_at(model, sample, &saa.x));
    let mean = uppers.iter().sum::<f64>() / m as f64;
    let spread = (uppers.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
    let pivot_correction = (rho / b as f64 * var).sqrt();
    let t = student_t_quantile((m - 1) as u32, 1.0 - alpha)?;
    let bound = mean - pivot_correction + spread * t;
    let ci = ConfidenceInterval {
        lower: f64::NEG_INFINITY,
        upper: bound,
        alpha,
        method: Method::Sectioned,
        rho_used: rho,
        converged,
    };
    let stats = BlockStats {
        m,
        b,
        block_upper_bounds: uppers,
        mean,
        spread,
        pivot_correction,
    };
    Ok((ci, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Cvar, Portfolio};

    fn forced() -> Portfolio {
        Portfolio::new(1, 0.0, 2.0).unwrap()
    }

    #[test]
    fn calibration_constants() {
        assert!((two_sided_rho(0.05).unwrap() - 3.841459).abs() < 1e-6);
        assert!((one_sided_rho(0.05).unwrap() - 2.705543).abs() < 1e-6);
        assert!(one_sided_rho(0.5).is_err());
        assert!(two_sided_rho(0.0).is_err());
    }

    #[test]
    fn forced_decision_is_symmetric() {
        let s = Sample::scalar(vec![1.0, 2.0, 3.0]).unwrap();
        let cfg = SolveConfig::default();
        let ci = two_sided_interval_with_rho(&forced(), &s, 0.05, 0.3, &DivergenceSpec::chi_square(), &cfg).unwrap();
        let half = (0.3f64 * (2.0 / 3.0) / 3.0).sqrt();
        assert!((ci.lower - (2.0 - half)).abs() < 1e-12);
        assert!((ci.upper - (2.0 + half)).abs() < 1e-12);
        assert!(ci.converged);
    }

    #[test]
    fn deterministic_losses_collapse() {
        let s = Sample::scalar(vec![1.5; 6]).unwrap();
        let cfg = SolveConfig::default();
        let div = DivergenceSpec::chi_square();
        for ci in interval_suite(&forced(), &s, &div, &SuiteConfig::all(0.05), &cfg).unwrap() {
            assert_eq!(ci.upper, 1.5, "{}", ci.method);
            if ci.lower.is_finite() {
                assert_eq!(ci.lower, 1.5);
            }
        }
    }

    #[test]
    fn normal_matches_el_when_unclamped() {
        let s = Sample::scalar((0..20).map(|i| ((i * 37) % 20) as f64 / 10.0).collect()).unwrap();
        let cfg = SolveConfig::default();
        let el = two_sided_interval(&forced(), &s, 0.05, &DivergenceSpec::chi_square(), &cfg).unwrap();
        let normal = normal_interval(&forced(), &s, 0.05, &cfg).unwrap();
        assert!((el.width() - normal.width()).abs() < 1e-6);
        let (m, v) = mean_var(s.as_flat());
        assert!((normal.upper - (m + 1.959964 * (v / 20.0).sqrt())).abs() < 1e-6);
    }

    #[test]
    fn one_sided_below_two_sided() {
        let s = Sample::scalar(vec![2.0, -1.0, 0.5, 3.0, 0.1]).unwrap();
        let m = Cvar::new(0.6).unwrap();
        let cfg = SolveConfig::default();
        let div = DivergenceSpec::chi_square();
        let two = two_sided_interval(&m, &s, 0.05, &div, &cfg).unwrap();
        let one = one_sided_upper(&m, &s, 0.05, &div, &cfg).unwrap();
        assert!(one.upper <= two.upper + 1e-7);
        assert!(two.lower <= two.upper);
        assert_eq!(one.lower, f64::NEG_INFINITY);
    }

    #[test]
    fn sectioning_constant_data() {
        let s = Sample::scalar(vec![0.75; 40]).unwrap();
        let (ci, st) = sectioned_upper_bound(
            &forced(),
            &s,
            0.05,
            &DivergenceSpec::chi_square(),
            &SectioningConfig::new(4),
            &SolveConfig::default(),
        )
        .unwrap();
        assert_eq!(ci.upper, 0.75);
        assert_eq!(st.spread, 0.0);
        assert_eq!(st.pivot_correction, 0.0);
        assert_eq!(st.b, 10);
    }

    #[test]
    fn sectioning_matches_hand_rolled_blocks() {
        let data: Vec<f64> = (0..23).map(|i| ((i * 7919) % 31) as f64 / 10.0).collect();
        let s = Sample::scalar(data.clone()).unwrap();
        let rho = 3.0;
        let sec = SectioningConfig {
            sections: 3,
            block_radius: BlockRadius::FullSample,
            rho: Some(rho),
        };
        let (ci, st) = sectioned_upper_bound(
            &forced(),
            &s,
            0.05,
            &DivergenceSpec::chi_square(),
            &sec,
            &SolveConfig::default(),
        )
        .unwrap();
        // blocks of 7, radius rho / 23; unclamped chi-square closed form per block
        let mut us = Vec::new();
        for j in 0..3 {
            let (m, v) = mean_var(&data[7 * j..7 * j + 7]);
            us.push(m + (rho / 23.0 * v).sqrt());
        }
        let mean = us.iter().sum::<f64>() / 3.0;
        let sd = (us.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        let (_, var) = mean_var(&data);
        let t = student_t_quantile(2, 0.95).unwrap();
        let expect = mean - (rho / 7.0 * var).sqrt() + sd * t;
        for (a, b) in st.block_upper_bounds.iter().zip(&us) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((ci.upper - expect).abs() < 1e-12);
    }

    #[test]
    fn sectioning_rejects_small_samples() {
        let s = Sample::scalar(vec![1.0, 2.0, 3.0]).unwrap();
        let div = DivergenceSpec::chi_square();
        let cfg = SolveConfig::default();
        assert!(sectioned_upper_bound(&forced(), &s, 0.05, &div, &SectioningConfig::new(2), &cfg).is_err());
        assert!(sectioned_upper_bound(&forced(), &s, 0.05, &div, &SectioningConfig::new(1), &cfg).is_err());
    }
}
