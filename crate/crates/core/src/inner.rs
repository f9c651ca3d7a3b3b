//! Worst-case and best-case means of a fixed loss vector over the ball
//! `{ p : (1/n) sum_i f(n p_i) <= rho / n }` around the uniform weights.
//!
//! Three routes compute the same quantity:
//!
//! * [`worst_case_mean_dual`] minimizes the two-variable dual
//!   `lambda * mean f*((z - eta) / lambda) + lambda * rho / n + eta` with a
//!   golden-section search on `log lambda` wrapped around a safeguarded
//!   Newton/bisection solve for `eta`. Works for every family member.
//! * [`worst_case_mean_cressie_read`] minimizes the closed-form one-variable
//!   risk available for `k > 1`.
//! * [`worst_case_mean_chi2_exact`] solves the `k = 2` primal exactly by
//!   water-filling over the active set.
//!
//! [`worst_case_mean`] dispatches to the exact solver for chi-square and to
//! the dual otherwise.

use crate::divergences::DivergenceSpec;
use crate::error::{Error, Result};
use crate::stats::mean_var;

/// The `rho` of the ball together with the sample size it is scaled by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyBudget {
    rho: f64,
    n: usize,
}

impl UncertaintyBudget {
    pub fn new(rho: f64, n: usize) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::domain(format!("rho must be finite and nonnegative, got {rho}")));
        }
        if n == 0 {
            return Err(Error::domain("sample size must be positive"));
        }
        Ok(Self { rho, n })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `rho / n`, the bound on the divergence itself.
    pub fn radius(&self) -> f64 {
        self.rho / self.n as f64
    }
}

/// Result of an inner sup (or inf) together with its certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustEvaluation {
    pub value: f64,
    /// Dual multiplier on the divergence constraint.
    pub lambda: f64,
    /// Dual multiplier on the normalization constraint.
    pub eta: f64,
    /// Worst-case probability weights, in the order of the input.
    pub weights: Option<Vec<f64>>,
    /// `mean +/- sqrt(rho * var / n)`.
    pub expansion_value: f64,
    /// `sqrt(n) * |value - expansion_value|`.
    pub residual: f64,
}

/// Accuracy knobs of the dual solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualOptions {
    /// Target objective accuracy, relative to `1 + |mean|`.
    pub objective_tol: f64,
    /// Width of the final `log lambda` bracket.
    pub log_lambda_tol: f64,
    pub max_golden_iters: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self {
            objective_tol: 1e-8,
            log_lambda_tol: 1e-10,
            max_golden_iters: 200,
        }
    }
}

fn validate(z: &[f64], budget: &UncertaintyBudget) -> Result<()> {
    if z.is_empty() {
        return Err(Error::invalid("loss vector is empty"));
    }
    if budget.n() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: budget.n(),
            got: z.len(),
        });
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::domain(format!("loss vector contains non-finite value {bad}")));
    }
    Ok(())
}

fn min_max(z: &[f64]) -> (f64, f64) {
    z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

fn finish(
    value: f64,
    lambda: f64,
    eta: f64,
    weights: Option<Vec<f64>>,
    mean: f64,
    var: f64,
    budget: &UncertaintyBudget,
) -> RobustEvaluation {
    let expansion_value = mean + (budget.radius() * var).sqrt();
    RobustEvaluation {
        value,
        lambda,
        eta,
        weights,
        expansion_value,
        residual: (budget.n() as f64).sqrt() * (value - expansion_value).abs(),
    }
}

fn degenerate(mean: f64, var: f64, n: usize, budget: &UncertaintyBudget) -> RobustEvaluation {
    finish(mean, 0.0, mean, Some(vec![1.0 / n as f64; n]), mean, var, budget)
}

/// `(1/n) sum_i f(n p_i)`.
pub fn divergence_from_uniform(weights: &[f64], div: &DivergenceSpec) -> f64 {
    let n = weights.len() as f64;
    weights.iter().map(|&p| div.eval(n * p)).sum::<f64>() / n
}

/// Pulls `p` toward the uniform weights until it lies inside the ball.
fn repair_feasibility(p: &mut [f64], div: &DivergenceSpec, radius: f64) {
    for v in p.iter_mut() {
        *v = v.max(0.0);
    }
    let total: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= total;
    }
    if divergence_from_uniform(p, div) <= radius {
        return;
    }
    let n = p.len() as f64;
    let orig = p.to_vec();
    let mix = |theta: f64, out: &mut [f64]| {
        for (o, &q) in out.iter_mut().zip(&orig) {
            *o = (1.0 - theta) * q + theta / n;
        }
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        mix(mid, p);
        if divergence_from_uniform(p, div) <= radius {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    mix(hi, p);
}

/// State of the dual minimization for one loss vector.
struct DualProblem<'a> {
    z: &'a [f64],
    div: DivergenceSpec,
    radius: f64,
    zmin: f64,
    zmax: f64,
    eta_guess: f64,
}

impl DualProblem<'_> {
    /// Optimal `eta` and the dual objective at fixed `lambda > 0`.
    fn eval(&mut self, lambda: f64) -> (f64, f64) {
        let n = self.z.len() as f64;
        if let DivergenceSpec::KullbackLeibler = self.div {
            // mean exp((z - eta) / (2 lambda)) = 1 in closed form
            let t = 2.0 * lambda;
            let lse = self.z.iter().map(|&v| ((v - self.zmax) / t).exp()).sum::<f64>() / n;
            let eta = self.zmax + t * lse.ln();
            return (eta, eta + lambda * self.radius);
        }

        let bound = self.div.conj_domain_bound();
        let mut lo = self.zmin;
        if bound.is_finite() {
            lo = lo.max(self.zmax - lambda * bound);
        }
        let mut hi = self.zmax;
        let mut eta = self.eta_guess.clamp(lo, hi);
        if eta <= lo || eta >= hi {
            eta = 0.5 * (lo + hi);
        }
        for _ in 0..300 {
            let (mut phi, mut dphi) = (0.0, 0.0);
            for &v in self.z {
                let s = (v - eta) / lambda;
                phi += self.div.conj_derivative(s);
                dphi += self.div.conj_second_derivative(s);
            }
            phi = phi / n - 1.0;
            dphi = -dphi / (n * lambda);
            if phi == 0.0 {
                break;
            }
            if phi > 0.0 {
                lo = eta;
            } else {
                hi = eta;
            }
            let step = phi / dphi;
            let newton = eta - step;
            let next = if dphi < 0.0 && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            let scale = 1.0 + eta.abs();
            if hi - lo <= 1e-15 * scale || (next - eta).abs() <= 1e-15 * scale {
                eta = next;
                break;
            }
            eta = next;
        }
        self.eta_guess = eta;
        let mean_conj = self.z.iter().map(|&v| self.div.conj((v - eta) / lambda)).sum::<f64>() / n;
        (eta, lambda * mean_conj + eta + lambda * self.radius)
    }
}

/// Worst-case mean by minimizing the dual over `(lambda, eta)`.
pub fn worst_case_mean_dual(z: &[f64], div: &DivergenceSpec, budget: &UncertaintyBudget) -> Result<RobustEvaluation> {
    worst_case_mean_dual_with(z, div, budget, &DualOptions::default())
}

pub fn worst_case_mean_dual_with(
    z: &[f64],
    div: &DivergenceSpec,
    budget: &UncertaintyBudget,
    opts: &DualOptions,
) -> Result<RobustEvaluation> {
    validate(z, budget)?;
    let n = z.len();
    let (mean, var) = mean_var(z);
    let (zmin, zmax) = min_max(z);
    let radius = budget.radius();
    if radius == 0.0 || var == 0.0 || zmin == zmax {
        return Ok(degenerate(mean, var, n, budget));
    }

    let mut prob = DualProblem {
        z,
        div: *div,
        radius,
        zmin,
        zmax,
        eta_guess: mean,
    };
    let g = |log_lambda: f64, prob: &mut DualProblem| -> (f64, f64) {
        let (eta, v) = prob.eval(log_lambda.exp());
        (if v.is_nan() { f64::INFINITY } else { v }, eta)
    };

    // smooth-regime optimum of the chi-square dual
    let lambda0 = 0.5 * (var / radius).sqrt();
    let ln2 = std::f64::consts::LN_2;
    let mut b = lambda0.ln();
    let (mut gb, mut eb) = g(b, &mut prob);
    let mut c = b + ln2;
    let (mut gc, mut ec) = g(c, &mut prob);
    let mut grow = 0;
    while gc < gb {
        b = c;
        gb = gc;
        eb = ec;
        c += ln2;
        (gc, ec) = g(c, &mut prob);
        grow += 1;
        if grow > 2000 {
            return Err(Error::Solver("dual bracket on lambda did not close above".into()));
        }
    }
    let mut a = b - ln2;
    let (mut ga, mut ea) = g(a, &mut prob);
    let floor = b - 60.0;
    let mut at_boundary = false;
    while ga < gb {
        c = b;
        b = a;
        gb = ga;
        eb = ea;
        a -= ln2;
        if a < floor {
            at_boundary = true;
            break;
        }
        (ga, ea) = g(a, &mut prob);
    }
    let _ = (gc, ec);

    let (mut best_ll, mut best_g, mut best_eta) = (b, gb, eb);
    if !at_boundary {
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (a, c);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut g1, mut e1) = g(x1, &mut prob);
        let (mut g2, mut e2) = g(x2, &mut prob);
        for _ in 0..opts.max_golden_iters {
            if hi - lo <= opts.log_lambda_tol {
                break;
            }
            if g1 <= g2 {
                hi = x2;
                x2 = x1;
                g2 = g1;
                e2 = e1;
                x1 = hi - inv_phi * (hi - lo);
                (g1, e1) = g(x1, &mut prob);
            } else {
                lo = x1;
                x1 = x2;
                g1 = g2;
                e1 = e2;
                x2 = lo + inv_phi * (hi - lo);
                (g2, e2) = g(x2, &mut prob);
            }
        }
        for (ll, gv, ev) in [(x1, g1, e1), (x2, g2, e2)] {
            if gv < best_g {
                best_ll = ll;
                best_g = gv;
                best_eta = ev;
            }
        }
    }

    // lambda -> 0 is the perspective limit, whose value is max z
    let lambda = best_ll.exp();
    if at_boundary || best_g >= zmax {
        let top: Vec<usize> = (0..n).filter(|&i| z[i] == zmax).collect();
        let mut w = vec![0.0; n];
        for &i in &top {
            w[i] = 1.0 / top.len() as f64;
        }
        repair_feasibility(&mut w, div, radius);
        return Ok(finish(zmax, 0.0, zmax, Some(w), mean, var, budget));
    }
    if !best_g.is_finite() {
        return Err(Error::Solver(format!("dual objective is not finite ({best_g})")));
    }

    let mut w: Vec<f64> = z
        .iter()
        .map(|&v| div.conj_derivative((v - best_eta) / lambda))
        .collect();
    if w.iter().any(|v| !v.is_finite()) || w.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Solver("could not recover worst-case weights".into()));
    }
    repair_feasibility(&mut w, div, radius);
    let value = best_g.max(mean);
    Ok(finish(value, lambda, best_eta, Some(w), mean, var, budget))
}

/// Worst-case mean from the closed-form risk available for `k > 1`,
/// minimized over `eta` by golden section. Weights are not produced.
pub fn worst_case_mean_cressie_read(z: &[f64], k: f64, budget: &UncertaintyBudget) -> Result<RobustEvaluation> {
    if k.is_nan() || k <= 1.0 || !k.is_finite() {
        return Err(Error::domain(format!("closed-form risk needs k > 1, got {k}")));
    }
    validate(z, budget)?;
    let n = z.len();
    let (mean, var) = mean_var(z);
    let (zmin, zmax) = min_max(z);
    let radius = budget.radius();
    if radius == 0.0 || var == 0.0 || zmin == zmax {
        return Ok(degenerate(mean, var, n, budget));
    }
    let ks = k / (k - 1.0);
    let scale = (1.0 + 0.5 * k * (k - 1.0) * radius).powf(1.0 / k);
    let nf = n as f64;
    let risk = |eta: f64| -> f64 {
        let m = z.iter().map(|&v| (v - eta).max(0.0).powf(ks)).sum::<f64>() / nf;
        scale * m.powf(1.0 / ks) + eta
    };
    let slope = |eta: f64| -> f64 {
        let m = z.iter().map(|&v| (v - eta).max(0.0).powf(ks)).sum::<f64>() / nf;
        let m1 = z.iter().map(|&v| (v - eta).max(0.0).powf(ks - 1.0)).sum::<f64>() / nf;
        1.0 - scale * m.powf(1.0 / ks - 1.0) * m1
    };

    let range = zmax - zmin;
    let mut width = range;
    while slope(zmax - width) > 0.0 {
        width *= 2.0;
        if width > 1e12 * (range + zmax.abs()) {
            return Err(Error::Solver("closed-form risk bracket did not close".into()));
        }
    }
    let (mut lo, mut hi) = (zmax - width, zmax);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut r1, mut r2) = (risk(x1), risk(x2));
    let tol = 1e-13 * (1.0 + width + zmax.abs());
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        if r1 <= r2 {
            hi = x2;
            x2 = x1;
            r2 = r1;
            x1 = hi - inv_phi * (hi - lo);
            r1 = risk(x1);
        } else {
            lo = x1;
            x1 = x2;
            r1 = r2;
            x2 = lo + inv_phi * (hi - lo);
            r2 = risk(x2);
        }
    }
    let (eta, value) = if r1 <= r2 { (x1, r1) } else { (x2, r2) };
    let value = value.min(zmax).max(mean);
    Ok(finish(value, f64::NAN, eta, None, mean, var, budget))
}

/// Exact primal solution of the chi-square (`k = 2`) problem.
///
/// With `f(t) = (t - 1)^2` the ball is `||n p - 1||^2 <= rho`. When the
/// unclamped maximizer is nonnegative the value is exactly
/// `mean + sqrt(rho * var / n)`; otherwise the maximizer has the form
/// `p_i = (z_i - c)_+ / sum_j (z_j - c)_+` and the threshold `c` is solved
/// in closed form on each candidate active set.
pub fn worst_case_mean_chi2_exact(z: &[f64], budget: &UncertaintyBudget) -> Result<RobustEvaluation> {
    validate(z, budget)?;
    let n = z.len();
    let nf = n as f64;
    let (mean, var) = mean_var(z);
    let (zmin, zmax) = min_max(z);
    let radius = budget.radius();
    if radius == 0.0 || var == 0.0 || zmin == zmax {
        return Ok(degenerate(mean, var, n, budget));
    }
    let total = nf * radius; // the rho of ||n p - 1||^2 <= rho
    let sd = var.sqrt();

    if (mean - zmin) <= sd * (nf / total).sqrt() {
        let coef = total.sqrt() / (sd * nf.sqrt());
        let w: Vec<f64> = z.iter().map(|&v| ((1.0 + (v - mean) * coef) / nf).max(0.0)).collect();
        let value = mean + (radius * var).sqrt();
        let lambda = 0.5 * (var / radius).sqrt();
        return Ok(finish(value, lambda, mean, Some(w), mean, var, budget));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| z[i]).collect();

    let ties = sorted.iter().take_while(|&&v| v == zmax).count();
    let tf = ties as f64;
    if nf * nf / tf - nf <= total {
        let mut w = vec![0.0; n];
        for &i in &order[..ties] {
            w[i] = 1.0 / tf;
        }
        return Ok(finish(zmax, 0.0, zmax, Some(w), mean, var, budget));
    }

    let target = (total + nf) / (nf * nf);
    let (mut m_a, mut v_a) = (0.0f64, 0.0f64); // running mean and sum of squares of the active set
    for j in 1..=n {
        let x = sorted[j - 1];
        let jf = j as f64;
        let delta = x - m_a;
        m_a += delta / jf;
        v_a += delta * (x - m_a);
        if j < n && sorted[j] == x {
            continue;
        }
        let denom = target - 1.0 / jf;
        if denom <= 0.0 || v_a <= 0.0 {
            continue;
        }
        let d = (v_a / denom).sqrt();
        let c = m_a - d / jf;
        let upper_ok = c < x;
        let lower_ok = j == n || c >= sorted[j];
        if upper_ok && lower_ok {
            let value = m_a + v_a / d;
            let mut w = vec![0.0; n];
            for &i in &order[..j] {
                w[i] = (z[i] - c) / d;
            }
            let lambda = d / (2.0 * nf);
            let eta = d / nf + c;
            return Ok(finish(value, lambda, eta, Some(w), mean, var, budget));
        }
    }
    // numerical corner: fall back to the dual
    worst_case_mean_dual(z, &DivergenceSpec::chi_square(), budget)
}

/// Exact solver for chi-square, dual for every other member.
pub fn worst_case_mean(z: &[f64], div: &DivergenceSpec, budget: &UncertaintyBudget) -> Result<RobustEvaluation> {
    if div.is_chi_square() {
        worst_case_mean_chi2_exact(z, budget)
    } else {
        worst_case_mean_dual(z, div, budget)
    }
}

/// Infimum over the ball, via `inf E_P[z] = -sup E_P[-z]`.
pub fn best_case_mean(z: &[f64], div: &DivergenceSpec, budget: &UncertaintyBudget) -> Result<RobustEvaluation> {
    let neg: Vec<f64> = z.iter().map(|v| -v).collect();
    let sup = worst_case_mean(&neg, div, budget)?;
    let (mean, var) = mean_var(z);
    let expansion_value = mean - (budget.radius() * var).sqrt();
    let value = -sup.value;
    Ok(RobustEvaluation {
        value,
        lambda: sup.lambda,
        eta: -sup.eta,
        weights: sup.weights,
        expansion_value,
        residual: (budget.n() as f64).sqrt() * (value - expansion_value).abs(),
    })
}

/// `sqrt(n) * |sup - mean - sqrt(rho * var / n)|`.
pub fn expansion_residual(z: &[f64], div: &DivergenceSpec, budget: &UncertaintyBudget) -> Result<f64> {
    if z.len() < 2 {
        return Err(Error::invalid("expansion residual needs at least two losses"));
    }
    Ok(worst_case_mean(z, div, budget)?.residual)
}

/// `||n p - 1||_2`.
pub fn weight_norm_diagnostic(weights: &[f64]) -> f64 {
    let n = weights.len() as f64;
    weights.iter().map(|&p| (n * p - 1.0).powi(2)).sum::<f64>().sqrt()
}

/// Constant `C_f` with `||n p - 1||_2 <= sqrt(rho * C_f)` for every `p` in
/// the ball. Feasible weights satisfy `n p_i in [m, M]` where
/// `f(m) = f(M) = rho` (`m = 0` if `f(0) <= rho`), and on that interval
/// `(t - 1)^2 <= C_f f(t)` with `C_f = sup (t - 1)^2 / f(t)`. Because `f''`
/// is monotone for this family the supremum sits at `m` or `M`.
pub fn weight_norm_constant(div: &DivergenceSpec, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 1.0;
    }
    let f = |t: f64| div.eval(t);
    let mut hi = 2.0;
    while f(hi) < rho {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let big_m = hi;
    let small_m = if f(0.0) <= rho {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let ratio = |t: f64| (t - 1.0).powi(2) / f(t);
    ratio(small_m).max(ratio(big_m)).max(1.0)
}
