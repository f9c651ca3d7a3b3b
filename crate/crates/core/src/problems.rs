//! Convex stochastic programs: losses, subgradients and feasible-set
//! projections.

use crate::error::{Error, Result};
use crate::inner::UncertaintyBudget;
use crate::stats::{normal_cdf, normal_pdf, normal_quantile};

/// An empirical scenario set, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn new(scenarios: &[Vec<f64>]) -> Result<Self> {
        let first = scenarios
            .first()
            .ok_or_else(|| Error::invalid("a sample needs at least one scenario"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::invalid("scenarios must have at least one coordinate"));
        }
        let mut data = Vec::with_capacity(dim * scenarios.len());
        for s in scenarios {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            data.extend_from_slice(s);
        }
        Self::from_flat(dim, data)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "flat sample of length {} does not split into rows of {dim}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("scenario value {bad} is not finite")));
        }
        Ok(Self { dim, data })
    }

    /// One-dimensional scenarios.
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        Self::from_flat(1, values)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Contiguous rows `start..end` as a new sample.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::invalid(format!(
                "row range {start}..{end} is empty or exceeds {} rows",
                self.len()
            )));
        }
        Self::from_flat(self.dim, self.data[start * self.dim..end * self.dim].to_vec())
    }
}

/// A convex loss `l(x; xi)` over a closed convex feasible set.
pub trait LossModel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Dimension of the decision `x`.
    fn dim(&self) -> usize;

    /// Dimension of a scenario `xi`.
    fn scenario_dim(&self) -> usize;

    fn loss(&self, x: &[f64], xi: &[f64]) -> f64;

    /// Writes an element of the subdifferential in `x` into `out`, using
    /// right derivatives at kinks.
    fn subgradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]);

    /// Euclidean projection onto the feasible set, in place.
    fn project(&self, x: &mut [f64]);

    /// `M(xi)` with `|l(x; xi) - l(y; xi)| <= M(xi) ||x - y||`, if known.
    fn lipschitz(&self, _xi: &[f64]) -> Option<f64> {
        None
    }

    fn initial_point(&self, sample: &Sample) -> Vec<f64>;

    /// Rough diameter of the region worth searching.
    fn scale_hint(&self, sample: &Sample) -> f64;

    /// A note for the caller when `x` sits on an artificial boundary.
    fn boundary_warning(&self, _x: &[f64]) -> Option<String> {
        None
    }

    fn check_sample(&self, sample: &Sample) -> Result<()> {
        if sample.dim() != self.scenario_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.scenario_dim(),
                got: sample.dim(),
            });
        }
        Ok(())
    }

    fn losses(&self, x: &[f64], sample: &Sample, out: &mut Vec<f64>) {
        out.clear();
        out.extend(sample.rows().map(|xi| self.loss(x, xi)));
    }

    /// `sum_i w_i * g(x; xi_i)` into `out`.
    fn weighted_subgradient(&self, x: &[f64], sample: &Sample, weights: &[f64], out: &mut [f64]) {
        let mut g = vec![0.0; self.dim()];
        out.iter_mut().for_each(|v| *v = 0.0);
        for (xi, &w) in sample.rows().zip(weights) {
            if w == 0.0 {
                continue;
            }
            self.subgradient(x, xi, &mut g);
            for (o, gi) in out.iter_mut().zip(&g) {
                *o += w * gi;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear portfolio loss `x^T xi` over `{1^T x = 1, lo <= x <= hi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Portfolio {
    d: usize,
    lo: f64,
    hi: f64,
}

impl Portfolio {
    pub fn new(d: usize, lo: f64, hi: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("portfolio needs at least one asset"));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::invalid(format!(
                "portfolio bounds need lo < hi, got [{lo}, {hi}]"
            )));
        }
        let df = d as f64;
        if df * lo > 1.0 || df * hi < 1.0 {
            return Err(Error::invalid(format!(
                "no allocation summing to one fits in [{lo}, {hi}]^{d}"
            )));
        }
        Ok(Self { d, lo, hi })
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// `min { c^T x : x feasible }` by filling the cheapest coordinates first.
    pub fn linear_minimum(&self, c: &[f64]) -> (Vec<f64>, f64) {
        let mut x = vec![self.lo; self.d];
        let mut left = 1.0 - self.d as f64 * self.lo;
        let mut order: Vec<usize> = (0..self.d).collect();
        order.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
        for i in order {
            let add = left.min(self.hi - self.lo);
            x[i] += add;
            left -= add;
            if left <= 0.0 {
                break;
            }
        }
        let v = dot(c, &x);
        (x, v)
    }
}

impl LossModel for Portfolio {
    fn name(&self) -> &'static str {
        "portfolio"
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn scenario_dim(&self) -> usize {
        self.d
    }

    fn loss(&self, x: &[f64], xi: &[f64]) -> f64 {
        dot(x, xi)
    }

    fn subgradient(&self, _x: &[f64], xi: &[f64], out: &mut [f64]) {
        out.copy_from_slice(xi);
    }

    fn project(&self, x: &mut [f64]) {
        let (lo, hi) = (self.lo, self.hi);
        let sum_at = |tau: f64, x: &[f64]| x.iter().map(|&u| (u - tau).clamp(lo, hi)).sum::<f64>();
        let umin = x.iter().copied().fold(f64::INFINITY, f64::min);
        let umax = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut a, mut b) = (umin - hi, umax - lo);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if sum_at(mid, x) > 1.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= 1e-16 * (1.0 + a.abs().max(b.abs())) {
                break;
            }
        }
        let mut tau = 0.5 * (a + b);
        // exact shift on the free coordinates
        let (mut free, mut free_sum, mut fixed) = (0usize, 0.0, 0.0);
        for &u in x.iter() {
            let v = u - tau;
            if v <= lo {
                fixed += lo;
            } else if v >= hi {
                fixed += hi;
            } else {
                free += 1;
                free_sum += u;
            }
        }
        if free > 0 {
            let exact = (free_sum + fixed - 1.0) / free as f64;
            let consistent = x.iter().all(|&u| {
                let before = u - tau;
                let after = u - exact;
                (before <= lo) == (after <= lo) && (before >= hi) == (after >= hi)
            });
            if consistent {
                tau = exact;
            }
        }
        for u in x.iter_mut() {
            *u = (*u - tau).clamp(lo, hi);
        }
    }

    fn lipschitz(&self, xi: &[f64]) -> Option<f64> {
        Some(dot(xi, xi).sqrt())
    }

    fn initial_point(&self, _sample: &Sample) -> Vec<f64> {
        vec![1.0 / self.d as f64; self.d]
    }

    fn scale_hint(&self, _sample: &Sample) -> f64 {
        if self.d == 1 {
            return 1.0;
        }
        let df = self.d as f64;
        // the two farthest vertices differ in at most all coordinates
        (df.sqrt() * (self.hi - self.lo)).min(2.0 * (self.lo.abs().max(self.hi.abs())) * df.sqrt())
    }
}

/// Rockafellar-Uryasev loss `(xi - x)_+ / (1 - alpha) + x`, whose minimum
/// over `x` is the conditional value-at-risk at level `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cvar {
    alpha: f64,
    clip: f64,
}

/// Default half-width of the box that stands in for the real line.
pub const CVAR_DEFAULT_CLIP: f64 = 1e6;

impl Cvar {
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_clip(alpha, CVAR_DEFAULT_CLIP)
    }

    pub fn with_clip(alpha: f64, clip: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("CVaR level must lie in (0, 1), got {alpha}")));
        }
        if clip.is_nan() || clip <= 0.0 {
            return Err(Error::invalid("CVaR clip box must have positive width"));
        }
        Ok(Self { alpha, clip })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exact minimizer and minimum of the empirical objective over `values`:
    /// the minimizer is an order statistic at rank `ceil(n * alpha)`.
    pub fn empirical_minimum(&self, values: &[f64]) -> (f64, f64) {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let objective = |x: f64| v.iter().map(|&s| (s - x).max(0.0)).sum::<f64>() / (n as f64 * (1.0 - self.alpha)) + x;
        let rank = ((n as f64 * self.alpha).ceil() as usize).clamp(1, n);
        let mut best = (v[rank - 1], objective(v[rank - 1]));
        for r in [rank.saturating_sub(1), rank + 1] {
            if r >= 1 && r <= n {
                let val = objective(v[r - 1]);
                if val < best.1 {
                    best = (v[r - 1], val);
                }
            }
        }
        best
    }
}

impl LossModel for Cvar {
    fn name(&self) -> &'static str {
        "cvar"
    }

    fn dim(&self) -> usize {
        1
    }

    fn scenario_dim(&self) -> usize {
        1
    }

    fn loss(&self, x: &[f64], xi: &[f64]) -> f64 {
        (xi[0] - x[0]).max(0.0) / (1.0 - self.alpha) + x[0]
    }

    fn subgradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        out[0] = if xi[0] > x[0] {
            1.0 - 1.0 / (1.0 - self.alpha)
        } else {
            1.0
        };
    }

    fn project(&self, x: &mut [f64]) {
        x[0] = x[0].clamp(-self.clip, self.clip);
    }

    fn lipschitz(&self, _xi: &[f64]) -> Option<f64> {
        Some(1.0f64.max(self.alpha / (1.0 - self.alpha)))
    }

    fn initial_point(&self, sample: &Sample) -> Vec<f64> {
        let mean = sample.as_flat().iter().sum::<f64>() / sample.len() as f64;
        vec![mean.clamp(-self.clip, self.clip)]
    }

    fn scale_hint(&self, sample: &Sample) -> f64 {
        let (lo, hi) = sample
            .as_flat()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        (hi - lo).max(1e-3).min(2.0 * self.clip)
    }

    fn boundary_warning(&self, x: &[f64]) -> Option<String> {
        (x[0].abs() >= self.clip).then(|| {
            format!(
                "CVaR threshold {} touches the clip box [-{}, {}]",
                x[0], self.clip, self.clip
            )
        })
    }
}

/// Multi-item newsvendor `b^T (x - xi)_+ + h^T (xi - x)_+` over an l1 ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Newsvendor {
    b: Vec<f64>,
    h: Vec<f64>,
    radius: f64,
}

impl Newsvendor {
    pub fn new(b: Vec<f64>, h: Vec<f64>, radius: f64) -> Result<Self> {
        if b.len() != h.len() {
            return Err(Error::DimensionMismatch {
                expected: b.len(),
                got: h.len(),
            });
        }
        if b.is_empty() {
            return Err(Error::invalid("newsvendor needs at least one item"));
        }
        if b.iter().chain(&h).any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::invalid("newsvendor costs must be finite and nonnegative"));
        }
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::invalid("newsvendor l1 radius must be positive"));
        }
        Ok(Self { b, h, radius })
    }

    pub fn costs(&self) -> (&[f64], &[f64]) {
        (&self.b, &self.h)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Population minimizer and minimum when demand is centered Gaussian
    /// with coordinate standard deviations `sd`. The expected loss separates
    /// across items, so the l1 constraint is handled by bisecting its
    /// multiplier on the per-item newsvendor quantiles.
    pub fn gaussian_optimum(&self, sd: &[f64]) -> Result<(Vec<f64>, f64)> {
        if sd.len() != self.b.len() {
            return Err(Error::DimensionMismatch {
                expected: self.b.len(),
                got: sd.len(),
            });
        }
        let item = |j: usize, mu: f64| -> Result<f64> {
            let (b, h, s) = (self.b[j], self.h[j], sd[j]);
            if s == 0.0 || b + h == 0.0 {
                return Ok(0.0);
            }
            let right = h - mu; // slope condition for x > 0
            let left = h + mu; // and for x < 0
            Ok(if right > 0.5 * (b + h) {
                s * normal_quantile((right / (b + h)).min(1.0 - 1e-16))?
            } else if left < 0.5 * (b + h) {
                s * normal_quantile((left / (b + h)).max(1e-16))?
            } else {
                0.0
            })
        };
        let solve = |mu: f64| -> Result<Vec<f64>> { (0..self.b.len()).map(|j| item(j, mu)).collect() };
        let l1 = |x: &[f64]| x.iter().map(|v| v.abs()).sum::<f64>();
        let mut x = solve(0.0)?;
        if l1(&x) > self.radius {
            let mut lo = 0.0;
            let mut hi = self
                .b
                .iter()
                .zip(&self.h)
                .map(|(b, h)| 0.5 * (b - h).abs())
                .fold(0.0, f64::max);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if l1(&solve(mid)?) > self.radius {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            x = solve(hi)?;
        }
        let value = (0..x.len())
            .map(|j| {
                let s = sd[j];
                if s == 0.0 {
                    return self.b[j] * x[j].max(0.0) + self.h[j] * (-x[j]).max(0.0);
                }
                let u = x[j] / s;
                let over = x[j] * normal_cdf(u) + s * normal_pdf(u);
                let under = over - x[j];
                self.b[j] * over + self.h[j] * under
            })
            .sum();
        Ok((x, value))
    }
}

impl LossModel for Newsvendor {
    fn name(&self) -> &'static str {
        "newsvendor"
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn scenario_dim(&self) -> usize {
        self.b.len()
    }

    fn loss(&self, x: &[f64], xi: &[f64]) -> f64 {
        let mut total = 0.0;
        for j in 0..x.len() {
            let gap = x[j] - xi[j];
            total += if gap > 0.0 { self.b[j] * gap } else { -self.h[j] * gap };
        }
        total
    }

    fn subgradient(&self, x: &[f64], xi: &[f64], out: &mut [f64]) {
        for j in 0..x.len() {
            out[j] = if x[j] >= xi[j] { self.b[j] } else { -self.h[j] };
        }
    }

    fn project(&self, x: &mut [f64]) {
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        if l1 <= self.radius {
            return;
        }
        let shrunk = |theta: f64, x: &[f64]| x.iter().map(|v| (v.abs() - theta).max(0.0)).sum::<f64>();
        let (mut lo, mut hi) = (0.0, x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shrunk(mid, x) > self.radius {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * (1.0 + hi) {
                break;
            }
        }
        let mut theta = 0.5 * (lo + hi);
        let (mut count, mut sum) = (0usize, 0.0);
        for v in x.iter() {
            if v.abs() > theta {
                count += 1;
                sum += v.abs();
            }
        }
        if count > 0 {
            let exact = (sum - self.radius) / count as f64;
            if x.iter().all(|v| (v.abs() > theta) == (v.abs() > exact)) {
                theta = exact;
            }
        }
        for v in x.iter_mut() {
            *v = v.signum() * (v.abs() - theta).max(0.0);
        }
    }

    fn lipschitz(&self, _xi: &[f64]) -> Option<f64> {
        Some(
            self.b
                .iter()
                .zip(&self.h)
                .map(|(b, h)| b.max(*h).powi(2))
                .sum::<f64>()
                .sqrt(),
        )
    }

    fn initial_point(&self, sample: &Sample) -> Vec<f64> {
        let n = sample.len() as f64;
        let mut x = vec![0.0; self.dim()];
        for row in sample.rows() {
            for (a, v) in x.iter_mut().zip(row) {
                *a += v / n;
            }
        }
        self.project(&mut x);
        x
    }

    fn scale_hint(&self, _sample: &Sample) -> f64 {
        2.0 * self.radius
    }
}

/// Mean loss plus `sqrt((rho / n) x^T Sigma x)` for the linear portfolio
/// loss, with `Sigma` the `1/n` empirical covariance.
pub fn markowitz_objective(x: &[f64], sample: &Sample, budget: &UncertaintyBudget) -> Result<f64> {
    let d = sample.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let n = sample.len() as f64;
    let mut mu = vec![0.0; d];
    for row in sample.rows() {
        for (m, v) in mu.iter_mut().zip(row) {
            *m += v / n;
        }
    }
    let mut cov = vec![0.0; d * d];
    for row in sample.rows() {
        for i in 0..d {
            let ci = row[i] - mu[i];
            for j in 0..d {
                cov[i * d + j] += ci * (row[j] - mu[j]) / n;
            }
        }
    }
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += x[i] * cov[i * d + j] * x[j];
        }
    }
    Ok(dot(x, &mu) + (budget.rho() / n * quad.max(0.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn portfolio_examples() {
        let p = Portfolio::new(4, -10.0, 10.0).unwrap();
        let mut x = vec![0.25; 4];
        p.project(&mut x);
        assert_eq!(x, vec![0.25; 4]);
        let p2 = Portfolio::new(2, -10.0, 10.0).unwrap();
        let mut y = vec![3.0, 0.0];
        p2.project(&mut y);
        assert!((y[0] - 2.0).abs() < 1e-12 && (y[1] + 1.0).abs() < 1e-12, "{y:?}");
        let mut g = vec![0.0; 2];
        p2.subgradient(&y, &[0.3, -2.0], &mut g);
        assert_eq!(g, vec![0.3, -2.0]);
        assert!(Portfolio::new(2, 0.6, 1.0).is_err());
        assert!(Portfolio::new(2, 1.0, 0.0).is_err());
    }

    #[test]
    fn portfolio_projection_clamps() {
        let p = Portfolio::new(3, -1.0, 1.0).unwrap();
        let mut x = vec![10.0, 0.0, -10.0];
        p.project(&mut x);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(x[0], 1.0);
        assert_eq!(x[2], -1.0);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_minimum_matches_vertex_enumeration() {
        let p = Portfolio::new(2, -10.0, 10.0).unwrap();
        let (x, v) = p.linear_minimum(&[1.0, 2.0]);
        assert_eq!(x, vec![10.0, -9.0]);
        assert_eq!(v, -8.0);
        let (x, v) = p.linear_minimum(&[0.5, -0.3]);
        assert_eq!(x, vec![-9.0, 10.0]);
        assert!((v - (-4.5 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn cvar_examples() {
        let m = Cvar::new(0.5).unwrap();
        assert_eq!(m.loss(&[0.0], &[0.0]), 0.0);
        assert_eq!(m.loss(&[1.0], &[3.0]), 5.0);
        let mut g = [0.0];
        m.subgradient(&[1.0], &[1.0], &mut g);
        assert_eq!(g[0], 1.0);
        m.subgradient(&[1.0], &[1.5], &mut g);
        assert_eq!(g[0], -1.0);
        assert!(Cvar::new(1.0).is_err());
    }

    #[test]
    fn cvar_minimum_is_tail_mean() {
        // three equally likely outcomes; at alpha = 2/3 the tail is the top outcome
        let m = Cvar::new(2.0 / 3.0).unwrap();
        let values = [1.0, 4.0, 10.0];
        let (_, v) = m.empirical_minimum(&values);
        assert!((v - 10.0).abs() < 1e-12);
        // brute force over a grid of thresholds
        let mut best = f64::INFINITY;
        let mut x = -5.0;
        while x <= 15.0 {
            let obj = values.iter().map(|&s| m.loss(&[x], &[s])).sum::<f64>() / 3.0;
            best = best.min(obj);
            x += 1e-3;
        }
        assert!((best - v).abs() < 1e-6);
        // alpha = 1/3 keeps the top two
        let m = Cvar::new(1.0 / 3.0).unwrap();
        let (_, v) = m.empirical_minimum(&values);
        assert!((v - 7.0).abs() < 1e-12);
    }

    #[test]
    fn newsvendor_examples() {
        let m = Newsvendor::new(vec![1.0], vec![1.0], 10.0).unwrap();
        assert_eq!(m.loss(&[1.5], &[1.5]), 0.0);
        assert_eq!(m.loss(&[0.0], &[2.0]), 2.0);
        let m2 = Newsvendor::new(vec![1.0, 1.0], vec![1.0, 1.0], 10.0).unwrap();
        let mut x = vec![8.0, 8.0];
        m2.project(&mut x);
        assert!((x[0] - 5.0).abs() < 1e-12 && (x[1] - 5.0).abs() < 1e-12);
        assert!(Newsvendor::new(vec![1.0], vec![1.0, 2.0], 1.0).is_err());
        assert!(Newsvendor::new(vec![-1.0], vec![1.0], 1.0).is_err());
    }

    #[test]
    fn newsvendor_gaussian_optimum() {
        let m = Newsvendor::new(vec![2.0], vec![2.0], 10.0).unwrap();
        let (x, v) = m.gaussian_optimum(&[1.0]).unwrap();
        assert_eq!(x, vec![0.0]);
        assert!((v - 4.0 * normal_pdf(0.0)).abs() < 1e-12);
        // quantile b / (b + h) shifted: h = 3, b = 1 puts x at the 3/4 quantile
        let m = Newsvendor::new(vec![1.0], vec![3.0], 10.0).unwrap();
        let (x, _) = m.gaussian_optimum(&[2.0]).unwrap();
        assert!((x[0] - 2.0 * normal_quantile(0.75).unwrap()).abs() < 1e-12);
        // radius binds
        let m = Newsvendor::new(vec![1.0, 1.0], vec![30.0, 30.0], 1.0).unwrap();
        let (x, _) = m.gaussian_optimum(&[5.0, 5.0]).unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9 && (x[0] - x[1]).abs() < 1e-9);
    }

    #[test]
    fn markowitz_one_dimensional() {
        let s = Sample::scalar(vec![1.0, 2.0, 3.0]).unwrap();
        let b = UncertaintyBudget::new(0.3, 3).unwrap();
        let v = markowitz_objective(&[1.0], &s, &b).unwrap();
        assert!((v - (2.0 + (0.3f64 * (2.0 / 3.0) / 3.0).sqrt())).abs() < 1e-14);
        let b0 = UncertaintyBudget::new(0.0, 3).unwrap();
        assert_eq!(markowitz_objective(&[1.0], &s, &b0).unwrap(), 2.0);
        let flat = Sample::new(&[vec![1.0, 5.0], vec![1.0, -5.0]]).unwrap();
        // x loads only on the degenerate coordinate
        assert_eq!(markowitz_objective(&[1.0, 0.0], &flat, &b0).unwrap(), 1.0);
        let b1 = UncertaintyBudget::new(4.0, 2).unwrap();
        assert_eq!(markowitz_objective(&[1.0, 0.0], &flat, &b1).unwrap(), 1.0);
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(&[]).is_err());
        assert!(Sample::new(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Sample::scalar(vec![f64::NAN]).is_err());
        let s = Sample::new(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert_eq!(s.slice(1, 3).unwrap().row(0), &[3.0, 4.0]);
        assert!(s.slice(2, 2).is_err());
    }
}
