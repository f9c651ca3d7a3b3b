//! Scenario generators for the simulation experiments, with exact
//! population optima where they are available in closed form.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::problems::{Newsvendor, Portfolio, Sample};
use crate::stats::{normal_cdf, normal_pdf};

fn std_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `d x d` matrix of standard normals, row-major.
fn gaussian_matrix(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..d * d).map(|_| std_normal(rng)).collect()
}

/// `G^T G` for a row-major `d x d` matrix `G`.
fn gram(g: &[f64], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            s[i * d + j] = (0..d).map(|r| g[r * d + i] * g[r * d + j]).sum();
        }
    }
    s
}

/// `shift + G^T w` with `w` standard normal, so the covariance is `G^T G`.
fn correlated_draws(n: usize, shift: &[f64], g: &[f64], rng: &mut impl Rng) -> Result<Sample> {
    let d = shift.len();
    let mut data = Vec::with_capacity(n * d);
    let mut w = vec![0.0; d];
    for _ in 0..n {
        w.iter_mut().for_each(|v| *v = std_normal(rng));
        for i in 0..d {
            data.push(shift[i] + (0..d).map(|r| g[r * d + i] * w[r]).sum::<f64>());
        }
    }
    Sample::from_flat(d, data)
}

/// Returns `N(mu, Sigma)` with `mu ~ N(0, I)` and `Sigma` standard Wishart
/// with `d` degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioInstance {
    pub mu: Vec<f64>,
    /// Row-major covariance.
    pub sigma: Vec<f64>,
    factor: Vec<f64>,
}

impl PortfolioInstance {
    pub fn draw(d: usize, rng: &mut impl Rng) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("portfolio dimension must be positive"));
        }
        let mu = (0..d).map(|_| std_normal(rng)).collect();
        let factor = gaussian_matrix(d, rng);
        let sigma = gram(&factor, d);
        Ok(Self { mu, sigma, factor })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Sample> {
        correlated_draws(n, &self.mu, &self.factor, rng)
    }

    /// `inf_x mu^T x` over the model's feasible set.
    pub fn true_optimum(&self, model: &Portfolio) -> f64 {
        model.linear_minimum(&self.mu).1
    }
}

/// Component law of the equal-weight CVaR mixtures centered at
/// `-6, -4, ..., 6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureKind {
    /// Normal components with variances `2, 4, ..., 14` in order of the means.
    Normal,
    /// `mu + Z` with `Z` symmetric and `P(|Z| >= t) = min(1, t^-a)`.
    HeavyTail { a: f64 },
}

pub const MIXTURE_MEANS: [f64; 7] = [-6.0, -4.0, -2.0, 0.0, 2.0, 4.0, 6.0];
pub const MIXTURE_VARIANCES: [f64; 7] = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0];

/// `P(Z <= s)` for the symmetric heavy-tailed component.
fn heavy_cdf(s: f64, a: f64) -> f64 {
    if s <= -1.0 {
        0.5 * (-s).powf(-a)
    } else if s < 1.0 {
        0.5
    } else {
        1.0 - 0.5 * s.powf(-a)
    }
}

/// `E (Z - c)_+` for the symmetric heavy-tailed component.
fn heavy_excess(c: f64, a: f64) -> f64 {
    let upper = 0.5 * c.max(1.0).powf(1.0 - a) / (a - 1.0);
    let middle = if c < 1.0 { 0.5 * (1.0 - c.max(-1.0)) } else { 0.0 };
    let lower = if c < -1.0 {
        (-1.0 - c) - 0.5 * (1.0 - (-c).powf(1.0 - a)) / (a - 1.0)
    } else {
        0.0
    };
    upper + middle + lower
}

impl MixtureKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixtureKind::HeavyTail { a } if a.is_nan() || *a <= 2.0 => Err(Error::invalid(format!(
                "tail exponent must exceed 2 for finite variance, got {a}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Sample> {
        self.validate()?;
        let values = (0..n)
            .map(|_| {
                let c = rng.random_range(0..MIXTURE_MEANS.len());
                match *self {
                    MixtureKind::Normal => MIXTURE_MEANS[c] + MIXTURE_VARIANCES[c].sqrt() * std_normal(rng),
                    MixtureKind::HeavyTail { a } => {
                        let u: f64 = 1.0 - rng.random::<f64>();
                        let magnitude = u.powf(-1.0 / a);
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        MIXTURE_MEANS[c] + sign * magnitude
                    }
                }
            })
            .collect();
        Sample::scalar(values)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let k = MIXTURE_MEANS.len() as f64;
        (0..MIXTURE_MEANS.len())
            .map(|c| match *self {
                MixtureKind::Normal => normal_cdf((y - MIXTURE_MEANS[c]) / MIXTURE_VARIANCES[c].sqrt()),
                MixtureKind::HeavyTail { a } => heavy_cdf(y - MIXTURE_MEANS[c], a),
            })
            .sum::<f64>()
            / k
    }

    /// `E (xi - c)_+`.
    pub fn excess(&self, c: f64) -> f64 {
        let k = MIXTURE_MEANS.len() as f64;
        (0..MIXTURE_MEANS.len())
            .map(|i| match *self {
                MixtureKind::Normal => {
                    let s = MIXTURE_VARIANCES[i].sqrt();
                    let u = (MIXTURE_MEANS[i] - c) / s;
                    (MIXTURE_MEANS[i] - c) * normal_cdf(u) + s * normal_pdf(u)
                }
                MixtureKind::HeavyTail { a } => heavy_excess(c - MIXTURE_MEANS[i], a),
            })
            .sum::<f64>()
            / k
    }

    pub fn variance(&self) -> f64 {
        let k = MIXTURE_MEANS.len() as f64;
        let spread = MIXTURE_MEANS.iter().map(|m| m * m).sum::<f64>() / k;
        match *self {
            MixtureKind::Normal => spread + MIXTURE_VARIANCES.iter().sum::<f64>() / k,
            MixtureKind::HeavyTail { a } => spread + a / (a - 2.0),
        }
    }

    /// The `alpha` quantile of the mixture.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        self.validate()?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "quantile level must lie in (0, 1), got {alpha}"
            )));
        }
        let (mut lo, mut hi) = (-10.0, 10.0);
        while self.cdf(lo) > alpha {
            lo *= 2.0;
        }
        while self.cdf(hi) < alpha {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Population minimum of `E (xi - x)_+ / (1 - alpha) + x`, attained at
    /// the `alpha` quantile.
    pub fn cvar(&self, alpha: f64) -> Result<f64> {
        let q = self.quantile(alpha)?;
        Ok(q + self.excess(q) / (1.0 - alpha))
    }
}

/// Demand `N(0, Sigma)` with `Sigma` standard Wishart and exponential costs
/// of mean 10.
#[derive(Debug, Clone, PartialEq)]
pub struct NewsvendorInstance {
    pub b: Vec<f64>,
    pub h: Vec<f64>,
    /// Row-major covariance.
    pub sigma: Vec<f64>,
    factor: Vec<f64>,
}

impl NewsvendorInstance {
    pub fn draw(d: usize, rng: &mut impl Rng) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("newsvendor dimension must be positive"));
        }
        let cost = Exp::new(0.1).map_err(|e| Error::invalid(e.to_string()))?;
        let b = (0..d).map(|_| cost.sample(rng)).collect();
        let h = (0..d).map(|_| cost.sample(rng)).collect();
        let factor = gaussian_matrix(d, rng);
        let sigma = gram(&factor, d);
        Ok(Self { b, h, sigma, factor })
    }

    /// Fixed costs and a diagonal covariance with the given standard deviations.
    pub fn with_parameters(b: Vec<f64>, h: Vec<f64>, sd: &[f64]) -> Result<Self> {
        let d = sd.len();
        if b.len() != d || h.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: b.len().min(h.len()),
            });
        }
        let mut factor = vec![0.0; d * d];
        for (j, s) in sd.iter().enumerate() {
            factor[j * d + j] = *s;
        }
        let sigma = gram(&factor, d);
        Ok(Self { b, h, sigma, factor })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn model(&self, radius: f64) -> Result<Newsvendor> {
        Newsvendor::new(self.b.clone(), self.h.clone(), radius)
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Sample> {
        correlated_draws(n, &vec![0.0; self.dim()], &self.factor, rng)
    }

    pub fn marginal_sd(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|j| self.sigma[j * d + j].sqrt()).collect()
    }

    /// Exact population minimizer and minimum over the l1 ball.
    pub fn true_optimum(&self, radius: f64) -> Result<(Vec<f64>, f64)> {
        self.model(radius)?.gaussian_optimum(&self.marginal_sd())
    }
}

/// Diagonal autoregression `xi_{t+1} = c * xi_t + eps_{t+1}` with standard
/// normal noise, started from its stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineAr {
    coef: Vec<f64>,
}

impl AffineAr {
    pub fn new(coef: Vec<f64>) -> Result<Self> {
        if coef.is_empty() {
            return Err(Error::invalid("autoregression needs at least one coordinate"));
        }
        if let Some(c) = coef.iter().find(|c| c.is_nan() || c.abs() >= 1.0) {
            return Err(Error::invalid(format!(
                "autoregressive coefficient {c} is not inside (-1, 1)"
            )));
        }
        Ok(Self { coef })
    }

    pub fn scalar(coef: f64) -> Result<Self> {
        Self::new(vec![coef])
    }

    pub fn stationary_variance(&self) -> Vec<f64> {
        self.coef.iter().map(|c| 1.0 / (1.0 - c * c)).collect()
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Sample> {
        let d = self.coef.len();
        let mut state: Vec<f64> = self
            .stationary_variance()
            .iter()
            .map(|v| v.sqrt() * std_normal(rng))
            .collect();
        let mut data = Vec::with_capacity(n * d);
        for t in 0..n {
            if t > 0 {
                for (s, c) in state.iter_mut().zip(&self.coef) {
                    *s = c * *s + std_normal(rng);
                }
            }
            data.extend_from_slice(&state);
        }
        Sample::from_flat(d, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Cvar, LossModel};
    use crate::stats::{mean_var, RngStream};

    #[test]
    fn portfolio_instance_shapes() {
        let mut rng = RngStream::new(1, 0);
        let inst = PortfolioInstance::draw(3, &mut rng).unwrap();
        // Gram matrices are symmetric with nonnegative quadratic forms
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(inst.sigma[i * 3 + j], inst.sigma[j * 3 + i]);
            }
        }
        for _ in 0..50 {
            let v: Vec<f64> = (0..3).map(|_| std_normal(&mut rng)).collect();
            let q: f64 = (0..9).map(|k| v[k / 3] * inst.sigma[k] * v[k % 3]).sum();
            assert!(q >= -1e-12);
        }
        let one = PortfolioInstance::draw(1, &mut rng).unwrap();
        let forced = Portfolio::new(1, -10.0, 10.0).unwrap();
        assert_eq!(one.true_optimum(&forced), one.mu[0]);
    }

    #[test]
    fn portfolio_two_assets_against_vertices() {
        let mut rng = RngStream::new(2, 0);
        let p = Portfolio::new(2, -10.0, 10.0).unwrap();
        for _ in 0..20 {
            let inst = PortfolioInstance::draw(2, &mut rng).unwrap();
            // the feasible segment has endpoints (10, -9) and (-9, 10)
            let (m1, m2) = (inst.mu[0], inst.mu[1]);
            let oracle = (10.0 * m1 - 9.0 * m2).min(-9.0 * m1 + 10.0 * m2);
            assert!((inst.true_optimum(&p) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn portfolio_sample_moments() {
        let mut rng = RngStream::new(3, 0);
        let inst = PortfolioInstance::draw(2, &mut rng).unwrap();
        let n = 100_000;
        let s = inst.sample(n, &mut rng).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = s.rows().map(|r| r[j]).collect();
            let (m, v) = mean_var(&col);
            let var = inst.sigma[j * 2 + j];
            assert!((m - inst.mu[j]).abs() < 3.0 * (var / n as f64).sqrt() + 1e-12);
            assert!((v - var).abs() < 0.03 * var);
        }
    }

    #[test]
    fn mixture_moments() {
        let n = 100_000;
        for (kind, seed) in [(MixtureKind::Normal, 4), (MixtureKind::HeavyTail { a: 5.0 }, 5)] {
            let mut rng = RngStream::new(seed, 0);
            let s = kind.sample(n, &mut rng).unwrap();
            let (m, v) = mean_var(s.as_flat());
            let sd = kind.variance().sqrt();
            assert!(m.abs() < 3.0 * sd / (n as f64).sqrt(), "{kind:?} mean {m}");
            assert!((v - kind.variance()).abs() < 0.05 * kind.variance(), "{kind:?} var {v}");
        }
        assert_eq!(heavy_cdf(-1.0, 3.0), 0.5);
        assert_eq!(heavy_cdf(1.0, 3.0), 0.5);
        assert!(MixtureKind::HeavyTail { a: 2.0 }.validate().is_err());
    }

    #[test]
    fn heavy_tail_variance_stays_bounded() {
        // P(|Z| >= 1) = 1 at the knee
        assert_eq!(heavy_cdf(-1.0, 3.0) + 1.0 - heavy_cdf(1.0, 3.0), 1.0);
        // the variance stays bounded as n doubles
        let mut rng = RngStream::new(7, 0);
        let mut n = 10_000;
        let truth = MixtureKind::HeavyTail { a: 3.0 }.variance();
        while n <= 160_000 {
            let s = MixtureKind::HeavyTail { a: 3.0 }.sample(n, &mut rng).unwrap();
            let (_, v) = mean_var(s.as_flat());
            assert!(v < 3.0 * truth, "n={n} var={v}");
            n *= 2;
        }
    }

    #[test]
    fn heavy_excess_matches_quadrature() {
        let a = 3.0;
        for c in [-3.0, -1.0, -0.4, 0.0, 0.7, 1.0, 2.5] {
            // integrate P(Z > s) over [c, 400] by the trapezoid rule, plus the analytic tail
            let steps = 400_000;
            let h = (400.0 - c) / steps as f64;
            let mut acc = 0.0;
            for i in 0..=steps {
                let s = c + i as f64 * h;
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                acc += w * (1.0 - heavy_cdf(s, a));
            }
            let tail = 0.5 * 400f64.powf(1.0 - a) / (a - 1.0);
            assert!((acc * h + tail - heavy_excess(c, a)).abs() < 1e-5, "c={c}");
        }
    }

    #[test]
    fn exact_cvar_matches_large_saa() {
        let alpha = 0.9;
        let model = Cvar::new(alpha).unwrap();
        for (kind, seed) in [
            (MixtureKind::Normal, 8),
            (MixtureKind::HeavyTail { a: 3.0 }, 9),
            (MixtureKind::HeavyTail { a: 5.0 }, 10),
        ] {
            let mut rng = RngStream::new(seed, 0);
            let s = kind.sample(200_000, &mut rng).unwrap();
            let (_, saa) = model.empirical_minimum(s.as_flat());
            let exact = kind.cvar(alpha).unwrap();
            assert!(
                (saa - exact).abs() < 0.05 * exact.abs().max(1.0),
                "{kind:?}: {saa} vs {exact}"
            );
        }
    }

    #[test]
    fn newsvendor_instance() {
        let mut rng = RngStream::new(11, 0);
        let costs: Vec<f64> = (0..20_000)
            .map(|_| NewsvendorInstance::draw(1, &mut rng).unwrap().b[0])
            .collect();
        let (m, _) = mean_var(&costs);
        assert!((m - 10.0).abs() < 3.0 * 10.0 / (costs.len() as f64).sqrt());
        let inst = NewsvendorInstance::with_parameters(vec![4.0], vec![4.0], &[1.5]).unwrap();
        let (x, _) = inst.true_optimum(10.0).unwrap();
        assert_eq!(x, vec![0.0]);
        let s = inst.sample(10, &mut rng).unwrap();
        let model = inst.model(10.0).unwrap();
        assert!(s.rows().all(|r| model.loss(&[0.3], r) >= 0.0));
    }

    #[test]
    fn newsvendor_truth_matches_large_saa() {
        let mut rng = RngStream::new(12, 0);
        let inst = NewsvendorInstance::draw(3, &mut rng).unwrap();
        let (x, value) = inst.true_optimum(10.0).unwrap();
        let model = inst.model(10.0).unwrap();
        let s = inst.sample(200_000, &mut rng).unwrap();
        let mut z = Vec::new();
        model.losses(&x, &s, &mut z);
        let (m, v) = mean_var(&z);
        assert!((m - value).abs() < 4.0 * (v / z.len() as f64).sqrt(), "{m} vs {value}");
    }

    #[test]
    fn autoregression_moments() {
        let mut rng = RngStream::new(13, 0);
        let ar = AffineAr::scalar(0.5).unwrap();
        let s = ar.sample(100_000, &mut rng).unwrap();
        let x = s.as_flat();
        let (m, v) = mean_var(x);
        assert!((v - 4.0 / 3.0).abs() < 0.02 * 4.0 / 3.0);
        let lag: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((lag / v - 0.5).abs() < 0.02);
        let iid = AffineAr::scalar(0.0).unwrap().sample(50_000, &mut rng).unwrap();
        let (_, v0) = mean_var(iid.as_flat());
        assert!((v0 - 1.0).abs() < 0.03);
        assert!(AffineAr::scalar(1.0).is_err());
    }

    #[test]
    fn streams_replay() {
        let a = MixtureKind::Normal.sample(5, &mut RngStream::new(14, 2)).unwrap();
        let b = MixtureKind::Normal.sample(5, &mut RngStream::new(14, 2)).unwrap();
        assert_eq!(a, b);
    }
}
