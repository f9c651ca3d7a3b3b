//! Quantiles, sample moments and reproducible random streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::{beta::beta_reg, erf::erfc, gamma::gamma_lr, gamma::ln_gamma};

use crate::error::{Error, Result};

/// A seeded random stream. Each `(seed, stream_id)` pair maps to its own
/// ChaCha keystream, so replications can draw independently and replay
/// bit-for-bit.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

fn check_df(df: u32) -> Result<()> {
    if df == 0 {
        Err(Error::domain("degrees of freedom must be positive"))
    } else {
        Ok(())
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn chi_square_cdf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(0.5 * df as f64, 0.5 * x)
    }
}

fn chi_square_pdf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * df as f64;
    ((a - 1.0) * x.ln() - 0.5 * x - a * std::f64::consts::LN_2 - ln_gamma(a)).exp()
}

pub fn student_t_cdf(df: u32, t: f64) -> f64 {
    let nu = df as f64;
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t * t));
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

fn student_t_pdf(df: u32, t: f64) -> f64 {
    let nu = df as f64;
    let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * std::f64::consts::PI).ln();
    (ln_norm - 0.5 * (nu + 1.0) * (1.0 + t * t / nu).ln()).exp()
}

/// Solves `cdf(x) = p` on `[lo, hi]` by Newton steps safeguarded by bisection.
fn invert_cdf(cdf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64, p: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = cdf(x) - p;
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let step = r / d;
        if d > 0.0 && step.abs() <= 1e-15 * x.abs().max(1e-300) {
            break;
        }
        let newton = x - step;
        x = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * x.abs().max(1e-300) {
            break;
        }
    }
    x
}

/// Quantile of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_quantile(df: u32, p: f64) -> Result<f64> {
    check_df(df)?;
    check_probability(p)?;
    let mut hi = df as f64 + 10.0;
    while chi_square_cdf(df, hi) < p {
        hi *= 2.0;
    }
    Ok(invert_cdf(
        |x| chi_square_cdf(df, x),
        |x| chi_square_pdf(df, x),
        p,
        0.0,
        hi,
    ))
}

/// Quantile of Student's t distribution with `df` degrees of freedom.
pub fn student_t_quantile(df: u32, p: f64) -> Result<f64> {
    check_df(df)?;
    check_probability(p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut hi = 10.0;
    while student_t_cdf(df, hi) < p.max(1.0 - p) {
        hi *= 2.0;
    }
    Ok(invert_cdf(
        |t| student_t_cdf(df, t),
        |t| student_t_pdf(df, t),
        p,
        -hi,
        hi,
    ))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    Ok(invert_cdf(normal_cdf, normal_pdf, p, -40.0, 40.0))
}

/// Mean and variance of `z`, with the variance normalized by `1/n`.
pub fn sample_variance(z: &[f64]) -> Result<(f64, f64)> {
    if z.is_empty() {
        return Err(Error::invalid("sample variance of an empty list"));
    }
    Ok(mean_var(z))
}

/// Corrected two-pass mean and `1/n` variance; `z` must be nonempty.
pub(crate) fn mean_var(z: &[f64]) -> (f64, f64) {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let (mut ss, mut comp) = (0.0, 0.0);
    for &v in z {
        let d = v - mean;
        ss += d * d;
        comp += d;
    }
    let var = ((ss - comp * comp / n) / n).max(0.0);
    (mean, var)
}
