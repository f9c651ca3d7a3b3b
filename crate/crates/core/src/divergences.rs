//! The Cressie-Read family of f-divergences and their convex conjugates.
//!
//! Every member is normalized so that `f(1) = f'(1) = 0` and `f''(1) = 2`:
//!
//! ```text
//! f_k(t) = 2 (t^k - k t + k - 1) / (k (k - 1))        k not in {0, 1}
//! f_0(t) = -2 log t + 2 t - 2                         empirical likelihood
//! f_1(t) = 2 t log t - 2 t + 2                        Kullback-Leibler
//! ```
//!
//! with `f(t) = +inf` for `t < 0`. The conjugate `f*(s) = sup_t { s t - f(t) }`
//! is available in closed form for every member, as are its first two
//! derivatives, which the inner solvers use for Newton steps and for
//! recovering worst-case weights.

use crate::error::{Error, Result};

/// Indices within this distance of 0 or 1 switch to the logarithmic limits.
pub const LIMIT_SWITCH: f64 = 1e-5;

/// A member of the Cressie-Read family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivergenceSpec {
    /// The `k -> 0` limit.
    EmpiricalLikelihood,
    /// The `k -> 1` limit.
    KullbackLeibler,
    /// A power divergence with index `k` outside `{0, 1}`.
    Power { k: f64 },
}

impl DivergenceSpec {
    /// Builds the family member for index `k`, snapping to the limit forms
    /// when `k` is within [`LIMIT_SWITCH`] of 0 or 1.
    pub fn cressie_read(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::domain(format!("Cressie-Read index must be finite, got {k}")));
        }
        Ok(if k.abs() < LIMIT_SWITCH {
            DivergenceSpec::EmpiricalLikelihood
        } else if (k - 1.0).abs() < LIMIT_SWITCH {
            DivergenceSpec::KullbackLeibler
        } else {
            DivergenceSpec::Power { k }
        })
    }

    pub fn chi_square() -> Self {
        DivergenceSpec::Power { k: 2.0 }
    }

    pub fn k(&self) -> f64 {
        match *self {
            DivergenceSpec::EmpiricalLikelihood => 0.0,
            DivergenceSpec::KullbackLeibler => 1.0,
            DivergenceSpec::Power { k } => k,
        }
    }

    /// Conjugate exponent `k*` with `1/k + 1/k* = 1`; undefined at the limits.
    pub fn k_star(&self) -> Option<f64> {
        match *self {
            DivergenceSpec::Power { k } => Some(k / (k - 1.0)),
            _ => None,
        }
    }

    pub fn is_chi_square(&self) -> bool {
        matches!(*self, DivergenceSpec::Power { k } if k == 2.0)
    }

    /// `f(t)`; `+inf` for negative `t` and wherever the power form diverges.
    pub fn value(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::domain(format!("f evaluated at non-finite t = {t}")));
        }
        Ok(self.eval(t))
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return f64::INFINITY;
        }
        match *self {
            DivergenceSpec::EmpiricalLikelihood => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    -2.0 * t.ln() + 2.0 * t - 2.0
                }
            }
            DivergenceSpec::KullbackLeibler => {
                if t == 0.0 {
                    2.0
                } else {
                    2.0 * t * t.ln() - 2.0 * t + 2.0
                }
            }
            DivergenceSpec::Power { k } => {
                let tk = t.powf(k);
                if tk.is_infinite() {
                    return f64::INFINITY;
                }
                2.0 * (tk - k * t + k - 1.0) / (k * (k - 1.0))
            }
        }
    }

    /// `f'(t)` for `t > 0`.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            DivergenceSpec::EmpiricalLikelihood => 2.0 - 2.0 / t,
            DivergenceSpec::KullbackLeibler => 2.0 * t.ln(),
            DivergenceSpec::Power { k } => 2.0 * (t.powf(k - 1.0) - 1.0) / (k - 1.0),
        }
    }

    /// `f''(t) = 2 t^(k-2)` for `t > 0`.
    pub fn second_derivative(&self, t: f64) -> f64 {
        2.0 * t.powf(self.k() - 2.0)
    }

    /// The convex conjugate `f*(s)`, which may be `+inf`.
    pub fn conjugate(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::domain(format!("f* evaluated at non-finite s = {s}")));
        }
        Ok(self.conj(s))
    }

    pub(crate) fn conj(&self, s: f64) -> f64 {
        match *self {
            DivergenceSpec::EmpiricalLikelihood => {
                // stationarity of s t + 2 log t - 2 t + 2 gives t = 2 / (2 - s)
                if s >= 2.0 {
                    f64::INFINITY
                } else {
                    -2.0 * (-0.5 * s).ln_1p()
                }
            }
            DivergenceSpec::KullbackLeibler => 2.0 * (0.5 * s).exp_m1(),
            DivergenceSpec::Power { k } => {
                let u = 0.5 * (k - 1.0) * s + 1.0;
                let ks = k / (k - 1.0);
                if k > 1.0 {
                    (2.0 / k) * (u.max(0.0).powf(ks) - 1.0)
                } else if u <= 0.0 {
                    f64::INFINITY
                } else {
                    (2.0 / k) * (u.powf(ks) - 1.0)
                }
            }
        }
    }

    /// `(f*)'(s)`, the maximizing `t` in the conjugate; `+inf` off the domain.
    pub(crate) fn conj_derivative(&self, s: f64) -> f64 {
        match *self {
            DivergenceSpec::EmpiricalLikelihood => {
                if s >= 2.0 {
                    f64::INFINITY
                } else {
                    2.0 / (2.0 - s)
                }
            }
            DivergenceSpec::KullbackLeibler => (0.5 * s).exp(),
            DivergenceSpec::Power { k } => {
                let u = 0.5 * (k - 1.0) * s + 1.0;
                if k > 1.0 {
                    if u <= 0.0 {
                        0.0
                    } else {
                        u.powf(1.0 / (k - 1.0))
                    }
                } else if u <= 0.0 {
                    f64::INFINITY
                } else {
                    u.powf(1.0 / (k - 1.0))
                }
            }
        }
    }

    /// `(f*)''(s)`.
    pub(crate) fn conj_second_derivative(&self, s: f64) -> f64 {
        match *self {
            DivergenceSpec::EmpiricalLikelihood => {
                if s >= 2.0 {
                    f64::INFINITY
                } else {
                    2.0 / ((2.0 - s) * (2.0 - s))
                }
            }
            DivergenceSpec::KullbackLeibler => 0.5 * (0.5 * s).exp(),
            DivergenceSpec::Power { k } => {
                let u = 0.5 * (k - 1.0) * s + 1.0;
                if u <= 0.0 {
                    if k > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    0.5 * u.powf((2.0 - k) / (k - 1.0))
                }
            }
        }
    }

    /// Upper end of the effective domain of `f*`: the conjugate is finite
    /// exactly for `s < bound`.
    pub(crate) fn conj_domain_bound(&self) -> f64 {
        match *self {
            DivergenceSpec::EmpiricalLikelihood => 2.0,
            DivergenceSpec::KullbackLeibler => f64::INFINITY,
            DivergenceSpec::Power { k } if k > 1.0 => f64::INFINITY,
            DivergenceSpec::Power { k } => 2.0 / (1.0 - k),
        }
    }

    /// Finite-difference check of the normalization at `t = 1`.
    pub fn check_assumption(&self) -> NormalizationReport {
        check_normalization(|t| self.eval(t))
    }
}

/// Numerical values of `f(1)`, `f'(1)` and `f''(1)` for an arbitrary `f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationReport {
    pub f1: f64,
    pub fp1: f64,
    pub fpp1: f64,
    pub pass: bool,
}

/// Step of the central differences used by [`check_normalization`].
pub const NORMALIZATION_STEP: f64 = 1e-4;

/// Checks `f(1) = 0`, `f'(1) = 0`, `f''(1) = 2` by central differences.
pub fn check_normalization(f: impl Fn(f64) -> f64) -> NormalizationReport {
    let h = NORMALIZATION_STEP;
    let (lo, mid, hi) = (f(1.0 - h), f(1.0), f(1.0 + h));
    let fp1 = (hi - lo) / (2.0 * h);
    let fpp1 = (hi - 2.0 * mid + lo) / (h * h);
    let pass = mid.abs() <= 1e-10 && fp1.abs() <= 1e-6 && (fpp1 - 2.0).abs() <= 1e-4;
    NormalizationReport {
        f1: mid,
        fp1,
        fpp1,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force `sup_t { s t - f(t) }` over a fine grid followed by a
    /// golden-section polish.
    fn numeric_conjugate(div: &DivergenceSpec, s: f64) -> f64 {
        let obj = |t: f64| s * t - div.eval(t);
        let mut best_t = 0.0;
        let mut best = obj(0.0);
        let mut t = 0.0;
        while t <= 60.0 {
            let v = obj(t);
            if v > best {
                best = v;
                best_t = t;
            }
            t += 1e-3;
        }
        let (mut a, mut b) = ((best_t - 1e-3f64).max(0.0), best_t + 1e-3);
        for _ in 0..200 {
            let m1 = a + 0.382 * (b - a);
            let m2 = a + 0.618 * (b - a);
            if obj(m1) > obj(m2) {
                b = m2;
            } else {
                a = m1;
            }
        }
        obj(0.5 * (a + b)).max(best)
    }

    #[test]
    fn value_examples() {
        let chi2 = DivergenceSpec::chi_square();
        assert_eq!(chi2.value(1.0).unwrap(), 0.0);
        assert!((chi2.value(3.0).unwrap() - 4.0).abs() < 1e-14);
        let el = DivergenceSpec::cressie_read(0.0).unwrap();
        assert_eq!(el.value(1.0).unwrap(), 0.0);
        assert_eq!(el.value(0.0).unwrap(), f64::INFINITY);
        assert_eq!(chi2.value(-0.5).unwrap(), f64::INFINITY);
        assert!(chi2.value(f64::NAN).is_err());
        assert!(chi2.value(f64::INFINITY).is_err());
    }

    #[test]
    fn chi_square_is_squared_deviation() {
        let chi2 = DivergenceSpec::chi_square();
        for i in 0..50 {
            let t = i as f64 * 0.2;
            assert!((chi2.eval(t) - (t - 1.0).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_examples() {
        let chi2 = DivergenceSpec::chi_square();
        assert_eq!(chi2.conjugate(0.0).unwrap(), 0.0);
        assert!((chi2.conjugate(2.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((chi2.conjugate(-4.0).unwrap() + 1.0).abs() < 1e-14);
        for &s in &[2.0, -4.0] {
            let numeric = numeric_conjugate(&chi2, s);
            assert!((numeric - chi2.conj(s)).abs() < 1e-8, "s={s}");
        }
    }

    #[test]
    fn conjugates_match_numeric_sup() {
        let specs = [
            DivergenceSpec::EmpiricalLikelihood,
            DivergenceSpec::KullbackLeibler,
            DivergenceSpec::Power { k: 1.5 },
            DivergenceSpec::Power { k: 3.0 },
            DivergenceSpec::Power { k: 0.5 },
            DivergenceSpec::Power { k: -1.0 },
        ];
        for div in specs {
            for &s in &[-6.0, -2.0, -0.5, 0.0, 0.4, 1.0, 1.5] {
                let closed = div.conj(s);
                if closed.is_infinite() {
                    continue;
                }
                let numeric = numeric_conjugate(&div, s);
                assert!(
                    (numeric - closed).abs() < 1e-6,
                    "{div:?} s={s}: numeric {numeric} closed {closed}"
                );
            }
        }
    }

    #[test]
    fn el_conjugate_is_infinite_past_two() {
        let el = DivergenceSpec::EmpiricalLikelihood;
        assert_eq!(el.conj(2.0), f64::INFINITY);
        assert!(el.conj(1.99).is_finite());
    }

    #[test]
    fn assumption_checks() {
        let r = DivergenceSpec::chi_square().check_assumption();
        assert!(r.pass);
        assert!((r.fpp1 - 2.0).abs() < 1e-6);
        assert!(DivergenceSpec::EmpiricalLikelihood.check_assumption().pass);
        assert!(DivergenceSpec::KullbackLeibler.check_assumption().pass);
        for k in [-2.0, 0.5, 1.5, 3.0, 5.0] {
            assert!(DivergenceSpec::Power { k }.check_assumption().pass, "k={k}");
        }
        let bad = check_normalization(|t| (t - 1.0) * (t - 1.0) / 4.0);
        assert!(!bad.pass);
        assert!((bad.fpp1 - 0.5).abs() < 1e-6);
    }

    #[test]
    fn limit_continuity() {
        let el = DivergenceSpec::EmpiricalLikelihood;
        let kl = DivergenceSpec::KullbackLeibler;
        let near0 = DivergenceSpec::Power { k: 1e-6 };
        let below1 = DivergenceSpec::Power { k: 1.0 - 1e-6 };
        let above1 = DivergenceSpec::Power { k: 1.0 + 1e-6 };
        let mut t = 0.1;
        while t <= 5.0 {
            assert!((near0.eval(t) - el.eval(t)).abs() < 1e-4, "t={t}");
            assert!((below1.eval(t) - kl.eval(t)).abs() < 1e-4, "t={t}");
            assert!((above1.eval(t) - kl.eval(t)).abs() < 1e-4, "t={t}");
            t += 0.05;
        }
    }

    #[test]
    fn snapping_to_limits() {
        assert_eq!(
            DivergenceSpec::cressie_read(5e-6).unwrap(),
            DivergenceSpec::EmpiricalLikelihood
        );
        assert_eq!(
            DivergenceSpec::cressie_read(1.0 - 5e-6).unwrap(),
            DivergenceSpec::KullbackLeibler
        );
        assert_eq!(DivergenceSpec::cressie_read(2.0).unwrap(), DivergenceSpec::chi_square());
        assert!(DivergenceSpec::cressie_read(f64::NAN).is_err());
        assert_eq!(DivergenceSpec::Power { k: 2.0 }.k_star(), Some(2.0));
        assert_eq!(DivergenceSpec::KullbackLeibler.k_star(), None);
    }

    #[test]
    fn conjugate_derivative_matches_finite_difference() {
        for div in [
            DivergenceSpec::EmpiricalLikelihood,
            DivergenceSpec::KullbackLeibler,
            DivergenceSpec::Power { k: 1.5 },
            DivergenceSpec::Power { k: 3.0 },
        ] {
            for &s in &[-0.7, -0.2, 0.3, 1.2] {
                let h = 1e-6;
                let fd = (div.conj(s + h) - div.conj(s - h)) / (2.0 * h);
                assert!((fd - div.conj_derivative(s)).abs() < 1e-6, "{div:?} s={s}");
                let fd2 = (div.conj_derivative(s + h) - div.conj_derivative(s - h)) / (2.0 * h);
                assert!((fd2 - div.conj_second_derivative(s)).abs() < 1e-5, "{div:?} s={s}");
            }
        }
    }
}
