//! Projected subgradient minimization of empirical and robust objectives.

use crate::divergences::DivergenceSpec;
use crate::error::{Error, Result};
use crate::inner::{worst_case_mean, UncertaintyBudget};
use crate::problems::{LossModel, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `scale / sqrt(t + 1)` along the normalized subgradient.
    InverseSqrt,
    /// Polyak step toward the best value seen, lowered by a shrinking margin.
    PolyakEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Initial step length; the model's scale hint when `None`.
    pub initial_step: Option<f64>,
    /// Objective improvement per restart phase, relative to `1 + |value|`,
    /// below which the solver stops.
    pub tolerance: f64,
    /// Iterations between restarts from the best point with a halved step.
    pub restart_period: usize,
    pub keep_history: bool,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            step_rule: StepRule::InverseSqrt,
            initial_step: None,
            tolerance: 1e-7,
            restart_period: 100,
            keep_history: false,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::invalid("tolerance must be positive"));
        }
        if self.restart_period == 0 {
            return Err(Error::invalid("restart_period must be at least 1"));
        }
        if let Some(s) = self.initial_step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("initial step must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective seen after each iteration.
    pub history: Option<Vec<f64>>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Objective value at `x`, writing a subgradient into the second argument.
type Objective<'a> = dyn FnMut(&[f64], &mut [f64]) -> Result<f64> + 'a;

fn minimize(
    model: &dyn LossModel,
    sample: &Sample,
    cfg: &SolveConfig,
    x0: Option<&[f64]>,
    objective: &mut Objective<'_>,
) -> Result<Solution> {
    cfg.validate()?;
    model.check_sample(sample)?;
    let d = model.dim();
    let mut x = match x0 {
        Some(x0) if x0.len() == d => x0.to_vec(),
        Some(x0) => {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x0.len(),
            })
        }
        None => model.initial_point(sample),
    };
    model.project(&mut x);
    let mut g = vec![0.0; d];
    let mut f = objective(&x, &mut g)?;
    let (mut best_x, mut best_f, mut best_g) = (x.clone(), f, g.clone());
    let scale0 = cfg.initial_step.unwrap_or_else(|| model.scale_hint(sample)).max(1e-12);
    let mut scale = scale0;
    let mut margin0 = f64::NAN;
    let mut history = cfg.keep_history.then(Vec::new);
    let mut avg = vec![0.0; d];
    let (mut t_phase, mut phase_start) = (0usize, best_f);
    let mut converged = false;
    let mut iterations = 0;
    let mut last_improvement = f64::INFINITY;
    let mut next = vec![0.0; d];
    let mut last_gain = 0usize;

    while iterations < cfg.max_iters {
        let gnorm = norm(&g);
        if gnorm == 0.0 {
            converged = true;
            break;
        }
        let step = match cfg.step_rule {
            StepRule::InverseSqrt => scale / ((t_phase + 1) as f64).sqrt() / gnorm,
            StepRule::PolyakEstimate => {
                if margin0.is_nan() {
                    margin0 = scale0 * gnorm;
                }
                let margin = margin0 * (scale / scale0) / ((t_phase + 1) as f64).sqrt();
                (f - best_f + margin) / (gnorm * gnorm)
            }
        };
        for j in 0..d {
            next[j] = x[j] - step * g[j];
        }
        model.project(&mut next);
        let moved = next.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if moved <= 1e-15 * (1.0 + norm(&x)) {
            // -g lies in the normal cone, so x is optimal
            converged = true;
            break;
        }
        std::mem::swap(&mut x, &mut next);
        f = objective(&x, &mut g)?;
        iterations += 1;
        if f < best_f {
            best_f = f;
            best_x.copy_from_slice(&x);
            best_g.copy_from_slice(&g);
            last_gain = t_phase + 1;
        }
        for (a, v) in avg.iter_mut().zip(&x) {
            *a += v;
        }
        t_phase += 1;
        if let Some(h) = history.as_mut() {
            h.push(best_f);
        }
        if t_phase == cfg.restart_period {
            let mut mean: Vec<f64> = avg.iter().map(|a| a / t_phase as f64).collect();
            model.project(&mut mean);
            let fa = objective(&mean, &mut g)?;
            if fa < best_f {
                best_f = fa;
                best_x.copy_from_slice(&mean);
                best_g.copy_from_slice(&g);
                if let Some(h) = history.as_mut() {
                    *h.last_mut().unwrap() = best_f;
                }
            }
            last_improvement = phase_start - best_f;
            if last_improvement <= cfg.tolerance * (1.0 + best_f.abs()) && scale <= 1e-5 * scale0 {
                converged = true;
                break;
            }
            // a phase still descending at its end keeps its step length
            let descending = last_gain + cfg.restart_period / 10 >= cfg.restart_period && last_improvement > 0.0;
            if descending {
                scale = (scale * 1.5).min(scale0);
            } else {
                scale *= 0.5;
            }
            last_gain = 0;
            x.copy_from_slice(&best_x);
            g.copy_from_slice(&best_g);
            f = best_f;
            avg.iter_mut().for_each(|a| *a = 0.0);
            t_phase = 0;
            phase_start = best_f;
        }
    }
    if !converged {
        let partial = phase_start - best_f;
        converged = last_improvement.min(partial) <= cfg.tolerance * (1.0 + best_f.abs()) && scale <= 1e-3 * scale0;
    }
    if let Some(w) = model.boundary_warning(&best_x) {
        log::warn!("{w}");
    }
    if !best_f.is_finite() {
        return Err(Error::Solver(format!("objective is not finite at {best_x:?}")));
    }
    Ok(Solution {
        x: best_x,
        value: best_f,
        iterations,
        converged,
        history,
    })
}

/// Minimizes the empirical mean loss.
pub fn solve_saa(model: &dyn LossModel, sample: &Sample, cfg: &SolveConfig) -> Result<Solution> {
    solve_saa_from(model, sample, cfg, None)
}

pub fn solve_saa_from(
    model: &dyn LossModel,
    sample: &Sample,
    cfg: &SolveConfig,
    x0: Option<&[f64]>,
) -> Result<Solution> {
    let n = sample.len();
    let uniform = vec![1.0 / n as f64; n];
    let mut z = Vec::with_capacity(n);
    let mut objective = |x: &[f64], g: &mut [f64]| -> Result<f64> {
        model.losses(x, sample, &mut z);
        model.weighted_subgradient(x, sample, &uniform, g);
        Ok(z.iter().sum::<f64>() / n as f64)
    };
    minimize(model, sample, cfg, x0, &mut objective)
}

/// Minimizes the worst-case mean loss over the divergence ball. The
/// subgradient at each iterate is the worst-case reweighting of the
/// per-scenario subgradients. Returns the solution and its value.
pub fn solve_robust(
    model: &dyn LossModel,
    sample: &Sample,
    div: &DivergenceSpec,
    budget: &UncertaintyBudget,
    cfg: &SolveConfig,
) -> Result<(Solution, f64)> {
    solve_robust_from(model, sample, div, budget, cfg, None)
}

pub fn solve_robust_from(
    model: &dyn LossModel,
    sample: &Sample,
    div: &DivergenceSpec,
    budget: &UncertaintyBudget,
    cfg: &SolveConfig,
    x0: Option<&[f64]>,
) -> Result<(Solution, f64)> {
    if budget.n() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            got: budget.n(),
        });
    }
    let mut z = Vec::with_capacity(sample.len());
    let mut objective = |x: &[f64], g: &mut [f64]| -> Result<f64> {
        model.losses(x, sample, &mut z);
        let eval = worst_case_mean(&z, div, budget).map_err(|e| e.with_context(format!("at x = {x:?}")))?;
        let weights = eval
            .weights
            .as_ref()
            .ok_or_else(|| Error::Solver("inner solver returned no weights".into()))?;
        model.weighted_subgradient(x, sample, weights, g);
        Ok(eval.value)
    };
    let sol = minimize(model, sample, cfg, x0, &mut objective)?;
    let value = sol.value;
    Ok((sol, value))
}

/// `sup_{x in a} inf_{y in b} ||x - y||`.
pub fn deviation_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("deviation between empty point sets"));
    }
    let mut worst: f64 = 0.0;
    for x in a {
        let mut nearest = f64::INFINITY;
        for y in b {
            if x.len() != y.len() {
                return Err(Error::DimensionMismatch {
                    expected: x.len(),
                    got: y.len(),
                });
            }
            nearest = nearest.min(x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt());
        }
        worst = worst.max(nearest);
    }
    Ok(worst)
}
