//! First-order descent with Armijo backtracking, an optional limited-memory
//! quasi-Newton mode, convergence traces, and exponential-decay fitting.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A differentiable cost over a flat parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    /// Gradient at `x`; `step` is the finite-difference step for implementations that need one.
    fn gradient(&self, x: &[f64], step: f64) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    GradientDescent,
    QuasiNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub mode: Mode,
    /// First trial step of the first line search.
    pub initial_step: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    /// Each line search after the first starts at the last accepted step times this factor.
    pub step_growth: f64,
    pub max_step: f64,
    /// A line search that shrinks below this step ends the run as a stall.
    pub min_step: f64,
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub gradient_step: f64,
    /// Secant pairs kept in quasi-Newton mode.
    pub history: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mode: Mode::GradientDescent,
            initial_step: 0.1,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            step_growth: 2.0,
            max_step: 1e3,
            min_step: 1e-12,
            max_iterations: 5000,
            cost_tolerance: 1e-10,
            gradient_step: crate::objective::DEFAULT_GRADIENT_STEP,
            history: 10,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return fail("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return fail("backtrack_factor must lie in (0, 1)");
        }
        if self.max_iterations < 1 {
            return fail("max_iterations must be at least 1");
        }
        if !(self.cost_tolerance > 0.0 && self.gradient_step > 0.0 && self.min_step > 0.0) {
            return fail("tolerances must be positive");
        }
        if !(self.initial_step > 0.0 && self.max_step >= self.initial_step) {
            return fail("initial_step must be positive and at most max_step");
        }
        if !(self.step_growth >= 1.0) {
            return fail("step_growth must be at least 1");
        }
        if self.mode == Mode::QuasiNewton && self.history == 0 {
            return fail("quasi-Newton mode needs a positive history");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxIter,
    Stall,
}

/// Accepted costs by iteration. Record 0 is the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<(usize, f64)>,
    pub terminated_by: Termination,
}

impl ConvergenceTrace {
    /// Number of accepted steps.
    pub fn steps(&self) -> usize {
        self.records.last().map_or(0, |r| r.0)
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.1)
    }

    /// `iteration,cost` CSV, one line per record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,cost\n");
        for (k, cost) in &self.records {
            let _ = writeln!(out, "{k},{cost:e}");
        }
        out
    }
}

/// Minimizes `objective` from `start`.
///
/// Accepted steps satisfy the Armijo condition `f(x + αp) ≤ f(x) + c α gᵀp`,
/// so the recorded cost sequence never increases.
pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    start: &[f64],
    config: &OptimizerConfig,
) -> Result<(Vec<f64>, ConvergenceTrace)> {
    config.validate()?;
    if start.len() != objective.dim() {
        return Err(Error::ParameterLength {
            expected: objective.dim(),
            actual: start.len(),
        });
    }
    let mut x = start.to_vec();
    let mut f = objective.value(&x)?;
    let mut records = vec![(0, f)];
    let finish = |x: Vec<f64>, records, terminated_by| {
        Ok((
            x,
            ConvergenceTrace {
                records,
                terminated_by,
            },
        ))
    };
    if f <= config.cost_tolerance {
        return finish(x, records, Termination::Tolerance);
    }
    if x.is_empty() {
        return finish(x, records, Termination::Stall);
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut pending: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trial = config.initial_step;

    for iteration in 1..=config.max_iterations {
        let g = objective.gradient(&x, config.gradient_step)?;
        let g_norm2 = dot(&g, &g);
        if g_norm2 == 0.0 || !g_norm2.is_finite() {
            return finish(x, records, Termination::Stall);
        }

        if let Some((s, g_prev)) = pending.take() {
            let y: Vec<f64> = g.iter().zip(&g_prev).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                if memory.len() == config.history {
                    memory.pop_front();
                }
                memory.push_back((s, y, 1.0 / sy));
            }
        }

        let mut direction = match config.mode {
            Mode::GradientDescent => g.iter().map(|v| -v).collect(),
            Mode::QuasiNewton => two_loop(&g, &memory),
        };
        let mut slope = dot(&g, &direction);
        if slope >= 0.0 {
            // Not a descent direction: drop the curvature history.
            memory.clear();
            direction = g.iter().map(|v| -v).collect();
            slope = -g_norm2;
        }
        let mut alpha = match config.mode {
            Mode::QuasiNewton if !memory.is_empty() => 1.0,
            _ => trial,
        };

        let accepted = loop {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, pi)| xi + alpha * pi)
                .collect();
            let f_new = objective.value(&candidate)?;
            if f_new <= f + config.armijo_c * alpha * slope {
                break Some((candidate, f_new));
            }
            alpha *= config.backtrack_factor;
            if alpha < config.min_step {
                break None;
            }
        };
        let Some((x_new, f_new)) = accepted else {
            return finish(x, records, Termination::Stall);
        };

        if config.mode == Mode::QuasiNewton {
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            pending = Some((s, g));
        }
        trial = (alpha * config.step_growth).min(config.max_step);
        x = x_new;
        f = f_new;
        records.push((iteration, f));
        if f <= config.cost_tolerance {
            return finish(x, records, Termination::Tolerance);
        }
    }
    finish(x, records, Termination::MaxIter)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS two-loop recursion: returns `−H g`.
fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Least-squares fit of `log(cost) ≈ a − γ K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub gamma: f64,
    pub r_squared: f64,
    /// First and last iteration used by the fit.
    pub window: (usize, usize),
}

/// Fraction of trailing records used by [`fit_decay_rate`].
pub const DEFAULT_FIT_FRACTION: f64 = 0.8;

pub fn fit_decay_rate(trace: &ConvergenceTrace) -> Result<DecayFit> {
    fit_decay_rate_window(trace, DEFAULT_FIT_FRACTION)
}

/// Fits over the trailing `fraction` of the records.
pub fn fit_decay_rate_window(trace: &ConvergenceTrace, fraction: f64) -> Result<DecayFit> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("fit fraction {fraction} outside (0, 1]")));
    }
    let skip = ((1.0 - fraction) * trace.records.len() as f64).round() as usize;
    let points: Vec<(f64, f64)> = trace.records[skip..]
        .iter()
        .filter(|(_, c)| *c > 0.0)
        .map(|(k, c)| (*k as f64, c.ln()))
        .collect();
    if points.len() < 5 {
        return Err(Error::DegenerateFit(format!(
            "{} usable records, need at least 5",
            points.len()
        )));
    }
    let (slope, r_squared) = linear_fit(&points)
        .ok_or_else(|| Error::DegenerateFit("cost is constant over the window".into()))?;
    Ok(DecayFit {
        gamma: -slope,
        r_squared,
        window: (points[0].0 as usize, points[points.len() - 1].0 as usize),
    })
}

/// Ordinary least squares `y ≈ a + b x`; returns `(b, r²)`, or `None` when
/// either coordinate is constant.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy <= 1e-300 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Some((slope, 1.0 - ss_res / syy))
}
