//! Limited-memory BFGS over flat parameter vectors.
//!
//! Search directions come from the standard two-loop recursion over the
//! last `memory` accepted `(s, y)` pairs, scaled by `γ = s·y / y·y` from
//! the most recent pair. Steps are chosen by a bracketing line search with
//! cubic interpolation that enforces the strong Wolfe conditions.
//!
//! The optimizer treats the objective as smooth. Non-differentiable terms
//! (such as an L1 penalty) are handled through whatever subgradient the
//! callback returns.

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;

use crate::{Error, Result};

/// Curvature pairs with `s·y <= SKIP_CURVATURE · ‖s‖‖y‖` are not stored.
const SKIP_CURVATURE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LbfgsConfig {
    /// Number of correction pairs kept.
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when `‖g‖∞` falls below this.
    pub grad_tol: f64,
    /// Stop when an iteration decreases `f` by less than this fraction of `|f|`.
    pub obj_rel_tol: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search_evals: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 10,
            max_iterations: 500,
            grad_tol: 1e-6,
            obj_rel_tol: 1e-9,
            c1: 1e-4,
            c2: 0.9,
            max_line_search_evals: 40,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::invalid("L-BFGS memory must be at least 1"));
        }
        if self.max_iterations == 0 || self.max_line_search_evals == 0 {
            return Err(Error::invalid("L-BFGS iteration budgets must be positive"));
        }
        if !(self.grad_tol > 0.0) || !(self.obj_rel_tol > 0.0) {
            return Err(Error::invalid("L-BFGS tolerances must be positive"));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::invalid("line search constants must satisfy 0 < c1 < c2 < 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    ObjectiveTolerance,
    MaxIterations,
    LineSearchFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::ObjectiveTolerance => "objective-tolerance",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailure => "line-search-failure",
        })
    }
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

/// Per-iteration progress passed to an observer.
#[derive(Clone, Copy, Debug)]
pub struct IterationTrace {
    pub iteration: usize,
    pub value: f64,
    pub grad_inf_norm: f64,
    pub step: f64,
}

impl fmt::Display for IterationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iter {:>5}  f {:.10e}  |g|inf {:.3e}  step {:.3e}",
            self.iteration, self.value, self.grad_inf_norm, self.step
        )
    }
}

/// Minimise `f` from `x0`. `f` returns the value and gradient at a point.
pub fn minimize<F>(f: F, x0: Vec<f64>, config: &LbfgsConfig) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    minimize_with_observer(f, x0, config, |_| {})
}

pub fn minimize_with_observer<F, O>(
    mut f: F,
    x0: Vec<f64>,
    config: &LbfgsConfig,
    mut observe: O,
) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    O: FnMut(&IterationTrace),
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::invalid("cannot optimise an empty parameter vector"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial parameters are not finite"));
    }

    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("objective is not finite at the starting point".into()));
    }
    if g.len() != x.len() {
        return Err(Error::dim(x.len(), g.len(), "gradient"));
    }
    let initial_value = fx;
    let mut evaluations = 1;
    let mut history = History::new(config.memory);

    let finish = |x, value, g: &[f64], iterations, evaluations, termination| OptimizeResult {
        params: x,
        value,
        initial_value,
        grad_inf_norm: inf_norm(g),
        iterations,
        evaluations,
        termination,
    };

    if inf_norm(&g) < config.grad_tol {
        return Ok(finish(x, fx, &g, 0, evaluations, Termination::GradientTolerance));
    }

    for iteration in 1..=config.max_iterations {
        let mut direction = history.direction(&g);
        let mut slope = dot(&direction, &g);
        if !(slope < 0.0) {
            history.clear();
            direction = g.iter().map(|v| -v).collect();
            slope = dot(&direction, &g);
        }

        let mut initial_step = if history.is_empty() {
            1.0 / norm(&direction)
        } else {
            1.0
        };

        let search = loop {
            let outcome = line_search(&mut f, &x, fx, slope, &direction, initial_step, config)?;
            evaluations += outcome.evaluations;
            match outcome.accepted {
                Some(step) => break Some(step),
                // Retry once along steepest descent with a fresh memory.
                None if !history.is_empty() => {
                    history.clear();
                    direction = g.iter().map(|v| -v).collect();
                    slope = dot(&direction, &g);
                    initial_step = 1.0 / norm(&direction);
                }
                None => break None,
            }
        };

        let Some(step) = search else {
            return Ok(finish(x, fx, &g, iteration - 1, evaluations, Termination::LineSearchFailure));
        };

        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        history.push(s, y);

        let previous = fx;
        x = step.x;
        fx = step.f;
        g = step.g;

        let trace = IterationTrace {
            iteration,
            value: fx,
            grad_inf_norm: inf_norm(&g),
            step: step.alpha,
        };
        observe(&trace);

        if trace.grad_inf_norm < config.grad_tol {
            return Ok(finish(x, fx, &g, iteration, evaluations, Termination::GradientTolerance));
        }
        let scale = previous.abs().max(fx.abs());
        if previous - fx <= config.obj_rel_tol * scale {
            return Ok(finish(x, fx, &g, iteration, evaluations, Termination::ObjectiveTolerance));
        }
    }

    Ok(finish(x, fx, &g, config.max_iterations, evaluations, Termination::MaxIterations))
}

struct History {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl History {
    fn new(capacity: usize) -> Self {
        History {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if !(sy > SKIP_CURVATURE * norm(&s) * norm(&y)) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: returns `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q: Vec<f64> = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(-a, y, &mut q);
            alphas.push(a);
        }

        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }

        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(a - b, s, &mut q);
        }

        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

struct Step {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
}

struct LineSearchOutcome {
    accepted: Option<Step>,
    evaluations: usize,
}

/// A trial point along the search ray.
struct Trial {
    alpha: f64,
    f: f64,
    slope: f64,
    x: Vec<f64>,
    g: Vec<f64>,
}

impl Trial {
    fn into_step(self) -> Step {
        Step {
            alpha: self.alpha,
            x: self.x,
            f: self.f,
            g: self.g,
        }
    }
}

fn line_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    slope0: f64,
    direction: &[f64],
    initial_step: f64,
    config: &LbfgsConfig,
) -> Result<LineSearchOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut evaluations = 0;
    let mut evaluate = |alpha: f64| -> Result<Trial> {
        let point: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a + alpha * d).collect();
        let (value, grad) = match f(&point) {
            Ok(vg) => vg,
            // Treat a numerical blow-up as "stepped too far".
            Err(Error::Numerical(_)) => (f64::INFINITY, vec![f64::NAN; point.len()]),
            Err(e) => return Err(e),
        };
        let slope = dot(&grad, direction);
        Ok(Trial {
            alpha,
            f: value,
            slope,
            x: point,
            g: grad,
        })
    };

    let sufficient = |t: &Trial| t.f.is_finite() && t.f <= f0 + config.c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.is_finite() && t.slope.abs() <= -config.c2 * slope0;

    // Lowest point meeting sufficient decrease, used when the curvature
    // condition cannot be met within the evaluation budget.
    let mut best: Option<Trial> = None;
    let remember = |t: Trial, best: &mut Option<Trial>| {
        if sufficient(&t) && best.as_ref().is_none_or(|b| t.f < b.f) {
            *best = Some(t);
        }
    };

    let mut prev_alpha = 0.0;
    let mut prev_f = f0;
    let mut prev_slope = slope0;
    let mut alpha = initial_step;

    // Bracketing phase.
    let (mut lo, mut hi) = loop {
        if evaluations >= config.max_line_search_evals {
            return Ok(LineSearchOutcome {
                accepted: best.map(Trial::into_step),
                evaluations,
            });
        }
        let trial = evaluate(alpha)?;
        evaluations += 1;

        if !sufficient(&trial) || (evaluations > 1 && trial.f >= prev_f) {
            let lo = (prev_alpha, prev_f, prev_slope);
            break (lo, (trial.alpha, trial.f, trial.slope));
        }
        if curvature(&trial) {
            return Ok(LineSearchOutcome {
                accepted: Some(trial.into_step()),
                evaluations,
            });
        }
        if trial.slope >= 0.0 {
            let bracket = ((trial.alpha, trial.f, trial.slope), (prev_alpha, prev_f, prev_slope));
            remember(trial, &mut best);
            break bracket;
        }

        let next = cubic_minimizer(prev_alpha, prev_f, prev_slope, alpha, trial.f, trial.slope)
            .filter(|&c| c > 1.1 * alpha && c < 10.0 * alpha)
            .unwrap_or(2.0 * alpha);
        prev_alpha = alpha;
        prev_f = trial.f;
        prev_slope = trial.slope;
        alpha = next;
        remember(trial, &mut best);
    };

    // Zoom phase: `lo` always satisfies sufficient decrease and has the
    // lowest value seen so far.
    while evaluations < config.max_line_search_evals {
        let (a_lo, f_lo, s_lo) = lo;
        let (a_hi, f_hi, s_hi) = hi;
        let width = (a_hi - a_lo).abs();
        if width <= f64::EPSILON * a_lo.abs().max(a_hi.abs()) {
            break;
        }

        let (left, right) = (a_lo.min(a_hi), a_lo.max(a_hi));
        let margin = 0.1 * width;
        let candidate = if f_hi.is_finite() && s_hi.is_finite() {
            cubic_minimizer(a_lo, f_lo, s_lo, a_hi, f_hi, s_hi)
        } else {
            None
        };
        let alpha = candidate
            .filter(|&c| c >= left + margin && c <= right - margin)
            .unwrap_or(0.5 * (a_lo + a_hi));

        let trial = evaluate(alpha)?;
        evaluations += 1;

        if !sufficient(&trial) || trial.f >= f_lo {
            hi = (trial.alpha, trial.f, trial.slope);
        } else {
            if curvature(&trial) {
                return Ok(LineSearchOutcome {
                    accepted: Some(trial.into_step()),
                    evaluations,
                });
            }
            if trial.slope * (a_hi - a_lo) >= 0.0 {
                hi = lo;
            }
            lo = (trial.alpha, trial.f, trial.slope);
        }
        remember(trial, &mut best);
    }

    Ok(LineSearchOutcome {
        accepted: best.map(Trial::into_step),
        evaluations,
    })
}

/// Minimiser of the cubic interpolating values and slopes at `a` and `b`.
fn cubic_minimizer(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> Option<f64> {
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = gb - ga + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let t = b - (b - a) * (gb + d2 - d1) / denom;
    t.is_finite().then_some(t)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
