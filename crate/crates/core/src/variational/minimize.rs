use serde::{Deserialize, Serialize};

use super::metric::Metric;
use crate::potentials::{ConvexPotential, RegularizedPotential};
use crate::state::{evaluate, hessian_apply, Integrand, ProblemData, Trajectory};
use crate::{Error, Result};

/// Continuation schedule, tolerances and line-search constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub lambda_schedule: Vec<f64>,
    pub sigma_schedule: Vec<f64>,
    /// Stop the inner loop once `‖∇J‖_{W⁻¹}` falls below this.
    pub grad_tol: f64,
    /// Verdict threshold on the final unregularized pointwise gap.
    pub gap_tol: f64,
    pub max_inner_iters: usize,
    pub initial_step: f64,
    pub shrink: f64,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    pub warm_start: bool,
    pub method: InnerMethod,
    /// Conjugate-gradient iterations per Newton step.
    pub max_cg_iters: usize,
    /// Momentum in the `accelerated` method.
    pub acceleration: bool,
    /// Accepted iterations between metric rebuilds in the `accelerated` method.
    pub metric_refresh: usize,
}

/// Descent method of the inner loop. Both use the Gauss–Newton metric
/// described in the `metric` module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Inexact Newton: the Hessian system is solved by conjugate gradients
    /// preconditioned with the metric.
    NewtonCg,
    /// Metric-preconditioned gradient steps with momentum.
    Accelerated,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda_schedule: vec![1e-1, 1e-2, 1e-3],
            sigma_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
            grad_tol: 1e-10,
            gap_tol: 1e-6,
            max_inner_iters: 500,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            warm_start: true,
            method: InnerMethod::NewtonCg,
            max_cg_iters: 50,
            acceleration: true,
            metric_refresh: 3,
        }
    }
}

fn decreasing(v: &[f64]) -> bool {
    v.iter().all(|&x| x > 0.0 && x.is_finite()) && v.windows(2).all(|p| p[1] < p[0])
}

impl SolverConfig {
    /// `(field, message)` for every invalid entry.
    pub fn validate(&self) -> Vec<(&'static str, String)> {
        let mut errs = Vec::new();
        if self.lambda_schedule.is_empty() || !decreasing(&self.lambda_schedule) {
            errs.push(("lambda_schedule", "must be a nonempty strictly decreasing list of positive numbers".into()));
        }
        if self.sigma_schedule.is_empty() || !decreasing(&self.sigma_schedule) {
            errs.push(("sigma_schedule", "must be a nonempty strictly decreasing list of positive numbers".into()));
        }
        for (name, v) in [("grad_tol", self.grad_tol), ("gap_tol", self.gap_tol), ("initial_step", self.initial_step), ("armijo", self.armijo)] {
            if !(v > 0.0 && v.is_finite()) {
                errs.push((name, "must be > 0".into()));
            }
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            errs.push(("shrink", "must lie in (0, 1)".into()));
        }
        if self.armijo >= 1.0 {
            errs.push(("armijo", "must be < 1".into()));
        }
        if self.max_inner_iters == 0 {
            errs.push(("max_inner_iters", "must be >= 1".into()));
        }
        if self.max_cg_iters == 0 {
            errs.push(("max_cg_iters", "must be >= 1".into()));
        }
        if self.metric_refresh == 0 {
            errs.push(("metric_refresh", "must be >= 1".into()));
        }
        errs
    }

    /// `(λ, σ)` pairs, `σ` varying fastest.
    pub fn stages(&self) -> Vec<(f64, f64)> {
        self.lambda_schedule
            .iter()
            .flat_map(|&l| self.sigma_schedule.iter().map(move |&s| (l, s)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerStats {
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    /// Conjugate-gradient iterations, summed over Newton steps.
    pub cg_iterations: usize,
    pub converged: bool,
    /// `‖∇J‖_{W⁻¹}` at the returned iterate.
    pub grad_norm: f64,
    /// Regularized functional at the returned iterate.
    pub value: f64,
    /// Functional value at every accepted iterate, starting point included.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// `‖g‖_{W⁻¹} = (Σ g² / (Δt m))^{1/2}`.
pub(crate) fn dual_norm(g: &[Vec<f64>], data: &ProblemData) -> f64 {
    let m = data.op().grid().weights();
    let dt = data.dt();
    g.iter()
        .flat_map(|gk| gk.iter().zip(m).map(|(v, mi)| v * v / (dt * mi)))
        .sum::<f64>()
        .sqrt()
}

fn inner(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| x * y).sum()
}

/// `a + c·b`.
fn axpy(a: &[Vec<f64>], c: f64, b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(ak, bk)| ak.iter().zip(bk).map(|(x, y)| x + c * y).collect())
        .collect()
}

fn metric_at<P: ConvexPotential + ?Sized>(
    data: &ProblemData,
    reg: &RegularizedPotential<'_, P>,
    phi_curv: &[Vec<f64>],
) -> Result<Metric> {
    let ceiling = 1.0 / reg.lambda() + reg.sigma();
    let phi: Vec<Vec<f64>> = phi_curv
        .iter()
        .map(|row| row.iter().map(|c| c.clamp(reg.sigma(), ceiling)).collect())
        .collect();
    Metric::new(data, &phi)
}

struct Point {
    w: Vec<Vec<f64>>,
    value: f64,
    magnitude: f64,
    grad: Vec<Vec<f64>>,
    phi_curv: Vec<Vec<f64>>,
    psi_curv: Vec<Vec<f64>>,
    traj: Trajectory,
}

fn eval_at<P: ConvexPotential + ?Sized>(
    w: Vec<Vec<f64>>,
    data: &ProblemData,
    integrand: &Integrand<'_, P>,
) -> Result<Point> {
    let e = evaluate(&w, data, integrand, true)?;
    Ok(Point {
        w,
        value: e.value,
        magnitude: e.magnitude,
        grad: e.gradient.expect("gradient requested"),
        phi_curv: e.phi_curv,
        psi_curv: e.psi_curv,
        traj: e.traj,
    })
}

/// Values closer than this fraction of the cancelling magnitudes are
/// indistinguishable in floating point; below it the line search trusts
/// the local model instead.
const NOISE: f64 = 1e-14;

/// Backtracking from `y` along `−d`; `None` if no step passes Armijo.
fn backtrack<P: ConvexPotential + ?Sized>(
    y: &Point,
    d: &[Vec<f64>],
    slack: f64,
    data: &ProblemData,
    integrand: &Integrand<'_, P>,
    cfg: &SolverConfig,
    stats: &mut InnerStats,
) -> Result<(Option<Point>, f64)> {
    let slope = inner(&y.grad, d);
    let mut step = cfg.initial_step;
    if !(slope.is_finite() && slope > 0.0) {
        return Ok((None, step));
    }
    while step > 1e-20 {
        let trial = eval_at(axpy(&y.w, -step, d), data, integrand)?;
        stats.evaluations += 1;
        if trial.value <= y.value - cfg.armijo * step * slope + slack {
            return Ok((Some(trial), step));
        }
        step *= cfg.shrink;
    }
    Ok((None, step))
}

/// Approximate solution of `H d = g` by conjugate gradients preconditioned
/// with the metric, stopped at relative residual `eta` in the `P⁻¹` norm.
fn newton_direction(
    x: &Point,
    metric: &Metric,
    data: &ProblemData,
    eta: f64,
    max_iters: usize,
    stats: &mut InnerStats,
) -> Vec<Vec<f64>> {
    let mut r = x.grad.clone();
    let mut z = metric.solve(data, &r);
    let first = z.clone();
    let mut p = z.clone();
    let mut d = vec![vec![0.0; r[0].len()]; r.len()];
    let mut rz = inner(&r, &z);
    let target = eta * eta * rz;
    for it in 0..max_iters {
        let hp = hessian_apply(&p, data, &x.phi_curv, &x.psi_curv);
        let php = inner(&p, &hp);
        if !(php > 0.0) {
            // Only round-off can make the Hessian look indefinite here.
            return if it == 0 { first } else { d };
        }
        let alpha = rz / php;
        d = axpy(&d, alpha, &p);
        r = axpy(&r, -alpha, &hp);
        z = metric.solve(data, &r);
        stats.cg_iterations += 1;
        let rz_next = inner(&r, &z);
        if rz_next <= target {
            break;
        }
        p = axpy(&z, rz_next / rz, &p);
        rz = rz_next;
    }
    d
}

/// Minimizes the regularized reduced functional over the flux.
///
/// Every accepted iterate satisfies the Armijo condition, so accepted
/// values never increase beyond round-off. Reaching `max_inner_iters` is
/// reported through `converged = false`, not as an error.
pub fn inner_minimize<P: ConvexPotential + ?Sized>(
    w_init: &[Vec<f64>],
    data: &ProblemData,
    reg: &RegularizedPotential<'_, P>,
    cfg: &SolverConfig,
) -> Result<(Vec<Vec<f64>>, Trajectory, InnerStats)> {
    if !(reg.sigma() > 0.0) {
        return Err(Error::Unsupported("inner_minimize needs sigma > 0".into()));
    }
    let integrand = Integrand::Regularized(*reg);
    let x = eval_at(w_init.to_vec(), data, &integrand)?;
    let mut stats = InnerStats {
        iterations: 0,
        evaluations: 1,
        restarts: 0,
        cg_iterations: 0,
        converged: false,
        grad_norm: dual_norm(&x.grad, data),
        value: x.value,
        history: vec![x.value],
    };
    let x = match cfg.method {
        InnerMethod::NewtonCg => newton_cg(x, data, reg, &integrand, cfg, &mut stats)?,
        InnerMethod::Accelerated => accelerated(x, data, reg, &integrand, cfg, &mut stats)?,
    };
    stats.converged = stats.grad_norm <= cfg.grad_tol;
    Ok((x.w, x.traj, stats))
}

fn accept(x: &mut Point, trial: Point, data: &ProblemData, stats: &mut InnerStats) -> Vec<Vec<f64>> {
    let prev = std::mem::replace(x, trial).w;
    stats.grad_norm = dual_norm(&x.grad, data);
    stats.value = x.value;
    stats.history.push(x.value);
    prev
}

fn newton_cg<P: ConvexPotential + ?Sized>(
    mut x: Point,
    data: &ProblemData,
    reg: &RegularizedPotential<'_, P>,
    integrand: &Integrand<'_, P>,
    cfg: &SolverConfig,
    stats: &mut InnerStats,
) -> Result<Point> {
    while stats.iterations < cfg.max_inner_iters && stats.grad_norm > cfg.grad_tol {
        let metric = metric_at(data, reg, &x.phi_curv)?;
        let eta = stats.grad_norm.sqrt().min(0.5);
        let d = newton_direction(&x, &metric, data, eta, cfg.max_cg_iters, stats);
        let (trial, step) = backtrack(&x, &d, NOISE * x.magnitude, data, integrand, cfg, stats)?;
        stats.iterations += 1;
        match trial {
            Some(trial) => {
                accept(&mut x, trial, data, stats);
            }
            None => {
                return Err(Error::LineSearch {
                    iteration: stats.iterations,
                    step,
                    objective: x.value,
                })
            }
        }
    }
    Ok(x)
}

/// Gradient steps in the metric with momentum `m/(m+3)`. The momentum
/// restarts whenever an extrapolated step would raise the functional
/// above the last accepted value.
fn accelerated<P: ConvexPotential + ?Sized>(
    mut x: Point,
    data: &ProblemData,
    reg: &RegularizedPotential<'_, P>,
    integrand: &Integrand<'_, P>,
    cfg: &SolverConfig,
    stats: &mut InnerStats,
) -> Result<Point> {
    let mut metric = metric_at(data, reg, &x.phi_curv)?;
    let mut since_refresh = 0;
    let mut prev_w = x.w.clone();
    let mut momentum = 0usize;

    while stats.iterations < cfg.max_inner_iters && stats.grad_norm > cfg.grad_tol {
        if since_refresh >= cfg.metric_refresh {
            metric = metric_at(data, reg, &x.phi_curv)?;
            since_refresh = 0;
            momentum = 0;
        }
        let beta = if cfg.acceleration {
            momentum as f64 / (momentum as f64 + 3.0)
        } else {
            0.0
        };
        let extrapolated = if beta > 0.0 {
            let diff = axpy(&x.w, -1.0, &prev_w);
            stats.evaluations += 1;
            Some(eval_at(axpy(&x.w, beta, &diff), data, integrand)?)
        } else {
            None
        };
        let y = extrapolated.as_ref().unwrap_or(&x);
        let d = metric.solve(data, &y.grad);
        let slack = NOISE * y.magnitude.max(x.magnitude);
        let (trial, step) = backtrack(y, &d, slack, data, integrand, cfg, stats)?;

        stats.iterations += 1;
        match trial {
            Some(trial) if trial.value <= x.value + slack => {
                prev_w = accept(&mut x, trial, data, stats);
                momentum += 1;
                since_refresh += 1;
            }
            _ if beta > 0.0 => {
                // Extrapolation overshot: drop the momentum and refresh the metric.
                stats.restarts += 1;
                momentum = 0;
                since_refresh = cfg.metric_refresh;
            }
            _ => {
                return Err(Error::LineSearch {
                    iteration: stats.iterations,
                    step,
                    objective: y.value,
                });
            }
        }
    }
    Ok(x)
}
