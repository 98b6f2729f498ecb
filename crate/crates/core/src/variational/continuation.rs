use std::time::Instant;

use serde::Serialize;

use super::minimize::{inner_minimize, SolverConfig};
use super::{energy_identity_residual, eval_functional, inclusion_violation, pointwise_gap};
use crate::potentials::{check_coercivity, check_symmetry, ConvexPotential, ProbeRegion, RegularizedPotential};
use crate::state::{constraint_residual, integrate_state, Integrand, ProblemData, Trajectory};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub index: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    /// Conjugate-gradient iterations (zero for the accelerated method).
    pub linear_iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// The regularized functional at the stage minimizer.
    pub regularized_value: f64,
    /// The unregularized pointwise gap at the stage minimizer.
    pub gap: f64,
}

/// Wall-clock figures, kept apart so the rest of a report is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Timing {
    pub total_seconds: f64,
    pub stage_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxCheck {
    pub lower: f64,
    pub upper: f64,
    pub min: f64,
    pub max: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    /// `J(y, w)` with the unregularized potential, in its defining form.
    pub functional: f64,
    pub pointwise_gap: f64,
    /// Largest nodal gap integrand and its `(k, node)`.
    pub gap_worst: f64,
    pub gap_worst_at: (usize, usize),
    pub gap_infinite_at: Option<(usize, usize)>,
    pub energy_identity_residual: f64,
    pub inclusion_violation: f64,
    pub constraint_residual: f64,
    pub box_check: Option<BoxCheck>,
    pub stages: Vec<StageRecord>,
    pub total_iterations: usize,
    pub converged: bool,
    pub failed_stage: Option<usize>,
    pub short_circuit: bool,
    pub warnings: Vec<String>,
    pub verdict: bool,
    /// Not serialized with the rest so that reports of identical runs are
    /// byte-identical; writers emit it as a separate record.
    #[serde(skip)]
    pub timing: Timing,
}

impl SolveReport {
    /// Unregularized gaps at the end of each stage.
    pub fn stage_gaps(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.gap).collect()
    }
}

fn box_check(traj: &Trajectory, bounds: Option<(f64, f64)>) -> Option<BoxCheck> {
    bounds.map(|(lower, upper)| {
        let (min, max) = traj
            .y
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        BoxCheck {
            lower,
            upper,
            min,
            max,
            within: lower <= min && max <= upper,
        }
    })
}

fn assumption_warnings<P: ConvexPotential + ?Sized>(data: &ProblemData, pot: &P) -> Vec<String> {
    let grid = data.op().grid();
    let lengths = grid.lengths();
    let region = ProbeRegion {
        t_range: (0.0, data.horizon()),
        x_lo: [0.0, 0.0],
        x_hi: [lengths[0], lengths.get(1).copied().unwrap_or(0.0)],
    };
    let mut warnings = Vec::new();
    match check_coercivity(pot, &region, 1000.0) {
        Ok(c) if !c.weakly_coercive() => warnings.push(format!(
            "potential does not look weakly coercive (superlinear j: {}, superlinear j*: {})",
            c.superlinear_j, c.superlinear_jstar
        )),
        Ok(_) => {}
        Err(e) => warnings.push(format!("coercivity probe failed: {e}")),
    }
    let sym = check_symmetry(pot, &region, 10.0, 1.0, 0.0);
    if !sym.holds {
        warnings.push(format!(
            "symmetry j(-r) <= j(r) fails near r = {} (t = {})",
            sym.worst_ratio_location, sym.worst_time
        ));
    }
    warnings
}

/// `w_k = ∂j_{λ,σ}(t_k, ·, y₀)` for every step.
fn initial_flux<P: ConvexPotential + ?Sized>(
    data: &ProblemData,
    reg: &RegularizedPotential<'_, P>,
) -> Result<Vec<Vec<f64>>> {
    let xs = data.op().grid().coords();
    (1..=data.steps())
        .map(|k| {
            let t = data.time(k);
            data.y0()
                .iter()
                .zip(xs)
                .map(|(&y, &x)| Ok(reg.value_and_derivative(t, x, y)?.1))
                .collect()
        })
        .collect()
}

fn zero_graph_at_origin<P: ConvexPotential + ?Sized>(data: &ProblemData, pot: &P) -> bool {
    let xs = data.op().grid().coords();
    (1..=data.steps()).all(|k| {
        xs.iter()
            .all(|&x| pot.subdifferential(data.time(k), x, 0.0).contains(0.0))
    })
}

/// Runs the `(λ, σ)` schedule with warm starts and certifies the last
/// iterate with the unregularized potential.
///
/// A stage that stops short of its gradient tolerance ends the run; the
/// report then carries `failed_stage` and the certificate of the last
/// iterate.
pub fn continuation_solve<P: ConvexPotential + ?Sized>(
    data: &ProblemData,
    pot: &P,
    cfg: &SolverConfig,
) -> Result<(Trajectory, SolveReport)> {
    let started = Instant::now();
    let mut warnings = assumption_warnings(data, pot);
    let mut stages = Vec::new();
    let mut timing = Timing::default();
    let mut failed_stage = None;

    let short_circuit = data.is_zero() && zero_graph_at_origin(data, pot);
    let traj = if short_circuit {
        Trajectory::zeros(data.steps(), data.nodes())
    } else {
        let schedule = cfg.stages();
        let first = RegularizedPotential::new(pot, schedule[0].0, schedule[0].1)?;
        let mut w = initial_flux(data, &first)?;
        let mut traj = integrate_state(&w, data)?;
        for (index, &(lambda, sigma)) in schedule.iter().enumerate() {
            let stage_start = Instant::now();
            let reg = RegularizedPotential::new(pot, lambda, sigma)?;
            let start = if cfg.warm_start || index == 0 {
                w.clone()
            } else {
                initial_flux(data, &reg)?
            };
            let outcome = inner_minimize(&start, data, &reg, cfg);
            timing.stage_seconds.push(stage_start.elapsed().as_secs_f64());
            let (w_next, traj_next, stats) = match outcome {
                Ok(v) => v,
                Err(e) => {
                    warnings.push(format!("stage {index} (lambda {lambda:e}, sigma {sigma:e}) failed: {e}"));
                    failed_stage = Some(index);
                    break;
                }
            };
            w = w_next;
            traj = traj_next;
            let gap = pointwise_gap(&traj, data, &Integrand::Exact(pot))?.total;
            stages.push(StageRecord {
                index,
                lambda,
                sigma,
                iterations: stats.iterations,
                evaluations: stats.evaluations,
                restarts: stats.restarts,
                linear_iterations: stats.cg_iterations,
                converged: stats.converged,
                grad_norm: stats.grad_norm,
                regularized_value: stats.value,
                gap,
            });
            if !stats.converged {
                warnings.push(format!(
                    "stage {index} (lambda {lambda:e}, sigma {sigma:e}) hit the iteration cap with gradient norm {:e}",
                    stats.grad_norm
                ));
                failed_stage = Some(index);
                break;
            }
        }
        traj
    };

    let exact = Integrand::Exact(pot);
    let gap = pointwise_gap(&traj, data, &exact)?;
    let report = SolveReport {
        functional: eval_functional(&traj.w, data, &exact)?,
        pointwise_gap: gap.total,
        gap_worst: gap.worst,
        gap_worst_at: gap.worst_at,
        gap_infinite_at: gap.infinite_at,
        energy_identity_residual: energy_identity_residual(&traj, data)?,
        inclusion_violation: inclusion_violation(&traj, data, pot),
        constraint_residual: constraint_residual(&traj, data)?,
        box_check: box_check(&traj, data.bounds()),
        total_iterations: stages.iter().map(|s| s.iterations).sum(),
        converged: failed_stage.is_none(),
        failed_stage,
        short_circuit,
        warnings,
        verdict: gap.total <= cfg.gap_tol,
        stages,
        timing: Timing {
            total_seconds: started.elapsed().as_secs_f64(),
            ..timing
        },
    };
    Ok((traj, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub constraint: f64,
    pub energy: f64,
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            constraint: 1e-8,
            energy: 1e-9,
            gap: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub constraint_residual: f64,
    pub energy_identity_residual: f64,
    pub pointwise_gap: f64,
    pub box_check: Option<BoxCheck>,
    /// Constraint, energy identity and gap all within tolerance. The box
    /// is reported separately.
    pub holds: bool,
}

/// Checks that `traj` is a null minimizer to the given tolerances.
pub fn verify_weak_solution<P: ConvexPotential + ?Sized>(
    traj: &Trajectory,
    data: &ProblemData,
    pot: &P,
    tol: &Tolerances,
) -> Result<Verdict> {
    let constraint = constraint_residual(traj, data)?;
    let energy = energy_identity_residual(traj, data)?;
    let gap = pointwise_gap(traj, data, &Integrand::Exact(pot))?.total;
    Ok(Verdict {
        constraint_residual: constraint,
        energy_identity_residual: energy,
        pointwise_gap: gap,
        box_check: box_check(traj, data.bounds()),
        holds: constraint <= tol.constraint && energy <= tol.energy && gap <= tol.gap,
    })
}
