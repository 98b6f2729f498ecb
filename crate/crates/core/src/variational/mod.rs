//! The discrete Brezis–Ekeland functional, its minimization over the flux
//! and the continuation in `(λ, σ)`, with the pointwise Fenchel gap as the
//! certificate.

mod continuation;
mod metric;
mod minimize;

pub use continuation::{
    continuation_solve, verify_weak_solution, BoxCheck, SolveReport, StageRecord, Timing,
    Tolerances, Verdict,
};
pub use minimize::{inner_minimize, InnerMethod, InnerStats, SolverConfig};

use serde::Serialize;

use crate::potentials::ConvexPotential;
use crate::state::{
    energy_identity_sides, integrate_state, midpoint_states, Integrand, ProblemData, Trajectory,
};
use crate::Result;

/// `J(w)` in its defining form
/// `Σ Δt Σ m_i [φ(ȳ) + ψ(w)] + ½‖y_K‖²_{V′} − ½‖y₀‖²_{V′} − Σ Δt ⟨ȳ, A⁻¹f⟩`
/// with `y` integrated from `w`.
pub fn eval_functional<P: ConvexPotential + ?Sized>(
    w: &[Vec<f64>],
    data: &ProblemData,
    integrand: &Integrand<'_, P>,
) -> Result<f64> {
    let traj = integrate_state(w, data)?;
    let mid = midpoint_states(&traj);
    let grid = data.op().grid();
    let (m, xs, dt) = (grid.weights(), grid.coords(), data.dt());
    let mut pointwise = 0.0;
    let mut forcing = 0.0;
    for k in 1..=data.steps() {
        let t = data.time(k);
        for i in 0..grid.len() {
            let (phi, psi) = integrand.values(t, xs[i], mid[k - 1][i], w[k - 1][i])?;
            pointwise += dt * m[i] * (phi + psi);
        }
        forcing += dt * grid.inner(&mid[k - 1], data.source_potential(k));
    }
    let op = data.op();
    let last = &traj.y[data.steps()];
    Ok(pointwise + 0.5 * op.vdual_inner(last, last)? - 0.5 * op.vdual_inner(data.y0(), data.y0())? - forcing)
}

/// Quadrature of `j(ȳ) + j*(w) − ȳw` over the space-time cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub total: f64,
    /// Largest nodal integrand and its `(k, node)`.
    pub worst: f64,
    pub worst_at: (usize, usize),
    /// First node where `j*(w) = +∞`, if any.
    pub infinite_at: Option<(usize, usize)>,
}

/// Nodal integrands `j(ȳ_k) + j*(w_k) − ȳ_k w_k`, step `k` at index `k − 1`.
pub fn gap_integrand<P: ConvexPotential + ?Sized>(
    traj: &Trajectory,
    data: &ProblemData,
    integrand: &Integrand<'_, P>,
) -> Result<Vec<Vec<f64>>> {
    let mid = midpoint_states(traj);
    let xs = data.op().grid().coords();
    (1..=data.steps())
        .map(|k| {
            let t = data.time(k);
            (0..xs.len())
                .map(|i| {
                    let (yb, w) = (mid[k - 1][i], traj.w[k - 1][i]);
                    let (phi, psi) = integrand.values(t, xs[i], yb, w)?;
                    Ok(if psi == f64::INFINITY { psi } else { phi + psi - yb * w })
                })
                .collect()
        })
        .collect()
}

/// The certificate `Σ Δt Σ m_i [j(ȳ) + j*(w) − ȳw]` with the unregularized
/// potential (pass [`Integrand::Exact`]) or a regularized one.
pub fn pointwise_gap<P: ConvexPotential + ?Sized>(
    traj: &Trajectory,
    data: &ProblemData,
    integrand: &Integrand<'_, P>,
) -> Result<GapReport> {
    let nodal = gap_integrand(traj, data, integrand)?;
    let m = data.op().grid().weights();
    let dt = data.dt();
    let mut rep = GapReport {
        total: 0.0,
        worst: f64::NEG_INFINITY,
        worst_at: (1, 0),
        infinite_at: None,
    };
    for (k, row) in nodal.iter().enumerate() {
        for (i, &g) in row.iter().enumerate() {
            rep.total += dt * m[i] * g;
            if g > rep.worst {
                rep.worst = g;
                rep.worst_at = (k + 1, i);
            }
            if g == f64::INFINITY && rep.infinite_at.is_none() {
                rep.infinite_at = Some((k + 1, i));
            }
        }
    }
    Ok(rep)
}

/// `|LHS − RHS| / (1 + |RHS|)` for the discrete energy identity.
pub fn energy_identity_residual(traj: &Trajectory, data: &ProblemData) -> Result<f64> {
    let (lhs, rhs) = energy_identity_sides(traj, data)?;
    Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
}

/// `max_{k,i} dist(w_k,i, β(t_k, x_i, ȳ_k,i))`.
pub fn inclusion_violation<P: ConvexPotential + ?Sized>(
    traj: &Trajectory,
    data: &ProblemData,
    pot: &P,
) -> f64 {
    let mid = midpoint_states(traj);
    let xs = data.op().grid().coords();
    let mut worst: f64 = 0.0;
    for k in 1..=data.steps() {
        let t = data.time(k);
        for i in 0..xs.len() {
            let g = pot.subdifferential(t, xs[i], mid[k - 1][i]);
            worst = worst.max(g.distance(traj.w[k - 1][i]));
        }
    }
    worst
}
