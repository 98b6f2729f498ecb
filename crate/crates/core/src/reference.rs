//! Implicit Euler for the Yosida-regularized equation
//! `dy/dt + A β_λ(t, x, y) = f`, an oracle independent of the variational
//! route.

use serde::{Deserialize, Serialize};

use crate::discretization::BandMatrix;
use crate::potentials::{yosida_slope, ConvexPotential, RegularizedPotential};
use crate::state::{ProblemData, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Bound on `‖y + Δt A β_λ(y) − y_prev − Δt f‖_M`.
    pub tol: f64,
    pub max_iters: usize,
    /// Smallest damping factor tried before giving up.
    pub min_damping: f64,
    /// First damping factor tried at every iteration.
    pub max_damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 200,
            min_damping: 1e-6,
            max_damping: 1.0,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Vec<(&'static str, String)> {
        let mut errs = Vec::new();
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            errs.push(("tol", "must be > 0".into()));
        }
        if self.max_iters == 0 {
            errs.push(("max_iters", "must be >= 1".into()));
        }
        if !(self.max_damping > 0.0 && self.max_damping <= 1.0) {
            errs.push(("max_damping", "must lie in (0, 1]".into()));
        }
        if !(self.min_damping > 0.0 && self.min_damping <= self.max_damping) {
            errs.push(("min_damping", "must lie in (0, max_damping]".into()));
        }
        errs
    }
}

/// Default Yosida parameter of the oracle.
pub const DEFAULT_LAMBDA: f64 = 1e-4;

struct Step<'a, P: ?Sized> {
    data: &'a ProblemData,
    reg: RegularizedPotential<'a, P>,
    k: usize,
    /// `M (y_prev + Δt f_k)`.
    load: Vec<f64>,
}

/// State of a Newton iterate.
struct Iterate {
    y: Vec<f64>,
    /// `β_λ(y)`.
    b: Vec<f64>,
    /// `R = M y + Δt K β_λ(y) − load`.
    r: Vec<f64>,
    /// `‖M⁻¹R‖_M`.
    norm: f64,
    /// `E(y) = ½ (My − load)ᵀ K⁻¹ (My − load) + Δt Σ m j_λ(y)`, whose
    /// gradient is `M K⁻¹ R`.
    energy: f64,
    /// Sum of magnitudes cancelling in `energy`.
    scale: f64,
}

impl<P: ConvexPotential + ?Sized> Step<'_, P> {
    fn at(&self, y: Vec<f64>) -> Result<Iterate> {
        let t = self.data.time(self.k);
        let op = self.data.op();
        let (xs, m, dt) = (op.grid().coords(), op.grid().weights(), self.data.dt());
        let mut b = Vec::with_capacity(y.len());
        let mut energy = 0.0;
        let mut pot_abs = 0.0;
        for ((&r, &x), &mi) in y.iter().zip(xs).zip(m) {
            let (j, d) = self.reg.value_and_derivative(t, x, r)?;
            b.push(d);
            energy += dt * mi * j;
            pot_abs += dt * mi * j.abs();
        }
        let kb = op.stiffness_mul(&b);
        let shift: Vec<f64> = (0..y.len()).map(|i| m[i] * y[i] - self.load[i]).collect();
        let r: Vec<f64> = (0..y.len()).map(|i| shift[i] + dt * kb[i]).collect();
        let quad = 0.5 * dot(&shift, &op.stiffness_solve(&shift));
        let norm = r.iter().zip(m).map(|(v, mi)| v * v / mi).sum::<f64>().sqrt();
        Ok(Iterate {
            y,
            b,
            r,
            norm,
            energy: energy + quad,
            scale: pot_abs + quad,
        })
    }

    /// `M + Δt K diag(β_λ′(y))`. Column scaling keeps the column diagonal
    /// dominance of `K`, so elimination without pivoting is stable.
    fn jacobian(&self, y: &[f64]) -> Result<BandMatrix> {
        let t = self.data.time(self.k);
        let xs = self.data.op().grid().coords();
        let slopes = y
            .iter()
            .zip(xs)
            .map(|(&r, &x)| Ok(self.data.dt() * yosida_slope(self.reg.base(), t, x, self.reg.lambda(), r)?))
            .collect::<Result<Vec<f64>>>()?;
        let mut jac = self.data.op().stiffness().clone();
        jac.scale_columns(&slopes);
        jac.add_diagonal(1.0, self.data.op().grid().weights());
        Ok(jac)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One implicit step `y + Δt A β_λ(t_k, ·, y) = y_prev + Δt f_k` by damped
/// Newton, returning `(y_k, β_λ(y_k))`.
///
/// The step equation is the optimality condition of the strongly convex
/// energy `E`, and the Newton direction is its Newton direction; damping
/// halves the step until `E` decreases by the Armijo fraction. Residual
/// norm decrease alone can stall where `β_λ′` jumps.
pub fn implicit_euler_step<P: ConvexPotential + ?Sized>(
    y_prev: &[f64],
    data: &ProblemData,
    pot: &P,
    lambda: f64,
    k: usize,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let reg = RegularizedPotential::new(pot, lambda, 0.0)?;
    if k == 0 || k > data.steps() {
        return Err(Error::InvalidArgument(format!("time step {k} outside 1..={}", data.steps())));
    }
    data.op().grid().check_len(y_prev)?;
    let m = data.op().grid().weights();
    let f = data.source(k);
    let load = (0..m.len()).map(|i| m[i] * (y_prev[i] + data.dt() * f[i])).collect();
    let step = Step { data, reg, k, load };

    let mut it = step.at(y_prev.to_vec())?;
    let mut history = vec![it.norm];
    for _ in 0..cfg.max_iters {
        if it.norm <= cfg.tol {
            return Ok((it.y, it.b));
        }
        let mut delta: Vec<f64> = it.r.iter().map(|v| -v).collect();
        step.jacobian(&it.y)?.factor()?.solve_in_place(&mut delta);
        // ∇E·δ = (K⁻¹R)ᵀ M δ
        let md: Vec<f64> = delta.iter().zip(m).map(|(d, mi)| d * mi).collect();
        let slope = dot(&data.op().stiffness_solve(&it.r), &md);
        let noise = NOISE * it.scale;
        let mut damping = cfg.max_damping;
        loop {
            let trial = step.at(it.y.iter().zip(&delta).map(|(a, d)| a + damping * d).collect())?;
            if trial.energy <= it.energy + ARMIJO * damping * slope + noise {
                it = trial;
                break;
            }
            damping *= 0.5;
            if damping < cfg.min_damping {
                history.push(trial.norm);
                return Err(Error::NewtonFailed { step: k, history });
            }
        }
        history.push(it.norm);
    }
    if it.norm <= cfg.tol {
        return Ok((it.y, it.b));
    }
    Err(Error::NewtonFailed { step: k, history })
}

const ARMIJO: f64 = 1e-4;
const NOISE: f64 = 1e-14;

/// Implicit Euler over `k = 1..K`, with the flux `w_k = β_λ(y_k)` stored in
/// the same layout as the variational solver.
pub fn solve_reference<P: ConvexPotential + ?Sized>(
    data: &ProblemData,
    pot: &P,
    lambda: f64,
    cfg: &NewtonConfig,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        y: Vec::with_capacity(data.steps() + 1),
        w: Vec::with_capacity(data.steps()),
    };
    traj.y.push(data.y0().to_vec());
    for k in 1..=data.steps() {
        let (y, w) = implicit_euler_step(&traj.y[k - 1], data, pot, lambda, k, cfg)?;
        traj.y.push(y);
        traj.w.push(w);
    }
    Ok(traj)
}

/// `‖y_a,k − y_b,k‖_{V′}` for `k = 0..K` from two reference solves that
/// share everything but the initial state.
pub fn contraction_check<P: ConvexPotential + ?Sized>(
    data: &ProblemData,
    pot: &P,
    lambda: f64,
    y0_a: &[f64],
    y0_b: &[f64],
    cfg: &NewtonConfig,
) -> Result<Vec<f64>> {
    let a = solve_reference(&data.with_initial_state(y0_a.to_vec())?, pot, lambda, cfg)?;
    let b = solve_reference(&data.with_initial_state(y0_b.to_vec())?, pot, lambda, cfg)?;
    a.y.iter()
        .zip(&b.y)
        .map(|(ya, yb)| {
            let d: Vec<f64> = ya.iter().zip(yb).map(|(p, q)| p - q).collect();
            data.op().vdual_norm(&d)
        })
        .collect()
}
