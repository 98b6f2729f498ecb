//! The discrete linear state equation `dy/dt + Aw = f`.
//!
//! Step `k = 1..K` reads `y_k = y_{k−1} + Δt (f_k − A w_k)`, with the flux
//! sampled at the right endpoint and potentials evaluated at the midpoint
//! `ȳ_k = (y_{k−1} + y_k)/2`. With this pairing the energy identity
//!
//! ```text
//! −Σ Δt ⟨ȳ_k, w_k⟩ = ½‖y_K‖²_{V′} − ½‖y₀‖²_{V′} − Σ Δt ⟨ȳ_k, A⁻¹f_k⟩
//! ```
//!
//! telescopes exactly.

mod functional;
mod presets;

pub use functional::{adjoint_gradient, Integrand};
pub(crate) use functional::{evaluate, hessian_apply};
pub use presets::FieldPreset;

use crate::discretization::RobinOperator;
use crate::{Error, Result};

/// Everything that defines one evolution problem apart from the potential.
#[derive(Debug, Clone)]
pub struct ProblemData {
    op: RobinOperator,
    horizon: f64,
    steps: usize,
    /// `f_k` for `k = 1..K`, stored at index `k − 1`.
    source: Vec<Vec<f64>>,
    /// `A⁻¹ f_k`, same layout.
    source_potential: Vec<Vec<f64>>,
    y0: Vec<f64>,
    bounds: Option<(f64, f64)>,
}

impl ProblemData {
    /// `source` holds `f_k` for `k = 1..K`.
    pub fn new(
        op: RobinOperator,
        horizon: f64,
        source: Vec<Vec<f64>>,
        y0: Vec<f64>,
        bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon T must be > 0, got {horizon}")));
        }
        let steps = source.len();
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        op.grid().check_len(&y0)?;
        for f in &source {
            op.grid().check_len(f)?;
        }
        if !y0.iter().chain(source.iter().flatten()).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("f and y0 must be finite".into()));
        }
        if let Some((lo, hi)) = bounds {
            if !(lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "state box needs y_m < y_M, got [{lo}, {hi}]"
                )));
            }
        }
        let source_potential = source
            .iter()
            .map(|f| op.solve_a(f))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            op,
            horizon,
            steps,
            source,
            source_potential,
            y0,
            bounds,
        })
    }

    /// Samples `f` at `t_k = kΔt` and `y₀` at `t = 0` from presets.
    pub fn from_presets(
        op: RobinOperator,
        horizon: f64,
        steps: usize,
        f: &FieldPreset,
        y0: &FieldPreset,
        bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        if matches!(y0, FieldPreset::StepInTime { .. }) {
            return Err(Error::InvalidArgument(
                "step_in_time is a source preset, not an initial state".into(),
            ));
        }
        let dt = horizon / steps as f64;
        let grid = op.grid();
        let source = (1..=steps).map(|k| f.sample(grid, k as f64 * dt)).collect();
        let y0 = y0.sample(grid, 0.0);
        Self::new(op, horizon, source, y0, bounds)
    }

    /// The same problem started from `y0`.
    pub fn with_initial_state(&self, y0: Vec<f64>) -> Result<Self> {
        self.op.grid().check_len(&y0)?;
        if !y0.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("y0 must be finite".into()));
        }
        Ok(Self { y0, ..self.clone() })
    }

    pub fn op(&self) -> &RobinOperator {
        &self.op
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_k = kΔt`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// `f_k`, `k = 1..K`.
    pub fn source(&self, k: usize) -> &[f64] {
        &self.source[k - 1]
    }

    /// `A⁻¹ f_k`, `k = 1..K`.
    pub fn source_potential(&self, k: usize) -> &[f64] {
        &self.source_potential[k - 1]
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    /// `f ≡ 0` and `y₀ ≡ 0`.
    pub fn is_zero(&self) -> bool {
        self.y0.iter().chain(self.source.iter().flatten()).all(|&v| v == 0.0)
    }

    /// Number of spatial nodes.
    pub fn nodes(&self) -> usize {
        self.op.len()
    }
}

/// States `y_0..y_K` and fluxes `w_1..w_K` (flux `w_k` at index `k − 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub y: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn zeros(steps: usize, nodes: usize) -> Self {
        Self {
            y: vec![vec![0.0; nodes]; steps + 1],
            w: vec![vec![0.0; nodes]; steps],
        }
    }

    pub fn steps(&self) -> usize {
        self.w.len()
    }
}

fn check_flux(w: &[Vec<f64>], data: &ProblemData) -> Result<()> {
    if w.len() != data.steps() {
        return Err(Error::SizeMismatch {
            expected: data.steps(),
            got: w.len(),
        });
    }
    for wk in w {
        data.op().grid().check_len(wk)?;
    }
    Ok(())
}

/// `y_0 = y₀`, `y_k = y_{k−1} + Δt (f_k − A w_k)`.
pub fn integrate_state(w: &[Vec<f64>], data: &ProblemData) -> Result<Trajectory> {
    check_flux(w, data)?;
    let dt = data.dt();
    let m = data.op().grid().weights();
    let mut y = Vec::with_capacity(w.len() + 1);
    y.push(data.y0().to_vec());
    for (k, wk) in w.iter().enumerate() {
        let kw = data.op().stiffness_mul(wk);
        let f = data.source(k + 1);
        let next: Vec<f64> = y[k]
            .iter()
            .zip(f)
            .zip(kw.iter().zip(m))
            .map(|((yp, fi), (kwi, mi))| yp + dt * (fi - kwi / mi))
            .collect();
        y.push(next);
    }
    Ok(Trajectory { y, w: w.to_vec() })
}

/// `ȳ_k = (y_{k−1} + y_k)/2` for `k = 1..K` (index `k − 1`).
pub fn midpoint_states(traj: &Trajectory) -> Vec<Vec<f64>> {
    traj.y
        .windows(2)
        .map(|p| p[0].iter().zip(&p[1]).map(|(a, b)| 0.5 * (a + b)).collect())
        .collect()
}

/// `max_k ‖(y_k − y_{k−1})/Δt + A w_k − f_k‖_M`.
pub fn constraint_residual(traj: &Trajectory, data: &ProblemData) -> Result<f64> {
    check_flux(&traj.w, data)?;
    if traj.y.len() != data.steps() + 1 {
        return Err(Error::SizeMismatch {
            expected: data.steps() + 1,
            got: traj.y.len(),
        });
    }
    let dt = data.dt();
    let grid = data.op().grid();
    let mut worst: f64 = 0.0;
    for k in 1..=data.steps() {
        let aw = data.op().apply_a(&traj.w[k - 1])?;
        let f = data.source(k);
        let r: Vec<f64> = (0..grid.len())
            .map(|i| (traj.y[k][i] - traj.y[k - 1][i]) / dt + aw[i] - f[i])
            .collect();
        worst = worst.max(grid.l2_norm(&r));
    }
    Ok(worst)
}

/// Both sides of the discrete energy identity: `(−Σ Δt⟨ȳ, w⟩,
/// ½‖y_K‖²_{V′} − ½‖y₀‖²_{V′} − Σ Δt⟨ȳ, A⁻¹f⟩)`.
pub fn energy_identity_sides(traj: &Trajectory, data: &ProblemData) -> Result<(f64, f64)> {
    let dt = data.dt();
    let grid = data.op().grid();
    let mid = midpoint_states(traj);
    let mut lhs = 0.0;
    let mut forcing = 0.0;
    for (k, yb) in mid.iter().enumerate() {
        lhs -= dt * grid.inner(yb, &traj.w[k]);
        forcing += dt * grid.inner(yb, data.source_potential(k + 1));
    }
    let op = data.op();
    let last = traj.y.last().expect("trajectory has y_0");
    let rhs = 0.5 * op.vdual_inner(last, last)? - 0.5 * op.vdual_inner(&traj.y[0], &traj.y[0])? - forcing;
    Ok((lhs, rhs))
}
