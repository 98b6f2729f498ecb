//! The reduced functional `w ↦ J(y(w), w)` and its adjoint gradient.

use super::{integrate_state, midpoint_states, ProblemData, Trajectory};
use crate::potentials::{ConvexPotential, Point, RegularizedPotential};
use crate::{Error, Result};

/// The pair `(φ, ψ)` integrated against states and fluxes.
#[derive(Debug)]
pub enum Integrand<'a, P: ?Sized> {
    /// `φ = j_{λ,σ}`, `ψ = j*_{λ,σ}`.
    Regularized(RegularizedPotential<'a, P>),
    /// `φ = j`, `ψ = j*`.
    Exact(&'a P),
}

impl<P: ?Sized> Clone for Integrand<'_, P> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<P: ?Sized> Copy for Integrand<'_, P> {}

impl<P: ConvexPotential + ?Sized> Integrand<'_, P> {
    /// `(φ(t, x, r), ψ(t, x, ω))`.
    pub fn values(&self, t: f64, x: Point, r: f64, omega: f64) -> Result<(f64, f64)> {
        match self {
            Self::Regularized(reg) => {
                let phi = reg.value_and_derivative(t, x, r)?.0;
                let psi = if reg.sigma() > 0.0 {
                    reg.conjugate(t, x, omega)?.0
                } else {
                    // (j_λ)* = j* + (λ/2)ω²
                    reg.base().conjugate(t, x, omega)? + 0.5 * reg.lambda() * omega * omega
                };
                Ok((phi, psi))
            }
            Self::Exact(pot) => Ok((pot.value(t, x, r), pot.conjugate(t, x, omega)?)),
        }
    }

    fn smooth(&self) -> Result<&RegularizedPotential<'_, P>> {
        match self {
            Self::Regularized(reg) if reg.sigma() > 0.0 => Ok(reg),
            _ => Err(Error::Unsupported(
                "the functional is differentiable only for sigma > 0".into(),
            )),
        }
    }
}

pub(crate) struct Evaluation {
    pub value: f64,
    /// `Σ Δt m (|φ| + |ψ| + |ȳw|)`, the size of what cancels in `value`.
    pub magnitude: f64,
    /// `∂J/∂w_k` at index `k − 1`, Euclidean coordinates.
    pub gradient: Option<Vec<Vec<f64>>>,
    /// `φ″(ȳ)` and `ψ″(w)` per step and node; empty without a gradient.
    pub phi_curv: Vec<Vec<f64>>,
    pub psi_curv: Vec<Vec<f64>>,
    pub traj: Trajectory,
}

/// `∂J/∂w` from the partials `a_k = ∂J/∂ȳ_k` and `b_k = ∂J/∂w_k` (explicit
/// part). `∂J/∂y_k = ½a_k + ½a_{k+1}` and `y_k` depends on `w_l`, `l ≤ k`,
/// through `−Δt M⁻¹K`, so `∂J/∂w_l = b_l − Δt K M⁻¹ Σ_{k ≥ l} ∂J/∂y_k`.
fn adjoint_sweep(a: &[Vec<f64>], b: &[Vec<f64>], data: &ProblemData) -> Vec<Vec<f64>> {
    let op = data.op();
    let m = op.grid().weights();
    let (dt, n, steps) = (data.dt(), m.len(), a.len());
    let mut s = vec![0.0; n];
    let mut scaled = vec![0.0; n];
    let mut ks = vec![0.0; n];
    let mut grad = vec![vec![0.0; n]; steps];
    for k in (1..=steps).rev() {
        for i in 0..n {
            let next = if k < steps { a[k][i] } else { 0.0 };
            s[i] += 0.5 * (a[k - 1][i] + next);
            scaled[i] = s[i] / m[i];
        }
        op.stiffness().mul_vec_into(&scaled, &mut ks);
        for i in 0..n {
            grad[k - 1][i] = b[k - 1][i] - dt * ks[i];
        }
    }
    grad
}

/// The reduced functional and optionally its gradient and curvatures.
///
/// Along `y = y(w)` the energy identity turns
/// `Σ Δt Σ m_i [φ(ȳ) + ψ(w)] + ½‖y_K‖²_{V′} − ½‖y₀‖²_{V′} − Σ Δt ⟨ȳ, A⁻¹f⟩`
/// into `Σ Δt Σ m_i [φ(ȳ) + ψ(w) − ȳ w]`, a sum of nonnegative terms.
/// That form is evaluated here: near a null minimizer it avoids the
/// cancellation between O(1) terms of the original expression.
pub(crate) fn evaluate<P: ConvexPotential + ?Sized>(
    w: &[Vec<f64>],
    data: &ProblemData,
    integrand: &Integrand<'_, P>,
    want_grad: bool,
) -> Result<Evaluation> {
    let smooth = if want_grad { Some(integrand.smooth()?) } else { None };
    let traj = integrate_state(w, data)?;
    let mid = midpoint_states(&traj);
    let grid = data.op().grid();
    let (m, xs) = (grid.weights(), grid.coords());
    let (dt, n, steps) = (data.dt(), grid.len(), data.steps());

    let mut value = 0.0;
    let mut magnitude = 0.0;
    // a_k = Δt M (φ′(ȳ_k) − w_k) and b_k = Δt M (ψ′(w_k) − ȳ_k).
    let buf = if want_grad { steps } else { 0 };
    let mut a = vec![vec![0.0; n]; buf];
    let mut b = vec![vec![0.0; n]; buf];
    let mut phi_curv = vec![vec![0.0; n]; buf];
    let mut psi_curv = vec![vec![0.0; n]; buf];
    for k in 1..=steps {
        let t = data.time(k);
        let (yb, wk) = (&mid[k - 1], &w[k - 1]);
        for i in 0..n {
            let (pv, qv) = match smooth {
                Some(reg) => {
                    let (pv, pd, pc) = reg.second_order(t, xs[i], yb[i])?;
                    let (qv, qd, qc) = reg.conjugate_second_order(t, xs[i], wk[i])?;
                    a[k - 1][i] = dt * m[i] * (pd - wk[i]);
                    b[k - 1][i] = dt * m[i] * (qd - yb[i]);
                    phi_curv[k - 1][i] = pc;
                    psi_curv[k - 1][i] = qc;
                    (pv, qv)
                }
                None => integrand.values(t, xs[i], yb[i], wk[i])?,
            };
            value += dt * m[i] * (pv + qv - yb[i] * wk[i]);
            magnitude += dt * m[i] * (pv.abs() + qv.abs() + (yb[i] * wk[i]).abs());
        }
    }

    Ok(Evaluation {
        value,
        magnitude,
        gradient: want_grad.then(|| adjoint_sweep(&a, &b, data)),
        phi_curv,
        psi_curv,
        traj,
    })
}

/// `∇²J · v` with the curvatures of an [`evaluate`] call.
///
/// Linearizing the partials gives `δa_k = Δt M (Φ_k δȳ_k − v_k)` and
/// `δb_k = Δt M (Ψ_k v_k − δȳ_k)`, where `δȳ` is the midpoint response of
/// the homogeneous state equation to `v`.
pub(crate) fn hessian_apply(
    v: &[Vec<f64>],
    data: &ProblemData,
    phi_curv: &[Vec<f64>],
    psi_curv: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let op = data.op();
    let m = op.grid().weights();
    let (dt, n, steps) = (data.dt(), m.len(), v.len());
    let mut y = vec![0.0; n];
    let mut kv = vec![0.0; n];
    let mut da = vec![vec![0.0; n]; steps];
    let mut db = vec![vec![0.0; n]; steps];
    for k in 0..steps {
        op.stiffness().mul_vec_into(&v[k], &mut kv);
        for i in 0..n {
            let prev = y[i];
            y[i] -= dt * kv[i] / m[i];
            let yb = 0.5 * (prev + y[i]);
            da[k][i] = dt * m[i] * (phi_curv[k][i] * yb - v[k][i]);
            db[k][i] = dt * m[i] * (psi_curv[k][i] * v[k][i] - yb);
        }
    }
    adjoint_sweep(&da, &db, data)
}

/// `∇_w J` for the regularized functional, by one backward sweep.
pub fn adjoint_gradient<P: ConvexPotential + ?Sized>(
    w: &[Vec<f64>],
    data: &ProblemData,
    reg: &RegularizedPotential<'_, P>,
) -> Result<Vec<Vec<f64>>> {
    if !(reg.sigma() > 0.0) {
        return Err(Error::Unsupported("adjoint_gradient needs sigma > 0".into()));
    }
    let eval = evaluate(w, data, &Integrand::Regularized(*reg), true)?;
    Ok(eval.gradient.expect("gradient requested"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, build_robin_operator};
    use crate::potentials::{CoefficientField, PotentialSpec};
    use crate::state::FieldPreset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data() -> ProblemData {
        let op = build_robin_operator(&build_grid(1, &[1.0], &[8]).unwrap(), 1.0).unwrap();
        let bump = FieldPreset::GaussianBump {
            center: vec![0.5],
            width: 0.2,
            amplitude: 1.0,
        };
        let f = FieldPreset::StepInTime {
            switch_time: 0.3,
            amplitude: 0.5,
        };
        ProblemData::from_presets(op, 0.5, 5, &f, &bump, None).unwrap()
    }

    /// The functional in its original form, with the V′ terms.
    fn direct_value(w: &[Vec<f64>], d: &ProblemData, reg: &RegularizedPotential<'_>) -> f64 {
        let traj = integrate_state(w, d).unwrap();
        let mid = midpoint_states(&traj);
        let g = d.op().grid();
        let mut v = 0.0;
        for k in 1..=d.steps() {
            for i in 0..g.len() {
                let x = g.coords()[i];
                let (p, _) = reg.value_and_derivative(d.time(k), x, mid[k - 1][i]).unwrap();
                let (q, _) = reg.conjugate(d.time(k), x, w[k - 1][i]).unwrap();
                v += d.dt() * g.weights()[i] * (p + q - mid[k - 1][i] * d.source_potential(k)[i]);
            }
        }
        let yk = traj.y.last().unwrap();
        v + 0.5 * d.op().vdual_inner(yk, yk).unwrap() - 0.5 * d.op().vdual_inner(d.y0(), d.y0()).unwrap()
    }

    #[test]
    fn gap_form_equals_direct_form() {
        let d = data();
        let pot = PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap();
        let reg = RegularizedPotential::new(&pot, 0.1, 0.1).unwrap();
        let w: Vec<Vec<f64>> = (0..5).map(|k| (0..9).map(|i| ((k * 9 + i) as f64).sin()).collect()).collect();
        let a = evaluate(&w, &d, &Integrand::Regularized(reg), false).unwrap().value;
        let b = direct_value(&w, &d, &reg);
        assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d = data();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pots = [
            PotentialSpec::quadratic(),
            PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap(),
            PotentialSpec::exp_type(CoefficientField::constant(1.0)).unwrap(),
        ];
        for pot in &pots {
            let reg = RegularizedPotential::new(pot, 0.05, 0.05).unwrap();
            let w: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..9).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let g = adjoint_gradient(&w, &d, &reg).unwrap();
            let f = |w: &[Vec<f64>]| direct_value(w, &d, &reg);
            for (k, i) in [(0, 0), (2, 4), (4, 8)] {
                let h = 1e-6;
                let mut wp = w.clone();
                wp[k][i] += h;
                let mut wm = w.clone();
                wm[k][i] -= h;
                let fd = (f(&wp) - f(&wm)) / (2.0 * h);
                assert!((fd - g[k][i]).abs() < 1e-6 * (1.0 + fd.abs()), "{}: {fd} vs {}", pot.name(), g[k][i]);
            }
        }
    }

    #[test]
    fn sigma_zero_value_uses_moreau_conjugate() {
        let d = data();
        let q = PotentialSpec::quadratic();
        let reg = RegularizedPotential::new(&q, 0.5, 0.0).unwrap();
        let w = vec![vec![0.3; 9]; 5];
        assert!(adjoint_gradient(&w, &d, &reg).is_err());
        // j_λ = r²/(2(1+λ)) so (j_λ)*(ω) = (1+λ)ω²/2.
        let v = evaluate(&w, &d, &Integrand::Regularized(reg), false).unwrap().value;
        let reg2 = RegularizedPotential::new(&q, 0.5, 1e-300).unwrap();
        let v2 = evaluate(&w, &d, &Integrand::Regularized(reg2), false).unwrap().value;
        assert!((v - v2).abs() < 1e-12 * v.abs());
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let d = data();
        let pot = PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap();
        let reg = RegularizedPotential::new(&pot, 0.05, 0.05).unwrap();
        let integrand = Integrand::Regularized(reg);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut draw = || -> Vec<Vec<f64>> {
            (0..5).map(|_| (0..9).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
        };
        let (w, v) = (draw(), draw());
        let e = evaluate(&w, &d, &integrand, true).unwrap();
        let hv = hessian_apply(&v, &d, &e.phi_curv, &e.psi_curv);
        let h = 1e-6;
        let shifted = |c: f64| -> Vec<Vec<f64>> {
            let ws: Vec<Vec<f64>> = w.iter().zip(&v).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect()).collect();
            evaluate(&ws, &d, &integrand, true).unwrap().gradient.unwrap()
        };
        let (gp, gm) = (shifted(h), shifted(-h));
        for k in 0..5 {
            for i in 0..9 {
                let fd = (gp[k][i] - gm[k][i]) / (2.0 * h);
                assert!((fd - hv[k][i]).abs() < 1e-5 * (1.0 + fd.abs()), "{fd} vs {}", hv[k][i]);
            }
        }
    }
}
