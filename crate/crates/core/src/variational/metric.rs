//! Gauss–Newton metric for the reduced functional.
//!
//! Freezing `Φ = φ″(ȳ)` the functional is locally
//! `½ Σ Δt m (Φ^{1/2} ȳ − Φ^{−1/2} w)²`, whose Hessian in `w` is
//! `P = Gᵀ W G` with `W = Δt M`, `G = Φ^{1/2} S − Φ^{−1/2}` and `S` the linear
//! part of `w ↦ ȳ`. `S` is block lower triangular, so `G` and `Gᵀ` are
//! inverted by one forward and one backward sweep with the banded SPD
//! blocks `B_k = ½ΔtK + MΦ_k⁻¹`.

use crate::discretization::BandLu;
use crate::state::ProblemData;
use crate::Result;

pub(crate) struct Metric {
    blocks: Vec<BandLu>,
    /// `Φ_k^{−1/2}` per step and node.
    inv_sqrt_phi: Vec<Vec<f64>>,
}

impl Metric {
    pub fn new(data: &ProblemData, phi: &[Vec<f64>]) -> Result<Self> {
        let dt = data.dt();
        let op = data.op();
        let m = op.grid().weights();
        let mut blocks = Vec::with_capacity(phi.len());
        let mut inv_sqrt_phi = Vec::with_capacity(phi.len());
        for pk in phi {
            let mut b = op.stiffness().clone();
            let mut diag = vec![0.0; m.len()];
            for i in 0..m.len() {
                diag[i] = m[i] / pk[i];
            }
            b.scale_columns(&vec![0.5 * dt; m.len()]);
            b.add_diagonal(1.0, &diag);
            blocks.push(b.factor()?);
            inv_sqrt_phi.push(pk.iter().map(|p| 1.0 / p.sqrt()).collect());
        }
        Ok(Self {
            blocks,
            inv_sqrt_phi,
        })
    }

    /// `P⁻¹ g = G⁻¹ W⁻¹ G⁻ᵀ g`.
    pub fn solve(&self, data: &ProblemData, g: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let dt = data.dt();
        let op = data.op();
        let m = op.grid().weights();
        let (steps, n) = (g.len(), m.len());

        // Gᵀ z = g, backward: B_l q_l = −(g_l + Δt K Σ_{k>l} q_k), z_l = Φ_l^{−1/2} M q_l.
        let mut z = vec![vec![0.0; n]; steps];
        let mut acc = vec![0.0; n];
        for l in (0..steps).rev() {
            let kc = op.stiffness_mul(&acc);
            let mut q: Vec<f64> = (0..n).map(|i| -(g[l][i] + dt * kc[i])).collect();
            self.blocks[l].solve_in_place(&mut q);
            for i in 0..n {
                z[l][i] = self.inv_sqrt_phi[l][i] * m[i] * q[i];
                acc[i] += q[i];
            }
        }

        // v = W⁻¹ z, then G u = v, forward: B_k u_k = −(M Φ_k^{−1/2} v_k + Δt K Σ_{l<k} u_l).
        let mut u = vec![vec![0.0; n]; steps];
        acc.iter_mut().for_each(|a| *a = 0.0);
        for k in 0..steps {
            let kd = op.stiffness_mul(&acc);
            let mut rhs: Vec<f64> = (0..n)
                .map(|i| -(self.inv_sqrt_phi[k][i] * z[k][i] / dt + dt * kd[i]))
                .collect();
            self.blocks[k].solve_in_place(&mut rhs);
            for i in 0..n {
                acc[i] += rhs[i];
            }
            u[k] = rhs;
        }
        u
    }
}
