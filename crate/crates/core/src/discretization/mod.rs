//! Vertex-centered finite differences for the Robin Laplacian.
//!
//! With lumped mass `M = diag(m)` and the symmetric stiffness `K` of the
//! form `∫∇u·∇v + α∫_Γ uv`, the nodal operator is `A = M⁻¹K`. It is
//! self-adjoint in the `M`-weighted product, so
//!
//! * `⟨Au, v⟩ = uᵀKv`,
//! * `‖u‖²_V = uᵀKu`,
//! * `(u, v)_{V′} = ⟨u, A⁻¹v⟩ = (Mu)ᵀ K⁻¹ (Mv)`.

mod banded;
mod grid;

pub use banded::{BandLu, BandMatrix};
pub use grid::{build_grid, Grid};

use crate::{Error, Result};

/// The discrete Robin Laplacian with its cached factorization.
#[derive(Debug, Clone)]
pub struct RobinOperator {
    grid: Grid,
    alpha: f64,
    stiffness: BandMatrix,
    factor: BandLu,
}

fn assemble(grid: &Grid, alpha: f64) -> BandMatrix {
    let n = grid.len();
    let h = grid.spacing();
    let mut k = match grid.dim() {
        1 => BandMatrix::zeros(n, 1),
        _ => BandMatrix::zeros(n, grid.cells()[0] + 1),
    };
    // Each lattice edge contributes (u_a − u_b)²/h² times the transverse
    // trapezoid weight times h, i.e. the gradient quadrature on that edge.
    let mut edge = |a: usize, b: usize, c: f64| {
        k.add(a, a, c);
        k.add(b, b, c);
        k.add(a, b, -c);
        k.add(b, a, -c);
    };
    if grid.dim() == 1 {
        for i in 0..grid.cells()[0] {
            edge(i, i + 1, 1.0 / h[0]);
        }
    } else {
        let (nx, ny) = (grid.cells()[0], grid.cells()[1]);
        let half = |i: usize, n: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
        for j in 0..=ny {
            for i in 0..nx {
                let a = grid.index(i, j);
                edge(a, a + 1, half(j, ny) * h[1] / h[0]);
            }
        }
        for j in 0..ny {
            for i in 0..=nx {
                let a = grid.index(i, j);
                edge(a, grid.index(i, j + 1), half(i, nx) * h[0] / h[1]);
            }
        }
    }
    for &(b, s) in grid.boundary() {
        k.add(b, b, alpha * s);
    }
    k
}

pub fn build_robin_operator(grid: &Grid, alpha: f64) -> Result<RobinOperator> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "robin_alpha must be > 0, got {alpha}"
        )));
    }
    let stiffness = assemble(grid, alpha);
    let factor = stiffness.clone().factor()?;
    Ok(RobinOperator {
        grid: grid.clone(),
        alpha,
        stiffness,
        factor,
    })
}

impl RobinOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// The symmetric matrix `K`.
    pub fn stiffness(&self) -> &BandMatrix {
        &self.stiffness
    }

    pub fn stiffness_mul(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness.mul_vec(u)
    }

    pub fn stiffness_solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor.solve(rhs)
    }

    /// `Au = M⁻¹Ku`.
    pub fn apply_a(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(u)?;
        let mut out = self.stiffness.mul_vec(u);
        for (o, m) in out.iter_mut().zip(self.grid.weights()) {
            *o /= m;
        }
        Ok(out)
    }

    /// `A⁻¹ rhs = K⁻¹ M rhs`.
    pub fn solve_a(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_len(rhs)?;
        let mut x: Vec<f64> = rhs.iter().zip(self.grid.weights()).map(|(r, m)| r * m).collect();
        self.factor.solve_in_place(&mut x);
        Ok(x)
    }

    /// `A⁻¹ rhs` with the residual `‖A x − rhs‖_M ≤ tol ‖rhs‖_M` enforced by
    /// iterative refinement.
    pub fn solve_a_tol(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
        let mut x = self.solve_a(rhs)?;
        let norm = self.grid.l2_norm(rhs);
        for _ in 0..3 {
            let ax = self.apply_a(&x)?;
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            if self.grid.l2_norm(&r) <= tol * norm {
                return Ok(x);
            }
            let dx = self.solve_a(&r)?;
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        }
        Err(Error::Factorization(usize::MAX))
    }

    /// `‖u‖_V = (uᵀKu)^{1/2}`.
    pub fn v_norm(&self, u: &[f64]) -> Result<f64> {
        self.grid.check_len(u)?;
        let ku = self.stiffness.mul_vec(u);
        Ok(dot(u, &ku).max(0.0).sqrt())
    }

    /// `(u, v)_{V′} = ⟨u, A⁻¹v⟩`.
    pub fn vdual_inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.grid.check_len(u)?;
        let x = self.solve_a(v)?;
        Ok(self.grid.inner(u, &x))
    }

    pub fn vdual_norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.vdual_inner(u, u)?.max(0.0).sqrt())
    }

    /// The form `Σ_edges ∇u·∇v · measure + α Σ_Γ u v s_b`, evaluated edge by
    /// edge without the assembled matrix.
    pub fn bilinear_form(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.grid.check_len(u)?;
        self.grid.check_len(v)?;
        let g = &self.grid;
        let h = g.spacing();
        let mut acc = 0.0;
        if g.dim() == 1 {
            for i in 0..g.cells()[0] {
                acc += (u[i + 1] - u[i]) * (v[i + 1] - v[i]) / (h[0] * h[0]) * h[0];
            }
        } else {
            let (nx, ny) = (g.cells()[0], g.cells()[1]);
            let half = |i: usize, n: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
            for j in 0..=ny {
                for i in 0..nx {
                    let (a, b) = (g.index(i, j), g.index(i + 1, j));
                    let du = (u[b] - u[a]) / h[0];
                    let dv = (v[b] - v[a]) / h[0];
                    acc += du * dv * h[0] * h[1] * half(j, ny);
                }
            }
            for j in 0..ny {
                for i in 0..=nx {
                    let (a, b) = (g.index(i, j), g.index(i, j + 1));
                    let du = (u[b] - u[a]) / h[1];
                    let dv = (v[b] - v[a]) / h[1];
                    acc += du * dv * h[0] * h[1] * half(i, nx);
                }
            }
        }
        for &(b, s) in g.boundary() {
            acc += self.alpha * u[b] * v[b] * s;
        }
        Ok(acc)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
