use crate::potentials::Point;
use crate::{Error, Result};

/// A uniform vertex-centered lattice on `[0, L₁] (× [0, L₂])`.
///
/// Nodes are numbered with the first axis fastest. Quadrature is the
/// tensor trapezoid rule, so boundary nodes carry half (corners a quarter)
/// of an interior cell volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: Vec<f64>,
    cells: Vec<usize>,
    spacing: Vec<f64>,
    coords: Vec<Point>,
    weights: Vec<f64>,
    /// `(node, s_b)` for every boundary node.
    boundary: Vec<(usize, f64)>,
}

/// 1D trapezoid weights on `n + 1` nodes with spacing `h`.
fn trapezoid(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    w
}

pub fn build_grid(dim: usize, lengths: &[f64], cells: &[usize]) -> Result<Grid> {
    if dim == 0 || dim > 2 {
        return Err(Error::Unsupported(format!(
            "spatial dimension {dim}: only 1 and 2 are supported"
        )));
    }
    if lengths.len() != dim || cells.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "expected {dim} lengths and cell counts, got {} and {}",
            lengths.len(),
            cells.len()
        )));
    }
    if let Some(l) = lengths.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(format!("domain length must be > 0, got {l}")));
    }
    if let Some(c) = cells.iter().find(|&&c| c < 2) {
        return Err(Error::InvalidArgument(format!("need at least 2 cells per axis, got {c}")));
    }

    let spacing: Vec<f64> = lengths.iter().zip(cells).map(|(l, &c)| l / c as f64).collect();
    let grid = if dim == 1 {
        let (n, h) = (cells[0], spacing[0]);
        Grid {
            dim,
            coords: (0..=n).map(|i| [i as f64 * h, 0.0]).collect(),
            weights: trapezoid(n, h),
            boundary: vec![(0, 1.0), (n, 1.0)],
            lengths: lengths.to_vec(),
            cells: cells.to_vec(),
            spacing,
        }
    } else {
        let (nx, ny) = (cells[0], cells[1]);
        let (hx, hy) = (spacing[0], spacing[1]);
        let (wx, wy) = (trapezoid(nx, hx), trapezoid(ny, hy));
        let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut weights = Vec::with_capacity(coords.capacity());
        let mut boundary = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                let node = coords.len();
                coords.push([i as f64 * hx, j as f64 * hy]);
                weights.push(wx[i] * wy[j]);
                // Trapezoid measure along each face the node lies on.
                let mut s = 0.0;
                if j == 0 || j == ny {
                    s += wx[i];
                }
                if i == 0 || i == nx {
                    s += wy[j];
                }
                if s > 0.0 {
                    boundary.push((node, s));
                }
            }
        }
        Grid {
            dim,
            lengths: lengths.to_vec(),
            cells: cells.to_vec(),
            spacing,
            coords,
            weights,
            boundary,
        }
    };
    Ok(grid)
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn boundary(&self) -> &[(usize, f64)] {
        &self.boundary
    }

    /// `|Ω|`.
    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// `|Γ|` (the node count of the boundary in 1D).
    pub fn surface(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            _ => 2.0 * (self.lengths[0] + self.lengths[1]),
        }
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Geometric center of the domain.
    pub fn center(&self) -> Point {
        match self.dim {
            1 => [0.5 * self.lengths[0], 0.0],
            _ => [0.5 * self.lengths[0], 0.5 * self.lengths[1]],
        }
    }

    /// Node index of lattice position `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + j * (self.cells[0] + 1)
    }

    /// Weighted inner product `Σ m_i u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    pub(crate) fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() == self.len() {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                expected: self.len(),
                got: u.len(),
            })
        }
    }
}
