//! Scalar convex analysis for the diffusion potential.
//!
//! A potential is a convex function `j(t, x, ·)` on the real line whose
//! subdifferential `β = ∂j` is the (possibly multivalued) diffusion graph.
//! This module evaluates `j`, `β` and the convex conjugate `j*`, the
//! Yosida/Moreau regularizations built on the resolvent `(1 + λβ)⁻¹`, and
//! the structural checks (Fenchel–Young, symmetry, weak coercivity, affine
//! minorants) that the variational solver relies on.
//!
//! Every routine is written against the [`ConvexPotential`] trait, so user
//! supplied potentials get the same machinery as the built-in catalog in
//! [`PotentialSpec`].

mod checks;
mod coefficient;
mod conjugate;
mod families;
mod regularized;
mod solve;
mod tabulated;

pub use checks::{
    affine_minorant, check_coercivity, check_convexity, check_fenchel_young, check_symmetry,
    AffineMinorant, CoercivityReport, FenchelYoungReport, ProbeRegion, SymmetryCert,
};
pub use coefficient::CoefficientField;
pub use conjugate::{conjugate_subgradient, numeric_conjugate};
pub use families::{Family, PotentialSpec};
pub use regularized::{
    conjugate_reg, eval_j_reg, moreau_j, resolvent, yosida_beta, yosida_slope,
    RegularizedPotential,
};
pub use tabulated::{Breakpoint, BreakpointTable};

use crate::Result;

/// A point of the spatial domain. One-dimensional problems use `x[0]` only.
pub type Point = [f64; 2];

/// The value of a maximal monotone graph at a point: the closed interval
/// `[lo, hi]`. Single-valued wherever `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphValue {
    pub lo: f64,
    pub hi: f64,
}

impl GraphValue {
    pub fn single(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "graph interval [{lo}, {hi}] is reversed");
        Self { lo, hi }
    }

    /// Deterministic single-valued selection.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn is_single(&self) -> bool {
        self.lo == self.hi
    }

    /// Distance from `v` to the interval.
    pub fn distance(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }
}

/// A proper convex continuous potential `r ↦ j(t, x, r)` finite on all of ℝ.
///
/// Implementors supply the value, the subdifferential and a slope hint for
/// Newton iterations. The conjugate defaults to a numeric Legendre
/// transform; families with a closed form override it.
pub trait ConvexPotential: Send + Sync {
    /// `j(t, x, r)`.
    fn value(&self, t: f64, x: Point, r: f64) -> f64;

    /// `β(t, x, r) = ∂j(t, x, r)`.
    fn subdifferential(&self, t: f64, x: Point, r: f64) -> GraphValue;

    /// Derivative of `β` in `r` where it is single-valued and smooth;
    /// `f64::INFINITY` at jumps of the graph.
    fn slope(&self, t: f64, x: Point, r: f64) -> f64;

    /// `j*(t, x, ω) = sup_r (ωr − j(t, x, r))`. Returns `Ok(f64::INFINITY)`
    /// outside the effective domain of the conjugate.
    fn conjugate(&self, t: f64, x: Point, omega: f64) -> Result<f64> {
        numeric_conjugate(self, t, x, omega)
    }
}

/// `j(t, x, r)`.
pub fn eval_j<P: ConvexPotential + ?Sized>(pot: &P, t: f64, x: Point, r: f64) -> f64 {
    pot.value(t, x, r)
}

/// `β(t, x, r)` as a closed interval.
pub fn eval_beta<P: ConvexPotential + ?Sized>(pot: &P, t: f64, x: Point, r: f64) -> GraphValue {
    pot.subdifferential(t, x, r)
}

/// `j*(t, x, ω)`; `Ok(f64::INFINITY)` when the supremum is unbounded.
pub fn eval_j_star<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    omega: f64,
) -> Result<f64> {
    pot.conjugate(t, x, omega)
}
