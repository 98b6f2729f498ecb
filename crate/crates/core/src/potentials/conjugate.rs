use super::solve::{solve_inclusion, Inclusion};
use super::{ConvexPotential, GraphValue, Point};
use crate::Result;

/// Numeric Legendre transform `sup_r (ωr − j(r))`.
///
/// The supremand is concave with superdifferential `ω − β(r)`, so the
/// maximizer is any `r` with `ω ∈ β(r)`. The bracket is grown by doubling
/// from `[−1, 1]` until the superdifferential changes sign, then refined by
/// safeguarded Newton/bisection on the inclusion. If the bracket reaches the
/// hard cap the supremum is reported as `+∞`.
pub fn numeric_conjugate<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    omega: f64,
) -> Result<f64> {
    match solve_inclusion(pot, t, x, 0.0, 1.0, omega)? {
        Inclusion::Solved { z, .. } => Ok(omega * z - pot.value(t, x, z)),
        Inclusion::Unbounded => Ok(f64::INFINITY),
    }
}

/// `∂j*(ω) = β⁻¹(ω)` as an interval, or `None` when `ω` lies outside the
/// range of `β`.
pub fn conjugate_subgradient<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    omega: f64,
) -> Result<Option<GraphValue>> {
    let z = match solve_inclusion(pot, t, x, 0.0, 1.0, omega)? {
        Inclusion::Solved { z, .. } => z,
        Inclusion::Unbounded => return Ok(None),
    };
    // Flat pieces of β make β⁻¹(ω) an interval; walk out to its ends.
    let inside = |r: f64| pot.subdifferential(t, x, r).contains(omega);
    let edge = |dir: f64| {
        let mut step = 1e-6 * (1.0 + z.abs());
        let mut inner = z;
        let mut outer = z + dir * step;
        while inside(outer) {
            inner = outer;
            step *= 2.0;
            outer = z + dir * step;
            if step > 1e150 {
                return dir * f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (inner + outer);
            if mid == inner || mid == outer {
                break;
            }
            if inside(mid) {
                inner = mid;
            } else {
                outer = mid;
            }
        }
        inner
    };
    Ok(Some(GraphValue::interval(edge(-1.0), edge(1.0))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Breakpoint, BreakpointTable, CoefficientField, PotentialSpec};

    #[test]
    fn inverse_of_strictly_monotone_graph_is_a_point() {
        let pot = PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap();
        let g = conjugate_subgradient(&pot, 0.0, [0.0; 2], 1.0).unwrap().unwrap();
        let expected = std::f64::consts::E - 1.0;
        assert!((g.lo - expected).abs() < 1e-12 && (g.hi - expected).abs() < 1e-12);
    }

    #[test]
    fn flat_piece_inverts_to_interval() {
        let table = BreakpointTable::new(vec![
            Breakpoint { r: -1.0, lo: -1.0, hi: -1.0 },
            Breakpoint { r: 0.0, lo: 0.0, hi: 0.0 },
            Breakpoint { r: 1.0, lo: 0.0, hi: 0.0 },
            Breakpoint { r: 2.0, lo: 1.0, hi: 1.0 },
        ])
        .unwrap();
        let pot = PotentialSpec::tabulated(table);
        let g = conjugate_subgradient(&pot, 0.0, [0.0; 2], 0.0).unwrap().unwrap();
        assert!(g.lo.abs() < 1e-12 && (g.hi - 1.0).abs() < 1e-12, "{g:?}");
    }

    #[test]
    fn outside_the_range_there_is_no_subgradient() {
        let pot = PotentialSpec::abs_value();
        assert!(conjugate_subgradient(&pot, 0.0, [0.0; 2], 2.0).unwrap().is_none());
    }
}
