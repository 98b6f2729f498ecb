//! Safeguarded Newton for scalar monotone inclusions
//! `target ∈ linear·z + graph·β(t, x, z)`.

use super::{ConvexPotential, Point};
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 200;
/// Bracket doubling stops here; beyond it the supremum is treated as unbounded.
const BRACKET_CAP: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Inclusion {
    /// `z` solves the inclusion with graph selection `selection ∈ β(z)`.
    Solved { z: f64, selection: f64 },
    /// No root below the bracket cap (only possible when `linear == 0`).
    Unbounded,
}

struct Map<'a, P: ?Sized> {
    pot: &'a P,
    t: f64,
    x: Point,
    linear: f64,
    graph: f64,
}

impl<P: ConvexPotential + ?Sized> Map<'_, P> {
    fn range(&self, z: f64) -> (f64, f64) {
        let g = self.pot.subdifferential(self.t, self.x, z);
        let base = self.linear * z;
        (base + self.graph * g.lo, base + self.graph * g.hi)
    }

    fn solved(&self, z: f64, target: f64) -> Inclusion {
        let g = self.pot.subdifferential(self.t, self.x, z);
        let selection = ((target - self.linear * z) / self.graph).clamp(g.lo, g.hi);
        Inclusion::Solved { z, selection }
    }
}

pub(crate) fn solve_inclusion<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    linear: f64,
    graph: f64,
    target: f64,
) -> Result<Inclusion> {
    debug_assert!(linear >= 0.0 && graph > 0.0);
    if !target.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "inclusion target must be finite, got {target}"
        )));
    }
    let map = Map {
        pot,
        t,
        x,
        linear,
        graph,
    };

    let (lo0, hi0) = map.range(0.0);
    if lo0 <= target && target <= hi0 {
        return Ok(map.solved(0.0, target));
    }

    // Bracket [a, b] with range(a).hi < target < range(b).lo.
    let (mut a, mut b) = if target > hi0 {
        let g0 = pot.subdifferential(t, x, 0.0);
        if linear > 0.0 {
            (0.0, (target - graph * g0.hi) / linear)
        } else {
            let mut a = 0.0;
            let mut b = 1.0;
            while map.range(b).0 < target {
                a = b;
                b *= 2.0;
                if b > BRACKET_CAP {
                    return Ok(Inclusion::Unbounded);
                }
            }
            (a, b)
        }
    } else {
        let g0 = pot.subdifferential(t, x, 0.0);
        if linear > 0.0 {
            ((target - graph * g0.lo) / linear, 0.0)
        } else {
            let mut b = 0.0;
            let mut a = -1.0;
            while map.range(a).1 > target {
                b = a;
                a *= 2.0;
                if a < -BRACKET_CAP {
                    return Ok(Inclusion::Unbounded);
                }
            }
            (a, b)
        }
    };

    // The analytic end of the bracket may itself be the root.
    for end in [a, b] {
        let (lo, hi) = map.range(end);
        if lo <= target && target <= hi {
            return Ok(map.solved(end, target));
        }
    }

    let mut z = if target > hi0 { a } else { b };
    // Widths of the last two brackets; Newton creeping along a steep
    // convex branch shrinks them slowly, which forces a bisection.
    let mut widths = [f64::INFINITY; 2];
    for _ in 0..MAX_ITERATIONS {
        let g = pot.subdifferential(t, x, z);
        let residual = linear * z + graph * g.midpoint() - target;
        let derivative = linear + graph * pot.slope(t, x, z);
        let newton = if derivative.is_finite() && derivative > 0.0 {
            z - residual / derivative
        } else {
            f64::NAN
        };
        let stalled = b - a > 0.5 * widths[0];
        widths = [widths[1], b - a];
        let next = if newton > a && newton < b && !stalled {
            newton
        } else {
            0.5 * (a + b)
        };

        let (lo, hi) = map.range(next);
        if lo <= target && target <= hi {
            return Ok(map.solved(next, target));
        }
        if hi < target {
            a = next;
        } else {
            b = next;
        }

        let step = (next - z).abs();
        z = next;
        let scale = 1.0 + z.abs();
        if step <= 1e-15 * scale || (b - a) <= 4.0 * f64::EPSILON * scale {
            return Ok(map.solved(z, target));
        }
    }
    Err(Error::RootSolve {
        iterations: MAX_ITERATIONS,
        lo: a,
        hi: b,
        target,
    })
}
