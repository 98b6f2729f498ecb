//! Sampled diagnostics for the structural assumptions on a potential.
//!
//! None of these are proofs: every check probes finitely many points of
//! a [`ProbeRegion`] and reports what it saw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::conjugate::conjugate_subgradient;
use super::{ConvexPotential, Point};
use crate::Result;

const SEED: u64 = 0x5eed_f00d;

/// The `(t, x)` box over which checks sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRegion {
    pub t_range: (f64, f64),
    pub x_lo: Point,
    pub x_hi: Point,
}

impl Default for ProbeRegion {
    fn default() -> Self {
        Self {
            t_range: (0.0, 1.0),
            x_lo: [0.0, 0.0],
            x_hi: [1.0, 1.0],
        }
    }
}

impl ProbeRegion {
    /// A tensor lattice of `nt` times and `nx × nx` points.
    pub fn lattice(&self, nt: usize, nx: usize) -> Vec<(f64, Point)> {
        let lerp = |a: f64, b: f64, i: usize, n: usize| {
            if n <= 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(nt * nx * nx);
        for it in 0..nt {
            let t = lerp(self.t_range.0, self.t_range.1, it, nt);
            for i in 0..nx {
                for j in 0..nx {
                    let x = [
                        lerp(self.x_lo[0], self.x_hi[0], i, nx),
                        lerp(self.x_lo[1], self.x_hi[1], j, nx),
                    ];
                    out.push((t, x));
                }
            }
        }
        out
    }

    fn random(&self, rng: &mut impl Rng) -> (f64, Point) {
        let t = rng.random_range(self.t_range.0..=self.t_range.1);
        let x = [
            rng.random_range(self.x_lo[0]..=self.x_hi[0]),
            rng.random_range(self.x_lo[1]..=self.x_hi[1]),
        ];
        (t, x)
    }
}

/// Largest violation of the midpoint inequality
/// `j((r₁ + r₂)/2) ≤ (j(r₁) + j(r₂))/2` over random pairs in `[−radius, radius]`.
pub fn check_convexity<P: ConvexPotential + ?Sized>(
    pot: &P,
    region: &ProbeRegion,
    radius: f64,
    samples: usize,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let (t, x) = region.random(&mut rng);
        let a = rng.random_range(-radius..=radius);
        let b = rng.random_range(-radius..=radius);
        let mid = pot.value(t, x, 0.5 * (a + b));
        let chord = 0.5 * (pot.value(t, x, a) + pot.value(t, x, b));
        let scale = 1.0 + chord.abs();
        worst = worst.max((mid - chord) / scale);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FenchelYoungReport {
    pub samples: usize,
    /// `max (rω − j(r) − j*(ω))`; must not be positive beyond round-off.
    pub max_violation: f64,
    /// `max |j(r) + j*(ω) − rω|` over pairs with `ω ∈ β(r)`.
    pub max_equality_error: f64,
    /// `(t, r, ω)` of the largest violation.
    pub worst: (f64, f64, f64),
}

/// Samples `(t, x, r, ω)` with `r, ω ∈ [−3, 3]` and checks the Fenchel–Young
/// inequality, then the equality case with `ω` drawn from `β(r)`.
pub fn check_fenchel_young<P: ConvexPotential + ?Sized>(
    pot: &P,
    region: &ProbeRegion,
    sample_count: usize,
) -> Result<FenchelYoungReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut report = FenchelYoungReport {
        samples: sample_count,
        max_violation: f64::NEG_INFINITY,
        max_equality_error: 0.0,
        worst: (0.0, 0.0, 0.0),
    };
    for _ in 0..sample_count {
        let (t, x) = region.random(&mut rng);
        let r = rng.random_range(-3.0..=3.0);
        let omega = rng.random_range(-3.0..=3.0);
        let v = r * omega - pot.value(t, x, r) - pot.conjugate(t, x, omega)?;
        if v > report.max_violation {
            report.max_violation = v;
            report.worst = (t, r, omega);
        }

        let g = pot.subdifferential(t, x, r);
        let sel = if g.is_single() {
            g.lo
        } else {
            rng.random_range(g.lo..=g.hi)
        };
        let eq = pot.value(t, x, r) + pot.conjugate(t, x, sel)? - r * sel;
        report.max_equality_error = report.max_equality_error.max(eq.abs());
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryCert {
    pub gamma1: f64,
    pub gamma2: f64,
    pub holds: bool,
    /// `r` maximizing `j(t, −r) − γ₁ j(t, r) − γ₂`.
    pub worst_ratio_location: f64,
    pub worst_time: f64,
    pub worst_excess: f64,
}

/// Checks `j(t, x, −r) ≤ γ₁ j(t, x, r) + γ₂` for `r` on a uniform scan of
/// `[−radius, radius]` and a lattice of `(t, x)`.
pub fn check_symmetry<P: ConvexPotential + ?Sized>(
    pot: &P,
    region: &ProbeRegion,
    probe_radius: f64,
    gamma1: f64,
    gamma2: f64,
) -> SymmetryCert {
    const N: usize = 400;
    let mut cert = SymmetryCert {
        gamma1,
        gamma2,
        holds: true,
        worst_ratio_location: 0.0,
        worst_time: region.t_range.0,
        worst_excess: f64::NEG_INFINITY,
    };
    for (t, x) in region.lattice(5, 3) {
        for i in 0..=N {
            let r = -probe_radius + 2.0 * probe_radius * i as f64 / N as f64;
            let lhs = pot.value(t, x, -r);
            let rhs = gamma1 * pot.value(t, x, r) + gamma2;
            let excess = if lhs == rhs { 0.0 } else { lhs - rhs };
            if excess > cert.worst_excess {
                cert.worst_excess = excess;
                cert.worst_ratio_location = r;
                cert.worst_time = t;
            }
        }
    }
    cert.holds = cert.worst_excess <= 1e-12 * (1.0 + gamma2.abs());
    cert
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub superlinear_j: bool,
    pub superlinear_jstar: bool,
    /// Probe points `r_max/100, r_max/10, r_max`.
    pub ladder: [f64; 3],
    /// Smallest `j(±r)/|r|` over the sampled `(t, x)` at each rung.
    pub j_ratios: [f64; 3],
    pub jstar_ratios: [f64; 3],
}

impl CoercivityReport {
    /// Both `j` and `j*` look superlinear.
    pub fn weakly_coercive(&self) -> bool {
        self.superlinear_j && self.superlinear_jstar
    }
}

/// A ratio ladder looks superlinear when it keeps increasing without the
/// increments collapsing, or when it has already blown up.
fn looks_superlinear(rho: [f64; 3]) -> bool {
    if rho[2] == f64::INFINITY {
        return true;
    }
    let (d1, d2) = (rho[1] - rho[0], rho[2] - rho[1]);
    d1 > 0.0 && d2 >= 0.5 * d1
}

/// Probes `j(r)/|r|` and `j*(ω)/|ω|` on the ladder `r_max/100, r_max/10,
/// r_max` in both directions and at sampled `(t, x)`.
pub fn check_coercivity<P: ConvexPotential + ?Sized>(
    pot: &P,
    region: &ProbeRegion,
    r_max: f64,
) -> Result<CoercivityReport> {
    let ladder = [r_max / 100.0, r_max / 10.0, r_max];
    let mut j_ratios = [f64::INFINITY; 3];
    let mut jstar_ratios = [f64::INFINITY; 3];
    for (t, x) in region.lattice(3, 2) {
        for (i, &r) in ladder.iter().enumerate() {
            for s in [-r, r] {
                j_ratios[i] = j_ratios[i].min(pot.value(t, x, s) / r);
                jstar_ratios[i] = jstar_ratios[i].min(pot.conjugate(t, x, s)? / r);
            }
        }
    }
    Ok(CoercivityReport {
        superlinear_j: looks_superlinear(j_ratios),
        superlinear_jstar: looks_superlinear(jstar_ratios),
        ladder,
        j_ratios,
        jstar_ratios,
    })
}

/// `j(r) ≥ k1·r + k2` and `j*(ω) ≥ k3·ω + k4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineMinorant {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// Whether both inequalities held at every sampled point.
    pub verified: bool,
}

/// Tangent minorants at the origin: `k1 ∈ β(0)`, `k2 = j(0)`,
/// `k3 ∈ β⁻¹(0)`, `k4 = j*(0)`, each the midpoint selection, read at the
/// first lattice point and then verified across the region.
pub fn affine_minorant<P: ConvexPotential + ?Sized>(
    pot: &P,
    region: &ProbeRegion,
) -> Result<AffineMinorant> {
    let points = region.lattice(3, 3);
    let (t0, x0) = points[0];
    let k1 = pot.subdifferential(t0, x0, 0.0).midpoint();
    let k2 = pot.value(t0, x0, 0.0);
    let k3 = conjugate_subgradient(pot, t0, x0, 0.0)?
        .map(|g| g.midpoint())
        .unwrap_or(0.0);
    let k4 = pot.conjugate(t0, x0, 0.0)?;

    let mut verified = k4.is_finite();
    for &(t, x) in &points {
        for i in 0..=40 {
            let s = -10.0 + 0.5 * i as f64;
            let tol = 1e-10 * (1.0 + s.abs());
            verified &= pot.value(t, x, s) >= k1 * s + k2 - tol;
            verified &= pot.conjugate(t, x, s)? >= k3 * s + k4 - tol;
        }
    }
    Ok(AffineMinorant {
        k1,
        k2,
        k3,
        k4,
        verified,
    })
}
