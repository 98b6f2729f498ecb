//! Yosida approximation, Moreau envelope and the strongly convex
//! regularization `j_{λ,σ} = j_λ + (σ/2) r²`.

use super::solve::{solve_inclusion, Inclusion};
use super::{ConvexPotential, Point, PotentialSpec};
use crate::{Error, Result};

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "regularization parameter lambda must be > 0, got {lambda}"
        )))
    }
}

/// Resolvent point and the graph selection `b ∈ β(z)` with `z + λb = r`.
fn resolve<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    lambda: f64,
    r: f64,
) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    match solve_inclusion(pot, t, x, 1.0, lambda, r)? {
        Inclusion::Solved { z, selection } => Ok((z, selection)),
        Inclusion::Unbounded => unreachable!("resolvent inclusion has a linear term"),
    }
}

/// `(1 + λβ)⁻¹ r`: the unique `z` with `r ∈ z + λβ(z)`.
pub fn resolvent<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    lambda: f64,
    r: f64,
) -> Result<f64> {
    resolve(pot, t, x, lambda, r).map(|(z, _)| z)
}

/// `β_λ(r) = (r − (1 + λβ)⁻¹ r) / λ`.
pub fn yosida_beta<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    lambda: f64,
    r: f64,
) -> Result<f64> {
    let z = resolvent(pot, t, x, lambda, r)?;
    Ok((r - z) / lambda)
}

fn slope_at(pot: &(impl ConvexPotential + ?Sized), t: f64, x: Point, lambda: f64, z: f64, b: f64) -> f64 {
    let g = pot.subdifferential(t, x, z);
    let s = pot.slope(t, x, z);
    if (g.lo < b && b < g.hi) || s.is_infinite() {
        1.0 / lambda
    } else {
        s / (1.0 + lambda * s)
    }
}

/// `∂β_λ/∂r`; equals `1/λ` wherever the resolvent sits on a jump of `β`.
pub fn yosida_slope<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    lambda: f64,
    r: f64,
) -> Result<f64> {
    let (z, b) = resolve(pot, t, x, lambda, r)?;
    Ok(slope_at(pot, t, x, lambda, z, b))
}

/// Moreau envelope `j_λ(r) = |r − z|²/(2λ) + j(z)` with `z` the resolvent.
pub fn moreau_j<P: ConvexPotential + ?Sized>(
    pot: &P,
    t: f64,
    x: Point,
    lambda: f64,
    r: f64,
) -> Result<f64> {
    let z = resolvent(pot, t, x, lambda, r)?;
    let d = r - z;
    Ok(d * d / (2.0 * lambda) + pot.value(t, x, z))
}

/// A potential paired with regularization parameters `(λ, σ)`.
#[derive(Debug)]
pub struct RegularizedPotential<'a, P: ?Sized = PotentialSpec> {
    base: &'a P,
    lambda: f64,
    sigma: f64,
}

impl<P: ?Sized> Clone for RegularizedPotential<'_, P> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<P: ?Sized> Copy for RegularizedPotential<'_, P> {}

impl<'a, P: ConvexPotential + ?Sized> RegularizedPotential<'a, P> {
    pub fn new(base: &'a P, lambda: f64, sigma: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "regularization parameter sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(Self {
            base,
            lambda,
            sigma,
        })
    }

    pub fn base(&self) -> &'a P {
        self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `(j_{λ,σ}(r), β_λ(r) + σr)`.
    pub fn value_and_derivative(&self, t: f64, x: Point, r: f64) -> Result<(f64, f64)> {
        let (z, _) = resolve(self.base, t, x, self.lambda, r)?;
        let b = (r - z) / self.lambda;
        let value = 0.5 * self.lambda * b * b + self.base.value(t, x, z) + 0.5 * self.sigma * r * r;
        Ok((value, b + self.sigma * r))
    }

    /// Second derivative `β_λ′(r) + σ`, in `[σ, 1/λ + σ]`.
    pub fn curvature(&self, t: f64, x: Point, r: f64) -> Result<f64> {
        let (z, b) = resolve(self.base, t, x, self.lambda, r)?;
        Ok(slope_at(self.base, t, x, self.lambda, z, b) + self.sigma)
    }

    /// `(j_{λ,σ}, j_{λ,σ}′, j_{λ,σ}″)` from a single resolvent solve.
    pub fn second_order(&self, t: f64, x: Point, r: f64) -> Result<(f64, f64, f64)> {
        let (z, b) = resolve(self.base, t, x, self.lambda, r)?;
        let value = 0.5 * self.lambda * b * b + self.base.value(t, x, z) + 0.5 * self.sigma * r * r;
        let curv = slope_at(self.base, t, x, self.lambda, z, b) + self.sigma;
        Ok((value, b + self.sigma * r, curv))
    }

    /// `(j_{λ,σ}*, (j_{λ,σ}*)′, (j_{λ,σ}*)″)` at `ω`; the derivative is the
    /// maximizer `r*` and the second derivative `1 / j_{λ,σ}″(r*)`.
    pub fn conjugate_second_order(&self, t: f64, x: Point, omega: f64) -> Result<(f64, f64, f64)> {
        let (value, r, z, b) = self.conjugate_parts(t, x, omega)?;
        let curv = slope_at(self.base, t, x, self.lambda, z, b) + self.sigma;
        Ok((value, r, 1.0 / curv))
    }

    /// `(j_{λ,σ}*(ω), r*)` where `r*` is the maximizer of `ωr − j_{λ,σ}(r)`.
    ///
    /// The maximizer solves `ω = β_λ(r) + σr`. Writing `r = z + λb` with
    /// `b ∈ β(z)` turns this into the single inclusion
    /// `ω ∈ σz + (1 + σλ)β(z)`, solved without nesting a resolvent.
    pub fn conjugate(&self, t: f64, x: Point, omega: f64) -> Result<(f64, f64)> {
        self.conjugate_parts(t, x, omega).map(|(v, r, _, _)| (v, r))
    }

    /// Value, maximizer `r = z + λb` and the resolvent pair `(z, b)`.
    fn conjugate_parts(&self, t: f64, x: Point, omega: f64) -> Result<(f64, f64, f64, f64)> {
        if !(self.sigma > 0.0) {
            return Err(Error::Unsupported(
                "the regularized conjugate needs sigma > 0".into(),
            ));
        }
        let (lambda, sigma) = (self.lambda, self.sigma);
        let (z, b) = match solve_inclusion(self.base, t, x, sigma, 1.0 + sigma * lambda, omega)? {
            Inclusion::Solved { z, selection } => (z, selection),
            Inclusion::Unbounded => unreachable!("sigma > 0 gives a linear term"),
        };
        let r = z + lambda * b;
        let primal = 0.5 * lambda * b * b + self.base.value(t, x, z) + 0.5 * sigma * r * r;
        Ok((omega * r - primal, r, z, b))
    }
}

/// `(j_{λ,σ}(t, x, r), ∂_r j_{λ,σ}(t, x, r))`.
pub fn eval_j_reg<P: ConvexPotential + ?Sized>(
    reg: &RegularizedPotential<'_, P>,
    t: f64,
    x: Point,
    r: f64,
) -> Result<(f64, f64)> {
    reg.value_and_derivative(t, x, r)
}

/// `(j_{λ,σ}*(t, x, ω), maximizer)`; requires `σ > 0`.
pub fn conjugate_reg<P: ConvexPotential + ?Sized>(
    reg: &RegularizedPotential<'_, P>,
    t: f64,
    x: Point,
    omega: f64,
) -> Result<(f64, f64)> {
    reg.conjugate(t, x, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{eval_j, CoefficientField};

    const O: Point = [0.0, 0.0];

    fn catalog() -> Vec<PotentialSpec> {
        vec![
            PotentialSpec::quadratic(),
            PotentialSpec::power(3.0).unwrap(),
            PotentialSpec::power(1.5).unwrap(),
            PotentialSpec::log_type(CoefficientField::constant(1.0)).unwrap(),
            PotentialSpec::log_type(CoefficientField::constant(2.0)).unwrap(),
            PotentialSpec::exp_type(CoefficientField::constant(1.0)).unwrap(),
            PotentialSpec::abs_value(),
        ]
    }

    /// Brute-force Moreau envelope over a fine s-grid.
    fn grid_moreau(pot: &PotentialSpec, lambda: f64, r: f64) -> (f64, f64) {
        let n = 200_000;
        let (lo, hi) = (r - 4.0, r + 4.0);
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .map(|s| ((r - s).powi(2) / (2.0 * lambda) + eval_j(pot, 0.0, O, s), s))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a })
    }

    #[test]
    fn resolvent_examples() {
        let q = PotentialSpec::quadratic();
        assert_eq!(resolvent(&q, 0.0, O, 1.0, 2.0).unwrap(), 1.0);
        let abs = PotentialSpec::abs_value();
        assert!((resolvent(&abs, 0.0, O, 0.5, 2.0).unwrap() - 1.5).abs() < 1e-14);
        let (_, s) = grid_moreau(&abs, 0.5, 2.0);
        assert!((s - 1.5).abs() < 1e-4);
        for pot in catalog() {
            assert_eq!(resolvent(&pot, 0.0, O, 0.3, 0.0).unwrap(), 0.0, "{}", pot.name());
        }
    }

    #[test]
    fn yosida_examples() {
        let q = PotentialSpec::quadratic();
        assert!((yosida_beta(&q, 0.0, O, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let abs = PotentialSpec::abs_value();
        assert!((yosida_beta(&abs, 0.0, O, 0.5, 0.25).unwrap() - 0.5).abs() < 1e-15);
        let (_, s) = grid_moreau(&abs, 0.5, 0.25);
        assert!(((0.25 - s) / 0.5 - 0.5).abs() < 1e-4);
        for pot in catalog() {
            assert_eq!(yosida_beta(&pot, 0.0, O, 0.1, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn moreau_examples() {
        let q = PotentialSpec::quadratic();
        assert!((moreau_j(&q, 0.0, O, 1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let abs = PotentialSpec::abs_value();
        assert!((moreau_j(&abs, 0.0, O, 0.5, 2.0).unwrap() - 1.75).abs() < 1e-15);
        assert!((grid_moreau(&abs, 0.5, 2.0).0 - 1.75).abs() < 1e-8);
        for pot in catalog() {
            assert_eq!(moreau_j(&pot, 0.0, O, 0.1, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn moreau_matches_grid_minimization() {
        for pot in catalog() {
            for &r in &[-1.7, -0.3, 0.05, 0.8, 2.2] {
                let closed = moreau_j(&pot, 0.0, O, 0.2, r).unwrap();
                let (grid, _) = grid_moreau(&pot, 0.2, r);
                assert!(
                    closed <= grid + 1e-12 && grid - closed < 1e-7 * (1.0 + closed.abs()),
                    "{} r = {r}: {closed} vs {grid}",
                    pot.name()
                );
            }
        }
    }

    #[test]
    fn eval_j_reg_examples() {
        let q = PotentialSpec::quadratic();
        let reg = RegularizedPotential::new(&q, 1.0, 0.5).unwrap();
        let (v, d) = eval_j_reg(&reg, 0.0, O, 2.0).unwrap();
        assert!((v - 2.0).abs() < 1e-15 && (d - 2.0).abs() < 1e-15);

        let abs = PotentialSpec::abs_value();
        let reg = RegularizedPotential::new(&abs, 0.5, 0.0).unwrap();
        let (v, d) = eval_j_reg(&reg, 0.0, O, 2.0).unwrap();
        assert!((v - 1.75).abs() < 1e-15 && (d - 1.0).abs() < 1e-15);

        for pot in catalog() {
            let reg = RegularizedPotential::new(&pot, 0.1, 0.2).unwrap();
            assert_eq!(eval_j_reg(&reg, 0.0, O, 0.0).unwrap(), (0.0, 0.0));
        }
    }

    /// Grid supremum of ωr − j_{λ,σ}(r) over r ∈ [−10, 10].
    fn grid_conjugate(reg: &RegularizedPotential<'_>, omega: f64) -> f64 {
        let n = 400_000;
        (0..=n)
            .map(|i| -10.0 + 20.0 * i as f64 / n as f64)
            .map(|r| omega * r - reg.value_and_derivative(0.0, O, r).unwrap().0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn conjugate_reg_examples() {
        let q = PotentialSpec::quadratic();
        let reg = RegularizedPotential::new(&q, 0.5, 0.5).unwrap();
        let (v, r) = conjugate_reg(&reg, 0.0, O, 1.0).unwrap();
        assert!((v - 3.0 / 7.0).abs() < 1e-14 && (r - 6.0 / 7.0).abs() < 1e-14);
        assert!((grid_conjugate(&reg, 1.0) - 3.0 / 7.0).abs() < 1e-8);

        let reg = RegularizedPotential::new(&q, 1e-6, 1.0).unwrap();
        let (v, r) = conjugate_reg(&reg, 0.0, O, 2.0).unwrap();
        let c = 1.0 / (1.0 + 1e-6) + 1.0;
        assert!((v - 4.0 / (2.0 * c)).abs() < 1e-12 && (r - 2.0 / c).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-5);
        assert!((grid_conjugate(&reg, 2.0) - v).abs() < 1e-8);

        for pot in catalog() {
            let reg = RegularizedPotential::new(&pot, 0.1, 0.2).unwrap();
            assert_eq!(conjugate_reg(&reg, 0.0, O, 0.0).unwrap().0, 0.0, "{}", pot.name());
        }
    }

    #[test]
    fn conjugate_reg_requires_sigma() {
        let q = PotentialSpec::quadratic();
        let reg = RegularizedPotential::new(&q, 0.5, 0.0).unwrap();
        assert!(matches!(conjugate_reg(&reg, 0.0, O, 1.0), Err(Error::Unsupported(_))));
        assert!(RegularizedPotential::new(&q, 0.0, 1.0).is_err());
    }

    #[test]
    fn conjugate_reg_fenchel_equality_at_maximizer() {
        for pot in catalog() {
            let reg = RegularizedPotential::new(&pot, 0.05, 0.1).unwrap();
            for &omega in &[-3.0, -0.7, 0.2, 1.0, 4.0] {
                let (conj, r) = reg
                    .conjugate(0.0, O, omega)
                    .unwrap_or_else(|e| panic!("{} ω = {omega}: {e}", pot.name()));
                let (v, d) = reg.value_and_derivative(0.0, O, r).unwrap();
                assert!((v + conj - omega * r).abs() < 1e-10 * (1.0 + v.abs()), "{}", pot.name());
                assert!((d - omega).abs() < 1e-9 * (1.0 + omega.abs()), "{}", pot.name());
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        for pot in catalog() {
            let reg = RegularizedPotential::new(&pot, 0.1, 0.05).unwrap();
            for &r in &[-2.3, -0.9, 0.4, 1.1, 2.9] {
                let h = 1e-6;
                let fd = (reg.value_and_derivative(0.0, O, r + h).unwrap().0
                    - reg.value_and_derivative(0.0, O, r - h).unwrap().0)
                    / (2.0 * h);
                let (_, d) = reg.value_and_derivative(0.0, O, r).unwrap();
                assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "{} r = {r}", pot.name());

                let fd2 = (reg.value_and_derivative(0.0, O, r + h).unwrap().1
                    - reg.value_and_derivative(0.0, O, r - h).unwrap().1)
                    / (2.0 * h);
                let c = reg.curvature(0.0, O, r).unwrap();
                assert!((fd2 - c).abs() < 1e-4 * (1.0 + c), "{} r = {r}: {fd2} vs {c}", pot.name());
            }
        }
    }

    #[test]
    fn conjugate_second_order_matches_finite_differences() {
        for pot in catalog() {
            let reg = RegularizedPotential::new(&pot, 0.1, 0.05).unwrap();
            for &w in &[-2.1, -0.3, 0.6, 1.7] {
                let h = 1e-6;
                let at = |w: f64| reg.conjugate_second_order(0.0, O, w).unwrap();
                let (v, d, c) = at(w);
                assert_eq!((v, d), reg.conjugate(0.0, O, w).unwrap());
                let fd = (at(w + h).0 - at(w - h).0) / (2.0 * h);
                assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "{} w = {w}", pot.name());
                let fd2 = (at(w + h).1 - at(w - h).1) / (2.0 * h);
                assert!((fd2 - c).abs() < 1e-4 * (1.0 + c), "{} w = {w}: {fd2} vs {c}", pot.name());
                let (pv, pd, pc) = reg.second_order(0.0, O, d).unwrap();
                assert!((pv - reg.value_and_derivative(0.0, O, d).unwrap().0).abs() < 1e-14 * (1.0 + pv.abs()));
                assert!((pd - w).abs() < 1e-9 * (1.0 + w.abs()) && (pc * c - 1.0).abs() < 1e-9);
            }
        }
    }
}
