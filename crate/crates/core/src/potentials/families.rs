use super::{BreakpointTable, CoefficientField, ConvexPotential, GraphValue, Point};
use crate::{Error, Result};

/// The catalog of built-in potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `j = r²/2`, the linear heat equation.
    Quadratic,
    /// `j = |r|^p / p` with `p > 1`.
    Power { p: f64 },
    /// `β = sgn(r) log(|r| + a)`, multivalued `[−log a, log a]` at 0.
    LogType { a: CoefficientField },
    /// `β = sgn(r) exp(a r²)`, multivalued `[−1, 1]` at 0.
    ExpType { a: CoefficientField },
    /// `j = |r|`; its conjugate is the indicator of `[−1, 1]`.
    AbsValue,
    /// Piecewise-linear graph from a breakpoint table.
    Tabulated(BreakpointTable),
}

/// A validated potential from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    family: Family,
}

impl PotentialSpec {
    pub fn quadratic() -> Self {
        Self {
            family: Family::Quadratic,
        }
    }

    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidPotential(format!(
                "power exponent must satisfy p > 1, got {p}"
            )));
        }
        Ok(Self {
            family: Family::Power { p },
        })
    }

    /// The logarithmic family. Monotonicity of `sgn(r) log(|r| + a)` across
    /// `r = 0` requires `log a ≥ 0`, so the coefficient must stay `≥ 1`.
    pub fn log_type(a: CoefficientField) -> Result<Self> {
        a.validate().map_err(Error::InvalidPotential)?;
        if !(a.lower_bound() >= 1.0) {
            return Err(Error::InvalidPotential(format!(
                "log_type coefficient must satisfy a >= 1 for a monotone graph, got lower bound {}",
                a.lower_bound()
            )));
        }
        Ok(Self {
            family: Family::LogType { a },
        })
    }

    pub fn exp_type(a: CoefficientField) -> Result<Self> {
        a.validate().map_err(Error::InvalidPotential)?;
        if !(a.lower_bound() > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "exp_type coefficient must satisfy a >= a0 > 0, got lower bound {}",
                a.lower_bound()
            )));
        }
        Ok(Self {
            family: Family::ExpType { a },
        })
    }

    pub fn abs_value() -> Self {
        Self {
            family: Family::AbsValue,
        }
    }

    pub fn tabulated(table: BreakpointTable) -> Self {
        Self {
            family: Family::Tabulated(table),
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::Quadratic => "quadratic",
            Family::Power { .. } => "power",
            Family::LogType { .. } => "log_type",
            Family::ExpType { .. } => "exp_type",
            Family::AbsValue => "abs_value",
            Family::Tabulated(_) => "custom_tabulated",
        }
    }

    fn coefficient(&self) -> Option<&CoefficientField> {
        match &self.family {
            Family::LogType { a } | Family::ExpType { a } => Some(a),
            _ => None,
        }
    }

    /// Lower bound `a₀` of the coefficient field, when the family has one.
    pub fn a0(&self) -> Option<f64> {
        self.coefficient().map(CoefficientField::lower_bound)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.coefficient().is_some_and(CoefficientField::is_time_dependent)
    }

    pub fn is_space_dependent(&self) -> bool {
        self.coefficient().is_some_and(CoefficientField::is_space_dependent)
    }
}

/// `(1 + u) log(1 + u) − u` without cancellation for small `u`.
fn xlogx_shifted(u: f64) -> f64 {
    if u < 1e-3 {
        // Σ_{n≥2} (−1)ⁿ uⁿ / (n(n−1))
        let mut sum = 0.0;
        let mut pow = u * u;
        for n in 2..12 {
            let nf = n as f64;
            let term = pow / (nf * (nf - 1.0));
            sum += if n % 2 == 0 { term } else { -term };
            pow *= u;
        }
        sum
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// `∫₀^x exp(a s²) ds` for `x ≥ 0`.
fn exp_square_integral(a: f64, x: f64) -> f64 {
    let q = a * x * x;
    if q < 40.0 {
        // x Σ qⁿ / (n! (2n + 1)); all terms positive.
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= q / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add <= 1e-17 * sum && n > q {
                break;
            }
        }
        x * sum
    } else {
        // e^q / (2 a x) Σ (2n − 1)!! / (2q)ⁿ, asymptotic; error ~ e^{−q}.
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..200 {
            let next = term * (2.0 * n as f64 - 1.0) / (2.0 * q);
            if next >= term || next < 1e-17 * sum {
                break;
            }
            term = next;
            sum += term;
        }
        q.exp() / (2.0 * a * x) * sum
    }
}

impl ConvexPotential for PotentialSpec {
    fn value(&self, t: f64, x: Point, r: f64) -> f64 {
        match &self.family {
            Family::Quadratic => 0.5 * r * r,
            Family::Power { p } => r.abs().powf(*p) / p,
            Family::LogType { a } => {
                let a = a.eval(t, x);
                let s = r.abs();
                // (s + a) log(s + a) − a log a − s
                s * a.ln() + a * xlogx_shifted(s / a)
            }
            Family::ExpType { a } => exp_square_integral(a.eval(t, x), r.abs()),
            Family::AbsValue => r.abs(),
            Family::Tabulated(table) => table.potential(r),
        }
    }

    fn subdifferential(&self, t: f64, x: Point, r: f64) -> GraphValue {
        match &self.family {
            Family::Quadratic => GraphValue::single(r),
            Family::Power { p } => GraphValue::single(r.signum() * r.abs().powf(p - 1.0)),
            Family::LogType { a } => {
                let a = a.eval(t, x);
                if r == 0.0 {
                    let l = a.ln();
                    GraphValue::interval(-l, l)
                } else {
                    GraphValue::single(r.signum() * (r.abs() + a).ln())
                }
            }
            Family::ExpType { a } => {
                if r == 0.0 {
                    GraphValue::interval(-1.0, 1.0)
                } else {
                    GraphValue::single(r.signum() * (a.eval(t, x) * r * r).exp())
                }
            }
            Family::AbsValue => {
                if r == 0.0 {
                    GraphValue::interval(-1.0, 1.0)
                } else {
                    GraphValue::single(r.signum())
                }
            }
            Family::Tabulated(table) => table.graph(r),
        }
    }

    fn slope(&self, t: f64, x: Point, r: f64) -> f64 {
        match &self.family {
            Family::Quadratic => 1.0,
            Family::Power { p } => {
                if r == 0.0 {
                    match p.partial_cmp(&2.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => 1.0,
                        _ => 0.0,
                    }
                } else {
                    (p - 1.0) * r.abs().powf(p - 2.0)
                }
            }
            Family::LogType { a } => {
                let a = a.eval(t, x);
                if r == 0.0 && a > 1.0 {
                    f64::INFINITY
                } else {
                    1.0 / (r.abs() + a)
                }
            }
            Family::ExpType { a } => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    let a = a.eval(t, x);
                    2.0 * a * r.abs() * (a * r * r).exp()
                }
            }
            Family::AbsValue => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Family::Tabulated(table) => table.slope(r),
        }
    }

    fn conjugate(&self, t: f64, x: Point, omega: f64) -> Result<f64> {
        match &self.family {
            Family::Quadratic => Ok(0.5 * omega * omega),
            Family::Power { p } => {
                let q = p / (p - 1.0);
                Ok(omega.abs().powf(q) / q)
            }
            _ => super::numeric_conjugate(self, t, x, omega),
        }
    }
}
