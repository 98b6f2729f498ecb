use serde::{Deserialize, Serialize};

use super::Point;

/// Coefficient `a(t, x)` of the logarithmic and exponential families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientField {
    Constant {
        value: f64,
    },
    /// `base + amplitude · clamp(t / horizon, 0, 1)`.
    TimeRamp {
        base: f64,
        amplitude: f64,
        horizon: f64,
    },
    /// `base + amplitude · exp(−|x − center|² / (2 width²))`.
    SpaceBump {
        base: f64,
        amplitude: f64,
        center: Point,
        width: f64,
    },
}

impl CoefficientField {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn eval(&self, t: f64, x: Point) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::TimeRamp {
                base,
                amplitude,
                horizon,
            } => base + amplitude * (t / horizon).clamp(0.0, 1.0),
            Self::SpaceBump {
                base,
                amplitude,
                center,
                width,
            } => {
                let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                base + amplitude * (-d2 / (2.0 * width * width)).exp()
            }
        }
    }

    /// Infimum of the field over all `(t, x)`.
    pub fn lower_bound(&self) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::TimeRamp { base, amplitude, .. } | Self::SpaceBump { base, amplitude, .. } => {
                base + amplitude.min(0.0)
            }
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Self::TimeRamp { amplitude, .. } if *amplitude != 0.0)
    }

    pub fn is_space_dependent(&self) -> bool {
        matches!(self, Self::SpaceBump { amplitude, .. } if *amplitude != 0.0)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let finite = match *self {
            Self::Constant { value } => value.is_finite(),
            Self::TimeRamp {
                base,
                amplitude,
                horizon,
            } => {
                if !(horizon > 0.0) {
                    return Err("time_ramp horizon must be > 0".into());
                }
                base.is_finite() && amplitude.is_finite() && horizon.is_finite()
            }
            Self::SpaceBump {
                base,
                amplitude,
                center,
                width,
            } => {
                if !(width > 0.0) {
                    return Err("space_bump width must be > 0".into());
                }
                base.is_finite() && amplitude.is_finite() && center.iter().all(|c| c.is_finite())
            }
        };
        if finite {
            Ok(())
        } else {
            Err("coefficient parameters must be finite".into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_is_clamped_to_horizon() {
        let a = CoefficientField::TimeRamp {
            base: 1.0,
            amplitude: 1.0,
            horizon: 0.1,
        };
        assert_eq!(a.eval(0.0, [0.0; 2]), 1.0);
        assert!((a.eval(0.05, [0.0; 2]) - 1.5).abs() < 1e-15);
        assert_eq!(a.eval(0.2, [0.0; 2]), 2.0);
        assert_eq!(a.lower_bound(), 1.0);
        assert!(a.is_time_dependent());
        assert!(!a.is_space_dependent());
    }

    #[test]
    fn bump_peaks_at_center() {
        let a = CoefficientField::SpaceBump {
            base: 2.0,
            amplitude: -0.5,
            center: [0.5, 0.0],
            width: 0.1,
        };
        assert!((a.eval(0.0, [0.5, 0.0]) - 1.5).abs() < 1e-15);
        assert!(a.eval(0.0, [0.0, 0.0]) > 1.99);
        assert_eq!(a.lower_bound(), 1.5);
    }
}
