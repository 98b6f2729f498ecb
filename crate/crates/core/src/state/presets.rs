use serde::{Deserialize, Serialize};

use crate::discretization::Grid;

/// Closed catalog of source and initial-state fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldPreset {
    Constant {
        value: f64,
    },
    /// `amplitude · exp(−|x − center|² / (2 width²))`.
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    /// `0` before `switch_time`, `amplitude` from then on.
    StepInTime {
        switch_time: f64,
        amplitude: f64,
    },
}

impl FieldPreset {
    pub fn zero() -> Self {
        Self::Constant { value: 0.0 }
    }

    pub fn eval(&self, t: f64, x: [f64; 2]) -> f64 {
        match self {
            Self::Constant { value } => *value,
            Self::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let d2: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
                amplitude * (-d2 / (2.0 * width * width)).exp()
            }
            Self::StepInTime {
                switch_time,
                amplitude,
            } => {
                if t >= *switch_time {
                    *amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Vec<f64> {
        grid.coords().iter().map(|&x| self.eval(t, x)).collect()
    }

    /// Problems with the preset's parameters, as `(field, message)` pairs.
    pub fn validate(&self, dim: usize) -> Vec<(&'static str, String)> {
        let mut errs = Vec::new();
        match self {
            Self::Constant { value } => {
                if !value.is_finite() {
                    errs.push(("value", "must be finite".into()));
                }
            }
            Self::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                if center.len() != dim {
                    errs.push(("center", format!("needs {dim} coordinates, got {}", center.len())));
                }
                if !(*width > 0.0 && width.is_finite()) {
                    errs.push(("width", "must be > 0".into()));
                }
                if !amplitude.is_finite() || !center.iter().all(|c| c.is_finite()) {
                    errs.push(("amplitude", "must be finite".into()));
                }
            }
            Self::StepInTime {
                switch_time,
                amplitude,
            } => {
                if !switch_time.is_finite() {
                    errs.push(("switch_time", "must be finite".into()));
                }
                if !amplitude.is_finite() {
                    errs.push(("amplitude", "must be finite".into()));
                }
            }
        }
        errs
    }
}
