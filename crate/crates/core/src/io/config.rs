use std::fmt;

use serde::{Deserialize, Serialize};

use crate::discretization::{build_grid, build_robin_operator};
use crate::potentials::{Breakpoint, BreakpointTable, CoefficientField, PotentialSpec, ProbeRegion};
use crate::reference::NewtonConfig;
use crate::state::{FieldPreset, ProblemData};
use crate::variational::SolverConfig;

/// A problem with the configuration, located by its dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub robin_alpha: f64,
    pub domain: DomainConfig,
    pub time: TimeConfig,
    pub potential: PotentialConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Rows `[r, lo, hi]` of a `custom_tabulated` graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CoefficientConfig>,
}

/// `a(t, x)` for the logarithmic and exponential families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    /// `constant`, `time_ramp` (over `[0, T]`) or `space_bump`.
    pub kind: String,
    pub base: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Optional state box `[y_m, y_M]`, checked after the solve.
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 2]>,
    #[serde(default = "FieldPreset::zero")]
    pub f: FieldPreset,
    pub y0: FieldPreset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub lambda: f64,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        let newton = NewtonConfig::default();
        Self {
            lambda: crate::reference::DEFAULT_LAMBDA,
            newton_tol: newton.tol,
            max_newton_iters: newton.max_iters,
        }
    }
}

impl ReferenceConfig {
    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton_tol,
            max_iters: self.max_newton_iters,
            ..NewtonConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// Any of `json` and `csv`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            formats: vec!["json".into(), "csv".into()],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

pub const FAMILIES: [&str; 6] = [
    "quadratic",
    "power",
    "log_type",
    "exp_type",
    "abs_value",
    "custom_tabulated",
];

/// A validated configuration and the optional fields it left at their
/// defaults, as dotted paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: RunConfig,
    pub defaulted: Vec<String>,
}

/// Parses and validates TOML text, collecting every field-level problem.
pub fn parse_config(text: &str) -> Result<ParsedConfig, Vec<ConfigError>> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| vec![ConfigError::new("", e.message().to_string())])?;
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        vec![ConfigError::new(path, e.into_inner().message().to_string())]
    })?;
    let errors = config.validate();
    if !errors.is_empty() {
        return Err(errors);
    }
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| vec![ConfigError::new("", e.message().to_string())])?;
    Ok(ParsedConfig {
        defaulted: defaulted_fields(&table),
        config,
    })
}

fn defaulted_fields(table: &toml::Table) -> Vec<String> {
    let sections = [
        ("solver", toml::Table::try_from(SolverConfig::default())),
        ("reference", toml::Table::try_from(ReferenceConfig::default())),
        ("output", toml::Table::try_from(OutputConfig::default())),
    ];
    let mut out = Vec::new();
    for (name, defaults) in sections {
        let given = table.get(name).and_then(|v| v.as_table());
        for key in defaults.expect("defaults serialize").keys() {
            if !given.is_some_and(|g| g.contains_key(key)) {
                out.push(format!("{name}.{key}"));
            }
        }
    }
    out
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl RunConfig {
    /// TOML text that parses back to an equal configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        let mut push = |path: &str, msg: String| errs.push(ConfigError::new(path, msg));
        if !positive(self.robin_alpha) {
            push("robin_alpha", "must be > 0".into());
        }
        let d = &self.domain;
        if !(d.dim == 1 || d.dim == 2) {
            push("domain.dim", format!("must be 1 or 2, got {}", d.dim));
        }
        if d.lengths.len() != d.dim || !d.lengths.iter().all(|&l| positive(l)) {
            push("domain.lengths", format!("needs {} positive entries", d.dim));
        }
        if d.cells.len() != d.dim || d.cells.iter().any(|&c| c < 2) {
            push("domain.cells", format!("needs {} entries >= 2", d.dim));
        }
        if !positive(self.time.horizon) {
            push("time.T", "must be > 0".into());
        }
        if self.time.steps == 0 {
            push("time.steps", "must be >= 1".into());
        }
        if let Err(e) = self.potential_spec() {
            push(&e.path, e.message);
        }
        for (name, preset) in [("data.f", &self.data.f), ("data.y0", &self.data.y0)] {
            for (field, msg) in preset.validate(d.dim) {
                push(&format!("{name}.{field}"), msg);
            }
        }
        if matches!(self.data.y0, FieldPreset::StepInTime { .. }) {
            push("data.y0.kind", "step_in_time is a source preset, not an initial state".into());
        }
        if let Some([lo, hi]) = self.data.bounds {
            if !(lo < hi) {
                push("data.box", format!("needs y_m < y_M, got [{lo}, {hi}]"));
            }
        }
        for (field, msg) in self.solver.validate() {
            push(&format!("solver.{field}"), msg);
        }
        if !positive(self.reference.lambda) {
            push("reference.lambda", "must be > 0".into());
        }
        for (field, msg) in self.reference.newton().validate() {
            let name = match field {
                "tol" => "newton_tol",
                "max_iters" => "max_newton_iters",
                other => other,
            };
            push(&format!("reference.{name}"), msg);
        }
        for f in &self.output.formats {
            if f != "json" && f != "csv" {
                push("output.formats", format!("unknown format {f:?} (expected json or csv)"));
            }
        }
        errs
    }

    fn coefficient(&self) -> Result<CoefficientField, ConfigError> {
        let Some(a) = &self.potential.a else {
            return Ok(CoefficientField::constant(1.0));
        };
        match a.kind.as_str() {
            "constant" => Ok(CoefficientField::Constant { value: a.base }),
            "time_ramp" => Ok(CoefficientField::TimeRamp {
                base: a.base,
                amplitude: a.amplitude,
                horizon: self.time.horizon,
            }),
            "space_bump" => {
                let mut center = [0.0; 2];
                match &a.center {
                    Some(c) if c.len() == self.domain.dim => center[..c.len()].copy_from_slice(c),
                    Some(c) => {
                        return Err(ConfigError::new(
                            "potential.a.center",
                            format!("needs {} coordinates, got {}", self.domain.dim, c.len()),
                        ))
                    }
                    None => {
                        for (i, l) in self.domain.lengths.iter().take(2).enumerate() {
                            center[i] = 0.5 * l;
                        }
                    }
                }
                Ok(CoefficientField::SpaceBump {
                    base: a.base,
                    amplitude: a.amplitude,
                    center,
                    width: a.width.unwrap_or(0.1),
                })
            }
            other => Err(ConfigError::new(
                "potential.a.kind",
                format!("unknown kind {other:?} (expected constant, time_ramp or space_bump)"),
            )),
        }
    }

    /// The potential named by the `potential` section.
    pub fn potential_spec(&self) -> Result<PotentialSpec, ConfigError> {
        let p = &self.potential;
        let invalid = |path: &str, e: crate::Error| ConfigError::new(path, e.to_string());
        match p.family.as_str() {
            "quadratic" => Ok(PotentialSpec::quadratic()),
            "power" => match p.p {
                None => Err(ConfigError::new("potential.p", "required for the power family")),
                Some(v) if !(v > 1.0 && v.is_finite()) => Err(ConfigError::new("potential.p", "must be > 1")),
                Some(v) => PotentialSpec::power(v).map_err(|e| invalid("potential.p", e)),
            },
            "log_type" => PotentialSpec::log_type(self.coefficient()?).map_err(|e| invalid("potential.a", e)),
            "exp_type" => PotentialSpec::exp_type(self.coefficient()?).map_err(|e| invalid("potential.a", e)),
            "abs_value" => Ok(PotentialSpec::abs_value()),
            "custom_tabulated" => {
                let rows = p
                    .table
                    .as_ref()
                    .ok_or_else(|| ConfigError::new("potential.table", "required for custom_tabulated"))?;
                let points = rows.iter().map(|&[r, lo, hi]| Breakpoint { r, lo, hi }).collect();
                BreakpointTable::new(points)
                    .map(PotentialSpec::tabulated)
                    .map_err(|e| ConfigError::new("potential.table", e))
            }
            other => Err(ConfigError::new(
                "potential.family",
                format!("unknown family {other:?} (expected one of {})", FAMILIES.join(", ")),
            )),
        }
    }

    /// Grid, operator and sampled data of a validated configuration.
    pub fn problem(&self) -> crate::Result<ProblemData> {
        let grid = build_grid(self.domain.dim, &self.domain.lengths, &self.domain.cells)?;
        let op = build_robin_operator(&grid, self.robin_alpha)?;
        ProblemData::from_presets(
            op,
            self.time.horizon,
            self.time.steps,
            &self.data.f,
            &self.data.y0,
            self.data.bounds.map(|[lo, hi]| (lo, hi)),
        )
    }

    /// Probe region of the assumption checks: the space-time cylinder.
    pub fn probe_region(&self) -> ProbeRegion {
        let l = &self.domain.lengths;
        ProbeRegion {
            t_range: (0.0, self.time.horizon),
            x_lo: [0.0, 0.0],
            x_hi: [l.first().copied().unwrap_or(1.0), l.get(1).copied().unwrap_or(0.0)],
        }
    }
}
