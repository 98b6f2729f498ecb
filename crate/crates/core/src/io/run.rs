use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ParsedConfig, RunConfig};
use super::output::{create_dir, format_number, trajectory_csv, write_csv, write_json};
use super::RunError;
use crate::potentials::{
    affine_minorant, check_coercivity, check_fenchel_young, check_symmetry, PotentialSpec,
};
use crate::reference::solve_reference;
use crate::state::{ProblemData, Trajectory};
use crate::variational::{continuation_solve, SolveReport, Timing};

#[derive(Debug, Clone, Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

const TOOL: Tool = Tool {
    name: env!("CARGO_PKG_NAME"),
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Serialize)]
struct ReportDocument<'a> {
    tool: Tool,
    config: &'a RunConfig,
    defaulted: &'a [String],
    result: &'a SolveReport,
    timing: &'a Timing,
}

fn setup(parsed: &ParsedConfig) -> Result<(ProblemData, PotentialSpec), RunError> {
    let cfg = &parsed.config;
    let pot = cfg.potential_spec().map_err(|e| RunError::Config(vec![e]))?;
    Ok((cfg.problem()?, pot))
}

fn write_solve_artifacts(
    parsed: &ParsedConfig,
    data: &ProblemData,
    pot: &PotentialSpec,
    traj: &Trajectory,
    report: &SolveReport,
    out: &Path,
) -> Result<(), RunError> {
    create_dir(out)?;
    let output = &parsed.config.output;
    if output.wants("json") {
        let doc = ReportDocument {
            tool: TOOL,
            config: &parsed.config,
            defaulted: &parsed.defaulted,
            result: report,
            timing: &report.timing,
        };
        write_json(&out.join("report.json"), &doc)?;
    }
    if output.wants("csv") {
        write_csv(&out.join("trajectory.csv"), &trajectory_csv(traj, data, pot)?)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub trajectory: Trajectory,
    pub report: SolveReport,
}

impl SolveOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.report.verdict {
            0
        } else {
            1
        }
    }
}

/// Continuation solve writing `report.json` and `trajectory.csv` to `out`.
pub fn run_solve(parsed: &ParsedConfig, out: &Path) -> Result<SolveOutcome, RunError> {
    let (data, pot) = setup(parsed)?;
    let (trajectory, report) = continuation_solve(&data, &pot, &parsed.config.solver)?;
    write_solve_artifacts(parsed, &data, &pot, &trajectory, &report, out)?;
    Ok(SolveOutcome { trajectory, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    pub k: usize,
    pub t: f64,
    /// `‖y_a,k − y_b,k‖_M`.
    pub l2: f64,
    pub vdual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    /// `‖y_a − y_b‖ / ‖y_b‖` in the discrete `L²(Q)` norm over `k = 1..K`.
    pub relative_l2q: f64,
}

/// Per-step differences of two state trajectories on the same problem.
pub fn compare_trajectories(data: &ProblemData, a: &Trajectory, b: &Trajectory) -> crate::Result<Comparison> {
    let grid = data.op().grid();
    let mut rows = Vec::with_capacity(a.y.len());
    let (mut num, mut den) = (0.0, 0.0);
    for (k, (ya, yb)) in a.y.iter().zip(&b.y).enumerate() {
        let d: Vec<f64> = ya.iter().zip(yb).map(|(p, q)| p - q).collect();
        let l2 = grid.l2_norm(&d);
        if k > 0 {
            num += data.dt() * l2 * l2;
            den += data.dt() * grid.inner(yb, yb);
        }
        rows.push(CompareRow {
            k,
            t: data.time(k),
            l2,
            vdual: data.op().vdual_norm(&d)?,
        });
    }
    let relative_l2q = if num == 0.0 { 0.0 } else { (num / den).sqrt() };
    Ok(Comparison { rows, relative_l2q })
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub variational: SolveOutcome,
    pub reference: Trajectory,
    pub comparison: Comparison,
}

#[derive(Serialize)]
struct CompareSummary<'a> {
    tool: Tool,
    config: &'a RunConfig,
    defaulted: &'a [String],
    relative_l2q: f64,
    variational_gap: f64,
    variational_verdict: bool,
    reference_lambda: f64,
    reference_constraint_residual: f64,
    timing: CompareTiming,
}

#[derive(Serialize)]
struct CompareTiming {
    variational_seconds: f64,
    reference_seconds: f64,
}

/// Variational and reference solves of one configuration, writing the
/// variational artifacts plus `comparison.csv` and `summary.json`.
pub fn run_compare(parsed: &ParsedConfig, out: &Path) -> Result<CompareOutcome, RunError> {
    let (data, pot) = setup(parsed)?;
    let cfg = &parsed.config;
    let (trajectory, report) = continuation_solve(&data, &pot, &cfg.solver)?;
    write_solve_artifacts(parsed, &data, &pot, &trajectory, &report, out)?;
    let started = Instant::now();
    let reference = solve_reference(&data, &pot, cfg.reference.lambda, &cfg.reference.newton())?;
    let reference_seconds = started.elapsed().as_secs_f64();
    let comparison = compare_trajectories(&data, &trajectory, &reference)?;

    if cfg.output.wants("csv") {
        let mut rows = vec![["k", "t", "l2_diff", "vdual_diff"].map(String::from).to_vec()];
        rows.extend(comparison.rows.iter().map(|r| {
            vec![r.k.to_string(), format_number(r.t), format_number(r.l2), format_number(r.vdual)]
        }));
        write_csv(&out.join("comparison.csv"), &rows)?;
    }
    if cfg.output.wants("json") {
        let summary = CompareSummary {
            tool: TOOL,
            config: cfg,
            defaulted: &parsed.defaulted,
            relative_l2q: comparison.relative_l2q,
            variational_gap: report.pointwise_gap,
            variational_verdict: report.verdict,
            reference_lambda: cfg.reference.lambda,
            reference_constraint_residual: crate::state::constraint_residual(&reference, &data)?,
            timing: CompareTiming {
                variational_seconds: report.timing.total_seconds,
                reference_seconds,
            },
        };
        write_json(&out.join("summary.json"), &summary)?;
    }
    Ok(CompareOutcome {
        variational: SolveOutcome { trajectory, report },
        reference,
        comparison,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Final `λ` of the continuation.
    Lambda,
    /// Final `σ` of every `λ` block.
    Sigma,
    Steps,
    /// Cells per direction.
    Cells,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lambda" => Ok(Self::Lambda),
            "sigma" => Ok(Self::Sigma),
            "steps" => Ok(Self::Steps),
            "cells" => Ok(Self::Cells),
            other => Err(format!("unknown sweep axis {other:?} (expected lambda, sigma, steps or cells)")),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lambda => "lambda",
            Self::Sigma => "sigma",
            Self::Steps => "steps",
            Self::Cells => "cells",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    /// Also run the reference solver and record the relative `L²(Q)` distance.
    pub compare: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub gap: Option<f64>,
    pub energy_residual: Option<f64>,
    pub iterations: Option<usize>,
    pub runtime_seconds: f64,
    pub distance: Option<f64>,
    pub error: Option<String>,
}

/// Keeps the schedule entries above `value` and ends it at `value`.
fn truncate_schedule(schedule: &[f64], value: f64) -> Vec<f64> {
    let mut s: Vec<f64> = schedule.iter().copied().filter(|&v| v > value).collect();
    s.push(value);
    s
}

fn apply_axis(base: &RunConfig, axis: SweepAxis, value: f64) -> RunConfig {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Lambda => cfg.solver.lambda_schedule = truncate_schedule(&base.solver.lambda_schedule, value),
        SweepAxis::Sigma => cfg.solver.sigma_schedule = truncate_schedule(&base.solver.sigma_schedule, value),
        SweepAxis::Steps => cfg.time.steps = value as usize,
        SweepAxis::Cells => cfg.domain.cells = vec![value as usize; cfg.domain.dim],
    }
    cfg
}

fn check_values(axis: SweepAxis, values: &[f64]) -> Vec<super::ConfigError> {
    let mut errs = Vec::new();
    let err = |m: String| super::ConfigError {
        path: "values".into(),
        message: m,
    };
    if !values.iter().all(|&v| v > 0.0 && v.is_finite()) {
        errs.push(err("must all be positive".into()));
    }
    let inc = values.windows(2).all(|w| w[0] < w[1]);
    let dec = values.windows(2).all(|w| w[0] > w[1]);
    if !(inc || dec) {
        errs.push(err("must be strictly monotone".into()));
    }
    if matches!(axis, SweepAxis::Steps | SweepAxis::Cells) && !values.iter().all(|v| v.fract() == 0.0) {
        errs.push(err(format!("{axis} values must be integers")));
    }
    errs
}

fn sweep_one(parsed: &ParsedConfig, cfg: RunConfig, value: f64, compare: bool, dir: &Path) -> SweepRow {
    let started = Instant::now();
    let mut row = SweepRow {
        value,
        gap: None,
        energy_residual: None,
        iterations: None,
        runtime_seconds: 0.0,
        distance: None,
        error: None,
    };
    let errors = cfg.validate();
    let result = if errors.is_empty() {
        let run = ParsedConfig {
            config: cfg,
            defaulted: parsed.defaulted.clone(),
        };
        if compare {
            run_compare(&run, dir).map(|o| (o.variational, Some(o.comparison.relative_l2q)))
        } else {
            run_solve(&run, dir).map(|o| (o, None))
        }
    } else {
        Err(RunError::Config(errors))
    };
    match result {
        Ok((o, distance)) => {
            row.gap = Some(o.report.pointwise_gap);
            row.energy_residual = Some(o.report.energy_identity_residual);
            row.iterations = Some(o.report.total_iterations);
            row.distance = distance;
            if let Some(stage) = o.report.failed_stage {
                row.error = Some(format!("stage {stage} did not converge"));
            }
        }
        Err(e) => row.error = Some(e.to_string().replace('\n', " ")),
    }
    row.runtime_seconds = started.elapsed().as_secs_f64();
    row
}

/// One solve per value, in parallel, each in its own directory under
/// `out`, with the table written to `out/sweep.csv`. Failed runs are
/// recorded in their row and do not stop the sweep.
pub fn run_sweep(
    parsed: &ParsedConfig,
    axis: SweepAxis,
    values: &[f64],
    opts: SweepOptions,
    out: &Path,
) -> Result<Vec<SweepRow>, RunError> {
    let errs = check_values(axis, values);
    if !errs.is_empty() {
        return Err(RunError::Config(errs));
    }
    create_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| RunError::Io {
            path: PathBuf::from(out),
            source: std::io::Error::other(e),
        })?;
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| {
                let dir = out.join(format!("run_{i:03}_{axis}_{v}"));
                sweep_one(parsed, apply_axis(&parsed.config, axis, v), v, opts.compare, &dir)
            })
            .collect()
    });

    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    let mut table = vec![
        ["value", "gap", "energy_residual", "iterations", "runtime_seconds", "distance", "error"]
            .map(String::from)
            .to_vec(),
    ];
    table.extend(rows.iter().map(|r| {
        vec![
            format_number(r.value),
            opt(r.gap),
            opt(r.energy_residual),
            r.iterations.map(|n| n.to_string()).unwrap_or_default(),
            format_number(r.runtime_seconds),
            opt(r.distance),
            r.error.clone().unwrap_or_default(),
        ]
    }));
    write_csv(&out.join("sweep.csv"), &table)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Warn => "warn",
            Self::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialCheck {
    pub family: &'static str,
    pub rows: Vec<CheckRow>,
}

impl PotentialCheck {
    pub fn status(&self, check: &str) -> Option<CheckStatus> {
        self.rows.iter().find(|r| r.check == check).map(|r| r.status)
    }

    /// Only a Fenchel–Young violation is a hard failure.
    pub fn exit_code(&self) -> u8 {
        if self.rows.iter().any(|r| r.status == CheckStatus::Fail) {
            1
        } else {
            0
        }
    }
}

impl fmt::Display for PotentialCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "potential: {}", self.family)?;
        for r in &self.rows {
            writeln!(f, "  {:<16} {:<5} {}", r.check, r.status.to_string(), r.detail)?;
        }
        Ok(())
    }
}

/// Sample counts and radii of the `check-potential` command.
const FY_SAMPLES: usize = 10_000;
const COERCIVITY_RADIUS: f64 = 1000.0;
const SYMMETRY_RADIUS: f64 = 10.0;

/// Runs the assumption checks on the configured potential over the
/// configured space-time cylinder.
pub fn run_check_potential(parsed: &ParsedConfig) -> Result<PotentialCheck, RunError> {
    let cfg = &parsed.config;
    let pot = cfg.potential_spec().map_err(|e| RunError::Config(vec![e]))?;
    let region = cfg.probe_region();
    let mut rows = Vec::new();

    let fy = check_fenchel_young(&pot, &region, FY_SAMPLES)?;
    let ok = fy.max_violation <= 1e-10 && fy.max_equality_error <= 1e-8;
    rows.push(CheckRow {
        check: "fenchel_young",
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        detail: format!(
            "{} samples, max violation {:.3e}, max equality error {:.3e}",
            fy.samples, fy.max_violation, fy.max_equality_error
        ),
    });

    let co = check_coercivity(&pot, &region, COERCIVITY_RADIUS)?;
    rows.push(CheckRow {
        check: "coercivity",
        status: if co.weakly_coercive() { CheckStatus::Pass } else { CheckStatus::Warn },
        detail: format!("superlinear j: {}, superlinear j*: {}", co.superlinear_j, co.superlinear_jstar),
    });

    let sym = check_symmetry(&pot, &region, SYMMETRY_RADIUS, 1.0, 0.0);
    rows.push(CheckRow {
        check: "symmetry",
        status: if sym.holds { CheckStatus::Pass } else { CheckStatus::Warn },
        detail: format!(
            "j(-r) <= {} j(r) + {} on |r| <= {SYMMETRY_RADIUS}; worst excess {:.3e} at r = {}",
            sym.gamma1, sym.gamma2, sym.worst_excess, sym.worst_ratio_location
        ),
    });

    let aff = affine_minorant(&pot, &region)?;
    rows.push(CheckRow {
        check: "affine_minorant",
        status: if aff.verified { CheckStatus::Pass } else { CheckStatus::Warn },
        detail: format!(
            "j(r) >= {} r + {}, j*(w) >= {} w + {}",
            aff.k1, aff.k2, aff.k3, aff.k4
        ),
    });

    Ok(PotentialCheck {
        family: pot.name(),
        rows,
    })
}
