#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use weakdiff::io::{
    parse_config, run_check_potential, run_compare, run_solve, run_sweep, ParsedConfig, RunError,
    SweepAxis, SweepOptions,
};

#[derive(Parser)]
#[command(version, about = "Variational solver for nonlinear diffusion with Robin boundary conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Continuation solve with a certificate; exit 1 if the gap tolerance is missed.
    Solve(Common),
    /// Variational solve against the implicit Euler reference.
    Compare(Common),
    /// One solve per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// lambda, sigma, steps or cells.
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values, strictly monotone; may be empty.
        #[arg(long, default_value = "", value_parser = parse_values)]
        values: Values,
        /// Also record the distance to the reference solver.
        #[arg(long)]
        compare: bool,
    },
    /// Fenchel–Young, coercivity, symmetry and minorant checks of the potential.
    CheckPotential(Common),
}

#[derive(Clone)]
struct Values(Vec<f64>);

fn parse_values(s: &str) -> Result<Values, String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| format!("not a number: {v:?}")))
        .collect::<Result<_, _>>()
        .map(Values)
}

fn load(path: &Path) -> Result<ParsedConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(RunError::Config)
}

fn out_dir(common: &Common, parsed: &ParsedConfig) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&parsed.config.output.directory))
}

fn run(cli: Cli) -> Result<u8, RunError> {
    match cli.command {
        Command::Solve(common) => {
            let parsed = load(&common.config)?;
            let out = out_dir(&common, &parsed);
            let o = run_solve(&parsed, &out)?;
            let r = &o.report;
            println!(
                "gap {:.3e}  energy residual {:.3e}  iterations {}  verdict {}",
                r.pointwise_gap, r.energy_identity_residual, r.total_iterations, r.verdict
            );
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            Ok(o.exit_code())
        }
        Command::Compare(common) => {
            let parsed = load(&common.config)?;
            let out = out_dir(&common, &parsed);
            let o = run_compare(&parsed, &out)?;
            println!(
                "relative L2(Q) distance {:.6e}  variational gap {:.3e}",
                o.comparison.relative_l2q, o.variational.report.pointwise_gap
            );
            Ok(o.variational.exit_code())
        }
        Command::Sweep {
            common,
            axis,
            values,
            compare,
        } => {
            let parsed = load(&common.config)?;
            let out = out_dir(&common, &parsed);
            let opts = SweepOptions {
                jobs: common.jobs,
                compare,
            };
            let rows = run_sweep(&parsed, axis, &values.0, opts, &out)?;
            for r in &rows {
                match &r.error {
                    Some(e) => println!("{axis} = {}: error: {e}", r.value),
                    None => println!(
                        "{axis} = {}: gap {:.3e}, iterations {}",
                        r.value,
                        r.gap.unwrap_or(f64::NAN),
                        r.iterations.unwrap_or(0)
                    ),
                }
            }
            Ok(0)
        }
        Command::CheckPotential(common) => {
            let parsed = load(&common.config)?;
            let check = run_check_potential(&parsed)?;
            print!("{check}");
            Ok(check.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
