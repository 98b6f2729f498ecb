use std::fs;
use std::path::Path;

use serde::Serialize;

use super::RunError;
use crate::state::{Integrand, ProblemData, Trajectory};
use crate::potentials::ConvexPotential;
use crate::variational::gap_integrand;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Writes string records; the first is the header.
pub(crate) fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn csv_err(path: &Path, e: csv::Error) -> RunError {
    RunError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Rows of `trajectory.csv`: `k, t, node, x[, ycoord], y, w, gap`. Step 0
/// carries the initial state with `w` and `gap` left empty; step `k ≥ 1`
/// carries `y_k`, `w_k` and the unregularized gap integrand at `ȳ_k`.
pub fn trajectory_csv<P: ConvexPotential + ?Sized>(
    traj: &Trajectory,
    data: &ProblemData,
    pot: &P,
) -> crate::Result<Vec<Vec<String>>> {
    let grid = data.op().grid();
    let dim = grid.dim();
    let gaps = gap_integrand(traj, data, &Integrand::Exact(pot))?;
    let mut header: Vec<String> = ["k", "t", "node", "x"].map(String::from).to_vec();
    if dim == 2 {
        header.push("ycoord".into());
    }
    header.extend(["y", "w", "gap"].map(String::from));
    let mut rows = vec![header];
    for (k, yk) in traj.y.iter().enumerate() {
        for (i, &y) in yk.iter().enumerate() {
            let x = grid.coords()[i];
            let mut row = vec![k.to_string(), format_number(data.time(k)), i.to_string(), format_number(x[0])];
            if dim == 2 {
                row.push(format_number(x[1]));
            }
            row.push(format_number(y));
            if k == 0 {
                row.extend([String::new(), String::new()]);
            } else {
                row.push(format_number(traj.w[k - 1][i]));
                row.push(format_number(gaps[k - 1][i]));
            }
            rows.push(row);
        }
    }
    Ok(rows)
}
