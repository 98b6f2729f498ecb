use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_weakdiff");

const SMALL_HEAT: &str = r#"
robin_alpha = 1.0

[domain]
dim = 1
lengths = [1.0]
cells = [16]

[time]
T = 0.1
steps = 10

[potential]
family = "quadratic"

[data]
y0 = { kind = "gaussian_bump", center = [0.5], width = 0.1, amplitude = 1.0 }
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    Command::new(BIN)
        .arg(args[0])
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(&args[1..])
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_exits_zero_on_certified_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), SMALL_HEAT, &["solve"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("out/report.json").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("verdict true"));
}

#[test]
fn solve_exits_one_when_tolerance_is_missed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &format!("{SMALL_HEAT}\n[solver]\ngap_tol = 1e-30\n"), &["solve"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(dir.path().join("out/report.json").exists());
}

#[test]
fn invalid_config_exits_two_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL_HEAT.replace("robin_alpha = 1.0", "robin_alpha = 0.0").replace("\"quadratic\"", "\"polytropic\"");
    let o = run(dir.path(), &bad, &["solve"]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("robin_alpha: must be > 0"), "{err}");
    assert!(err.contains("potential.family: unknown"), "{err}");
}

#[test]
fn missing_config_file_exits_three() {
    let o = Command::new(BIN).args(["solve", "--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(code(&o), 3);
}

#[test]
fn compare_writes_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), SMALL_HEAT, &["compare"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("out/comparison.csv").exists());
    assert!(dir.path().join("out/summary.json").exists());
}

#[test]
fn sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), SMALL_HEAT, &["sweep", "--axis", "steps", "--values", "5,10", "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn empty_sweep_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), SMALL_HEAT, &["sweep", "--axis", "lambda", "--values="]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 1);
}

#[test]
fn check_potential_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &SMALL_HEAT.replace("\"quadratic\"", "\"abs_value\""), &["check-potential"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("potential: abs_value"), "{out}");
    assert!(out.lines().any(|l| l.contains("coercivity") && l.contains("warn")), "{out}");
}

#[test]
fn non_monotone_table_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL_HEAT.replace(
        "family = \"quadratic\"",
        "family = \"custom_tabulated\"\ntable = [[-1.0, -1.0, -1.0], [0.0, 0.0, 0.0], [1.0, -0.5, -0.5]]",
    );
    let o = run(dir.path(), &cfg, &["check-potential"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("breakpoint 2"), "{}", stderr(&o));
}
