use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pumpprobe"));
    c.env_remove("PUMPPROBE_JOBS");
    c
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const UNDRIVEN: &str = r#"
[system]
n_levels = 2
beat_frequency_hz = 1e6
levels = [{ level = 1 }, { level = 2, linewidth_rad_per_s = 1e7 }]
sources = [{ from = 2, to = 1, rate_rad_per_s = 1e7 }]
[probe]
rabi_rad_per_s = 1.0
coherences = [{ upper = 2, lower = 1, weight = 1.0 }]
"#;

#[test]
fn undriven_solve_prints_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("undriven.toml");
    std::fs::write(&cfg, UNDRIVEN).unwrap();
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "row,col,harmonic,re,im");
    assert_eq!(lines.len(), 1 + 12);
    assert!(lines.contains(&"1,1,0,1.0,0.0"), "{stdout}");
    assert!(lines.contains(&"2,2,0,0.0,0.0"), "{stdout}");
    assert!(text(&out.stderr).contains("relative residual"));

    let out = run(&["validate", cfg.to_str().unwrap(), "-k", "2"]);
    assert!(out.status.success(), "{}", text(&out.stdout));
}

#[test]
fn sweep_writes_requested_rows_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, svg) = (dir.path().join("s.csv"), dir.path().join("s.svg"));
    let out = run(&[
        "sweep",
        preset("two_level.toml").to_str().unwrap(),
        "--points",
        "2",
        "--out",
        csv.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 3);
    assert!(body.starts_with("detuning_hz,chi_real,chi_imag,gain,rho0_11,rho0_22\n"));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
}

#[test]
fn sweep_output_is_independent_of_jobs() {
    let cfg = preset("two_level.toml");
    let cfg = cfg.to_str().unwrap();
    let args = ["sweep", cfg, "--points", "41", "--velocity-groups", "9"];
    let one = bin().args(args).arg("--jobs").arg("1").output().unwrap();
    let again = bin().args(args).arg("--jobs").arg("1").output().unwrap();
    let many = bin().args(args).env("PUMPPROBE_JOBS", "3").output().unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, again.stdout);
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn dumped_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let dumped = dir.path().join("dump.toml");
    let cfg = preset("lambda.toml");
    let out = run(&["sweep", cfg.to_str().unwrap(), "--points", "9", "--dump-config", dumped.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(out.stdout.is_empty());
    let original = run(&["sweep", cfg.to_str().unwrap(), "--points", "9"]);
    let replay = run(&["sweep", dumped.to_str().unwrap()]);
    assert!(replay.status.success(), "{}", text(&replay.stderr));
    assert_eq!(original.stdout, replay.stdout);
}

#[test]
fn presets_validate() {
    for name in ["two_level.toml", "lambda.toml", "four_level.toml"] {
        let out = run(&["validate", preset(name).to_str().unwrap(), "-k", "2", "--no-oracle"]);
        assert!(out.status.success(), "{name}: {}", text(&out.stdout));
    }
    let out = run(&["validate", preset("two_level.toml").to_str().unwrap()]);
    let stdout = text(&out.stdout);
    assert!(out.status.success() && stdout.contains("PASS time domain"), "{stdout}");
}

#[test]
fn validate_fails_on_tight_tolerance() {
    let out = run(&["validate", preset("two_level.toml").to_str().unwrap(), "-k", "1", "--tolerance", "1e-12"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stdout).contains("FAIL time domain"));
}

#[test]
fn convergence_reports_each_step() {
    let out = run(&["convergence", preset("two_level.toml").to_str().unwrap(), "-k", "3", "--points", "31"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert_eq!(stdout.lines().count(), 3);
    assert!(stdout.starts_with("from_order,to_order,max_abs_chi_difference\n1,2,"));
}

#[test]
fn config_errors_point_at_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, UNDRIVEN.replace("rate_rad_per_s = 1e7", "rate_per_s = 1e7")).unwrap();
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("bad.toml") && err.contains("line 6") && err.contains("rate_per_s"), "{err}");

    std::fs::write(&cfg, UNDRIVEN.replace("{ from = 2, to = 1, rate_rad_per_s = 1e7 }", "")).unwrap();
    let out = run(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("level 2 loses"), "{}", text(&out.stderr));
}

#[test]
fn unwritable_output_is_an_error() {
    let out = run(&["sweep", preset("two_level.toml").to_str().unwrap(), "--points", "2", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("cannot write"));
}
