//! End-to-end checks of the `simex` binary: flags, config files, CSV
//! shapes, and exit codes.

use std::path::Path;
use std::process::Command;

fn simex() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simex"))
}

fn run_ok(args: &[&str]) -> String {
    let out = simex().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf8 output")
}

#[test]
fn tableau_check_passes_and_reports_gamma() {
    let out = run_ok(&["tableau-check"]);
    assert!(out.contains("cnh: s = 2, gamma = 0.5"));
    assert!(out.contains("ark436"));
    assert!(out.contains("ark548"));
    assert!(!out.contains("FAILED"));
}

#[test]
fn print_config_emits_effective_toml() {
    let out = run_ok(&["converge-heat", "--print-config", "--seed", "7", "--tableau", "ark436"]);
    assert!(out.contains("seed = 7"));
    assert!(out.contains("tableau = \"ark436\""));
    // defaults survive
    assert!(out.contains("guard = 1000.0"));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "seed = 5\ntableau = \"ark548\"\nt_end = 0.5\n").unwrap();
    let out = run_ok(&[
        "converge-heat",
        "--print-config",
        "--config",
        cfg_path.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(out.contains("seed = 9"), "flag overrides file");
    assert!(out.contains("t_end = 0.5"), "file value kept");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "not_a_key = 1\n").unwrap();
    let out = simex()
        .args(["converge-heat", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn converge_heat_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "converge-heat",
        "--method",
        "simex",
        "--filter",
        "jacobi(1)",
        "--h",
        "0.1",
        "--h",
        "0.05",
        "--h",
        "0.025",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(out_dir.join("converge-heat.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "method,tableau,filter,h,error,status");
    assert_eq!(lines.clone().count(), 3);
    assert!(lines.all(|l| l.starts_with("simex,ark548,jacobi(1),")));
    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("filter=jacobi(1) slope="));
}

#[test]
fn stability_region_outputs_round_trip_and_match_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let common = [
        "stability-region",
        "--tableau",
        "cnh",
        "--filter",
        "default",
        "--n",
        "12",
        "--steps",
        "8",
        "--resolution",
        "9",
        "--re-min",
        "-6",
        "--re-max",
        "2",
        "--im-min",
        "-4",
        "--im-max",
        "4",
    ];
    for (jobs, sub) in [("1", "a"), ("2", "b")] {
        let out_dir = base.join(sub);
        let mut args: Vec<&str> = common.to_vec();
        let out_str = out_dir.to_str().unwrap().to_string();
        let leaked: &'static str = Box::leak(out_str.into_boxed_str());
        args.extend_from_slice(&["--jobs", jobs, "--out", leaked]);
        run_ok(&args);
    }
    let a = std::fs::read_to_string(base.join("a/amplification_default.csv")).unwrap();
    let b = std::fs::read_to_string(base.join("b/amplification_default.csv")).unwrap();
    assert_eq!(a, b, "serial and parallel scans must emit identical CSVs");
    // 17-significant-digit values round-trip exactly
    for line in a.lines().skip(1).take(5) {
        let fields: Vec<&str> = line.split(',').collect();
        let v: f64 = fields[2].parse().unwrap();
        assert_eq!(format!("{v:.16e}"), fields[2]);
    }
}

#[test]
fn pde2d_emits_expected_columns(){
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    run_ok(&[
        "pde2d",
        "--method",
        "simex",
        "--filter",
        "gs(1)",
        "--grid-j",
        "1",
        "--grid-j",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(out_dir.join("pde2d.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "method,filter,j,h,error,seconds,status");
    assert_eq!(lines.count(), 2);
    let summary = std::fs::read_to_string(out_dir.join("summary.txt")).unwrap();
    assert!(summary.contains("ilu_fill_ratio="));
}

#[test]
fn invalid_filter_is_a_clean_error() {
    let out = simex().args(["converge-heat", "--filter", "splines(3)"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown filter"), "stderr: {err}");
}

#[test]
fn outputs_are_deterministic_given_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mk = |sub: &str| {
        let out_dir = dir.path().join(sub);
        run_ok(&[
            "stability-region",
            "--tableau",
            "cnh",
            "--filter",
            "gs(2)",
            "--n",
            "10",
            "--steps",
            "6",
            "--resolution",
            "8",
            "--re-min",
            "-4",
            "--re-max",
            "1",
            "--im-min",
            "-2",
            "--im-max",
            "2",
            "--seed",
            "123",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        std::fs::read_to_string(out_dir.join("amplification_gs_2.csv")).unwrap()
    };
    assert_eq!(mk("x"), mk("y"));
    assert!(Path::new(&dir.path().join("x/contours_gs_2.csv")).exists());
}
