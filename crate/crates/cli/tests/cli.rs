//! End-to-end checks of the `imd` binary: exit codes, artifact layout,
//! sweep tables, and tamper detection through `verify`.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn imd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imd"))
        .args(args)
        .env("IMD_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &["solve", "--problem", "p1-l1-box", "--algorithm", "adaptive", "--eps", "0.2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = dir.path().join("p1-l1-box_adaptive_eps0.2_noise0_seed0.trace.csv");
    let report = dir.path().join("p1-l1-box_adaptive_eps0.2_noise0_seed0.report.json");
    assert!(trace.exists() && report.exists());
    let csv = fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("k,productive,h,sub_norm,delta,g_value,f_estimate,bregman_to_ref\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn negative_eps_exits_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &["solve", "--problem", "p1-l1-box", "--algorithm", "adaptive", "--eps", "-1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("eps"), "stderr: {err}");
}

#[test]
fn unknown_problem_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &["solve", "--problem", "p0-missing", "--algorithm", "weighted", "--eps", "0.1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p0-missing"));
}

#[test]
fn repeated_solve_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "solve",
        "--problem",
        "p1-l1-box",
        "--algorithm",
        "weighted",
        "--delta-noise",
        "0.05",
        "--seed",
        "7",
        "--eps",
        "0.2",
    ];
    let first = imd(&args, dir.path());
    assert_eq!(first.status.code(), Some(0));
    let trace = dir.path().join("p1-l1-box_weighted_eps0.2_noise0.05_seed7.trace.csv");
    let report = dir.path().join("p1-l1-box_weighted_eps0.2_noise0.05_seed7.report.json");
    let t1 = fs::read(&trace).unwrap();
    let r1 = fs::read(&report).unwrap();
    let second = imd(&args, dir.path());
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(t1, fs::read(&trace).unwrap());
    assert_eq!(r1, fs::read(&report).unwrap());
}

#[test]
fn catalog_lists_builtin_problems() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(&["catalog"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in [
        "p1-l1-box",
        "p2-maxaffine-box",
        "p3-linear-simplex",
        "p4-maxquad-box",
        "p5-capped-simplex",
        "p6-l1-ball",
    ] {
        assert!(text.contains(name), "catalog missing {name}");
    }
}

#[test]
fn sweep_over_delta_noise_emits_rows_with_bounded_gap_growth() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &[
            "sweep",
            "--problem",
            "p1-l1-box",
            "--algorithm",
            "weighted",
            "--eps",
            "0.2",
            "--delta-noise",
            "0,0.01,0.1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let gaps: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(7).unwrap().parse::<f64>().unwrap())
        .collect();
    // nondecreasing in delta up to certificate-scale wiggle
    for w in gaps.windows(2) {
        assert!(w[1] >= w[0] - 1e-2, "f-gap column decreased: {gaps:?}");
    }
}

#[test]
fn sweep_over_eps_keeps_iterations_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &[
            "sweep",
            "--problem",
            "p6-l1-ball",
            "--algorithm",
            "adaptive",
            "--eps",
            "0.4,0.2,0.1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    for row in summary.lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        let iterations: u64 = cols[5].parse().unwrap();
        let bound: u64 = cols[6].parse().unwrap();
        assert!(iterations <= bound, "row: {row}");
    }
}

#[test]
fn sweep_with_invalid_config_aborts_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &[
            "sweep",
            "--problem",
            "p1-l1-box",
            "--algorithm",
            "adaptive",
            "--eps",
            "0.2,-0.1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("sweep_summary.csv").exists());
}

#[test]
fn sweep_with_empty_config_list_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(&cfg, "[]").unwrap();
    let out = imd(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least one"));
}

#[test]
fn sweep_from_json_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    fs::write(
        &cfg,
        r#"[
            {"problem": "p2-maxaffine-box", "algorithm": "adaptive", "eps": 0.2},
            {"problem": "p2-maxaffine-box", "algorithm": "fixed", "eps": 0.2}
        ]"#,
    )
    .unwrap();
    let out = imd(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("adaptive") && text.contains("fixed"));
}

#[test]
fn solve_with_inline_problem_config() {
    let dir = tempfile::tempdir().unwrap();
    // p2 clone under an inline name
    let mut spec = imd_core::problems::catalog_problem("p2-maxaffine-box").unwrap();
    spec.name = "custom".into();
    let config = serde_json::json!({
        "problem_inline": serde_json::to_value(&spec).unwrap(),
        "algorithm": "adaptive",
        "eps": 0.2,
    });
    let path = dir.path().join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let out = imd(&["solve", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("inline-custom_adaptive_eps0.2_noise0_seed0.trace.csv").exists());
}

#[test]
fn verify_passes_on_intact_artifacts_and_fails_on_tampered_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &["solve", "--problem", "p6-l1-ball", "--algorithm", "fixed", "--eps", "0.2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report = dir.path().join("p6-l1-ball_fixed_eps0.2_noise0_seed0.report.json");
    let verify = imd(&["verify", "--report", report.to_str().unwrap()], dir.path());
    assert_eq!(verify.status.code(), Some(0), "{}", stdout(&verify));

    // tamper with one float in the trace
    let trace = dir.path().join("p6-l1-ball_fixed_eps0.2_noise0_seed0.trace.csv");
    let tampered = fs::read_to_string(&trace).unwrap().replacen("0.2", "0.3", 1);
    fs::write(&trace, tampered).unwrap();
    let verify2 = imd(&["verify", "--report", report.to_str().unwrap()], dir.path());
    assert_eq!(verify2.status.code(), Some(2));
    assert!(stdout(&verify2).contains("MISMATCH"));
}

#[test]
fn run_reports_every_enabled_certificate_once() {
    let dir = tempfile::tempdir().unwrap();
    let out = imd(
        &["solve", "--problem", "p4-maxquad-box", "--algorithm", "adaptive", "--eps", "0.2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("p4-maxquad-box_adaptive_eps0.2_noise0_seed0.report.json"))
            .unwrap(),
    )
    .unwrap();
    let certs = report["certificates"].as_array().unwrap();
    let mut labels: Vec<&str> = certs.iter().map(|c| c["label"].as_str().unwrap()).collect();
    let before = labels.len();
    labels.sort_unstable();
    labels.dedup();
    assert_eq!(before, labels.len(), "duplicate certificate labels");
    for c in certs {
        assert!(c.get("satisfied").is_some());
        assert!(c.get("lhs").is_some() && c.get("rhs").is_some() && c.get("slack").is_some());
    }
}
