use std::path::Path;
use std::process::{Command, Output};

use s3ac::experiments::write_snapshot;
use s3ac::geometry::build_grid;
use s3ac::potential::DoubleWell;
use s3ac::stationary::{lift_profile, solve_ground_state};

fn s3ac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_s3ac"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SMALL: &str = "eps = 0.15\nn_eta = 16\nn_phi1 = 16\nn_phi2 = 16\nprofile_n = 128\nt_end = 10\nsnapshot_every = 400\n";

#[test]
fn toy_succeeds_and_echoes_config() {
    let d = tempfile::tempdir().unwrap();
    let out = s3ac(&["toy", "--out", d.path().to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.path().join("toy/toy.json")).unwrap()).unwrap();
    assert_eq!(json["critical_points"].as_array().unwrap().len(), 4);
    let resolved = std::fs::read_to_string(d.path().join("toy/config.resolved")).unwrap();
    assert!(resolved.contains("toy_t_end = 60"));
}

#[test]
fn configuration_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let bad = write_cfg(d.path(), "eps = 0.1\ncolour = blue\n");
    assert_eq!(s3ac(&["--config", &bad, "toy"]).status.code(), Some(2));
    assert_eq!(
        s3ac(&["--config", "/nonexistent/run.cfg", "toy"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(s3ac(&["frobnicate"]).status.code(), Some(2));
    let imex = write_cfg(
        d.path(),
        &format!(
            "{SMALL}scheme = imex\ndt = 0.1\noutput_dir = {}\n",
            d.path().display()
        ),
    );
    let out = s3ac(&["--config", &imex, "flow"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn numerical_failures_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        d.path(),
        &format!(
            "{SMALL}r_max = 10\namplitude = 5\noutput_dir = {}\n",
            d.path().display()
        ),
    );
    let out = s3ac(&["--config", &cfg, "flow"]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn flow_writes_its_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), SMALL);
    let out = s3ac(&[
        "--config",
        &cfg,
        "--out",
        d.path().to_str().unwrap(),
        "--threads",
        "1",
        "flow",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = d.path().join("flow/eps_0.15");
    let csv = std::fs::read_to_string(run.join("energy.csv")).unwrap();
    assert!(csv.starts_with("step,time,energy,area_proxy,dissipation,discrepancy,max_abs_u\n"));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["terminal"]["kind"], "sphere");
    assert_eq!(summary["level_crossings"], 1);
    let reports = std::fs::read_to_string(run.join("reports.jsonl")).unwrap();
    for line in reports.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(r["shifted_time"].is_number());
        assert_eq!(r["thresholds"]["constant_band"], 0.05);
    }
    let snaps = std::fs::read_dir(run.join("snapshots")).unwrap().count();
    assert_eq!(snaps, reports.lines().count());
    let resolved = std::fs::read_to_string(d.path().join("flow/config.resolved")).unwrap();
    assert!(resolved.contains("dt = auto") && resolved.contains("n_eta = 16"));
}

#[test]
fn inspect_classifies_a_snapshot() {
    let d = tempfile::tempdir().unwrap();
    let w = DoubleWell::standard();
    let g = build_grid(32, 32, 32).unwrap();
    let u = lift_profile(
        &solve_ground_state(&w, 0.1, 256).unwrap(),
        &g,
        Some([1.0, 0.0, 0.0, 0.0]),
    )
    .unwrap();
    let p = d.path().join("ground.acs3");
    write_snapshot(&p, &u, 0.1, 2.5).unwrap();
    let out = s3ac(&["inspect", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["report"]["kind"], "sphere");
    assert_eq!(json["time"], 2.5);
    let y = json["report"]["equator_normal"].as_array().unwrap();
    assert!((y[0].as_f64().unwrap() - 1.0).abs() < 0.05);

    std::fs::write(d.path().join("junk.acs3"), b"not a snapshot").unwrap();
    let out = s3ac(&["inspect", d.path().join("junk.acs3").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
