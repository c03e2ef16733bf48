//! End-to-end tests driving the compiled `fmotrack` binary.

use std::path::Path;
use std::process::{Command, Output};

use fmotrack::simulator::builtin;
use fmotrack::{io, MetricsReport};
use tempfile::tempdir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmotrack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn clean_pipeline_reproduces_truth_exactly() {
    let dir = tempdir().unwrap();
    let scenario = dir.path().join("clean.toml");
    io::save_scenario(&scenario, &builtin::<f64>("bounce-multi").unwrap().without_corruption())
        .unwrap();
    let sim = dir.path().join("sim");

    run_ok(&["simulate", "--scenario", path_str(&scenario), "--out", path_str(&sim)]);
    let traj = dir.path().join("physics.jsonl");
    run_ok(&[
        "track",
        "--detections",
        path_str(&sim.join("detections.jsonl")),
        "--config",
        path_str(&sim.join("scenario.toml")),
        "--tracker",
        "physics",
        "--out",
        path_str(&traj),
    ]);
    let report_path = dir.path().join("report.json");
    run_ok(&[
        "evaluate",
        "--pred",
        path_str(&traj),
        "--truth",
        path_str(&sim.join("truth.jsonl")),
        "--events",
        path_str(&sim.join("events.jsonl")),
        "--out",
        path_str(&report_path),
    ]);

    let (report, manifest): (MetricsReport, _) = io::read_report(&report_path).unwrap();
    assert!(report.ade <= 1e-12, "clean pipeline ade {}", report.ade);
    assert_eq!(report.flags.measured, report.n_points);
    let segments = report.per_segment.expect("events give segments");
    assert_eq!(segments[0].label, "pre-bounce");
    assert!(segments.len() >= 4);
    let manifest = manifest.expect("report carries provenance");
    assert_eq!(manifest.scenario, "bounce-multi");
    assert_eq!(manifest.tracker, "physics");
}

#[test]
fn rerunning_the_pipeline_is_byte_identical() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&["simulate", "--scenario", "depth-sweep", "--seed", "11", "--out", path_str(out)]);
    }
    for name in ["truth.jsonl", "detections.jsonl", "events.jsonl", "scenario.toml"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name} differs");
    }

    for (tracker, name) in [("physics", "p.jsonl"), ("kf", "k.jsonl")] {
        for out in [&a, &b] {
            run_ok(&[
                "track",
                "--detections",
                path_str(&out.join("detections.jsonl")),
                "--config",
                path_str(&out.join("scenario.toml")),
                "--tracker",
                tracker,
                "--out",
                path_str(&out.join(name)),
            ]);
        }
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name} differs");
    }

    for out in [&a, &b] {
        run_ok(&[
            "evaluate",
            "--pred",
            path_str(&out.join("p.jsonl")),
            "--truth",
            path_str(&out.join("truth.jsonl")),
            "--out",
            path_str(&out.join("report.json")),
        ]);
    }
    assert_eq!(read(&a.join("report.json")), read(&b.join("report.json")));
}

#[test]
fn compare_is_deterministic_across_serial_and_parallel() {
    let dir = tempdir().unwrap();
    let (serial_json, parallel_json) = (dir.path().join("s.json"), dir.path().join("p.json"));
    let serial = run_ok(&[
        "compare",
        "--scenario",
        "wall-highspeed",
        "--seeds",
        "8",
        "--serial",
        "--out",
        path_str(&serial_json),
    ]);
    let parallel = run_ok(&[
        "compare",
        "--scenario",
        "wall-highspeed",
        "--seeds",
        "8",
        "--out",
        path_str(&parallel_json),
    ]);
    assert_eq!(serial.stdout, parallel.stdout);
    assert_eq!(read(&serial_json), read(&parallel_json));
    let table = String::from_utf8(serial.stdout).unwrap();
    assert!(table.contains("physics"), "table: {table}");
    assert!(table.contains("kf"), "table: {table}");
}

#[test]
fn tracked_output_length_matches_detections() {
    let dir = tempdir().unwrap();
    let sim = dir.path().join("sim");
    run_ok(&["simulate", "--scenario", "mixed-collision", "--out", path_str(&sim)]);
    let traj = dir.path().join("kf.jsonl");
    run_ok(&[
        "track",
        "--detections",
        path_str(&sim.join("detections.jsonl")),
        "--config",
        path_str(&sim.join("scenario.toml")),
        "--tracker",
        "kf",
        "--out",
        path_str(&traj),
    ]);
    let (frames, _) = io::read_detections::<f64>(sim.join("detections.jsonl")).unwrap();
    let (trajectory, manifest) = io::read_trajectory::<f64>(&traj).unwrap();
    assert_eq!(trajectory.len(), frames.len());
    assert_eq!(manifest.unwrap().tracker, "kf");
}

#[test]
fn usage_errors_exit_2_and_validation_errors_exit_1() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["simulate", "--help"]).status.code(), Some(0));

    assert_eq!(run(&["--bogus-flag"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["simulate", "--scenario", "bounce-multi"]).status.code(), Some(2));

    let dir = tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--scenario",
        "no-such-scenario",
        "--out",
        path_str(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("bounce-multi"), "stderr should list builtins: {stderr}");

    let missing = run(&[
        "track",
        "--detections",
        "/nonexistent/d.jsonl",
        "--config",
        "/nonexistent/s.toml",
        "--out",
        path_str(&dir.path().join("t.jsonl")),
    ]);
    assert_eq!(missing.status.code(), Some(1));
}
