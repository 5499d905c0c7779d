//! End-to-end runs of the binary: exit codes, determinism, the failure
//! manifest, and the sidecar closure property.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sslab")
}

fn fresh_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sslab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn read(path: &PathBuf) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn usage_errors_exit_with_code_2() {
    let out = run(&["warp-drive"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("unknown experiment"), "{msg}");
    assert!(msg.contains("phase-scan"), "usage message should list the experiments: {msg}");

    let out = run(&["counting", "not_an_override"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["counting", "no_such_key=3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["counting", "--config", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(2));

    // structurally broken configuration: empty grid
    let out = run(&["phase-scan", "omega_grid=[]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn counting_reruns_are_byte_identical_and_close_over_the_sidecar() {
    let dir = fresh_dir("closure");
    let outdir = dir.to_str().unwrap();
    let args = |stamp: &str| {
        vec![
            "counting".to_string(),
            "--outdir".into(),
            outdir.into(),
            "--stamp".into(),
            stamp.into(),
            "n_spins=6".into(),
            "horizon=30".into(),
            "n_traj=150".into(),
        ]
    };
    let a = run(&args("a").iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&args("b").iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(b.status.code(), Some(0));

    for file in ["exact.csv", "mc.csv"] {
        let pa = dir.join("counting/a").join(file);
        let pb = dir.join("counting/b").join(file);
        assert_eq!(read(&pa), read(&pb), "{file} differs between identical runs");
    }

    // the resolved configuration alone must reproduce the numeric columns
    let sidecar = dir.join("counting/a/config.json");
    let c = run(&[
        "counting",
        "--config",
        sidecar.to_str().unwrap(),
        "--outdir",
        outdir,
        "--stamp",
        "c",
    ]);
    assert_eq!(c.status.code(), Some(0), "{}", String::from_utf8_lossy(&c.stderr));
    for file in ["exact.csv", "mc.csv"] {
        assert_eq!(
            read(&dir.join("counting/a").join(file)),
            read(&dir.join("counting/c").join(file)),
            "{file} differs when rerun from the sidecar"
        );
    }

    // worker count must not leak into the dataset
    let mut jargs = args("d");
    jargs.push("--jobs".into());
    jargs.push("2".into());
    let d = run(&jargs.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(d.status.code(), Some(0));
    assert_eq!(
        read(&dir.join("counting/a/mc.csv")),
        read(&dir.join("counting/d/mc.csv")),
        "mc.csv depends on the worker count"
    );

    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn grid_failures_leave_a_manifest_without_aborting() {
    let dir = fresh_dir("manifest");
    let outdir = dir.to_str().unwrap();
    // theta = 9.9 is outside [0, pi/2]: that whole row of points fails, the
    // theta = 0.2 row survives
    let out = run(&[
        "phase-scan",
        "--outdir",
        outdir,
        "--stamp",
        "m",
        "n_spins=6",
        "omega_grid=[0.0,0.5]",
        "theta_grid=[0.2,9.9]",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let run_dir = dir.join("phase-scan/m");
    let failures: serde_json::Value = serde_json::from_str(&read(&run_dir.join("failures.json"))).unwrap();
    let list = failures.as_array().unwrap();
    assert_eq!(list.len(), 2, "one failure per bad grid point: {failures}");
    assert!((list[0]["point"]["theta"].as_f64().unwrap() - 9.9).abs() < 1e-12);

    let csv = read(&run_dir.join("phase_scan.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "surviving points are exported: {csv}");
    assert!(rows.iter().all(|r| r.split(',').nth(1).unwrap().starts_with("2.0")));

    // every point failing means the experiment failed
    let out = run(&[
        "phase-scan",
        "--outdir",
        outdir,
        "--stamp",
        "all-bad",
        "n_spins=6",
        "omega_grid=[0.0,0.5]",
        "theta_grid=[9.9]",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let manifest = read(&dir.join("phase-scan/all-bad/failures.json"));
    assert!(manifest.contains("theta"), "{manifest}");

    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn emission_run_writes_the_documented_artifacts() {
    let dir = fresh_dir("artifacts");
    let outdir = dir.to_str().unwrap();
    let out = run(&[
        "emission",
        "--outdir",
        outdir,
        "--stamp",
        "e",
        "n_spins=6",
        "omega=1.2",
        "frequency_grid={\"min\":-2.0,\"max\":2.0,\"points\":101}",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = dir.join("emission/e");

    let csv = read(&run_dir.join("emission.csv"));
    assert!(csv.starts_with("omega,S_continuous,S_broadened\n"));
    assert_eq!(csv.lines().count(), 102);
    assert!(!csv.contains('\r'));

    let deltas: serde_json::Value = serde_json::from_str(&read(&run_dir.join("deltas.json"))).unwrap();
    assert_eq!(deltas.as_array().unwrap().len(), 1, "unique steady state has one delta line");
    let d = &deltas[0];
    assert!(d["omega"].as_f64().unwrap().abs() < 1e-9);
    assert!(d["L_weight"].as_f64().unwrap() > 0.0);

    let meta: serde_json::Value = serde_json::from_str(&read(&run_dir.join("metadata.json"))).unwrap();
    assert_eq!(meta["experiment"], "emission");
    assert!(meta["wall_time_s"].as_f64().unwrap() > 0.0);
    assert!(meta["version"].as_str().unwrap().contains('('), "git-style version: {}", meta["version"]);
    assert_eq!(meta["config"]["n_spins"], 6);
    // stdout names the run directory for scripting
    let printed = String::from_utf8_lossy(&out.stdout);
    assert!(printed.trim_end().ends_with("emission/e"), "{printed}");

    let _ = fs::remove_dir_all(&dir);
}
