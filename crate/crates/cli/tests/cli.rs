use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tactoidlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn check_manifest(dir: &Path, expected: &[&str]) -> Value {
    let m = read_json(&dir.join("manifest.json"));
    let files = m["files"].as_array().unwrap();
    let names: Vec<&str> = files.iter().map(|f| f["name"].as_str().unwrap()).collect();
    assert_eq!(names, expected);
    for f in files {
        let len = fs::metadata(dir.join(f["name"].as_str().unwrap())).unwrap().len();
        assert_eq!(f["bytes"].as_u64().unwrap(), len);
    }
    assert!(m["command_line"].as_array().unwrap().len() > 1);
    assert!(m["finished_unix"].as_f64().unwrap() >= m["started_unix"].as_f64().unwrap());
    m
}

fn same_files(a: &Path, b: &Path, names: &[&str]) {
    for n in names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n} differs");
    }
}

const RELAX: &str = "domain.shape = rectangle\ndomain.width = 0.4\ngrid.nx = 12\ngrid.ny = 30\nbc.kind = periodic\nbc.a = 0.6\n\
solver.eps = 0.05\nsolver.L = 0.4\nsolver.max_steps = 200\nsolver.snapshot_every = 20\ninit.kind = random\ninit.seed = 5\n";

#[test]
fn relax_writes_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, RELAX).unwrap();
    let names = ["field.csv", "energy.csv", "contour.csv", "summary.json"];
    let mut outs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        let o = run(&["relax", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let m = check_manifest(&out, &names);
        assert_eq!(m["seed"], 5);
        assert!(m["resolved"]["dt"].as_f64().unwrap() > 0.0);
        assert!(m["config_echo"].as_str().unwrap().contains("bc.a = 0.6"));
        outs.push(out);
    }
    // the wall-clock time is the only run-dependent summary entry
    same_files(&outs[0], &outs[1], &names[..3]);
    let (sa, sb) = (read_json(&outs[0].join("summary.json")), read_json(&outs[1].join("summary.json")));
    assert_eq!(sa["final_energy"], sb["final_energy"]);
    assert_eq!(sa["steps"], 200);
    let energy = fs::read_to_string(outs[0].join("energy.csv")).unwrap();
    assert!(energy.starts_with("step,potential,gradient,divergence,total\n"));
    let totals: Vec<f64> = energy
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(totals.len() >= 10);
}

#[test]
fn relax_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, RELAX.replace("bc.a = 0.6", "bc.a = 1.2")).unwrap();
    let out = dir.path().join("out");
    let o = run(&["relax", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("a in [0,1)") && err.contains("line 6"), "{err}");
    assert!(!out.exists());
}

#[test]
fn missing_files_exit_with_four() {
    let o = run(&["relax", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["energy", "--input", "/nonexistent/sharp.json"]);
    assert_eq!(o.status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&["wallcost", "--samples", "5", "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["tactoid", "--lambda", "1e-300", "--out", dir.path().join("t").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn argument_errors_exit_with_two() {
    assert_eq!(run(&["tactoid", "--lambda", "0"]).status.code(), Some(2));
    assert_eq!(run(&["astroid", "--k", "0"]).status.code(), Some(2));
    assert_eq!(run(&["wallcost", "--potential", "quartic"]).status.code(), Some(2));
    assert_eq!(run(&["check-div-bound", "--degree", "2", "--rho", "0.9", "--rho-prime", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let o = bin().args(["wallcost", "--samples", "3"]).env("TACTOIDLAB_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn wallcost_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w");
    let o = bin()
        .args(["wallcost", "--samples", "11", "--out", out.to_str().unwrap()])
        .env("TACTOIDLAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let s = stdout_json(&o);
    assert!((s["K0"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert!((s["c0"].as_f64().unwrap() - 0.25).abs() < 1e-8);
    check_manifest(&out, &["wallcost.csv", "summary.json"]);
    let csv = fs::read_to_string(out.join("wallcost.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.starts_with("z,K,Kp,H\n"));
}

#[test]
fn oned_limit_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&["oned", "--a", "0.6", "--H", "0.5", "--L", "0.4", "--nodes", "9", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout_json(&o);
    assert_eq!(s["structure"], "single_wall");
    assert!(s["m"].as_f64().unwrap() > 0.6);
    check_manifest(&out, &["profile.csv", "summary.json"]);
    assert_eq!(fs::read_to_string(out.join("profile.csv")).unwrap().lines().count(), 10);
    let o = run(&["oned", "--a", "0", "--H", "1", "--L", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(stdout_json(&o)["structure"], "two_interface");
}

#[test]
fn astroid_then_energy_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let o = run(&["astroid", "--k", "1", "--samples", "256", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout_json(&o);
    assert_eq!(s["cusps"], 4);
    check_manifest(&out, &["interface.csv", "summary.json", "sharp.json"]);
    let sharp = out.join("sharp.json");
    let e = stdout_json(&run(&["energy", "--input", sharp.to_str().unwrap()]));
    assert!((e["total"].as_f64().unwrap() - s["e0_total"].as_f64().unwrap()).abs() < 1e-12);
    let r = run(&["residuals", "--input", sharp.to_str().unwrap(), "--L", "inf"]);
    assert!(r.status.success());
    stdout_json(&r);
    fs::write(dir.path().join("bad.json"), "{\"walls\": 3}").unwrap();
    let o = run(&["energy", "--input", dir.path().join("bad.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tactoid_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["interface.csv", "wall.csv", "summary.json", "sharp.json"];
    let mut outs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        let o = run(&["tactoid", "--lambda", "1", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        check_manifest(&out, &names);
        outs.push(out);
    }
    same_files(&outs[0], &outs[1], &names);
    let s = read_json(&outs[0].join("summary.json"));
    assert!((s["l"].as_f64().unwrap() - 1.0588).abs() < 1e-3);
    assert!(s["fan_min_separation"].as_f64().unwrap() > 0.0);
    let o = run(&["tactoid", "--area", "0.5", "--out", dir.path().join("c").to_str().unwrap()]);
    assert!((stdout_json(&o)["area"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn div_bound_report() {
    let o = run(&["check-div-bound", "--degree", "-1", "--n", "129"]);
    assert!(o.status.success());
    let r = stdout_json(&o);
    assert_eq!(r["d"], -1);
    assert_eq!(r["satisfied"], true);
    let o = run(&["check-div-bound", "--degree", "2", "--n", "129", "--seed", "4"]);
    assert_eq!(stdout_json(&o)["satisfied"], true);
}
