use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geocomp")).args(args).output().expect("spawn geocomp")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn unitary(v: &Value) -> Vec<Vec<(f64, f64)>> {
    v["unitary"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|e| (e[0].as_f64().unwrap(), e[1].as_f64().unwrap())).collect())
        .collect()
}

#[test]
fn evolve_empty_file_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("empty.json");
    std::fs::write(&file, "").unwrap();
    let out = run(&["evolve", path(&file), "--n", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["T"], 0.0);
    assert!(v["unitarity_residual"].as_f64().unwrap() < 1e-12);
    let u = unitary(&v);
    assert_eq!(u.len(), 4);
    for (r, row) in u.iter().enumerate() {
        for (k, &(re, im)) in row.iter().enumerate() {
            assert_eq!((re, im), (if r == k { 1.0 } else { 0.0 }, 0.0));
        }
    }

    let explicit = dir.path().join("none.json");
    std::fs::write(&explicit, r#"{"n": 1, "segments": []}"#).unwrap();
    let v = json(&run(&["evolve", path(&explicit)]));
    assert_eq!(unitary(&v), vec![vec![(1.0, 0.0), (0.0, 0.0)], vec![(0.0, 0.0), (1.0, 0.0)]]);
}

#[test]
fn evolve_demo_matches_golden() {
    let out = run(&["evolve", path(&data("demo_trajectory.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let got = json(&out);
    let golden: Value = serde_json::from_str(&std::fs::read_to_string(data("evolve_demo.golden.json")).unwrap()).unwrap();
    assert_eq!(got["n"], golden["n"]);
    assert!((got["T"].as_f64().unwrap() - golden["T"].as_f64().unwrap()).abs() < 1e-15);
    assert!(got["unitarity_residual"].as_f64().unwrap() < 1e-12);
    let (a, b) = (unitary(&got), unitary(&golden));
    assert_eq!(a.len(), 8);
    for (ra, rb) in a.iter().zip(&b) {
        for (&(x, y), &(u, v)) in ra.iter().zip(rb) {
            assert!((x - u).abs() < 1e-12 && (y - v).abs() < 1e-12);
        }
    }
}

#[test]
fn evolve_reports_bad_word_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\n  \"n\": 3,\n  \"segments\": [\n    {\"duration\": 0.1,\n     \"terms\": {\"XQZ\": 1.0}}\n  ]\n}\n").unwrap();
    let out = run(&["evolve", path(&file)]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(msg.contains("XQZ") && msg.contains("line 5"), "{msg}");
    assert!(out.stdout.is_empty());
}

#[test]
fn evolve_missing_file_is_input_error() {
    let out = run(&["evolve", "/nonexistent/trajectory.json"]);
    assert_eq!(out.status.code(), Some(3));
}

fn compile_ledger(delta: &str, gates: &Path) -> Value {
    let out = run(&[
        "compile",
        path(&data("demo_trajectory.json")),
        "--delta",
        delta,
        "--small-delta",
        "1e-6",
        "--gates",
        path(gates),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    json(&out)["ledger"].clone()
}

#[test]
fn compile_demo_is_sound() {
    let dir = tempfile::tempdir().unwrap();
    let gates = dir.path().join("gates.json");
    let ledger = compile_ledger("0.05", &gates);
    let measured = ledger["measured_error"].as_f64().unwrap();
    let bound = ledger["total_bound"].as_f64().unwrap();
    assert!(measured <= bound, "{measured} > {bound}");
    assert_eq!(ledger["projection_error"], 0.0);

    let file: Value = serde_json::from_str(&std::fs::read_to_string(&gates).unwrap()).unwrap();
    assert_eq!(file["n"], 3);
    assert_eq!(file["gate_count"], ledger["gate_count"]);
    let counted: u64 = file["blocks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b["repeat"].as_u64().unwrap() * b["gates"].as_array().unwrap().len() as u64)
        .sum();
    assert_eq!(counted, ledger["gate_count"].as_u64().unwrap());
}

#[test]
fn compile_halving_delta_shrinks_averaging_bound() {
    let dir = tempfile::tempdir().unwrap();
    let gates = dir.path().join("gates.json");
    let mut last = f64::INFINITY;
    for delta in ["0.1", "0.05", "0.025"] {
        let a = compile_ledger(delta, &gates)["averaging_error"].as_f64().unwrap();
        assert!(a < last, "averaging bound {a} at Δ = {delta} did not drop below {last}");
        last = a;
    }
}

#[test]
fn compile_rejects_weight_three_without_truncation() {
    let out = run(&["compile", path(&data("weight3_trajectory.json")), "--splitting", "trivial"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("XYZ"));
    let truncated = run(&["compile", path(&data("weight3_trajectory.json")), "--splitting", "two-local"]);
    assert_eq!(truncated.status.code(), Some(0), "{}", stderr(&truncated));
    assert!(json(&truncated)["ledger"]["projection_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_passes_and_sabotage_fails() {
    let out = run(&["verify", "--samples", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["failures"], 0);
    for check in v["checks"].as_array().unwrap() {
        assert!(check["samples"].as_u64().unwrap() > 0, "{check}");
    }

    let bad = run(&["verify", "--samples", "30", "--corrupt-lemma1", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(json(&bad)["failures"].as_u64().unwrap() >= 1);
}

#[test]
fn liealg_examples() {
    let v = json(&run(&["liealg", "--theorem2", "--n", "3", "--seed", "7"]));
    assert_eq!(v["closure_dim"], 63);
    assert_eq!(v["bracket_generating"], true);
    assert_eq!(v["seed"], 7);

    let v = json(&run(&["liealg", "--generators", "X", "Z", "--n", "1"]));
    assert_eq!((v["closure_dim"].clone(), v["bracket_generating"].clone()), (3.into(), true.into()));

    let v = json(&run(&["liealg", "--generators", "X", "--n", "1"]));
    assert_eq!((v["closure_dim"].clone(), v["bracket_generating"].clone()), (1.into(), false.into()));
}

#[test]
fn optimize_x_rotation_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("best.json");
    let angle = std::f64::consts::FRAC_PI_4.to_string();
    let out = run(&["optimize", "--axis", "1,0,0", "--angle", &angle, "--trajectory-out", path(&traj)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let cost = v["best_cost"].as_f64().unwrap();
    assert!((cost - std::f64::consts::FRAC_PI_4).abs() < 1e-2, "{cost}");
    assert_eq!(v["converged"], true);

    let evolved = json(&run(&["evolve", path(&traj)]));
    let u = unitary(&evolved);
    let (c, s) = (std::f64::consts::FRAC_PI_4.cos(), std::f64::consts::FRAC_PI_4.sin());
    let expected = [[(c, 0.0), (0.0, -s)], [(0.0, -s), (c, 0.0)]];
    for r in 0..2 {
        for k in 0..2 {
            assert!((u[r][k].0 - expected[r][k].0).abs() < 1e-5);
            assert!((u[r][k].1 - expected[r][k].1).abs() < 1e-5);
        }
    }

    let v = json(&run(&["optimize", "--angle", "0"]));
    assert_eq!(v["best_cost"], 0.0);
}

#[test]
fn optimize_same_seed_is_byte_identical() {
    let args = ["optimize", "--haar", "--seed", "11", "--restarts", "2", "--max-iterations", "60"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 11);
}

#[test]
fn sweep_writes_csv_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = run(&["sweep", "--n", "2", "--deltas", "0.1,0.05", "--penalties", "64,1024", "--csv", path(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("penalty,delta,small_delta"));
    let keys: Vec<(String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expected = [("64", "0.1"), ("64", "0.05"), ("1024", "0.1"), ("1024", "0.05")];
    assert_eq!(keys, expected.map(|(a, b)| (a.to_string(), b.to_string())));
    assert_eq!(json(&out)["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn out_flag_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = run(&["liealg", "--generators", "X", "Y", "--n", "1", "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["closure_dim"], 3);
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(run(&["compile"]).status.code(), Some(3));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(&["liealg", "--generators", "X", "--n", "2"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
