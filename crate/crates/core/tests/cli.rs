use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enso-mmo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn nondim_table1_reports_groups_and_scales() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["nondim", "--preset", "table1"]));
    for (key, want) in [
        ("delta", 0.2625),
        ("rho", 0.3224),
        ("a", 6.8927),
        ("c", 2.3952),
        ("k", 0.4032),
        ("S0", 2.8182),
        ("T0", 2.8182),
        ("h0", 62.0),
        ("t0", 104.9819),
    ] {
        let got = v[key].as_f64().unwrap_or_else(|| panic!("missing {key}"));
        assert!(((got - want) / want).abs() < 5e-3, "{key} = {got}");
    }
}

#[test]
fn folds_at_c_one_is_an_empty_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["folds", "--c", "1.0"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["status"], "no folds");
    assert_eq!(v["curves"].as_array().unwrap().len(), 0);
}

#[test]
fn fold_dependent_commands_reject_c_at_most_one() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["singularities", "scan-fsn2", "singular-cycle"] {
        let out = run(dir.path(), &[cmd, "--c", "0.9"]);
        assert_eq!(code(&out), 2, "{cmd}");
    }
}

#[test]
fn folds_reports_both_curves_and_branch_roots() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["folds", "--preset", "fig4", "--points", "5"]));
    let eta = v["eta"].as_f64().unwrap();
    assert!((eta - 3.75f64.sqrt().acosh()).abs() < 1e-14);
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 2);
    assert_eq!(curves[0]["side"], "L-");
    assert_eq!(curves[0]["points"].as_array().unwrap().len(), 5);
    assert_eq!(v["branch_roots"]["roots"].as_array().unwrap().len(), 3);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["folds", "--preset", "nope"])), 2);
    assert_eq!(
        code(&run(dir.path(), &["folds", "--preset", "fig4", "--params", "c=2"])),
        2
    );
    assert_eq!(
        code(&run(dir.path(), &["simulate", "--preset", "fig4", "--dimensional"])),
        2
    );
    assert_eq!(code(&run(dir.path(), &["nondim", "--preset", "fig4"])), 2);
    fs::write(dir.path().join("bad.txt"), "delta = 0.1\nrho 0.5\n").unwrap();
    assert_eq!(code(&run(dir.path(), &["folds", "--params-file", "bad.txt"])), 2);
    assert_eq!(code(&run(dir.path(), &["signature", "missing.csv"])), 2);
}

#[test]
fn blow_up_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--init", "50", "0", "0", "--tspan", "0", "10"],
    );
    assert_eq!(code(&out), 3);
}

#[test]
fn params_file_and_inline_params_agree() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("p.txt"),
        "# fig4\ndelta = 0.1\nrho = 0.5\na = 2.55\nc = 3.75\nk = 0.34\n",
    )
    .unwrap();
    let a = json(&run(dir.path(), &["singularities", "--params-file", "p.txt"]));
    let b = json(&run(
        dir.path(),
        &["singularities", "--params", "delta=0.1,rho=0.5,a=2.55,c=3.75,k=0.34"],
    ));
    let c = json(&run(dir.path(), &["singularities", "--preset", "fig4"]));
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn simulate_then_signature_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &[
            "simulate", "--preset", "fig7", "--tspan", "0", "400", "--out", "traj.csv",
        ],
    );
    let v = json(&out);
    assert_eq!(v["out"], "traj.csv");
    let text = fs::read_to_string(dir.path().join("traj.csv")).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with('#') && meta.contains("units:") && meta.contains("x=dimensionless"));
    assert_eq!(lines.next().unwrap(), "t,x,y,z");

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("traj.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["preset"], "fig7");
    assert_eq!(manifest["params"]["delta"], 0.3);
    assert_eq!(manifest["options"]["init"], serde_json::json!([-4.0, -1.0, 0.5]));
    assert_eq!(manifest["outputs"], serde_json::json!(["traj.csv"]));

    let s = json(&run(dir.path(), &["signature", "traj.csv"]));
    assert_eq!(s["repeating_unit"], "1^5");
    assert!(s["lao_count"].as_u64().unwrap() >= 2);
    assert!(s["sao_count"].as_u64().unwrap() >= 5);
}

#[test]
fn rerunning_the_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    json(&run(
        dir.path(),
        &["simulate", "--preset", "fig4", "--tspan", "0", "300", "--out", "a.csv"],
    ));
    let first = fs::read(dir.path().join("a.csv")).unwrap();
    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    let args: Vec<String> = manifest["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap().to_string())
        .collect();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    json(&run(dir.path(), &args));
    assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), first);
}

#[test]
fn dimensional_output_uses_physical_units() {
    let dir = tempfile::tempdir().unwrap();
    json(&run(
        dir.path(),
        &[
            "simulate",
            "--preset",
            "table1",
            "--dimensional",
            "--tspan",
            "0",
            "600",
            "--out",
            "t.csv",
        ],
    ));
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.contains("t_days=days") && meta.contains("h1=m") && meta.contains("T1=degC"));
    assert_eq!(lines.next().unwrap(), "t_days,T1,T2,h1");
    let s = json(&run(dir.path(), &["signature", "t.csv", "--preset", "table1"]));
    assert!(s["lao_count"].as_u64().unwrap() > 0);
}

#[test]
fn csv_and_json_outputs_for_analysis_commands() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["scan-fsn2", "--points", "61", "--out", "scan.csv"]));
    let a = v["a_star"].as_f64().unwrap();
    assert!((2.0..3.5).contains(&a));
    let text = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(text.lines().count(), 2 + 61);
    assert!(dir.path().join("scan.csv.manifest.json").exists());

    let v = json(&run(dir.path(), &["singular-cycle", "--out", "cycle.csv"]));
    assert_eq!(v["segments"].as_array().unwrap().len(), 5);
    assert!(v["closure_gap"].as_f64().unwrap() < 1e-4);
    let text = fs::read_to_string(dir.path().join("cycle.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap() == "segment,kind,x,y,z");

    let v = json(&run(dir.path(), &["equilibria", "--out", "eq.json"]));
    assert_eq!(v["out"], "eq.json");
    let eq: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("eq.json")).unwrap()).unwrap();
    assert!(!eq["full"].as_array().unwrap().is_empty());
    assert!(!eq["reduced"].as_array().unwrap().is_empty());

    let out = run(dir.path(), &["manifold", "--branch", "m0", "--n", "4", "--nz", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "y,z,stability");
    assert_eq!(text.lines().count(), 2 + 12);
}

#[test]
fn compare_reports_every_segment() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["compare", "--delta", "0.05"]));
    for label in ["S1", "S2", "F1", "S3", "F2"] {
        assert!(v["segments"][label].as_f64().unwrap().is_finite(), "{label}");
    }
}
