use std::path::Path;
use std::process::Command;

fn goml() -> Command {
    Command::new(env!("CARGO_BIN_EXE_goml"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

#[test]
fn solve_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = goml()
        .args(["solve", &data("illustrative.prob"), "--seed", "7", "--report"])
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let obj = v["objective"].as_f64().unwrap();
    assert!((obj + 1.1497).abs() < 1e-3, "{obj}");
    assert_eq!(v["training_runs"], 2);
}

#[test]
fn missing_file_is_a_usage_error() {
    let out = goml().args(["solve", "missing.prob"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("file not found"));
    let out = goml().args(["bench", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn export_lp_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("model.lp");
    let out = goml()
        .args(["export-lp", &data("illustrative.prob")])
        .arg(&lp)
        .args(["--rho", "0.1", "--lambda", "100"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let model = goml::milp::lp_file::read_lp_file(&lp).unwrap();
    assert!(model.num_binaries() > 0);
    let sol = goml::milp::solve_milp(&model, &goml::milp::SolveOptions::default()).unwrap();
    assert!(sol.has_incumbent());
}

#[test]
fn infeasible_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clash.prob");
    std::fs::write(
        &path,
        r#"schema_version = 1
name = "clash"

[[variables]]
name = "x"
lower = 0
upper = 1

[objective]
expression = "x"

[[constraints]]
name = "low"
expression = "x^2 - 0.09"
sense = "<="

[[constraints]]
name = "high"
expression = "x^2 - 0.49"
sense = ">="
"#,
    )
    .unwrap();
    let out = goml().arg("solve").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}
