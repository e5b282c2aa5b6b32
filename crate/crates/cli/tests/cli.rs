use std::path::Path;
use std::process::{Command, Output};

fn oranplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oranplan"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TINY_HAUL: &str = r#"{
  "budgets": {
    "ota": [0.0002, 0.0004, 0.0003],
    "fronthaul": [1e-9, 1e-9, 1e-9],
    "midhaul": [1e-9, 1e-9, 1e-9],
    "bbu": [5e-5, 8e-5, 1e-4]
  }
}"#;

#[test]
fn generate_writes_the_library_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = oranplan(&[
        "generate",
        "--class",
        "rural",
        "--side",
        "1",
        "--seed",
        "4",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("scenario.json")).unwrap();
    let s = oranplan::scenario::Scenario::from_json(&text).unwrap();
    let cfg = oranplan::report::ExperimentConfig::default();
    let lib =
        oranplan::report::scenario_for(&cfg, oranplan::scenario::AreaClass::Rural, 1.0, 4).unwrap();
    assert_eq!(s, lib);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains(&format!("{} UEs", lib.ues.len())),
        "{stdout}"
    );
}

#[test]
fn associate_reads_a_saved_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    assert_eq!(
        code(&oranplan(&[
            "generate", "--class", "urban", "--seed", "2", "--out", d
        ])),
        0
    );
    let scen = dir.path().join("scenario.json");
    let out = oranplan(&["associate", "--scenario", path(&scen), "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("assignment.json").exists());
    let trace = std::fs::read_to_string(dir.path().join("gap_trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn price_reports_both_designs() {
    let dir = tempfile::tempdir().unwrap();
    let out = oranplan(&[
        "price",
        "--class",
        "urban",
        "--seed",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cost.json")).unwrap())
            .unwrap();
    let pon = v["pon"]["total"].as_i64().unwrap();
    let otn = v["otn"]["total"].as_i64().unwrap();
    assert!(pon > 0 && otn > pon);
    let s = v["savings"].as_f64().unwrap();
    assert!((s - (otn - pon) as f64 / otn as f64).abs() < 1e-12);
}

#[test]
fn infeasible_deploy_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY_HAUL);
    let out = oranplan(&["deploy", "--config", &cfg, "--out", path(dir.path())]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("deploy"), "{err}");
    assert!(!dir.path().join("plan.json").exists());
}

#[test]
fn unreachable_ota_budget_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"budgets": {"ota": [1e-9, 1e-9, 1e-9], "fronthaul": [1e-4, 1e-4, 1e-4],
            "midhaul": [1e-4, 5e-4, 1e-3], "bbu": [5e-5, 8e-5, 1e-4]}}"#,
    );
    assert_eq!(
        code(&oranplan(&[
            "associate",
            "--config",
            &cfg,
            "--out",
            path(dir.path())
        ])),
        1
    );
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    let broken = write_config(dir.path(), "{\"seeds\": ");
    assert_eq!(
        code(&oranplan(&["generate", "--config", &broken, "--out", d])),
        2
    );
    let empty = write_config(dir.path(), "{\"seeds\": []}");
    assert_eq!(
        code(&oranplan(&["sweep", "--config", &empty, "--out", d])),
        2
    );
    assert_eq!(
        code(&oranplan(&["deploy", "--variant", "nope", "--out", d])),
        2
    );
    assert_eq!(
        code(&oranplan(&["generate", "--side", "0.2", "--out", d])),
        2
    );
    assert_eq!(
        code(&oranplan(&["generate", "--class", "lunar", "--out", d])),
        2
    );
    assert_eq!(code(&oranplan(&["compare", "--bundle", d, "--out", d])), 2);
}

#[test]
fn sweep_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"classes": ["industrial"], "sides_km": [1.0], "seeds": [1], "p1_solver": "both", "scaling_n": [1]}"#,
    );
    let bundle = dir.path().join("bundle");
    let out = oranplan(&["sweep", "--config", &cfg, "--out", path(&bundle)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in oranplan::report::BUNDLE_FILES {
        assert!(bundle.join(name).exists(), "{name}");
    }
    let gaps = dir.path().join("gaps");
    let out = oranplan(&["compare", "--bundle", path(&bundle), "--out", path(&gaps)]);
    assert_eq!(code(&out), 0);
    let table = std::fs::read_to_string(gaps.join("solver_gaps.csv")).unwrap();
    assert!(table.starts_with("run_id,stage,ru_delta"));
    assert!(table.lines().count() > 1);
}
