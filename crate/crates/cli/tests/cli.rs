use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_racxpt"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().expect("binary runs")
}

fn report(out: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{command}.json"))).unwrap()).unwrap()
}

#[test]
fn packing_twice_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("c05_packing.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["packing", "--seed", "17"], &cfg, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["packing.json", "packing.csv", "library.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(report(&a, "packing")["seed"], 17);
    assert_eq!(report(&a, "packing")["config"]["seed"], 17);
}

#[test]
fn malformed_kernel_row_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{
  "channel": {"x": 2, "y": 2, "z": 2,
              "kernel": [[[1.0, 0.0], [0.5, 0.5]],
                         [[0.3, 0.6], [0.0, 1.0]]]},
  "task": {"kind": "lh", "rates": [[0.1, 0.1]]}
}
"#,
    )
    .unwrap();
    let o = run(&["exponent"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("(x=1, y=0)"), "{err}");
    assert!(err.contains("channel"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn malformed_composition_row_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"n": 8, "library": {"x": [[[0.5, 0.4]]], "y": [[[0.5, 0.5]]], "r1": [0.1], "r2": [0.1]}}"#).unwrap();
    let o = run(&["packing"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("library.x[0]") && err.contains("row 0"), "{err}");
}

#[test]
fn exponent_report_carries_value_argmin_and_terms() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["exponent", "--verify"], &configs().join("c03_solver_binary.json"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path(), "exponent");
    assert_eq!(r["passed"], true);
    let e = &r["result"]["points"][1]["exponent"];
    assert!(e["value"].as_f64().unwrap() > 0.0);
    for m in ["x", "y", "xy"] {
        assert!(e[m]["argmin"].is_object());
        assert!(e[m]["divergence_term"].is_number());
        assert!(e[m]["dependence_term"].is_number());
        assert!(e[m]["positive_part_term"].is_number());
    }
    let csv = std::fs::read_to_string(dir.path().join("exponent.csv")).unwrap();
    assert!(csv.starts_with("# racxpt exponent seed=303 config="));
    assert_eq!(csv.lines().count(), 2 + 5);
}

#[test]
fn failed_assertion_sets_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("strict.json");
    std::fs::write(
        &cfg,
        r#"{"channel": "noiseless-pair",
            "task": {"kind": "lh", "rates": [[0.3, 0.3]], "dichotomy": {"margin": 0.01, "threshold": 5.0}}}"#,
    )
    .unwrap();
    let o = run(&["exponent"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL positive on the interior"));
    assert_eq!(report(&dir.path().join("out"), "exponent")["passed"], false);
}

#[test]
fn selftest_runs_without_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["selftest", "--threads", "1", "--out"]).arg(dir.path()).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("selftest.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains(",true,")).count(), 5);
}

#[test]
fn decode_reads_a_saved_library() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["packing"], &configs().join("c05_packing.json"), dir.path());
    assert!(o.status.success());
    let lib: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("library.json")).unwrap()).unwrap();
    let z: Vec<u64> = lib["b"][0][0]["symbols"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    let cfg = dir.path().join("decode.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "channel": "noiseless-pair",
            "library": "library.json",
            "decoder": {"schedule": {"rule": "constant", "eta": 0.05}},
            "input": {"kind": "output", "z": z},
        })
        .to_string(),
    )
    .unwrap();
    let o = run(&["decode", "--verify"], &cfg, &dir.path().join("dec"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&dir.path().join("dec"), "decode");
    assert!(r["result"]["output"]["verdict"]["verdict"].is_string());
    assert_eq!(r["result"]["z"].as_array().unwrap().len(), 8);
}

#[test]
fn jscc_table_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("jscc.json");
    std::fs::write(
        &cfg,
        r#"{"channel": "noiseless-pair", "q1": [0.89, 0.11], "q2": [0.89, 0.11], "grid_points": 17,
            "compositions": {"mode": "classical",
                             "g1": {"kind": "constant", "kernel": [[0.5, 0.5]]},
                             "g2": {"kind": "constant", "kernel": [[0.5, 0.5]]}},
            "n": [3, 4], "codes": 2,
            "decoder": {"schedule": {"rule": "constant", "eta": 0.05}},
            "expect": {"decomposition_check": {"n": 3, "codes": 2}}}"#,
    )
    .unwrap();
    let o = run(&["jscc"], &cfg, &dir.path().join("out"));
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/jscc.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "n,codes,total,std_err,spread,dominant,target_kind,target_exponent");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("3,2,") && lines[2].contains(",Ej,"));
}
