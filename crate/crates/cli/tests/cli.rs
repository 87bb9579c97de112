use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchgrade")).args(args).current_dir(root()).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        if e.path().is_dir() {
            copy_dir(&e.path(), &to.join(e.file_name()));
        } else {
            fs::copy(e.path(), to.join(e.file_name())).unwrap();
        }
    }
}

#[test]
fn score_prints_breakdown() {
    let o = run(&["score", "--item", "water-dye", "--student", "fixtures/packs/demo/water-dye/samples/perceived.srg.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["band"], "Developing");
    assert_eq!(v["z"], 21);
}

#[test]
fn sample_names_resolve_inside_the_item() {
    let o = run(&["score", "--item", "fixtures/packs/demo/water-dye", "--student", "complete"]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["s"], 1.0);
}

#[test]
fn feedback_emits_report_and_overlay() {
    let o = run(&["feedback", "--item", "water-dye", "--student", "perceived", "--canvas", "1000x400"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["report"]["proficiency_level"], "Developing");
    let rect = &v["overlay"][0];
    assert_eq!((rect["x0"].as_u64(), rect["y1"].as_u64()), (Some(20), Some(360)));

    let o = run(&["feedback", "--item", "water-dye", "--student", "perceived", "--text"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Your Proficiency Level: Developing"));
}

#[test]
fn loop_with_full_compliance_reaches_threshold() {
    let o = run(&["loop", "--item", "water-dye", "--student", "perceived", "--p", "1"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["terminated_by"], "threshold_met");
    let s: Vec<f64> = v["iterations"].as_array().unwrap().iter().map(|i| i["breakdown"]["s"].as_f64().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[1] > w[0]), "{s:?}");

    let o = run(&["loop", "--item", "water-dye", "--student", "perceived", "--null", "--t-max", "2"]);
    let v = stdout_json(&o);
    assert_eq!(v["terminated_by"], "max_iterations");
    assert_eq!(v["iterations"].as_array().unwrap().len(), 3);
}

#[test]
fn eval_prints_table_and_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("result.json");
    let o = run(&["eval", "--pack", "fixtures/packs/synthetic", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(table.lines().nth(1).unwrap(), "SRG,100.0,100.0,100.0,100.0,100.0,100.0,100.0");
    let r: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(r["macro_average"], 1.0);
    assert_eq!(r["predictions"].as_array().unwrap().len(), 180);
}

#[test]
fn validate_reports_missing_hint_as_incomplete_mapping() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&root().join("fixtures/packs/demo"), dir.path());
    let phi_path = dir.path().join("water-dye/phi.json");
    let mut phi: Value = serde_json::from_str(&fs::read_to_string(&phi_path).unwrap()).unwrap();
    let first = phi.as_object().unwrap().keys().next().unwrap().clone();
    phi.as_object_mut().unwrap().remove(&first);
    fs::write(&phi_path, phi.to_string()).unwrap();

    let o = run(&["validate", "--pack", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "IncompleteMapping");
    assert!(e["error"]["message"].as_str().unwrap().contains("incomplete hint mapping"));
}

#[test]
fn validate_accepts_shipped_packs() {
    let o = run(&["validate", "--pack", "fixtures/packs/synthetic"]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["samples"], 180);
    let o = run(&["validate", "--pack", "fixtures/packs/demo/water-dye"]);
    assert!(o.status.success());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["score", "--item", "water-dye"]).status.code(), Some(2));
    assert_eq!(run(&["feedback", "--item", "water-dye", "--student", "perceived", "--canvas", "0x5"]).status.code(), Some(2));
    let o = run(&["eval"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "UsageError");
}

#[test]
fn data_errors_exit_one() {
    let o = run(&["score", "--item", "water-dye", "--student", "no-such-file.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "IoError");
    let o = run(&["eval", "--pack", "fixtures/agents"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "LayoutError");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, r#"{"pack": "fixtures/packs/synthetic", "parallelism": 2}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "eval", "--format", "markdown"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("| SRG | 100.0 |"));

    fs::write(&cfg, r#"{"pack": "fixtures/packs/demo", "scoring": {"gamma1": 0.9, "gamma2": 0.1}}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "score", "--item", "water-dye", "--student", "perceived"]);
    let s = stdout_json(&o)["s"].as_f64().unwrap();
    let expected = 1.0 - 0.9 * 9.1 / 21.0 - 0.1 * 0.5;
    assert!((s - expected).abs() < 1e-9, "{s}");

    fs::write(&cfg, r#"{"unknown": 1}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "validate", "--pack", "fixtures/packs/demo"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "JsonError");
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pack");
    let o = run(&["gen", "--out", out.to_str().unwrap(), "--samples-per-band", "2", "--items", "A3-1,B5-1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["validate", "--pack", out.to_str().unwrap()]);
    assert_eq!(stdout_json(&o)["samples"], 12);
    let o = run(&["eval", "--pack", out.to_str().unwrap(), "--format", "csv"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("SRG,100.0,100.0,100.0"));
}

#[test]
fn help_documents_subcommands() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["validate", "score", "feedback", "loop", "eval", "calibrate", "gen", "serve"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
