use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shieldrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shieldrl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

/// Copies a shipped rollout config with its output directory redirected.
fn rollout_config(dir: &Path, name: &str, out: &Path) -> PathBuf {
    let mut cfg = read_json(&configs().join(name));
    cfg["output_dir"] = Value::String(s(out).to_string());
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec(&cfg).unwrap()).unwrap();
    path
}

fn collisions(summary: &Path) -> u64 {
    read_json(summary)["breakdown"]["counts"]["collision"]
        .as_u64()
        .unwrap_or(0)
}

fn commit(dir: &Path, spec: &str) -> PathBuf {
    let artifact = dir.join("prereg.json");
    let out = shieldrl(&[
        "prereg",
        "commit",
        "--spec",
        s(&configs().join(spec)),
        "--out",
        s(&artifact),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    artifact
}

#[test]
fn filter_removes_collisions_from_random_rollouts() {
    let dir = tempfile::tempdir().unwrap();
    let filtered_out = dir.path().join("filtered");
    let raw_out = dir.path().join("raw");
    let filtered_cfg = rollout_config(dir.path(), "rollout_single_static.json", &filtered_out);
    assert_eq!(code(&shieldrl(&["rollout", "--config", s(&filtered_cfg)])), 0);
    let raw_cfg = rollout_config(dir.path(), "rollout_single_static.json", &raw_out);
    assert_eq!(code(&shieldrl(&["rollout", "--config", s(&raw_cfg), "--no-filter"])), 0);

    assert_eq!(collisions(&filtered_out.join("rollout_summary.json")), 0);
    assert!(collisions(&raw_out.join("rollout_summary.json")) > 0);
    let table = std::fs::read_to_string(filtered_out.join("rollout_breakdown.txt")).unwrap();
    assert!(table.contains("collision"));
}

#[test]
fn rollout_rejects_unknown_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, br#"{"output_dir": "x", "episodez": 3}"#).unwrap();
    assert_eq!(code(&shieldrl(&["rollout", "--config", s(&path)])), 2);
    assert_eq!(
        code(&shieldrl(&["rollout", "--config", s(&dir.path().join("missing.json"))])),
        2
    );
}

#[test]
fn prereg_commit_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = s(&configs().join("prereg_v23.json")).to_string();
    let first = shieldrl(&[
        "prereg",
        "commit",
        "--spec",
        &spec,
        "--out",
        s(&a.path().join("p.json")),
    ]);
    let second = shieldrl(&[
        "prereg",
        "commit",
        "--spec",
        &spec,
        "--out",
        s(&b.path().join("p.json")),
    ]);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(String::from_utf8_lossy(&first.stdout).trim().len(), 64);
    assert_eq!(
        std::fs::read(a.path().join("p.json")).unwrap(),
        std::fs::read(b.path().join("p.json")).unwrap()
    );
}

#[test]
fn prereg_eval_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = commit(dir.path(), "eval_success_rate.json");
    let metrics = |name: &str, body: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    };
    let low = metrics("low.json", r#"{"success_rate": 0.5}"#);
    let high = metrics("high.json", r#"{"success_rate": 0.9}"#);
    let absent = metrics("absent.json", r#"{}"#);
    let broken = metrics("broken.json", r#"{"success_rate": "#);
    let eval = |m: &Path| {
        code(&shieldrl(&[
            "prereg",
            "eval",
            "--artifact",
            s(&artifact),
            "--metrics",
            s(m),
        ]))
    };
    assert_eq!(eval(&low), 1);
    assert_eq!(eval(&high), 0);
    assert_eq!(eval(&absent), 1);
    assert_eq!(eval(&broken), 2);

    let json = shieldrl(&[
        "prereg",
        "eval",
        "--artifact",
        s(&artifact),
        "--metrics",
        s(&high),
        "--json",
    ]);
    let report: Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(report["overall_pass"], Value::Bool(true));

    let text = std::fs::read_to_string(&artifact).unwrap();
    std::fs::write(&artifact, text.replace("0.85", "0.5")).unwrap();
    assert_eq!(eval(&low), 4);
}

#[test]
fn malformed_prereg_spec_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        br#"{"name": "x", "created_at": "t", "criteria": [], "attempt_distribution": {"open": 0.4}}"#,
    )
    .unwrap();
    let out = shieldrl(&[
        "prereg",
        "commit",
        "--spec",
        s(&spec),
        "--out",
        s(&dir.path().join("p.json")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("p.json").exists());
}

#[test]
fn campaign_replay_renders_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = commit(dir.path(), "prereg_v23.json");
    let out = dir.path().join("replay");
    let run = shieldrl(&[
        "campaign",
        "--prereg",
        s(&artifact),
        "--out",
        s(&out),
        "--replay-counts",
        s(&configs().join("replay_counts_v23.json")),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let table = std::fs::read_to_string(out.join("yield_table.txt")).unwrap();
    let open = table.lines().find(|l| l.starts_with("Open")).expect("open row");
    assert!(open.trim_end().ends_with("---"));
    assert!(table.contains("62.83%") && table.contains("60.70%"));
}

#[test]
fn campaign_then_audit() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = commit(dir.path(), "prereg_v23.json");
    let out = dir.path().join("run");
    let run = shieldrl(&[
        "campaign",
        "--prereg",
        s(&artifact),
        "--total",
        "400",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    assert!(matches!(code(&run), 0 | 1), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["total"], 400);

    let dataset = out.join("dataset.jsonl");
    let campaign_audit = read_json(&out.join("audit.json"));
    let passed = campaign_audit["overall"] == "pass";
    let schema = dir.path().join("schema.json");
    let write_schema = |target: &str| {
        std::fs::write(
            &schema,
            format!(
                r#"{{"target_distribution": {target}, "distribution_tolerance": 0.02, "max_outlier_fraction": 0.05}}"#
            ),
        )
        .unwrap()
    };
    write_schema(r#"{"open": 0.18, "single_static": 0.36, "multi_obstacle": 0.26, "dynamic_obstacle": 0.20}"#);
    let audit = |d: &Path| code(&shieldrl(&["audit", "--dataset", s(d), "--schema", s(&schema)]));
    let first = audit(&dataset);
    assert!(first == 0 || !passed, "audit exit {first}");
    write_schema(r#"{"open": 1.0}"#);
    assert_eq!(audit(&dataset), 1);
    assert_eq!(audit(&dir.path().join("missing.jsonl")), 2);
}

#[test]
fn campaign_refuses_tampered_prereg() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = commit(dir.path(), "prereg_v23.json");
    let text = std::fs::read_to_string(&artifact).unwrap();
    std::fs::write(&artifact, text.replace("v23-collection", "v24-collection")).unwrap();
    let out = dir.path().join("run");
    let run = shieldrl(&["campaign", "--prereg", s(&artifact), "--total", "10", "--out", s(&out)]);
    assert_eq!(code(&run), 4);
    assert!(!out.join("dataset.jsonl").exists());
}

#[test]
fn halt_demo_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let run = shieldrl(&["halt-demo", "--out", s(&out)]);
    assert_eq!(code(&run), 0);
    assert!(out.join("halt_report.json").exists());
    assert!(!out.join("downstream_stage.done").exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&shieldrl(&["frobnicate"])), 2);
    assert_eq!(code(&shieldrl(&["campaign", "--prereg", "x", "--out", "y"])), 2);
    assert_eq!(code(&shieldrl(&["--help"])), 0);
}
