use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn popsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popsim"))
        .args(args)
        .env_remove("POPSIM_SEED")
        .env_remove("POPSIM_OUT")
        .output()
        .expect("spawn popsim")
}

fn report(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("bad report {text:?}: {e}"))
}

fn run_kno(dir: &Path) -> Output {
    let out = format!("out={}", dir.display());
    popsim(&[
        "run", "--set", "simulator=kno:2", "--set", "model=I3", "--set", "n=6", "--set", "seed=1",
        "--set", "adversary=uo", "--set", "budget=2", "--set", "rate=0.01", "--set", "horizon=20000",
        "--set", &out,
    ])
}

#[test]
fn kno_run_passes_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_kno(a.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let r = report(&first);
    assert_eq!(r["passed"], true);
    assert_eq!(r["omissions"], 2);
    assert!(run_kno(b.path()).status.success());
    let ta = std::fs::read(a.path().join("trace.jsonl")).unwrap();
    let tb = std::fs::read(b.path().join("trace.jsonl")).unwrap();
    assert_eq!(ta, tb);
    assert!(a.path().join("report.jsonl").exists());
}

#[test]
fn recorded_trace_verifies_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_kno(dir.path()).status.success());
    let trace = dir.path().join("trace.jsonl");
    let t = trace.to_str().unwrap();

    let v = popsim(&["verify", t, "--pairing"]);
    assert!(v.status.success());
    assert_eq!(report(&v)["verification"]["matching"]["accepted"], true);

    let r = popsim(&["replay", t]);
    assert!(r.status.success());
    assert_eq!(report(&r)["identical"], true);
}

#[test]
fn tampered_trace_is_caught_by_replay() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_kno(dir.path()).status.success());
    let trace = dir.path().join("trace.jsonl");
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    // Line 0 is the header, so line 11 is step 10; swap its final configuration for the previous one.
    let mut rec: Value = serde_json::from_str(&lines[11]).unwrap();
    let prev: Value = serde_json::from_str(&lines[10]).unwrap();
    assert_ne!(rec["config"], prev["config"], "pick a step that changes something");
    rec["config"] = prev["config"].clone();
    lines[11] = rec.to_string();
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();

    let r = popsim(&["replay", trace.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let rep = report(&r);
    assert_eq!(rep["identical"], false);
    assert_eq!(rep["step"], 10);
}

#[test]
fn unsupported_simulator_model_pair_is_a_config_error() {
    let out = popsim(&["run", "--set", "simulator=sid", "--set", "model=T3", "--set", "n=4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn pairing_check_on_epidemic_is_rejected() {
    let out = popsim(&[
        "run", "--set", "protocol=epidemic", "--set", "checks=pairing", "--set", "initial=i,s,s",
        "--set", "model=TW", "--set", "simulator=direct",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pairing"));
}

#[test]
fn ftt_of_kno() {
    let out = popsim(&["ftt", "--simulator", "kno:1", "--model", "I3"]);
    assert!(out.status.success());
    assert_eq!(report(&out)["t"], 4);
}

#[test]
fn attack_against_kno_breaks_safety() {
    let out = popsim(&["attack", "--simulator", "kno:1", "--model", "I3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["t"], 4);
    assert_eq!(r["agents"], 10);
    assert_eq!(r["omissions"], 4);
    assert_eq!(r["replay"]["violated"], true);
    assert_eq!(r["replay"]["in_target"], 5);
}

#[test]
fn attack_on_inert_exceeds_cap() {
    let out = popsim(&["attack", "--simulator", "inert", "--model", "I3", "--cap", "20"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds cap"));
}

#[test]
fn rewrite_needs_a_legal_omission_model() {
    let out = popsim(&["attack", "--simulator", "sid", "--model", "T3", "--rewrite"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn batch_writes_one_line_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("out={}", dir.path().display());
    let o = popsim(&[
        "batch", "--from", "0", "--to", "4", "--set", "simulator=sid", "--set", "n=5", "--set", "horizon=3000",
        "--set", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&o)["passed"], 4);
    let lines = std::fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);
}

#[test]
fn env_seed_is_overridden_by_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = format!("out={}", dir.path().display());
    let o = Command::new(env!("CARGO_BIN_EXE_popsim"))
        .args(["run", "--set", "simulator=sid", "--set", "n=4", "--set", "horizon=500", "--set", &out, "--set", "seed=9"])
        .env("POPSIM_SEED", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(report(&o)["seed"], 9);
}

#[test]
fn rewrite_fools_sid_without_omissions() {
    let out = popsim(&["attack", "--simulator", "sid", "--model", "I1", "--rewrite", "--cap", "100000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["omissions"], 0);
    assert_eq!(r["replay"]["violated"], true);
}
