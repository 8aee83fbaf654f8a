use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paritybet"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("PARITYBET_STAGES")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const GOOD: &str = r#"{"depth":2,"kind":"martingale","parity":"bets_on_odd",
  "values":{"":"1","0":"1","1":"1","00":"1/2","01":"3/2","10":"2","11":"0"}}"#;
const BAD: &str = r#"{"depth":1,"kind":"martingale","values":{"":"1","0":"1","1":"2"}}"#;

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", GOOD);
    let out = run(&["validate", "-i", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["valid"], true);

    let bad = write(dir.path(), "bad.json", BAD);
    let out = run(&["validate", "--in", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["valid"], false);
    assert_eq!(v["diagnosis"]["first_violation"]["property"], "martingale");
    assert_eq!(v["diagnosis"]["first_violation"]["state"], "");
}

#[test]
fn malformed_input_exits_2_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("trunc.json", r#"{"depth":1"#),
        (
            "rational.json",
            r#"{"depth":0,"kind":"martingale","values":{"":"1/0"}}"#,
        ),
        (
            "missing.json",
            r#"{"depth":1,"kind":"martingale","values":{"":"1","0":"1"}}"#,
        ),
        (
            "bits.json",
            r#"{"depth":1,"kind":"martingale","values":{"":"1","0":"1","2":"1"}}"#,
        ),
    ] {
        let p = write(dir.path(), name, text);
        let out = run(&["validate", "-i", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
        assert!(
            err["error"]["code"].is_string() && err["error"]["message"].is_string(),
            "{name}"
        );
    }
    let out = run(&[
        "validate",
        "-i",
        dir.path().join("absent.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn decompose_parity_factors_multiply_back() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(
        dir.path(),
        "m.json",
        r#"{"depth":2,"kind":"martingale","values":{"":"1","0":"1/2","1":"3/2","00":"1/4","01":"3/4","10":"3","11":"0"}}"#,
    );
    let out = run(&["decompose", "-i", m.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let text = v.to_string();
    assert!(
        text.contains("bets_on_odd") && text.contains("bets_on_even"),
        "{text}"
    );
}

#[test]
fn dimhalf_zero_mixture_describes_one_string() {
    let out = run(&["dimhalf", "--nmax", "1", "--stages", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["kraft_weight"], "1/134217728");
    let reqs = v["ledger"]["requests"].as_array().unwrap();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0]["length"], 27);
    assert_eq!(reqs[0]["target"], "0".repeat(18));
}

#[test]
fn dimhalf_reads_stage_count_from_env() {
    let out = bin()
        .args(["dimhalf", "--nmax", "1"])
        .env("PARITYBET_STAGES", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["stages"], 3);
}

#[test]
fn verify_two_round_passes_and_is_deterministic() {
    let a = run(&[
        "verify",
        "--lemma",
        "two-round",
        "--n",
        "200",
        "--seed",
        "4",
    ]);
    let b = run(&[
        "verify",
        "--lemma",
        "two-round",
        "--n",
        "200",
        "--seed",
        "4",
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["pass"], true);
    assert_eq!(
        run(&["verify", "--lemma", "nonsense"]).status.code(),
        Some(2)
    );
}

#[test]
fn diagonalize_writes_jsonl_trace() {
    let dir = tempfile::tempdir().unwrap();
    let advs = write(
        dir.path(),
        "advs.json",
        r#"[{"name":"e","initial":"4","form":"fsm","parity":"bets_on_even","sided":"unrestricted",
             "rule":{"start":0,"states":[{"wager":1,"outcome":1,"next":[0,0]}]}}]"#,
    );
    let trace = dir.path().join("trace.jsonl");
    let out = run(&[
        "diagonalize",
        "--engine",
        "N",
        "--adversaries",
        advs.to_str().unwrap(),
        "--target",
        "40",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.first().unwrap()["type"], "header");
    let summary = lines.last().unwrap();
    assert_eq!(summary["type"], "summary");
    assert_eq!(summary["replay_ok"], true);
    let bits = lines.iter().filter(|l| l["type"] == "bit").count();
    assert_eq!(bits as u64, summary["bits"].as_u64().unwrap());
}
