use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qanon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qanon"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("qanon runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("json line"))
        .collect()
}

fn summary(out: &Output) -> Value {
    lines(out)
        .into_iter()
        .find(|r| r["record"] == "summary")
        .expect("summary record")
}

fn config(dir: &Path, name: &str, json: &str) -> String {
    fs::write(dir.join(name), json).unwrap();
    name.to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn notify_summary_brackets_analytic_rate() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "n.json",
        r#"{"n": 4, "P_Z": 0.5, "K": 5, "notify_requests": {"1": 3}}"#,
    );
    let out = qanon(dir.path(), &["--config", &c, "--trials", "10000", "notify"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    let m = s["metrics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["metric"] == "notified_agent_3")
        .unwrap();
    let expected = 1.0 - 0.5f64.powi(5);
    assert!(
        m["ci_low"].as_f64().unwrap() <= expected && expected <= m["ci_high"].as_f64().unwrap()
    );
    assert_eq!(s["schema_version"], 1);
    let runs = lines(&out).iter().filter(|r| r["record"] == "run").count();
    assert_eq!(runs, 10000);
}

#[test]
fn compare_equal_secrets() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "c.json",
        r#"{"n": 4, "secrets": {"1": "1010", "3": "1010"}}"#,
    );
    let out = qanon(dir.path(), &["--config", &c, "compare"]);
    assert_eq!(out.status.code(), Some(0));
    let run = &lines(&out)[0];
    assert_eq!(run["equal"], true);
    assert_eq!(run["scheme"], "two_party");
}

#[test]
fn share_without_check_warns() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(dir.path(), "s.json", r#"{"n": 4, "S": 0}"#);
    let out = qanon(dir.path(), &["--config", &c, "share"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"));
    assert_eq!(lines(&out)[0]["outcome"], "shared");
}

#[test]
fn single_run_abort_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "s.json",
        r#"{"n": 4, "S": 2, "refusing_parties": [2, 3, 4], "preparer": 1}"#,
    );
    let out = qanon(dir.path(), &["--config", &c, "share"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert_eq!(lines(&out)[0]["outcome"], "aborted");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = qanon(dir.path(), &["--config", "missing.json", "notify"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.json"));

    let c = config(dir.path(), "bad.json", r#"{"n": 4, "unknown_field": 1}"#);
    assert_eq!(
        qanon(dir.path(), &["--config", &c, "notify"]).status.code(),
        Some(2)
    );

    assert_eq!(
        qanon(dir.path(), &["notify", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn ill_posed_coalition_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"attack": "coalition_guess", "members": [1, 2, 3, 4], "objective": "identify_notifier"}"#;
    let out = qanon(dir.path(), &["attack", "--spec", spec]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ill-posed"));
}

#[test]
fn tampering_on_phase_backend_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = qanon(
        dir.path(),
        &["attack", "--spec", r#"{"attack": "intercept_resend"}"#],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dense"));
}

#[test]
fn tp_trace_report_at_chance() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), r#"{"attack": "tp_trace"}"#).unwrap();
    let out = qanon(
        dir.path(),
        &[
            "attack", "--spec", "a.json", "--trials", "10000", "--seed", "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = &lines(&out)[0];
    assert_eq!(r["record"], "report");
    let rate = r["empirical_rate"].as_f64().unwrap();
    assert!((rate - 0.5).abs() <= 3.0 * (0.25f64 / 1e4).sqrt(), "{rate}");
}

#[test]
fn unchecked_interception_learns_nothing_about_secrets() {
    // S = 0: never detected, and collapsed registers give announced bits
    // with no secret parity in them
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "p.json",
        r#"{"n": 4, "S": 0, "secrets": {"1": "0", "2": "1"}}"#,
    );
    let spec = r#"{"attack": "intercept_resend", "scope": "pipeline"}"#;
    let trials = 2000;
    let out = qanon(
        dir.path(),
        &[
            "--config",
            &c,
            "--backend",
            "dense",
            "--trials",
            &trials.to_string(),
            "attack",
            "--spec",
            spec,
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = &lines(&out)[0];
    assert_eq!(r["detection_rate"], 0.0);
    let rate = r["empirical_rate"].as_f64().unwrap();
    assert!(
        (rate - 0.5).abs() <= 3.0 * (0.25 / trials as f64).sqrt(),
        "{rate}"
    );
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qanon(dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let checks = lines(&out);
    assert!(checks.len() >= 5);
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(stderr(&out).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn csv_output_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = qanon(dir.path(), &["--format", "csv", "--trials", "20", "notify"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(
        rows.next().unwrap(),
        "command,metric,successes,trials,rate,ci_low,ci_high,expected"
    );
    assert_eq!(rows.count(), 4);

    let out = qanon(
        dir.path(),
        &[
            "--format",
            "csv",
            "--trials",
            "20",
            "attack",
            "--spec",
            r#"{"attack": "tp_trace"}"#,
        ],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(
        "attack,params,trials,successes,rate,chance,z,detection_rate,max_posterior_deviation\n"
    ));
}

#[test]
fn transcript_export_schema() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        dir.path(),
        "p.json",
        r#"{"n": 4, "S": 1, "secrets": {"1": "01", "2": "01", "4": "11"}}"#,
    );
    let out = qanon(
        dir.path(),
        &["--config", &c, "pipeline", "--transcript", "t.ndjson"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("t.ndjson")).unwrap();
    let events: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e["seq"], i as u64);
        for key in ["round", "kind", "actor", "payload", "private"] {
            assert!(e.get(key).is_some(), "{key} missing in {e}");
        }
    }
    assert_eq!(events.last().unwrap()["kind"], "run_complete");
    assert_eq!(lines(&out)[0]["equal"], false);
}

#[test]
fn output_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"attack": "coalition_guess", "members": [2], "objective": "identify_notified"}"#;
    let run = |w: &str, file: &str| {
        let out = qanon(
            dir.path(),
            &[
                "attack",
                "--spec",
                spec,
                "--trials",
                "500",
                "--seed",
                "11",
                "--workers",
                w,
                "--output",
                file,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
        fs::read(dir.path().join(file)).unwrap()
    };
    assert_eq!(run("1", "a.ndjson"), run("3", "b.ndjson"));
}
