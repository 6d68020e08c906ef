use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const VACCINATION_ENV: &str = "vax_param=1/2,contact_param=1/3,decline=9/10";

fn probsens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probsens"))
        .args(args)
        .output()
        .expect("spawn probsens")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8")
}

fn program_file(name: &str, text: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).expect("write program");
    path
}

/// `n = k: value` lines of a text report.
fn text_values(report: &str) -> Vec<(u64, String)> {
    report
        .lines()
        .filter_map(|l| l.strip_prefix("n = "))
        .map(|l| {
            let (n, rest) = l.split_once(": ").expect("n = k: value");
            let value = rest.split(" (~").next().unwrap().trim();
            (n.parse().unwrap(), value.to_string())
        })
        .collect()
}

#[test]
fn text_and_json_reports_agree() {
    for method in ["diff", "sensrec"] {
        let base = [
            "analyze",
            "corpus:vaccination",
            "--target",
            "infected_prob",
            "--wrt",
            "vax_param",
            "--method",
            method,
            "--eval",
            VACCINATION_ENV,
            "--at-n",
            "0,1,3,11",
        ];
        let text = probsens(&base);
        assert_eq!(code(&text), 0, "{}", stderr(&text));
        let mut json_args = base.to_vec();
        json_args.extend(["--format", "json"]);
        let json = probsens(&json_args);
        assert_eq!(code(&json), 0, "{}", stderr(&json));

        let report: Value = serde_json::from_str(&stdout(&json)).expect("json report");
        let text = stdout(&text);
        let rec = report["rec"].as_u64().unwrap();
        assert!(text.lines().any(|l| l == format!("Rec: {rec}")), "{method}: {text}");
        let from_json: Vec<(u64, String)> = report["evaluations"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| (e["n"].as_u64().unwrap(), e["value"].as_str().unwrap().to_string()))
            .collect();
        assert_eq!(text_values(&text), from_json, "{method}");
        assert_eq!(from_json.len(), 4);
        assert!(text.contains(report["closed_form"].as_str().unwrap()));
    }
}

#[test]
fn exact_simulation_matches_the_closed_form() {
    let analyzed = probsens(&[
        "analyze",
        "corpus:vaccination",
        "--target",
        "infected_prob",
        "--eval",
        VACCINATION_ENV,
        "--at-n",
        "5",
        "--format",
        "json",
    ]);
    let simulated = probsens(&[
        "simulate",
        "corpus:vaccination",
        "--target",
        "infected_prob",
        "--eval",
        VACCINATION_ENV,
        "--at-n",
        "5",
        "--mode",
        "exact",
        "--format",
        "json",
    ]);
    let a: Value = serde_json::from_str(&stdout(&analyzed)).unwrap();
    let s: Value = serde_json::from_str(&stdout(&simulated)).unwrap();
    assert_eq!(a["evaluations"][0]["value"], s["results"][0]["estimate"]["exact"]);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let missing = probsens(&["analyze", "no/such/file.prob", "--target", "x"]);
    assert_eq!(code(&missing), 2);

    let bad = program_file("bad.prob", "x = 0\nwhile true:\n  x = x +\nend\n");
    let parse = probsens(&["analyze", bad.to_str().unwrap(), "--target", "x"]);
    assert_eq!(code(&parse), 2);
    assert!(stderr(&parse).contains("3:"), "{}", stderr(&parse));

    let unknown = probsens(&["analyze", "corpus:vaccination", "--target", "infected_prob", "--wrt", "nope"]);
    assert_eq!(code(&unknown), 2, "{}", stderr(&unknown));

    let unassigned = probsens(&[
        "analyze",
        "corpus:vaccination",
        "--target",
        "infected_prob",
        "--eval",
        "vax_param=1/2",
        "--at-n",
        "3",
    ]);
    assert_eq!(code(&unassigned), 2, "{}", stderr(&unassigned));

    let influenced = probsens(&[
        "analyze",
        "corpus:non_admissible_pinfluenced",
        "--target",
        "v",
        "--wrt",
        "p",
        "--method",
        "sensrec",
    ]);
    assert_eq!(code(&influenced), 3, "{}", stderr(&influenced));

    let cubic = program_file("cubic.prob", "x, y, z = 1, 0, 0\nwhile true:\n  x, y, z = y, z, x + y\nend\n");
    let unsupported = probsens(&["analyze", cubic.to_str().unwrap(), "--target", "x"]);
    assert_eq!(code(&unsupported), 4, "{}", stderr(&unsupported));

    let capped = probsens(&["analyze", "corpus:non_admissible", "--target", "w"]);
    assert_eq!(code(&capped), 5, "{}", stderr(&capped));

    let singular = probsens(&[
        "analyze",
        "corpus:vaccination",
        "--target",
        "infected_prob",
        "--wrt",
        "vax_param",
        "--eval",
        "vax_param=0,contact_param=1/3,decline=1",
        "--at-n",
        "3",
    ]);
    assert_eq!(code(&singular), 6, "{}", stderr(&singular));
}

#[test]
fn closed_pipe_is_not_an_error() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_probsens"))
        .args(["dump-recurrences", "corpus:vaccination", "--target", "infected_prob^2", "--format", "json"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(!stderr(&out).contains("panicked"));
}

#[test]
fn classify_reports_every_parameter() {
    let out = probsens(&["classify", "corpus:vaccination", "--format", "json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let params: Vec<&str> = v["parameters"].as_array().unwrap().iter().map(|p| p["param"].as_str().unwrap()).collect();
    assert_eq!(params, ["contact_param", "decline", "vax_param"]);
    assert_eq!(v["admissible"], true);
}
