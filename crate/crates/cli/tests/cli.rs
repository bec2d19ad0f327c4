use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::thread;

use serde_json::Value;

const GRAPH: &str = r#"{"n":3,"initial":3,"edges":[[1,2],[1,3],[3,1],[3,2]]}"#;

fn ltlgen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltlgen"))
        .current_dir(dir)
        .env_remove("LTLGEN_API_KEY")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("invalid JSON ({e}): {}", stdout(o)))
}

fn entries(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn check_prints_verdict_and_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltlgen(dir.path(), &["check", "--formula", "(F event2)", "--graph", GRAPH]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "false\ncounterexample: stem [event3] loop [event1, event3]\n"
    );

    let o = ltlgen(
        dir.path(),
        &["--json", "check", "--formula", "(F event2)", "--graph", GRAPH],
    );
    let v = json(&o);
    assert_eq!(v["holds"], false);
    assert_eq!(v["counterexample"]["stem"], serde_json::json!([3]));
    assert_eq!(v["counterexample"]["loop"], serde_json::json!([1, 3]));

    let o = ltlgen(
        dir.path(),
        &[
            "check",
            "--bruteforce",
            "--formula",
            "(event1 -> (G (F event2)))",
            "--graph",
            GRAPH,
        ],
    );
    assert_eq!(stdout(&o), "true\n");
    assert!(entries(dir.path()).is_empty());
}

#[test]
fn domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltlgen(dir.path(), &["check", "--formula", "(F event9)", "--graph", GRAPH]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[parse]:"), "{}", stderr(&o));

    let o = ltlgen(dir.path(), &["check", "--formula", "(F event1", "--graph", GRAPH]);
    assert_eq!(o.status.code(), Some(1));

    let o = ltlgen(
        dir.path(),
        &[
            "check",
            "--formula",
            "(F event1)",
            "--graph",
            r#"{"n":1,"initial":1,"edges":[]}"#,
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[invalid-config]:"));

    let out = dir.path().join("x.jsonl");
    let o = ltlgen(
        dir.path(),
        &[
            "generate",
            "--events",
            "3",
            "--operators",
            "0",
            "--count",
            "4",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[invalid-config]:"));
    let o = ltlgen(
        dir.path(),
        &[
            "generate",
            "--events",
            "3",
            "--operators",
            "2",
            "--count",
            "3",
            "--balanced",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists(), "invalid flags must not create the output");
}

#[test]
fn generate_and_crosscheck() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltlgen(
        dir.path(),
        &[
            "--json",
            "generate",
            "--events",
            "3",
            "--operators",
            "3",
            "--count",
            "40",
            "--seed",
            "1",
            "--balanced",
            "--out",
            "d.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!((v["count"].as_u64(), v["true"].as_u64()), (Some(40), Some(20)));
    assert_eq!(entries(dir.path()), ["d.jsonl"]);
    let text = fs::read_to_string(dir.path().join("d.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 40);

    let o = ltlgen(dir.path(), &["crosscheck", "--dataset", "d.jsonl"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "40 records, 0 replay mismatches\n");

    let o = ltlgen(dir.path(), &["--json", "crosscheck", "--dataset", "d.jsonl"]);
    assert_eq!(json(&o)["replay_mismatches"], serde_json::json!([]));

    let o = ltlgen(
        dir.path(),
        &[
            "crosscheck",
            "--dataset",
            "d.jsonl",
            "--nusmv-path",
            "/nonexistent/NuSMV",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[nusmv-missing]:"));

    // A tampered label is a domain error.
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[0] = if lines[0].contains("\"label\":true") {
        lines[0].replace("\"label\":true", "\"label\":false")
    } else {
        lines[0].replace("\"label\":false", "\"label\":true")
    };
    fs::write(dir.path().join("bad.jsonl"), lines.join("\n")).unwrap();
    let o = ltlgen(dir.path(), &["crosscheck", "--dataset", "bad.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[mismatch]:"));

    fs::write(dir.path().join("broken.jsonl"), "{\"id\":1}\n").unwrap();
    let o = ltlgen(dir.path(), &["crosscheck", "--dataset", "broken.jsonl"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[schema]: schema violation at line 1"));

    let o = ltlgen(dir.path(), &["crosscheck", "--dataset", "missing.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[io]:"));
}

#[cfg(unix)]
#[test]
fn crosscheck_with_stand_in_nusmv() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    // Answers "true" for every model; labels that are false then disagree.
    let fake = dir.path().join("nusmv");
    fs::write(&fake, "#!/bin/sh\necho '-- specification x  is true'\n").unwrap();
    fs::set_permissions(&fake, fs::Permissions::from_mode(0o755)).unwrap();
    let o = ltlgen(
        dir.path(),
        &[
            "--quiet",
            "generate",
            "--events",
            "2",
            "--operators",
            "1",
            "--count",
            "6",
            "--balanced",
            "--out",
            "d.jsonl",
        ],
    );
    assert!(o.status.success());
    let o = ltlgen(
        dir.path(),
        &[
            "--json",
            "crosscheck",
            "--dataset",
            "d.jsonl",
            "--nusmv-path",
            fake.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["nusmv_checked"], true);
    assert_eq!(v["nusmv_mismatches"].as_array().unwrap().len(), 3);
}

#[test]
fn emit_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let f = "(event1 -> (G (F event2)))";
    let o = ltlgen(
        dir.path(),
        &[
            "emit-nusmv",
            "--nusmv-style",
            "paper-literal",
            "--formula",
            f,
            "--graph",
            GRAPH,
        ],
    );
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("MODULE main\nVAR\n"));
    assert!(text.contains("        state = event1 : event2;\n        state = event1 : event3;\n"));
    assert!(text.ends_with("LTLSPEC ((state=event1) -> (G (F (state=event2))))\n"));

    let o = ltlgen(
        dir.path(),
        &["emit-nusmv", "--formula", f, "--graph", GRAPH, "--out", "m.smv"],
    );
    assert!(o.status.success());
    assert!(fs::read_to_string(dir.path().join("m.smv"))
        .unwrap()
        .contains("state = event1 : {event2, event3};"));

    let o = ltlgen(dir.path(), &["--json", "emit-nusmv", "--formula", f, "--graph", GRAPH]);
    assert_eq!(json(&o)["style"], "sets");

    fs::write(dir.path().join("g.json"), GRAPH).unwrap();
    let o = ltlgen(
        dir.path(),
        &[
            "render",
            "--part",
            "hypothesis",
            "--formula",
            f,
            "--graph-file",
            "g.json",
        ],
    );
    assert!(stdout(&o).starts_with("C1: Event2 will happen eventually.\n"));
    let o = ltlgen(dir.path(), &["--json", "render", "--formula", f, "--graph", GRAPH]);
    let v = json(&o);
    assert!(v["prompt"]
        .as_str()
        .unwrap()
        .starts_with("=== Context ===\n\nInitially, event3 happened."));
}

/// Answers every chat request with `answer`, for `requests` connections.
fn chat_server(answer: &'static str, requests: usize) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    thread::spawn(move || {
        for _ in 0..requests {
            let Ok((mut stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim_end().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let reply = serde_json::json!({"choices": [{"message": {"content": answer}}]}).to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    url
}

#[test]
fn evaluate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltlgen(
        dir.path(),
        &[
            "--quiet",
            "generate",
            "--events",
            "3",
            "--operators",
            "2",
            "--count",
            "10",
            "--balanced",
            "--out",
            "d.jsonl",
        ],
    );
    assert!(o.status.success());
    let url = chat_server("True", 10);
    let o = ltlgen(
        dir.path(),
        &[
            "--json",
            "evaluate",
            "--dataset",
            "d.jsonl",
            "--base-url",
            &url,
            "--model",
            "m",
            "--out",
            "r.jsonl",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["accuracy"], 0.5);
    assert_eq!(v["failed_requests"], 0);

    let results = fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    let recs: Vec<Value> = results.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 10);
    assert_eq!(recs[0]["problem_id"], "p00");
    assert_eq!(recs[0]["parsed"], "true");

    let o = ltlgen(dir.path(), &["report", "--results", "r.jsonl"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "Model  Accuracy      F1     AUC\nr         0.500   0.667   0.500\n"
    );
    let o = ltlgen(dir.path(), &["--json", "report", "--results", "r.jsonl"]);
    assert_eq!(json(&o)[0]["name"], "r");
    assert_eq!(entries(dir.path()), ["d.jsonl", "r.jsonl"]);
}

#[test]
fn evaluate_with_unreachable_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    ltlgen(
        dir.path(),
        &[
            "--quiet",
            "generate",
            "--events",
            "2",
            "--operators",
            "1",
            "--count",
            "2",
            "--out",
            "d.jsonl",
        ],
    );
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}");
    let o = ltlgen(
        dir.path(),
        &[
            "evaluate",
            "--dataset",
            "d.jsonl",
            "--base-url",
            &url,
            "--model",
            "m",
            "--out",
            "r.jsonl",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("error[network]:"));
    let results = fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    assert_eq!(results.lines().count(), 2);
    assert!(results.contains("\"parsed\":\"invalid\""));
}

#[test]
fn sweep_with_mocks() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltlgen(
        dir.path(),
        &[
            "--quiet",
            "sweep",
            "--axis",
            "operators",
            "--fixed",
            "2",
            "--values",
            "1,2",
            "--count",
            "20",
            "--mock",
            "oracle",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "axis,value,n,m,count,accuracy,f1,auc,n_invalid");
    assert_eq!(lines[1], "operators,1,2,1,20,1.000000,1.000000,1.000000,0");
    assert_eq!(lines.len(), 3);

    let o = ltlgen(
        dir.path(),
        &[
            "--json",
            "sweep",
            "--axis",
            "events",
            "--fixed",
            "2",
            "--values",
            "2",
            "--count",
            "10",
            "--mock",
            "always-true",
            "--out",
            "s.csv",
        ],
    );
    let v = json(&o);
    assert_eq!(v[0]["report"]["accuracy"], 0.5);
    assert_eq!(v[0]["n"], 2);
    assert!(fs::read_to_string(dir.path().join("s.csv"))
        .unwrap()
        .starts_with("axis,"));

    let o = ltlgen(
        dir.path(),
        &[
            "sweep", "--axis", "events", "--fixed", "2", "--values", "2", "--count", "10",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error[invalid-config]:"));
}

#[test]
fn help_lists_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = ltlgen(dir.path(), &["generate", "--help"]);
    let text = stdout(&o);
    assert!(text.contains("--edge-prob") && text.contains("[default: 0.5]"));
    let o = ltlgen(dir.path(), &["sweep", "--help"]);
    assert!(stdout(&o).contains("[default: 300]"));
}
