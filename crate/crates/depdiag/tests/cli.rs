use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use depdiag::cli::run_with;
use depdiag::http::router;
use depdiag::service::{Service, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn run(args: &[&str], input: &str) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("depdiag").chain(args.iter().copied());
    let code = run_with(argv, &mut Cursor::new(input.as_bytes().to_vec()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_out(args: &[&str]) -> Value {
    let (code, out, err) = run(args, "");
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn diagnose_fig2() {
    let (p, t) = (corpus("fig2.mjv"), corpus("fig2.test.json"));
    let v = json_out(&["diagnose", p.to_str().unwrap(), "--test", t.to_str().unwrap()]);
    let lines: Vec<Value> = v["diagnoses"].as_array().unwrap().iter().map(|d| d["lines"].clone()).collect();
    assert_eq!(lines, [json!([5]), json!([6]), json!([8])]);
    assert_eq!(v["diagnoses"][0], json!({ "components": ["C5"], "lines": [5], "cardinality": 1 }));
    let v = json_out(&["diagnose", p.to_str().unwrap(), "--test", t.to_str().unwrap(), "--value-filter"]);
    assert_eq!(v["diagnoses"].as_array().unwrap().len(), 2);
    assert_eq!(v["removed"][0]["components"], json!(["C5"]));
}

#[test]
fn slice_and_deps() {
    let p = corpus("fig2.mjv");
    let p = p.to_str().unwrap();
    assert_eq!(json_out(&["slice", p, "--method", "test", "--vars", "g", "--at", "8"]), json!({ "lines": [5, 6, 8] }));
    assert_eq!(json_out(&["slice", p, "--method", "test", "--vars", "f,g"]), json!({ "lines": [4, 5, 6, 7, 8] }));
    let deps = json_out(&["deps", p, "--method", "test"]);
    assert_eq!(deps[0], json!({ "component": "C4", "line": 4, "kind": "atomic", "fd": [{ "target": "s1#1", "deps": ["a#0", "c#0"] }] }));
    let model = json_out(&["model", p, "--method", "test"]);
    assert_eq!(model["clauses"][0], "C4: -AB(C4) & ok(a#0) & ok(c#0) -> ok(s1#1)");
}

#[test]
fn trace_by_arguments() {
    let p = corpus("fig2.mjv");
    let v = json_out(&["trace", p.to_str().unwrap(), "--method", "test", "--args", "[3,2,2,3,3]"]);
    assert_eq!(v["final"]["f"], 12);
    assert_eq!(v["final"]["g"], 12);
    assert_eq!(v["steps"].as_array().unwrap().len(), 5);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["bogus"], "").0, 2);
    assert_eq!(run(&["slice", "x.mjv"], "").0, 2);
    assert_eq!(run(&["--help"], "").0, 0);
    let (code, _, err) = run(&["diagnose", "missing.mjv", "--test", "missing.test.json"], "");
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"));
    let p = corpus("fig2.mjv");
    let (code, _, _) = run(&["slice", p.to_str().unwrap(), "--method", "test", "--vars", "nope"], "");
    assert_eq!(code, 1);
    let (code, _, _) = run(&["slice", p.to_str().unwrap(), "--method", "test", "--vars", "g", "--at", "x"], "");
    assert_eq!(code, 1);
}

#[test]
fn terminal_session_and_offline_tools() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("s.json");
    let (p, t) = (corpus("fig2.mjv"), corpus("fig2.test.json"));
    let args = ["session", p.to_str().unwrap(), "--test", t.to_str().unwrap(), "--snapshot", snap.to_str().unwrap()];
    let (code, out, err) = run(&args, "maybe\ny\n");
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("Is s2 = 6 at line 5 correct?"));
    assert!(err.contains("answer y or n"));
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["status"]["state"], "running");
    assert_eq!(report["counters"]["query"], 1);

    let next = json_out(&["next", snap.to_str().unwrap()]);
    assert_eq!(next["occurrence"], "s3#1");
    let (_, replayed, _) = run(&["replay", snap.to_str().unwrap()], "");
    assert_eq!(replayed, out);

    let mut s: Value = serde_json::from_str(&std::fs::read_to_string(&snap).unwrap()).unwrap();
    s["source"] = json!(s["source"].as_str().unwrap().replace("s3=c*e", "s3=c+e"));
    std::fs::write(&snap, s.to_string()).unwrap();
    let (code, _, err) = run(&["replay", snap.to_str().unwrap()], "");
    assert_eq!(code, 1);
    assert!(err.contains("hash mismatch"), "{err}");
}

/// A session driven through the API replays byte for byte through the CLI.
#[tokio::test]
async fn service_sessions_replay_identically() {
    let app = router(Arc::new(Service::new(ServiceConfig::default())), &[]);
    let post = |uri: String, body: Value| Request::builder().method("POST").uri(uri).body(Body::from(body.to_string())).unwrap();
    let get = |uri: String| Request::builder().uri(uri).body(Body::empty()).unwrap();
    let body = json!({
        "program": include_str!("../../../corpus/fig2.mjv"),
        "name": "fig2.mjv",
        "test": { "method": "test", "args": [3, 2, 2, 3, 3], "expect": { "f": 12, "g": 0 } },
    });
    let res = app.clone().oneshot(post("/sessions".into(), body)).await.unwrap();
    let v: Value = serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    let id = v["id"].as_str().unwrap().to_string();
    let mut action = v["action"].clone();
    for verdict in [true, true] {
        let res = app.clone().oneshot(post(format!("/sessions/{id}/answer"), json!({ "action_id": action["id"], "verdict": verdict }))).await.unwrap();
        let v: Value = serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
        action = v["action"].clone();
    }
    let report = app.clone().oneshot(get(format!("/sessions/{id}/report"))).await.unwrap().into_body().collect().await.unwrap().to_bytes();
    let snapshot = app.clone().oneshot(get(format!("/sessions/{id}/snapshot"))).await.unwrap().into_body().collect().await.unwrap().to_bytes();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    std::fs::write(&path, &snapshot).unwrap();
    let (code, out, err) = run(&["replay", path.to_str().unwrap()], "");
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.as_bytes(), [&report[..], b"\n"].concat());
}
