use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn kgqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgqa"))
        .args(args)
        .env_remove("KGQA_PORT")
        .env_remove("KGQA_KB")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn ask_prints_answer_and_query() {
    let o = kgqa(&["ask", "Dân số của Hà Nội là bao nhiêu?"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("8053663"), "{text}");
    assert!(text.contains("START n = node:DBPediaIndex(key=\"Hà_Nội\") RETURN n.dânSố"), "{text}");
}

#[test]
fn ask_trace_names_every_stage() {
    let o = kgqa(&["ask", "--trace", "Những thành viên chủ chốt của FPT là những ai?"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for stage in ["SEGMENT", "TAG", "CLASSIFY", "CONSTRUCT", "BUILD", "EXECUTE"] {
        assert!(text.contains(stage), "missing {stage}:\n{text}");
    }
}

#[test]
fn unanswerable_question_is_a_domain_error() {
    let o = kgqa(&["ask", "Xin chào"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(kgqa(&["ask"]).status.code(), Some(2));
    assert_eq!(kgqa(&["--frobnicate", "ask", "x"]).status.code(), Some(2));
    assert_eq!(kgqa(&["nonsense"]).status.code(), Some(2));
    assert_eq!(kgqa(&["eval", "x", "--strictness", "fuzzy"]).status.code(), Some(2));
    let o = kgqa(&["ask"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn query_returns_node_row() {
    let o = kgqa(&["--json", "query", r#"START n=node:DBPediaIndex(key="FPT") RETURN n"#]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["columns"], serde_json::json!(["n"]));
    assert_eq!(v["rows"], serde_json::json!([["FPT"]]));
}

#[test]
fn bad_query_is_a_domain_error() {
    let o = kgqa(&["query", "START n=node:X(key=\"a\") RETURN m"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unbound"));
}

#[test]
fn ingest_writes_a_loadable_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("kb.json");
    let o = kgqa(&["--json", "ingest", data("kb.tsv").to_str().unwrap(), "--out", snap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["report"]["skipped"], 0);
    assert!(v["stats"]["nodes"].as_u64().unwrap() > 30);

    let cfg = dir.path().join("kgqa.toml");
    std::fs::write(&cfg, "kb = \"kb.json\"\n").unwrap();
    let o = kgqa(&["--config", cfg.to_str().unwrap(), "ask", "Thủ đô của Pháp là gì?"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("Paris"));

    assert_eq!(kgqa(&["ingest", "/no/such/file.tsv"]).status.code(), Some(1));
}

#[test]
fn train_classifier_writes_model_used_by_ask() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let corpus = data("corpus.tsv");
    let run = |seed: &str| {
        kgqa(&["--json", "train-classifier", corpus.to_str().unwrap(), "--seed", seed, "--out", model.to_str().unwrap()])
    };
    let (a, b) = (run("3"), run("3"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(json(&a), json(&b), "same seed, same report");
    assert!(json(&a)["train_accuracy"].as_f64().unwrap() > 0.9);

    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(saved["labels"].as_array().unwrap().len(), 7);

    let cfg = dir.path().join("kgqa.toml");
    std::fs::write(&cfg, "model = \"model.json\"\n").unwrap();
    let o = kgqa(&["--config", cfg.to_str().unwrap(), "--json", "ask", "Những thành viên chủ chốt của FPT là những ai?"]);
    assert_eq!(json(&o)["answer_type"], "HUM");
}

#[test]
fn eval_reports_accuracies() {
    let o = kgqa(&["--json", "eval", data("eval.jsonl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!(v["n"].as_u64().unwrap() >= 60);
    assert!(v["qa_accuracy"].as_f64().unwrap() >= 0.9);
    let o = kgqa(&["eval", data("eval.jsonl").to_str().unwrap(), "--strictness", "lenient"]);
    assert!(stdout(&o).contains("qa accuracy"));
}

#[test]
fn templates_export_is_json_catalog() {
    let o = kgqa(&["templates", "export"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|t| t["id"].as_str().unwrap()).collect();
    for id in ["T1", "T2", "T3", "T4", "T5", "T6"] {
        assert!(ids.contains(&id), "{ids:?}");
    }
}

#[test]
fn bad_config_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("kgqa.toml");
    std::fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    assert_eq!(kgqa(&["--config", cfg.to_str().unwrap(), "ask", "x"]).status.code(), Some(1));
}

fn strip_timings(mut v: Value) -> Value {
    v["trace"].as_object_mut().unwrap().remove("elapsed_ms");
    v
}

#[tokio::test]
async fn ask_json_equals_http_answer() {
    let app = kgqa::server::router_for(kgqa::service::QaService::bundled().unwrap());
    for q in ["Những thành viên chủ chốt của FPT là những ai?", "Hà Nội có phải là thủ đô của Việt Nam không?", "Xin chào"] {
        let cli = strip_timings(json(&kgqa(&["--json", "ask", q])));
        let body = serde_json::json!({ "question": q }).to_string();
        let req = Request::post("/ask").header("content-type", "application/json").body(Body::from(body)).unwrap();
        let res = app.clone().oneshot(req).await.unwrap();
        let bytes = res.into_body().collect().await.unwrap().to_bytes();
        let http = strip_timings(serde_json::from_slice(&bytes).unwrap());
        assert_eq!(cli, http, "{q}");
    }
}

fn http_get(port: u16, path: &str) -> Option<(u16, String)> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut text = String::new();
    s.read_to_string(&mut text).ok()?;
    let status = text.split_whitespace().nth(1)?.parse().ok()?;
    Some((status, text.split("\r\n\r\n").nth(1).unwrap_or("").to_string()))
}

#[test]
fn serve_answers_http() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_kgqa"))
        .args(["serve", "--port", "0"])
        .env_remove("KGQA_PORT")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let port: u16 = line.trim().rsplit(':').next().unwrap().parse().unwrap_or_else(|_| panic!("{line}"));

    let deadline = Instant::now() + Duration::from_secs(30);
    let body = loop {
        match http_get(port, "/kb/stats") {
            Some((200, body)) => break body,
            Some((503, _)) | None if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            other => panic!("{other:?}"),
        }
    };
    let _ = child.kill();
    let _ = child.wait();
    let stats: Value = serde_json::from_str(&body).unwrap();
    assert!(stats["nodes"].as_u64().unwrap() > 0);
}
