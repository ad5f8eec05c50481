mod common;

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::{assert_schema, corpus, navslice};
use navslice::corpus::{ADMIN_EXCLUSION, FORUM_BUGGY, SHOP};
use navslice::term::Term;
use navslice_cli::api::router;
use navslice_cli::docs::{to_json, CheckStatus, StateDoc, TraceMeta, TreeNode};
use navslice_cli::TraceStore;
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn service() -> (TempDir, Router) {
    let dir = TempDir::new().unwrap();
    let app = router(TraceStore::open(dir.path().join("store")).unwrap());
    (dir, app)
}

async fn run_check(app: &Router, spec: &str, property: &str) -> CheckStatus {
    let req = json!({ "spec": spec, "property": property }).to_string();
    let (code, body) = call(app, "POST", "/v1/checks", Some(req)).await;
    assert_eq!(code, StatusCode::ACCEPTED, "{body}");
    let first: CheckStatus = serde_json::from_str(&body).unwrap();
    for _ in 0..1200 {
        let (code, body) = call(app, "GET", &format!("/v1/checks/{}", first.job_id), None).await;
        assert_eq!(code, StatusCode::OK);
        assert_schema("check-status", &serde_json::from_str(&body).unwrap());
        let s: CheckStatus = serde_json::from_str(&body).unwrap();
        if s.status != "running" {
            return s;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("check did not finish");
}

fn assert_not_found(code: StatusCode, body: &str) {
    assert_eq!(code, StatusCode::NOT_FOUND, "{body}");
    let v: Value = serde_json::from_str(body).unwrap();
    assert_schema("error", &v);
    assert_eq!(v["error"]["code"], "not_found");
    assert_eq!(v["error"]["exit_status"], 3);
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let (_dir, app) = service();
    let fake = "ab".repeat(32);
    for uri in [
        format!("/v1/traces/{fake}"),
        format!("/v1/traces/{fake}/states/0"),
        "/v1/traces/..%2Findex/states/0".to_string(),
        format!("/v1/checks/{fake}"),
    ] {
        let (code, body) = call(&app, "GET", &uri, None).await;
        assert_not_found(code, &body);
    }
    let (code, body) = call(&app, "POST", &format!("/v1/traces/{fake}/slice"), Some(json!({"state": "last", "pattern": "?"}).to_string())).await;
    assert_not_found(code, &body);
}

#[tokio::test]
async fn malformed_requests_are_structured_errors() {
    let (_dir, app) = service();
    let (code, body) = call(&app, "POST", "/v1/checks", Some("{\"spec\": 1}".into())).await;
    assert_eq!(code, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_schema("error", &v);
    assert_eq!(v["error"]["code"], "bad_request");

    let (code, body) = call(&app, "POST", "/v1/graph", Some(json!({"spec": "page A {"}).to_string())).await;
    assert_eq!(code, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(serde_json::from_str::<Value>(&body).unwrap()["error"]["code"], "load_error");

    let s = run_check(&app, "page A {\n  scrpt { skip }\n}\n", "[] true").await;
    assert_eq!(s.status, "failed");
    let e = s.error.unwrap();
    assert_eq!(e.code, "load_error");
    assert!(e.message.starts_with("spec:2:11:"), "{}", e.message);
}

#[tokio::test]
async fn fulfilled_check_has_no_trace() {
    let (_dir, app) = service();
    let s = run_check(&app, SHOP, "[] true").await;
    let v = s.verdict.unwrap();
    assert_eq!((v.verdict.as_str(), v.trace_id), ("fulfilled", None));
}

fn nodes(t: &TreeNode) -> usize {
    1 + t.children.iter().map(nodes).sum::<usize>()
}

#[tokio::test]
async fn service_and_cli_agree() {
    let (dir, app) = service();
    let s = run_check(&app, FORUM_BUGGY, ADMIN_EXCLUSION).await;
    let v = s.verdict.clone().expect("verdict");
    assert_eq!(v.verdict, "refuted");
    assert_schema("verdict", &serde_json::to_value(&v).unwrap());
    let id = v.trace_id.clone().unwrap();

    // identical submissions share the job and the trace
    let again = json!({ "spec": FORUM_BUGGY, "property": ADMIN_EXCLUSION }).to_string();
    let (_, body) = call(&app, "POST", "/v1/checks", Some(again)).await;
    assert_eq!(serde_json::from_str::<CheckStatus>(&body).unwrap(), s);
    let respaced = run_check(&app, FORUM_BUGGY, "[]~(curPage(bidAlfred,Admin)/\\curPage(bidAnna,Admin))").await;
    assert_ne!(respaced.job_id, s.job_id);
    assert_eq!(respaced.verdict.unwrap().trace_id.as_ref(), Some(&id));

    let cli = TempDir::new().unwrap();
    let forum = corpus("forum-buggy.nav");
    let r = navslice(cli.path(), &["--format", "json", "check", forum.to_str().unwrap(), "--prop", ADMIN_EXCLUSION]);
    assert_eq!(r.code, 1);
    assert_eq!(r.stdout, to_json(&v));

    let (code, body) = call(&app, "GET", &format!("/v1/traces/{id}"), None).await;
    assert_eq!(code, StatusCode::OK);
    assert_schema("trace-meta", &serde_json::from_str(&body).unwrap());
    let meta: TraceMeta = serde_json::from_str(&body).unwrap();
    assert_eq!(Some(meta.states), v.trace_states);
    assert_eq!(meta.property, v.property);

    let store = TraceStore::open(dir.path().join("store")).unwrap();
    let trace = store.load(&id).unwrap();
    for sel in ["0", "57", "last"] {
        let (code, body) = call(&app, "GET", &format!("/v1/traces/{id}/states/{sel}"), None).await;
        assert_eq!(code, StatusCode::OK, "{body}");
        assert_schema("state", &serde_json::from_str(&body).unwrap());
        let st: StateDoc = serde_json::from_str(&body).unwrap();
        let t: &Term = &trace.states[st.index];
        assert_eq!(st.term, t.to_string());
        assert_eq!(nodes(&st.tree), t.size());
        assert_eq!(st.next_step.is_none(), st.index + 1 == trace.states.len());
    }
    let (code, body) = call(&app, "GET", &format!("/v1/traces/{id}/states/9999"), None).await;
    assert_not_found(code, &body);

    let pattern = "B(?,_,?,_,_,_,_,_,_)";
    let req = json!({ "state": "last", "pattern": pattern }).to_string();
    let (code, body) = call(&app, "POST", &format!("/v1/traces/{id}/slice"), Some(req)).await;
    assert_eq!(code, StatusCode::OK);
    let doc: Value = serde_json::from_str(&body).unwrap();
    assert_schema("slice", &doc);
    assert!(doc["window_metrics"]["reduction"].as_f64().unwrap() >= 85.0);
    let trace_file = store.path(&id);
    let r = navslice(cli.path(), &["slice", trace_file.to_str().unwrap(), "last", pattern, "--out", "s.json"]);
    assert_eq!(r.code, 0);
    assert_eq!(std::fs::read_to_string(cli.path().join("s.json")).unwrap(), body);

    let req = json!({ "state": "last", "pattern": "B(?," }).to_string();
    let (code, body) = call(&app, "POST", &format!("/v1/traces/{id}/slice"), Some(req)).await;
    assert_eq!(code, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test]
async fn graph_matches_cli() {
    let (dir, app) = service();
    let (code, body) = call(&app, "POST", "/v1/graph", Some(json!({ "spec": FORUM_BUGGY }).to_string())).await;
    assert_eq!(code, StatusCode::OK);
    assert_schema("graph", &serde_json::from_str(&body).unwrap());
    let forum = corpus("forum-buggy.nav");
    let r = navslice(dir.path(), &["--format", "json", "render-graph", forum.to_str().unwrap()]);
    assert_eq!(r.stdout, body);
}

#[test]
fn schemas_are_versioned() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/v1");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let name = e.unwrap().file_name().into_string().unwrap();
        let stem = name.strip_suffix(".schema.json").expect("schema file name");
        let v = common::schema(stem);
        assert!(v["$id"].as_str().unwrap().ends_with(&format!("/v1/{name}")));
        n += 1;
    }
    assert_eq!(n, 11);
}
