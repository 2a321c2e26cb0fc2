use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use flbandit_session::{http::router, SessionService, SessionStore};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn app() -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    let svc = SessionService::new(SessionStore::open(dir.path()).unwrap());
    (dir, router(Arc::new(svc)))
}

fn close_to(v: &Value, want: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() < 5e-4
}

#[tokio::test]
async fn figure_two_over_http() {
    let (_d, app) = app();
    let (status, created) = call(
        &app,
        "POST",
        "/api/sessions",
        Some(json!({"arms": ["sbfl+ochiai", "mbfl+ochiai"], "epsilon": 0, "aggregator": "avg", "seed": 5})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let id = created["session_id"].as_str().unwrap().to_owned();
    assert_eq!(created["status"], "active");
    assert_eq!(created["expected_rewards"], json!({}));

    let rounds = [("a", 0.003, 0.011), ("b", 0.116, 0.027), ("c", 0.001, 0.052)];
    let mut last = Value::Null;
    for (m, s, b) in rounds {
        let (status, view) = call(
            &app,
            "POST",
            &format!("/api/sessions/{id}/rounds"),
            Some(json!({"module": m, "exam": {"sbfl+ochiai": s, "mbfl+ochiai": b}})),
        )
        .await;
        assert_eq!(status, StatusCode::OK);
        last = view;
    }
    assert_eq!(last["recommendation"], "mbfl+ochiai");
    assert!(close_to(&last["aggregates"]["sbfl+ochiai"]["average"], 0.040));
    assert!(close_to(&last["aggregates"]["sbfl+ochiai"]["median"], 0.003));
    assert!(close_to(&last["aggregates"]["mbfl+ochiai"]["average"], 0.030));
    assert!(close_to(&last["aggregates"]["mbfl+ochiai"]["median"], 0.027));

    let (status, rec) = call(&app, "GET", &format!("/api/sessions/{id}/recommendation"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(rec["arm"], "mbfl+ochiai");
    assert!(close_to(&rec["expected_rewards"]["sbfl+ochiai"], 0.040));

    let (status, shown) = call(&app, "GET", &format!("/api/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(shown, last);

    let (status, list) = call(&app, "GET", "/api/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["rounds_completed"], 3);
}

#[tokio::test]
async fn error_statuses() {
    let (_d, app) = app();
    let (status, _) = call(&app, "GET", "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "GET", "/api/sessions/nope/recommendation", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, body) = call(&app, "POST", "/api/sessions", Some(json!({"arms": ["sbfl+ochiai"]}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("at least 2"));
    let (status, _) = call(&app, "POST", "/api/sessions", Some(json!({"arms": ["sbfl+ochiai", "mbfl+x"], "epsilon": 1.5}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", "/api/sessions", Some(json!({"arms": "nope"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, created) =
        call(&app, "POST", "/api/sessions", Some(json!({"arms": ["sbfl+ochiai", "mbfl+ochiai"]}))).await;
    let id = created["session_id"].as_str().unwrap().to_owned();
    let rounds = format!("/api/sessions/{id}/rounds");

    let (status, _) = call(&app, "POST", &rounds, Some(json!({"module": "a", "exam": {"sbfl+ochiai": 0.1}}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) =
        call(&app, "POST", &rounds, Some(json!({"module": "a", "exam": {"sbfl+ochiai": 1.5, "mbfl+ochiai": 0.1}}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        "POST",
        &rounds,
        Some(json!({"module": "a", "locations": {
            "sbfl+ochiai": {"rank": 10, "total_lines": 5},
            "mbfl+ochiai": {"rank": 1, "total_lines": 5}}})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, closed) = call(&app, "POST", &format!("/api/sessions/{id}/close"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(closed["status"], "closed");
    assert_eq!(closed["recommendation"], Value::Null);
    let (status, _) = call(&app, "POST", &format!("/api/sessions/{id}/close"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) =
        call(&app, "POST", &rounds, Some(json!({"module": "a", "exam": {"sbfl+ochiai": 0.1, "mbfl+ochiai": 0.1}}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(&app, "GET", &format!("/api/sessions/{id}/recommendation"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}
