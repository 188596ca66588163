mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use eurovoc_service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> (tempfile::TempDir, axum::Router) {
    let dir = tempfile::tempdir().unwrap();
    let bundle = common::toy_registry(dir.path()).load("en").unwrap();
    (dir, router(AppState::new([bundle])))
}

async fn call(
    app: &axum::Router,
    method: &str,
    uri: &str,
    body: Option<&str>,
) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(Body::from(body.unwrap_or("").to_owned())).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

#[tokio::test]
async fn classify_defaults_to_six_descriptors() {
    let (_dir, app) = app();
    let (status, body) = call(
        &app,
        "POST",
        "/classify/en",
        Some(r#"{"text":"tax customs"}"#),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let obj = body.as_object().unwrap();
    assert_eq!(obj.len(), 6);
    assert!(obj
        .values()
        .all(|v| v.as_f64().is_some_and(|p| p > 0.0 && p < 1.0)));
}

#[tokio::test]
async fn status_codes() {
    let (_dir, app) = app();
    let cases = [
        ("/classify/en", r#"{"text":""}"#, StatusCode::BAD_REQUEST),
        ("/classify/en", r#"{"text":"   "}"#, StatusCode::BAD_REQUEST),
        ("/classify/en", r#"{"txt":"tax"}"#, StatusCode::BAD_REQUEST),
        ("/classify/en", "not json", StatusCode::BAD_REQUEST),
        ("/classify/xx", r#"{"text":"tax"}"#, StatusCode::NOT_FOUND),
        ("/classify/de", r#"{"text":"tax"}"#, StatusCode::NOT_FOUND),
        (
            "/classify/en",
            r#"{"text":"tax","num_labels":13}"#,
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
        (
            "/classify/en",
            r#"{"text":"tax","num_labels":0}"#,
            StatusCode::UNPROCESSABLE_ENTITY,
        ),
        (
            "/classify/en",
            r#"{"text":"tax","num_labels":12}"#,
            StatusCode::OK,
        ),
    ];
    for (uri, body, want) in cases {
        let (status, value) = call(&app, "POST", uri, Some(body)).await;
        assert_eq!(status, want, "{uri} {body}");
        if want != StatusCode::OK {
            assert!(value["error"].is_string(), "{uri} {body}: {value}");
        }
    }
}

#[tokio::test]
async fn unsupported_language_lists_valid_codes() {
    let (_dir, app) = app();
    let (_, body) = call(&app, "POST", "/classify/xx", Some(r#"{"text":"tax"}"#)).await;
    let msg = body["error"].as_str().unwrap();
    assert!(
        msg.contains("xx") && msg.contains("en") && msg.contains("sl"),
        "{msg}"
    );
}

#[tokio::test]
async fn level_parameter() {
    let (_dir, app) = app();
    let (status, body) = call(
        &app,
        "POST",
        "/classify/en",
        Some(r#"{"text":"tax","level":"DO","num_labels":2}"#),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let codes: Vec<&String> = body.as_object().unwrap().keys().collect();
    assert_eq!(codes.len(), 2);
    assert!(codes.iter().all(|c| c.len() == 2));
}

#[tokio::test]
async fn health_and_models() {
    let (_dir, app) = app();
    let (status, body) = call(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"status": "ok", "models": 1}));

    let (status, body) = call(&app, "GET", "/models", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body[0]["language"], "en");
    assert_eq!(body[0]["labels"], common::TOY_LABELS);
    assert_eq!(body[0]["checksum"].as_str().unwrap().len(), 64);
}
