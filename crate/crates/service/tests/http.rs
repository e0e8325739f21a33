use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use kbsel::consultant::Consultant;
use kbsel::parse_kb;
use kbsel::solve::Budget;
use kbsel_service::server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

const KB: &str = r#"vocabulary {
    type T := real[-100..100].
    type S := {fixed, floating}.
    type Item := {cheap, mid, dear}.
    type M := real[0..100].
    MinTemp : () -> T. MaxTemp : () -> T.
    Support : () -> S. Glued : () -> Bool.
    Pick : () -> Item. Cost : () -> M.
}
theory {
    @id(order) @label("Minimum below maximum") MinTemp =< MaxTemp.
    @id(glue) @label("Fixed parts are glued") Support = fixed => Glued.
    @id(glue2) @label("Glued parts are fixed") Glued => Support = fixed.
    @id(c1) @label("Price of cheap") Pick = cheap => Cost = 5.
    @id(c2) @label("Price of mid") Pick = mid => Cost = 20.
    @id(c3) @label("Price of dear") Pick = dear => Cost = 50.
}"#;

fn app_with(log: Option<&std::path::Path>) -> (Router, Vec<String>) {
    let kb = parse_kb(KB).expect("test KB parses");
    let c = Consultant::new(kb, Budget::default()).unwrap();
    let (state, warnings) = AppState::new("temps", c, log).unwrap();
    (router(Arc::new(state)), warnings)
}

fn app() -> Router {
    app_with(None).0
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(b) => {
            req = req.header("content-type", "application/json");
            Body::from(b.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn create(app: &Router) -> String {
    let (s, v) = call(app, Method::POST, "/sessions", None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    v["id"].as_str().unwrap().to_string()
}

async fn set(app: &Router, id: &str, symbol: &str, value: &str) -> (StatusCode, Value) {
    call(app, Method::POST, &format!("/sessions/{id}/assignments"), Some(json!({"symbol": symbol, "value": value})))
        .await
}

fn tile<'a>(view: &'a Value, symbol: &str) -> &'a Value {
    view["tiles"].as_array().unwrap().iter().find(|t| t["symbol"] == symbol).unwrap()
}

#[tokio::test]
async fn sessions_are_distinct_and_start_empty() {
    let app = app();
    let (s, v) = call(&app, Method::POST, "/sessions", Some(json!({"kb": "temps"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["kb"], "temps");
    assert_eq!(v["view"]["status"], "consistent");
    assert_eq!(v["view"]["choices"], json!([]));
    assert_eq!(v["view"]["tiles"].as_array().unwrap().len(), 6);
    let other = create(&app).await;
    assert_ne!(v["id"].as_str().unwrap(), other);
    let (s, got) = call(&app, Method::GET, &format!("/sessions/{other}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(got["view"], v["view"]);
}

#[tokio::test]
async fn unknown_kb_and_session_are_404() {
    let app = app();
    let (s, v) = call(&app, Method::POST, "/sessions", Some(json!({"kb": "nope"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_kb")));
    let (s, v) = call(&app, Method::GET, "/sessions/nope", None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_session")));
}

#[tokio::test]
async fn set_propagates_and_retract_restores() {
    let app = app();
    let id = create(&app).await;
    let (_, before) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    let (s, view) = set(&app, &id, "Support", "fixed").await;
    assert_eq!(s, StatusCode::OK, "{view}");
    let glued = tile(&view, "Glued");
    assert_eq!((glued["value"].as_str(), glued["origin"].as_str()), (Some("true"), Some("propagated")));
    assert_eq!(view["choices"][0]["symbol"], "Support");

    let (s, view) = call(&app, Method::DELETE, &format!("/sessions/{id}/assignments/Support"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(view, before["view"]);
}

#[tokio::test]
async fn numeric_bounds_are_decimal_strings() {
    let app = app();
    let id = create(&app).await;
    let (_, view) = set(&app, &id, "MinTemp", "12.5").await;
    let max = tile(&view, "MaxTemp");
    assert_eq!(max["bounds"]["lo"], "12.5");
    assert_eq!(max["bounds"]["hi"], "100");
    assert_eq!(max["kind"], "number");
}

#[tokio::test]
async fn clash_is_inconsistent_with_core() {
    let app = app();
    let id = create(&app).await;
    set(&app, &id, "MinTemp", "20").await;
    let (s, view) = set(&app, &id, "MaxTemp", "10").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(view["status"], "inconsistent");
    let core = &view["inconsistency"];
    let syms: Vec<&str> =
        core["assignments"].as_array().unwrap().iter().map(|a| a["symbol"].as_str().unwrap()).collect();
    assert_eq!(syms, ["MinTemp", "MaxTemp"]);
    assert_eq!(core["laws"], json!([{"id": "order", "label": "Minimum below maximum"}]));

    let (s, got) = call(&app, Method::GET, &format!("/sessions/{id}/inconsistency"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&got, core);
    let (s, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/optimize"),
        Some(json!({"symbol": "Cost", "direction": "minimize"})),
    )
    .await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("inconsistent")));
}

#[tokio::test]
async fn explanation_names_cause_and_law() {
    let app = app();
    let id = create(&app).await;
    set(&app, &id, "Support", "fixed").await;
    let (s, e) = call(&app, Method::GET, &format!("/sessions/{id}/explanation?symbol=Glued"), None).await;
    assert_eq!(s, StatusCode::OK, "{e}");
    assert_eq!(e["target"]["value"], "true");
    assert_eq!(e["assignments"][0]["symbol"], "Support");
    assert_eq!(e["assignments"][0]["label"], "Support");
    assert_eq!(e["laws"], json!([{"id": "glue", "label": "Fixed parts are glued"}]));

    let (s, v) = call(&app, Method::GET, &format!("/sessions/{id}/explanation?symbol=MinTemp"), None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("not_propagated")));
}

#[tokio::test]
async fn guarded_errors() {
    let app = app();
    let id = create(&app).await;
    let (s, v) = set(&app, &id, "Nope", "1").await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_symbol")));
    let (s, v) = set(&app, &id, "MinTemp", "warm").await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("type")));
    set(&app, &id, "Glued", "false").await;
    let (s, v) = set(&app, &id, "Support", "fixed").await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("not_a_candidate")));
    let (s, v) = call(&app, Method::DELETE, &format!("/sessions/{id}/assignments/MaxTemp"), None).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::CONFLICT, Some("no_user_assignment")));
    let (s, v) =
        call(&app, Method::POST, &format!("/sessions/{id}/assignments"), Some(json!({"symbol": "MinTemp"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("json")));
}

#[tokio::test]
async fn optimize_picks_the_cheapest() {
    let app = app();
    let id = create(&app).await;
    let uri = format!("/sessions/{id}/optimize");
    let (s, v) = call(&app, Method::POST, &uri, Some(json!({"symbol": "Cost", "direction": "minimize"}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["value"], "5");
    assert!(v["model"].as_array().unwrap().iter().any(|a| a["symbol"] == "Pick" && a["value"] == "cheap"));
    let (_, v) = call(&app, Method::POST, &uri, Some(json!({"symbol": "Cost", "direction": "maximize"}))).await;
    assert_eq!(v["value"], "50");
    let (s, v) = call(&app, Method::POST, &uri, Some(json!({"symbol": "Support", "direction": "maximize"}))).await;
    assert_eq!((s, v["error"].as_str()), (StatusCode::BAD_REQUEST, Some("not_numeric")));
}

#[tokio::test]
async fn schema_lists_tiles() {
    let app = app();
    let (s, v) = call(&app, Method::GET, "/kb/schema", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["kb"], "temps");
    let syms: Vec<&str> = v["symbols"].as_array().unwrap().iter().map(|s| s["symbol"].as_str().unwrap()).collect();
    assert_eq!(syms, ["MinTemp", "MaxTemp", "Support", "Glued", "Pick", "Cost"]);
    let s_ty = v["types"].as_array().unwrap().iter().find(|t| t["name"] == "S").unwrap();
    assert_eq!(s_ty["values"], json!(["fixed", "floating"]));
}

#[tokio::test]
async fn event_log_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let (app, warnings) = app_with(Some(&log));
    assert!(warnings.is_empty());
    let id = create(&app).await;
    set(&app, &id, "Support", "fixed").await;
    set(&app, &id, "MinTemp", "3").await;
    call(&app, Method::DELETE, &format!("/sessions/{id}/assignments/MinTemp"), None).await;
    let (_, live) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    drop(app);

    let lines = std::fs::read_to_string(&log).unwrap();
    assert_eq!(lines.lines().count(), 4);
    let (again, warnings) = app_with(Some(&log));
    assert!(warnings.is_empty(), "{warnings:?}");
    let (s, restored) = call(&again, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(restored["view"], live["view"]);
}
