use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use titecrm_core::engine::{TrialEvent, TrialState};
use titecrm_core::{DesignConfig, Strategy};
use titecrm_service::{router, AppState, DiskStore};

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

fn design_n18() -> DesignConfig {
    DesignConfig { sample_size: 18, ..DesignConfig::default() }
}

async fn create(app: &Router, design: &DesignConfig, strategy: &str) -> String {
    let (status, body) = call(app, "POST", "/trials", Some(json!({ "design": design, "strategy": strategy }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["trial_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn health_and_fresh_trial() {
    let app = router(AppState::in_memory());
    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");

    let (status, body) =
        call(&app, "POST", "/trials", Some(json!({ "design": design_n18(), "strategy": "C" }))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["recommendation"]["dose"], 1);
    assert_eq!(body["recommendation"]["estimate"]["beta_mean"], 0.0);
    let skeleton: Vec<f64> = serde_json::from_value(body["skeleton"].clone()).unwrap();
    let p_hat: Vec<f64> = serde_json::from_value(body["recommendation"]["estimate"]["p_hat"].clone()).unwrap();
    assert_eq!(skeleton.len(), 5);
    for (a, b) in skeleton.iter().zip(&p_hat) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(skeleton[2], 0.25);

    let id = body["trial_id"].as_str().unwrap();
    let (status, state) = call(&app, "GET", &format!("/trials/{id}/state"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["patients"].as_array().unwrap().len(), 0);
}

#[tokio::test]
async fn design_validation() {
    let app = router(AppState::in_memory());
    let bad = DesignConfig { target: 1.2, ..DesignConfig::default() };
    let (status, body) = call(&app, "POST", "/trials", Some(json!({ "design": bad, "strategy": "B" }))).await;
    assert!(status.is_client_error(), "{status}");
    assert!(body["error"].as_str().unwrap().contains("target"));

    let all_unevaluable = DesignConfig { phi: 1.0, ..DesignConfig::default() };
    let (status, _) = call(&app, "POST", "/trials", Some(json!({ "design": all_unevaluable, "strategy": "B" }))).await;
    assert_eq!(status, StatusCode::CREATED);

    let (status, _) = call(
        &app,
        "POST",
        "/trials",
        Some(json!({ "design": DesignConfig::default(), "strategy": "A", "skeleton": [0.1, 0.2] })),
    )
    .await;
    assert!(status.is_client_error());
}

#[tokio::test]
async fn events_update_counts() {
    let app = router(AppState::in_memory());
    let id = create(&app, &design_n18(), "C").await;

    let (status, s) = call(&app, "POST", &format!("/trials/{id}/patients"), Some(json!({ "time": 0.0 }))).await;
    assert_eq!(status, StatusCode::OK, "{s}");
    assert_eq!(s["event"], json!({ "time": 0.0, "patient_id": 1, "kind": "Enrolled", "payload": { "dose": 1 } }));
    assert_eq!(s["pending_count"], 1);
    call(&app, "POST", &format!("/trials/{id}/patients"), Some(json!({ "time": 4.0 }))).await;

    let (status, s) = call(
        &app,
        "POST",
        &format!("/trials/{id}/events"),
        Some(json!({ "time": 5.0, "patient_id": 1, "kind": "DltObserved" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{s}");
    assert_eq!(s["evaluable_count"], 1);
    assert_eq!(s["pending_count"], 1);
    assert_eq!(s["patient_status"], "Dlt");

    // patient 2 progresses at 3 weeks: 3 < 0.5 * 8, unevaluable; it was used
    // in no assignment, so no frozen weight
    let (_, s) = call(
        &app,
        "POST",
        &format!("/trials/{id}/events"),
        Some(json!({ "time": 7.0, "patient_id": 2, "kind": "ProgressionObserved" })),
    )
    .await;
    assert_eq!(s["patient_status"], "ProgressedUnevaluable");
    assert_eq!(s["unevaluable_count"], 1);
    assert_eq!(s["frozen_weight"], Value::Null);
    assert_eq!(s["enrollment_open"], true);

    let (status, rec) = call(&app, "GET", &format!("/trials/{id}/recommendation?at_time=8"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(rec["at_time"], 8.0);
    assert_eq!(rec["snapshot"].as_array().unwrap().len(), 1);
    assert_eq!(rec["snapshot"][0], json!({ "patient_id": 1, "dose": 1, "tox": true, "weight": 1.0 }));

    let (_, view) = call(&app, "GET", &format!("/trials/{id}/state"), None).await;
    let lanes = view["patients"].as_array().unwrap();
    assert_eq!(lanes.len(), 2);
    assert_eq!(lanes[1]["inclusion"], "excluded");
}

#[tokio::test]
async fn frozen_weight_is_reported() {
    let app = router(AppState::in_memory());
    let id = create(&app, &design_n18(), "C").await;
    call(&app, "POST", &format!("/trials/{id}/patients"), Some(json!({ "time": 0.0 }))).await;
    call(&app, "POST", &format!("/trials/{id}/patients"), Some(json!({ "time": 3.0 }))).await;
    let (_, s) = call(
        &app,
        "POST",
        &format!("/trials/{id}/events"),
        Some(json!({ "time": 3.5, "patient_id": 1, "kind": "ProgressionObserved" })),
    )
    .await;
    assert_eq!(s["patient_status"], "ProgressedUnevaluable");
    assert_eq!(s["frozen_weight"], 3.0 / 8.0);
}

#[tokio::test]
async fn rejections() {
    let app = router(AppState::in_memory());
    let (status, _) = call(&app, "GET", "/trials/nope/state", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = create(&app, &design_n18(), "B").await;
    call(&app, "POST", &format!("/trials/{id}/patients"), Some(json!({ "time": 1.0 }))).await;
    let events = format!("/trials/{id}/events");

    let (status, _) = call(&app, "POST", &events, Some(json!({ "time": 2.0, "patient_id": 9, "kind": "DltObserved" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, body) =
        call(&app, "POST", &events, Some(json!({ "time": 0.5, "patient_id": 1, "kind": "DltObserved" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("precedes"));

    let (status, _) = call(&app, "POST", &events, Some(json!({ "time": 2.0, "patient_id": 1, "kind": "DltObserved" }))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) =
        call(&app, "POST", &events, Some(json!({ "time": 3.0, "patient_id": 1, "kind": "DltObserved" }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("terminal"));

    let (status, _) = call(&app, "POST", &events, Some(json!({ "time": 3.0, "patient_id": 1, "kind": "Nonsense" }))).await;
    assert!(status.is_client_error());

    // rejected writes leave no trace
    let (_, view) = call(&app, "GET", &format!("/trials/{id}/state"), None).await;
    assert_eq!(view["events"].as_array().unwrap().len(), 2);
}

/// Drives a trial through the API with a fixed outcome script.
async fn scripted(app: &Router, id: &str) {
    let events = format!("/trials/{id}/events");
    for (i, t) in [0.0, 4.0, 8.0, 12.0, 16.0].into_iter().enumerate() {
        let (status, _) = call(app, "POST", &format!("/trials/{id}/patients"), Some(json!({ "time": t }))).await;
        assert_eq!(status, StatusCode::OK);
        let pid = i as u32 + 1;
        let (kind, at) = match pid % 3 {
            0 => ("ProgressionObserved", t + 2.0),
            1 => ("WindowCompleted", t + 8.0),
            _ => ("DltObserved", t + 3.0),
        };
        if at <= t + 4.0 {
            call(app, "POST", &events, Some(json!({ "time": at, "patient_id": pid, "kind": kind }))).await;
        }
    }
}

#[tokio::test]
async fn restart_recovers_identical_state() {
    let dir = tempfile::tempdir().unwrap();
    let app_state = AppState::with_store(DiskStore::open(dir.path()).unwrap()).unwrap();
    let app = router(app_state.clone());
    let id = create(&app, &DesignConfig::default(), "C").await;
    scripted(&app, &id).await;
    let before = app_state.trial_state(&id).await.unwrap();
    let (_, rec_before) = call(&app, "GET", &format!("/trials/{id}/recommendation?at_time=20"), None).await;
    drop(app);
    drop(app_state);

    let restarted = AppState::with_store(DiskStore::open(dir.path()).unwrap()).unwrap();
    let after = restarted.trial_state(&id).await.unwrap();
    assert_eq!(before, after);
    let app = router(restarted.clone());
    let (_, rec_after) = call(&app, "GET", &format!("/trials/{id}/recommendation?at_time=20"), None).await;
    assert_eq!(rec_before, rec_after);

    // the API agrees with an in-process fold of the same log
    let folded = TrialState::replay(
        DesignConfig::default(),
        before.skeleton().clone(),
        Strategy::C,
        before.events(),
    )
    .unwrap();
    assert_eq!(folded, after);
    let local = folded.recommendation(20.0).unwrap();
    assert_eq!(serde_json::to_value(&local).unwrap(), rec_after);

    // new trials continue the id sequence
    let id2 = create(&app, &DesignConfig::default(), "A").await;
    assert_ne!(id, id2);
}

#[tokio::test]
async fn corrupt_log_aborts_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let app_state = AppState::with_store(DiskStore::open(dir.path()).unwrap()).unwrap();
    let app = router(app_state);
    let id = create(&app, &DesignConfig::default(), "B").await;
    scripted(&app, &id).await;
    drop(app);

    let log = dir.path().join(&id).join("events.jsonl");
    let mut text = std::fs::read_to_string(&log).unwrap();
    let lines = text.lines().count();
    text.push_str("{\"time\": oops}\n");
    std::fs::write(&log, &text).unwrap();
    let err = AppState::with_store(DiskStore::open(dir.path()).unwrap()).err().unwrap();
    assert_eq!(err.line(), Some(lines + 1));
    assert!(err.to_string().contains(&format!("line {}", lines + 1)));

    // a well-formed but inapplicable line is reported the same way
    let mut lines_vec: Vec<String> = std::fs::read_to_string(&log).unwrap().lines().map(String::from).collect();
    lines_vec.pop();
    let bogus = TrialEvent::dlt(0.0, 1);
    lines_vec.push(serde_json::to_string(&bogus).unwrap());
    std::fs::write(&log, lines_vec.join("\n") + "\n").unwrap();
    let err = AppState::with_store(DiskStore::open(dir.path()).unwrap()).err().unwrap();
    assert_eq!(err.line(), Some(lines + 1));
}

#[tokio::test]
async fn concurrent_trials() {
    let app = router(AppState::in_memory());
    let ids: Vec<String> = futures_ids(&app).await;
    let tasks: Vec<_> = ids
        .iter()
        .map(|id| {
            let app = app.clone();
            let id = id.clone();
            tokio::spawn(async move { scripted(&app, &id).await })
        })
        .collect();
    for t in tasks {
        t.await.unwrap();
    }
    let mut views = Vec::new();
    for id in &ids {
        let (_, v) = call(&app, "GET", &format!("/trials/{id}/state"), None).await;
        views.push(v["patients"].clone());
    }
    assert!(views.windows(2).all(|w| w[0] == w[1]));
}

async fn futures_ids(app: &Router) -> Vec<String> {
    let mut ids = Vec::new();
    for _ in 0..4 {
        ids.push(create(app, &DesignConfig::default(), "C").await);
    }
    ids
}
