use std::net::SocketAddr;
use std::sync::OnceLock;
use std::time::Duration;

use futures::StreamExt;
use pwrdiag::pipeline::{train_diagnoser, DiagnoserConfig, DiagnosisModel, SCHEMA_VERSION};
use pwrdiag::plantsim::{generate_corpus, reference_scenarios, PlantConfig};
use pwrdiag::rbfn::RbfnConfig;
use pwrdiag::service::{serve_on, AppState, SessionConfig, MAX_STEP};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio_tungstenite::tungstenite::Message;

fn model() -> &'static DiagnosisModel {
    static M: OnceLock<DiagnosisModel> = OnceLock::new();
    M.get_or_init(|| {
        let corpus = generate_corpus(&reference_scenarios(1800, 0.01, 7), &PlantConfig::default()).unwrap();
        let cfg = DiagnoserConfig {
            rbfn: RbfnConfig { mse_goal: 0.02, max_neurons: 200, ..RbfnConfig::default() },
            ..DiagnoserConfig::default()
        };
        train_diagnoser(&corpus, &cfg).unwrap()
    })
}

struct Server {
    addr: SocketAddr,
    http: Client,
}

impl Server {
    async fn start(model: Option<DiagnosisModel>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let defaults = SessionConfig { tick_ms: 5, ..SessionConfig::default() };
        let state = AppState::new(PlantConfig::default(), defaults, model);
        tokio::spawn(serve_on(listener, state));
        Self { addr, http: Client::new() }
    }

    fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.http.post(self.url(path)).json(&body).send().await.unwrap();
        let status = r.status();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.http.get(self.url(path)).send().await.unwrap();
        let status = r.status();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn session(&self, body: Value) -> String {
        let (status, snap) = self.post("/sessions", body).await;
        assert_eq!(status, StatusCode::CREATED, "{snap}");
        snap["session_id"].as_str().unwrap().to_string()
    }

    async fn step(&self, id: &str, count: usize) -> Value {
        let (status, snap) = self.post(&format!("/sessions/{id}/control"), json!({"action": "step", "count": count})).await;
        assert_eq!(status, StatusCode::OK, "{snap}");
        snap
    }

    async fn log_kinds(&self, id: &str) -> Vec<String> {
        let (_, log) = self.get(&format!("/sessions/{id}/log")).await;
        log.as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap().to_string()).collect()
    }
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap_or("")
}

#[tokio::test]
async fn create_and_inspect_session() {
    let s = Server::start(None).await;
    let (status, snap) = s.post("/sessions", json!({"scenario": {"fault_kind": "Normal", "severity_percent": 0, "rng_seed": 1}})).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = snap["session_id"].as_str().unwrap();
    assert_eq!(snap["model_loaded"], false);
    assert_eq!(snap["window"], 50);
    assert_eq!(snap["stride"], 10);
    assert_eq!(snap["latest"]["values"].as_array().unwrap().len(), 43);

    let r = s.http.post(s.url("/sessions")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);

    let (status, list) = s.get("/sessions").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 2);

    tokio::time::sleep(Duration::from_millis(100)).await;
    let (status, snap) = s.get(&format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(snap["time"].as_f64().unwrap() > 0.0);

    let r = s.http.delete(s.url(&format!("/sessions/{id}"))).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NO_CONTENT);
    let (status, body) = s.get(&format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "not_found");
}

#[tokio::test]
async fn bad_requests_get_structured_errors() {
    let s = Server::start(None).await;
    let r = s.http.post(s.url("/sessions")).body("{oops").send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&r.json().await.unwrap()), "invalid_json");
    let (status, body) = s.post("/sessions", json!({"window": 0})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_code(&body), "invalid_request");
    let (status, _) = s.post("/sessions", json!({"scenario": {"fault_kind": "Normal", "severity_percent": 5, "rng_seed": 0}})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let id = s.session(json!({"paused": true})).await;
    let (status, body) = s.post(&format!("/sessions/{id}/fault"), json!({"kind": "SgtrA", "severity": 140})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    let (status, _) = s.post(&format!("/sessions/{id}/fault"), json!({"kind": "Normal", "severity": 0})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = s.post(&format!("/sessions/{id}/control"), json!({"action": "rewind"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = s.post(&format!("/sessions/{id}/control"), json!({"action": "step", "count": MAX_STEP + 1})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = s.post("/sessions/nope/control", json!({"action": "pause"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn one_fault_at_a_time() {
    let s = Server::start(None).await;
    let id = s.session(json!({"paused": true})).await;
    s.step(&id, 20).await;
    let (status, entry) = s.post(&format!("/sessions/{id}/fault"), json!({"kind": "SgtrB", "severity": 40})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(entry["kind"], "FaultInjected");
    assert_eq!(entry["payload"]["plant_time"], 20.0);
    let (status, body) = s.post(&format!("/sessions/{id}/fault"), json!({"kind": "SgtrA", "severity": 10})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&body), "fault_active");
    assert!(s.log_kinds(&id).await.contains(&"FaultInjected".to_string()));
    let (_, snap) = s.get(&format!("/sessions/{id}")).await;
    assert_eq!(snap["fault_active"], true);
    assert_eq!(snap["scenario"]["onset_time"], 20.0);
}

#[tokio::test]
async fn diagnosis_without_model_is_an_api_error() {
    let s = Server::start(None).await;
    let id = s.session(json!({"paused": true})).await;
    let (status, body) = s.post(&format!("/sessions/{id}/diagnose"), json!({})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(error_code(&body), "no_model");
    let (status, body) = s.get("/models/current").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(error_code(&body), "no_model");
}

#[tokio::test]
async fn model_upload() {
    let s = Server::start(None).await;
    let text = model().to_json().unwrap();
    let r = s.http.post(s.url("/models")).body(text.clone()).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    let summary: Value = r.json().await.unwrap();
    assert_eq!(summary["hidden_neurons"], model().network.hidden_count());
    let (status, current) = s.get("/models/current").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(current["schema_version"], SCHEMA_VERSION);
    assert_eq!(current["channel_order"].as_array().unwrap().len(), 43);

    let mut future: Value = serde_json::from_str(&text).unwrap();
    future["schema_version"] = json!(SCHEMA_VERSION + 1);
    let (status, body) = s.post("/models", future).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_code(&body), "unsupported_version");
    let r = s.http.post(s.url("/models")).body("[]").send().await.unwrap();
    assert_eq!(r.status(), StatusCode::BAD_REQUEST);

    let id = s.session(json!({"paused": true})).await;
    let (_, snap) = s.get(&format!("/sessions/{id}")).await;
    assert_eq!(snap["model_loaded"], true);
}

#[tokio::test]
async fn control_actions() {
    let s = Server::start(None).await;
    let id = s.session(json!({})).await;
    let (status, snap) = s.post(&format!("/sessions/{id}/control"), json!({"action": "pause"})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snap["running"], false);
    let t = snap["time"].as_f64().unwrap();
    tokio::time::sleep(Duration::from_millis(60)).await;
    let (_, snap) = s.get(&format!("/sessions/{id}")).await;
    assert_eq!(snap["time"].as_f64().unwrap(), t);

    let snap = s.step(&id, 5).await;
    assert_eq!(snap["time"].as_f64().unwrap(), t + 5.0);
    let clock = snap["session_clock"].as_f64().unwrap();

    let (_, snap) = s.post(&format!("/sessions/{id}/control"), json!({"action": "reset"})).await;
    assert_eq!(snap["time"], 0.0);
    assert_eq!(snap["session_clock"].as_f64().unwrap(), clock);

    let (_, snap) = s.post(&format!("/sessions/{id}/control"), json!({"action": "resume"})).await;
    assert_eq!(snap["running"], true);
    let (status, _) = s.post(&format!("/sessions/{id}/control"), json!({"action": "step"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, log) = s.get(&format!("/sessions/{id}/log")).await;
    let entries = log.as_array().unwrap();
    let actions: Vec<&str> = entries
        .iter()
        .filter(|e| e["kind"] == "SessionControl")
        .map(|e| e["payload"]["action"].as_str().unwrap())
        .collect();
    assert_eq!(actions, ["pause", "step", "reset", "resume"]);
    let stamps: Vec<f64> = entries.iter().map(|e| e["timestamp"].as_f64().unwrap()).collect();
    assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
}

#[tokio::test]
async fn websocket_streams_frames_in_order() {
    let s = Server::start(None).await;
    let id = s.session(json!({})).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/sessions/{id}/stream", s.addr)).await.unwrap();
    let mut last = f64::NEG_INFINITY;
    let mut frames = 0;
    while frames < 40 {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
        let Message::Text(text) = msg else { continue };
        let v: Value = serde_json::from_str(&text).unwrap();
        assert!(["frame", "diagnosis", "event"].contains(&v["type"].as_str().unwrap()));
        if v["type"] == "frame" {
            let t = v["data"]["time"].as_f64().unwrap();
            assert!(t > last, "{t} after {last}");
            assert_eq!(v["data"]["values"].as_array().unwrap().len(), 43);
            last = t;
            frames += 1;
        }
    }
}

#[tokio::test]
async fn stream_of_unknown_session_is_refused() {
    let s = Server::start(None).await;
    assert!(tokio_tungstenite::connect_async(format!("ws://{}/sessions/none/stream", s.addr)).await.is_err());
    let r = s.http.get(s.url("/sessions/none/events")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn server_sent_events_fallback() {
    let s = Server::start(None).await;
    let id = s.session(json!({})).await;
    let mut r = s.http.get(s.url(&format!("/sessions/{id}/events"))).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    assert!(r.headers()["content-type"].to_str().unwrap().starts_with("text/event-stream"));
    let mut text = String::new();
    while text.matches("event: frame").count() < 3 {
        let chunk = tokio::time::timeout(Duration::from_secs(5), r.chunk()).await.unwrap().unwrap().unwrap();
        text.push_str(std::str::from_utf8(&chunk).unwrap());
    }
    let data = text.lines().find(|l| l.starts_with("data: ")).unwrap();
    let v: Value = serde_json::from_str(&data["data: ".len()..]).unwrap();
    assert_eq!(v["type"], "frame");
}

async fn collect_frames(s: &Server, id: &str) -> Vec<Value> {
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/sessions/{id}/stream", s.addr)).await.unwrap();
    s.step(id, 30).await;
    s.post(&format!("/sessions/{id}/fault"), json!({"kind": "SgtrA", "severity": 45})).await;
    s.step(id, 70).await;
    let mut frames = Vec::new();
    while frames.len() < 100 {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.unwrap().unwrap().unwrap();
        if let Message::Text(text) = msg {
            let v: Value = serde_json::from_str(&text).unwrap();
            if v["type"] == "frame" {
                frames.push(v["data"].clone());
            }
        }
    }
    frames
}

#[tokio::test]
async fn replay_reproduces_the_stream() {
    let s = Server::start(None).await;
    let body = json!({"paused": true, "scenario": {"fault_kind": "Normal", "severity_percent": 0, "rng_seed": 42}});
    let a = s.session(body.clone()).await;
    let b = s.session(body).await;
    let fa = collect_frames(&s, &a).await;
    let fb = collect_frames(&s, &b).await;
    assert_eq!(fa, fb);
    assert_eq!(s.log_kinds(&a).await, s.log_kinds(&b).await);
}

#[tokio::test]
async fn live_diagnosis_tracks_injected_rupture() {
    let s = Server::start(Some(model().clone())).await;
    let id = s.session(json!({"paused": true, "scenario": {"fault_kind": "Normal", "severity_percent": 0, "rng_seed": 5}})).await;
    s.step(&id, 60).await;
    let (status, _) = s.post(&format!("/sessions/{id}/fault"), json!({"kind": "SgtrB", "severity": 40})).await;
    assert_eq!(status, StatusCode::CREATED);
    let snap = s.step(&id, 400).await;
    let last = &snap["last_diagnosis"];
    assert_eq!(last["predicted_location"], 2, "{last}");
    assert_eq!(last["location_name"], "SG-B");
    assert_eq!(last["window_frames"], 50);

    let (_, log) = s.get(&format!("/sessions/{id}/log")).await;
    let entries = log.as_array().unwrap();
    let locations: Vec<u64> = entries
        .iter()
        .filter(|e| e["kind"] == "DiagnosisIssued")
        .map(|e| e["payload"]["predicted_location"].as_u64().unwrap())
        .collect();
    assert_eq!(locations.len(), 42);
    assert!(locations.iter().rev().take(10).all(|&l| l == 2), "{locations:?}");
    assert!(entries.iter().any(|e| e["kind"] == "ThresholdAlarm"));

    let (status, report) = s.post(&format!("/sessions/{id}/diagnose"), json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["predicted_location"], 2);
}
