#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;
use tutorcast_core::model::{ActionEvent, CodeEdit, Position, Timestamp};
use tutorcast_server::{app, AppState, ServerConfig};
use tutorcast_store::{MemoryBundleStore, MemoryMetadata, Repository};

pub struct Harness {
    pub state: AppState,
    pub app: Router,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Value,
    pub raw: Vec<u8>,
}

pub fn config() -> ServerConfig {
    ServerConfig { password_rounds: 1000, token_secret: b"test-secret".to_vec(), ..ServerConfig::default() }
}

pub fn harness() -> Harness {
    let repo = Repository::new(Arc::new(MemoryMetadata::default()), Arc::new(MemoryBundleStore::new()));
    let state = AppState::new(&config(), repo).unwrap();
    Harness { app: app(state.clone()), state }
}

impl Harness {
    pub async fn send(&self, request: Request<Body>) -> Reply {
        let response = self.app.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let headers = response.headers().clone();
        let raw = axum::body::to_bytes(response.into_body(), usize::MAX).await.unwrap().to_vec();
        let body = serde_json::from_slice(&raw).unwrap_or(Value::Null);
        Reply { status, headers, body, raw }
    }

    pub async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> Reply {
        let mut builder = Request::builder().method(method).uri(path);
        if let Some(token) = token {
            builder = builder.header("authorization", format!("Bearer {token}"));
        }
        let request = match body {
            Some(body) => builder.header("content-type", "application/json").body(Body::from(body.to_string())).unwrap(),
            None => builder.body(Body::empty()).unwrap(),
        };
        self.send(request).await
    }

    pub async fn get(&self, path: &str, token: &str) -> Reply {
        self.call(Method::GET, path, Some(token), None).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> Reply {
        self.call(Method::POST, path, Some(token), Some(body)).await
    }

    /// Registers a user and returns their token.
    pub async fn user(&self, name: &str, role: &str) -> String {
        let r = self.call(Method::POST, "/auth/register", None, Some(json!({ "username": name, "password": "correct horse", "role": role }))).await;
        assert_eq!(r.status, StatusCode::CREATED, "{}", r.body);
        r.body["token"].as_str().unwrap().to_owned()
    }

    pub async fn finalize(&self, token: &str, session_id: &str, audio: &[u8], duration_ms: u64) -> Reply {
        let boundary = "XbOuNdArYx";
        let mut body = Vec::new();
        body.extend_from_slice(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"duration_ms\"\r\n\r\n{duration_ms}\r\n").as_bytes());
        body.extend_from_slice(format!("--{boundary}\r\nContent-Disposition: form-data; name=\"audio\"; filename=\"a.mp3\"\r\nContent-Type: audio/mpeg\r\n\r\n").as_bytes());
        body.extend_from_slice(audio);
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
        let request = Request::builder()
            .method(Method::POST)
            .uri(format!("/sessions/{session_id}/finalize"))
            .header("authorization", format!("Bearer {token}"))
            .header("content-type", format!("multipart/form-data; boundary={boundary}"))
            .body(Body::from(body))
            .unwrap();
        self.send(request).await
    }

    /// Creates a tutorial and records one coding section typing `code`.
    /// Returns (tutorial_id, section_id).
    pub async fn recorded_tutorial(&self, token: &str, code: &str) -> (String, String) {
        let t = self.post("/tutorials", token, json!({ "title": "Loops", "language": "python" })).await;
        assert_eq!(t.status, StatusCode::CREATED, "{}", t.body);
        let tid = t.body["tutorial_id"].as_str().unwrap().to_owned();
        let s = self.post("/sessions", token, json!({ "tutorial_id": tid, "section_slot": 0, "notes_source": "# Loops\nfor and while" })).await;
        assert_eq!(s.status, StatusCode::CREATED, "{}", s.body);
        let sid = s.body["session_id"].as_str().unwrap().to_owned();
        let events = typed(code, 0, 0);
        let ack = self.post(&format!("/sessions/{sid}/events"), token, json!({ "events": events })).await;
        assert_eq!(ack.status, StatusCode::OK, "{}", ack.body);
        let duration = events.last().map_or(0, |e| e.at.0) + 500;
        let f = self.finalize(token, &sid, b"ID3fake-audio", duration).await;
        assert_eq!(f.status, StatusCode::CREATED, "{}", f.body);
        (tid, f.body["section_id"].as_str().unwrap().to_owned())
    }
}

/// One insert per character on a single line at 100 ms spacing.
pub fn typed(text: &str, first_seq: u64, start_col: u32) -> Vec<ActionEvent> {
    let mut line = 0;
    let mut col = start_col;
    text.chars()
        .enumerate()
        .map(|(i, ch)| {
            let seq = first_seq + i as u64;
            let e = ActionEvent::new(seq, Timestamp(seq * 100), CodeEdit::insert("code", Position::new(line, col), ch.to_string()));
            if ch == '\n' {
                line += 1;
                col = 0;
            } else {
                col += 1;
            }
            e
        })
        .collect()
}
