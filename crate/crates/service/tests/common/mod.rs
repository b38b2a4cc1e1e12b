#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use competency_core::time::parse_timestamp;
use competency_core::{Course, CourseDocument, EventLog, InteractionEvent, Timestamp};
use competency_service::{router, Store};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const FIXTURE: &str = include_str!("../../fixtures/algorithms.json");

pub fn fixture() -> CourseDocument {
    serde_json::from_str(FIXTURE).unwrap()
}

pub fn ts(s: &str) -> Timestamp {
    parse_timestamp(s).unwrap()
}

pub struct App {
    pub dir: tempfile::TempDir,
    pub store: Arc<Store>,
    pub router: Router,
}

impl App {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Store::open(dir.path()).unwrap());
        let router = router(store.clone());
        Self { dir, store, router }
    }

    pub fn with_fixture() -> Self {
        let app = Self::new();
        app.store.import_course(&fixture()).unwrap();
        app
    }

    pub async fn send(
        &self,
        method: Method,
        uri: &str,
        body: Option<Value>,
    ) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        let resp = self
            .router
            .clone()
            .oneshot(req.body(body).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        (status, bytes)
    }

    pub async fn json(
        &self,
        method: Method,
        uri: &str,
        body: Option<Value>,
    ) -> (StatusCode, Value) {
        let (status, bytes) = self.send(method, uri, body).await;
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap()
        };
        (status, value)
    }
}

/// Library-side state for the same document and events.
pub fn library_state(doc: &CourseDocument, events: &[InteractionEvent]) -> (Course, EventLog) {
    let course = Course::from_document(doc).unwrap();
    let mut log = EventLog::new();
    for e in events {
        course.ingest(&mut log, e.clone()).unwrap();
    }
    (course, log)
}
