//! Chat-completions transports: HTTP, recorded fixtures, and scripted.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bank::sha256_hex;

pub const API_KEY_VAR: &str = "EVOIPD_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("network error: {0}")]
    Network(String),
    #[error("endpoint rejected credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no fixture for request {key} in {dir}")]
    MissingFixture { key: String, dir: PathBuf },
    #[error("fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
}

impl TransportError {
    fn transient(&self) -> bool {
        match self {
            TransportError::Network(_) => true,
            TransportError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// A chat endpoint: messages in, assistant text out.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, model: &str, messages: &[Message]) -> Result<String, TransportError>;
}

impl<T: ChatTransport + ?Sized> ChatTransport for &T {
    fn complete(&self, model: &str, messages: &[Message]) -> Result<String, TransportError> {
        (**self).complete(model, messages)
    }
}

/// Content hash of a request; names its fixture file.
pub fn fixture_key(model: &str, messages: &[Message]) -> String {
    let canonical = json!({ "model": model, "messages": messages });
    sha256_hex(canonical.to_string().as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub model: String,
    pub messages: Vec<Message>,
    pub response: String,
}

pub struct HttpTransport {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    pub attempts: u32,
    pub backoff: Duration,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(HttpTransport { endpoint: endpoint.into(), api_key, client, attempts: 3, backoff: Duration::from_secs(1) })
    }

    /// Reads the key from `EVOIPD_API_KEY`.
    pub fn from_env(endpoint: impl Into<String>) -> Result<Self, TransportError> {
        HttpTransport::new(endpoint, std::env::var(API_KEY_VAR).ok())
    }

    fn once(&self, model: &str, messages: &[Message]) -> Result<String, TransportError> {
        let mut req = self.client.post(&self.endpoint).json(&json!({ "model": model, "messages": messages }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| TransportError::Network(e.to_string()))?;
        match status {
            200..=299 => parse_completion(&body),
            401 | 403 => Err(TransportError::Auth { status }),
            _ => Err(TransportError::Http { status, body }),
        }
    }
}

/// Extracts `choices[0].message.content`.
pub fn parse_completion(body: &str) -> Result<String, TransportError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| TransportError::Malformed(e.to_string()))?;
    v["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| TransportError::Malformed("missing choices[0].message.content".into()))
}

impl ChatTransport for HttpTransport {
    fn complete(&self, model: &str, messages: &[Message]) -> Result<String, TransportError> {
        let mut attempt = 0;
        loop {
            match self.once(model, messages) {
                Err(e) if e.transient() && attempt + 1 < self.attempts => {
                    log::warn!("attempt {} failed: {e}", attempt + 1);
                    thread::sleep(self.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Replays recorded fixtures; never touches the network.
pub struct FixtureTransport {
    dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureTransport { dir: dir.into() }
    }
}

impl ChatTransport for FixtureTransport {
    fn complete(&self, model: &str, messages: &[Message]) -> Result<String, TransportError> {
        let key = fixture_key(model, messages);
        let path = self.dir.join(format!("{key}.json"));
        let text = fs::read_to_string(&path)
            .map_err(|_| TransportError::MissingFixture { key, dir: self.dir.clone() })?;
        let f: Fixture = serde_json::from_str(&text)
            .map_err(|e| TransportError::Fixture { path: path.clone(), message: e.to_string() })?;
        Ok(f.response)
    }
}

/// Forwards to `inner` and stores every exchange as a fixture.
pub struct RecordingTransport<T> {
    inner: T,
    dir: PathBuf,
}

impl<T: ChatTransport> RecordingTransport<T> {
    pub fn new(inner: T, dir: impl Into<PathBuf>) -> Self {
        RecordingTransport { inner, dir: dir.into() }
    }
}

pub fn write_fixture(dir: &Path, model: &str, messages: &[Message], response: &str) -> Result<PathBuf, TransportError> {
    let path = dir.join(format!("{}.json", fixture_key(model, messages)));
    let f = Fixture { model: model.into(), messages: messages.to_vec(), response: response.into() };
    let io = |e: std::io::Error| TransportError::Fixture { path: path.clone(), message: e.to_string() };
    fs::create_dir_all(dir).map_err(io)?;
    let text = serde_json::to_string_pretty(&f).expect("fixtures serialize");
    fs::write(&path, text + "\n").map_err(io)?;
    Ok(path)
}

impl<T: ChatTransport> ChatTransport for RecordingTransport<T> {
    fn complete(&self, model: &str, messages: &[Message]) -> Result<String, TransportError> {
        let response = self.inner.complete(model, messages)?;
        write_fixture(&self.dir, model, messages, &response)?;
        Ok(response)
    }
}

/// Returns queued responses in order and logs requests. For tests.
#[derive(Default)]
pub struct ScriptedTransport {
    replies: Mutex<VecDeque<Result<String, TransportError>>>,
    pub log: Mutex<Vec<(String, Vec<Message>)>>,
}

impl ScriptedTransport {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        let t = ScriptedTransport::default();
        for r in replies {
            t.push(Ok(r.into()));
        }
        t
    }

    pub fn push(&self, reply: Result<String, TransportError>) {
        self.replies.lock().expect("script lock").push_back(reply);
    }

    pub fn remaining(&self) -> usize {
        self.replies.lock().expect("script lock").len()
    }

    pub fn requests(&self) -> usize {
        self.log.lock().expect("script lock").len()
    }
}

impl ChatTransport for ScriptedTransport {
    fn complete(&self, model: &str, messages: &[Message]) -> Result<String, TransportError> {
        self.log.lock().expect("script lock").push((model.to_string(), messages.to_vec()));
        self.replies
            .lock()
            .expect("script lock")
            .pop_front()
            .unwrap_or_else(|| Err(TransportError::Network("script exhausted".into())))
    }
}
