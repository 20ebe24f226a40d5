//! Chat-completions clients: a blocking HTTP client for OpenAI-compatible endpoints and a
//! scripted mock that never touches the network.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::condition::RetrievalCondition;
use crate::prompt::RenderedPrompt;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("endpoint returned {status}: {body}")]
    EndpointError { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("refusing to send unclean prompt for {sample_id} / {condition}")]
    AuditRefusal {
        sample_id: String,
        condition: RetrievalCondition,
    },
    #[error("no scripted output for {sample_id} / {condition}")]
    MissingScriptEntry {
        sample_id: String,
        condition: RetrievalCondition,
    },
    #[error("invalid mock script: {0}")]
    Script(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_name: String,
    pub endpoint_url: String,
    /// Environment variable holding the bearer token; `None` sends no Authorization header.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub request_delay_ms: u64,
    pub timeout_ms: u64,
    pub max_retries: u32,
}

impl ModelConfig {
    pub fn new(model_name: impl Into<String>, endpoint_url: impl Into<String>) -> Self {
        ModelConfig {
            model_name: model_name.into(),
            endpoint_url: endpoint_url.into(),
            api_key_env: None,
            temperature: 0.0,
            request_delay_ms: 0,
            timeout_ms: 120_000,
            max_retries: 3,
        }
    }

    fn chat_completions_url(&self) -> String {
        let base = self.endpoint_url.trim_end_matches('/');
        if base.ends_with("chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub sample_id: String,
    pub condition: RetrievalCondition,
    pub model_name: String,
    pub output_text: String,
    /// SHA-256 of the serialized request body.
    pub request_fingerprint: String,
    pub transport_metadata: BTreeMap<String, String>,
}

pub trait CompletionClient {
    fn model_name(&self) -> &str;

    fn complete(&self, prompt: &RenderedPrompt) -> Result<RawCompletion, ClientError>;
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

/// Only `model`, `messages` and `temperature` are sent; sampling knobs stay at server defaults.
#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 2],
    temperature: f64,
}

/// Serialized request body for a prompt. Temperature is always zero.
pub fn request_body(model_name: &str, prompt: &RenderedPrompt) -> String {
    serde_json::to_string(&ChatRequest {
        model: model_name,
        messages: [
            ChatMessage {
                role: "system",
                content: &prompt.system_text,
            },
            ChatMessage {
                role: "user",
                content: &prompt.user_text,
            },
        ],
        temperature: 0.0,
    })
    .expect("request serializes")
}

pub fn fingerprint(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

fn ensure_clean(prompt: &RenderedPrompt) -> Result<(), ClientError> {
    if prompt.audit.clean {
        Ok(())
    } else {
        Err(ClientError::AuditRefusal {
            sample_id: prompt.sample_id.clone(),
            condition: prompt.condition,
        })
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Option<ResponseMessage>,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

/// Blocking client for any endpoint speaking the chat-completions protocol.
pub struct HttpClient {
    config: ModelConfig,
    http: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
}

enum Attempt {
    Done(u16, String),
    Retry(ClientError),
}

impl HttpClient {
    pub fn new(config: ModelConfig) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpClient {
            config,
            http,
            last_request: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn api_key(&self) -> Result<Option<String>, ClientError> {
        match &self.config.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| ClientError::AuthFailure(format!("environment variable {var} is not set"))),
        }
    }

    fn pace(&self) {
        let delay = Duration::from_millis(self.config.request_delay_ms);
        let mut last = self.last_request.lock().expect("pacing lock");
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < delay {
                std::thread::sleep(delay - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn attempt(&self, body: &str, key: Option<&str>) -> Attempt {
        self.pace();
        let mut req = self
            .http
            .post(self.config.chat_completions_url())
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string());
        if let Some(key) = key {
            req = req.bearer_auth(key);
        }
        match req.send() {
            Ok(resp) => {
                let status = resp.status().as_u16();
                let text = resp.text().unwrap_or_default();
                if status == 429 || status >= 500 {
                    Attempt::Retry(ClientError::EndpointError {
                        status,
                        body: excerpt(&text),
                    })
                } else {
                    Attempt::Done(status, text)
                }
            }
            Err(e) if e.is_timeout() => Attempt::Retry(ClientError::Timeout { attempts: 0 }),
            Err(e) => Attempt::Retry(ClientError::Transport(e.to_string())),
        }
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

impl CompletionClient for HttpClient {
    fn model_name(&self) -> &str {
        &self.config.model_name
    }

    fn complete(&self, prompt: &RenderedPrompt) -> Result<RawCompletion, ClientError> {
        ensure_clean(prompt)?;
        let key = self.api_key()?;
        let body = request_body(&self.config.model_name, prompt);
        let started = Instant::now();

        let mut attempts = 0u32;
        let (status, text) = loop {
            attempts += 1;
            match self.attempt(&body, key.as_deref()) {
                Attempt::Done(status, text) => break (status, text),
                Attempt::Retry(err) => {
                    if attempts > self.config.max_retries {
                        return Err(match err {
                            ClientError::Timeout { .. } => ClientError::Timeout { attempts },
                            other => other,
                        });
                    }
                    let backoff = self.config.request_delay_ms.saturating_mul(1 << (attempts - 1).min(16));
                    std::thread::sleep(Duration::from_millis(backoff));
                }
            }
        };

        match status {
            401 | 403 => return Err(ClientError::AuthFailure(excerpt(&text))),
            s if !(200..300).contains(&s) => {
                return Err(ClientError::EndpointError {
                    status,
                    body: excerpt(&text),
                })
            }
            _ => {}
        }
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| ClientError::EndpointError {
            status,
            body: format!("unparseable response ({e}): {}", excerpt(&text)),
        })?;
        // refusals and empty choice lists become empty output, which the oracle scores as no match
        let output_text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message)
            .and_then(|m| m.content)
            .unwrap_or_default();

        let mut transport_metadata = BTreeMap::new();
        transport_metadata.insert("status".into(), status.to_string());
        transport_metadata.insert("attempts".into(), attempts.to_string());
        transport_metadata.insert("latency_ms".into(), started.elapsed().as_millis().to_string());
        Ok(RawCompletion {
            sample_id: prompt.sample_id.clone(),
            condition: prompt.condition,
            model_name: self.config.model_name.clone(),
            output_text,
            request_fingerprint: fingerprint(&body),
            transport_metadata,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub sample_id: String,
    pub condition: RetrievalCondition,
    pub output: String,
}

/// On-disk form of a mock script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    pub model_name: String,
    #[serde(default)]
    pub default: Option<String>,
    pub entries: Vec<ScriptEntry>,
}

/// Deterministic client answering from a `(sample_id, condition)` table.
#[derive(Debug, Clone)]
pub struct ScriptedMock {
    model_name: String,
    table: HashMap<(String, RetrievalCondition), String>,
    default: Option<String>,
}

impl ScriptedMock {
    pub fn new(
        model_name: impl Into<String>,
        table: HashMap<(String, RetrievalCondition), String>,
        default: Option<String>,
    ) -> Self {
        ScriptedMock {
            model_name: model_name.into(),
            table,
            default,
        }
    }

    pub fn from_script(script: MockScript) -> Self {
        let table = script
            .entries
            .into_iter()
            .map(|e| ((e.sample_id, e.condition), e.output))
            .collect();
        ScriptedMock::new(script.model_name, table, script.default)
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClientError::Script(format!("{}: {e}", path.display())))?;
        let script: MockScript = serde_json::from_str(&text).map_err(|e| ClientError::Script(e.to_string()))?;
        Ok(ScriptedMock::from_script(script))
    }
}

/// Build a mock client from a `(sample_id, condition) -> output` table.
pub fn scripted_mock(
    model_name: &str,
    behavior_table: HashMap<(String, RetrievalCondition), String>,
    default: Option<String>,
) -> ScriptedMock {
    ScriptedMock::new(model_name, behavior_table, default)
}

impl CompletionClient for ScriptedMock {
    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn complete(&self, prompt: &RenderedPrompt) -> Result<RawCompletion, ClientError> {
        ensure_clean(prompt)?;
        let key = (prompt.sample_id.clone(), prompt.condition);
        let output_text = self
            .table
            .get(&key)
            .or(self.default.as_ref())
            .cloned()
            .ok_or_else(|| ClientError::MissingScriptEntry {
                sample_id: prompt.sample_id.clone(),
                condition: prompt.condition,
            })?;
        let body = request_body(&self.model_name, prompt);
        let mut transport_metadata = BTreeMap::new();
        transport_metadata.insert("transport".into(), "scripted".into());
        Ok(RawCompletion {
            sample_id: prompt.sample_id.clone(),
            condition: prompt.condition,
            model_name: self.model_name.clone(),
            output_text,
            request_fingerprint: fingerprint(&body),
            transport_metadata,
        })
    }
}
