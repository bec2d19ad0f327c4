//! Chat-completion client and scripted stand-ins.

use std::collections::HashMap;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

/// Environment variable consulted for the endpoint's API key.
pub const API_KEY_ENV: &str = "LTLGEN_API_KEY";

#[derive(Clone, PartialEq)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub api_key: Option<String>,
    pub temperature: f64,
    pub timeout: Duration,
    pub max_concurrency: usize,
}

// Keeps the key out of logs and panic messages.
impl std::fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("base_url", &self.base_url)
            .field("model_name", &self.model_name)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("temperature", &self.temperature)
            .field("timeout", &self.timeout)
            .field("max_concurrency", &self.max_concurrency)
            .finish()
    }
}

impl EndpointConfig {
    /// Temperature 0, 60 s timeout, 4 concurrent requests, key read from
    /// [`API_KEY_ENV`] if set.
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            temperature: 0.0,
            timeout: Duration::from_secs(60),
            max_concurrency: 4,
        }
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(QueryError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_concurrency == 0 {
            return Err(QueryError::InvalidConfig("max_concurrency must be positive".into()));
        }
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            return Err(QueryError::InvalidConfig(format!(
                "base URL must be http(s): {}",
                self.base_url
            )));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("invalid endpoint config: {0}")]
    InvalidConfig(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("request timed out")]
    Timeout,
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl QueryError {
    pub fn is_transient(&self) -> bool {
        match self {
            QueryError::Network(_) | QueryError::Timeout => true,
            QueryError::Status { status, .. } => *status == 429 || *status >= 500,
            QueryError::InvalidConfig(_) | QueryError::Malformed(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Delay before attempt `attempt + 1`, doubling each time.
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1))
    }

    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T, QueryError>) -> Result<T, QueryError> {
        let mut attempt = 1;
        loop {
            match op() {
                Err(e) if e.is_transient() && attempt < self.max_attempts => {
                    thread::sleep(self.delay(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

/// Anything that answers a prompt with text.
pub trait ChatModel: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, QueryError>;
}

impl<T: ChatModel + ?Sized> ChatModel for &T {
    fn complete(&self, prompt: &str) -> Result<String, QueryError> {
        (**self).complete(prompt)
    }
}

pub struct HttpChatModel {
    cfg: EndpointConfig,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

impl HttpChatModel {
    pub fn new(cfg: EndpointConfig) -> Result<Self, QueryError> {
        Self::with_retry(cfg, RetryPolicy::default())
    }

    pub fn with_retry(cfg: EndpointConfig, retry: RetryPolicy) -> Result<Self, QueryError> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| QueryError::Network(e.to_string()))?;
        Ok(Self { cfg, retry, client })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    fn attempt(&self, prompt: &str) -> Result<String, QueryError> {
        let body = json!({
            "model": self.cfg.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
        });
        let mut req = self.client.post(self.cfg.completions_url()).json(&body);
        if let Some(key) = &self.cfg.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(transport_error)?;
        let status = resp.status();
        let text = resp.text().map_err(transport_error)?;
        if !status.is_success() {
            return Err(QueryError::Status {
                status: status.as_u16(),
                body: truncate(&text, 200),
            });
        }
        extract_content(&text)
    }
}

impl ChatModel for HttpChatModel {
    fn complete(&self, prompt: &str) -> Result<String, QueryError> {
        self.retry.run(|| self.attempt(prompt))
    }
}

/// Sends `prompt` to the endpoint described by `cfg` with default retries.
pub fn query_model(cfg: &EndpointConfig, prompt: &str) -> Result<String, QueryError> {
    HttpChatModel::new(cfg.clone())?.complete(prompt)
}

fn transport_error(e: reqwest::Error) -> QueryError {
    if e.is_timeout() {
        QueryError::Timeout
    } else {
        QueryError::Network(e.to_string())
    }
}

fn truncate(s: &str, max: usize) -> String {
    match s.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

/// `choices[0].message.content` of a chat-completion response body.
pub fn extract_content(body: &str) -> Result<String, QueryError> {
    let v: Value = serde_json::from_str(body).map_err(|e| QueryError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| QueryError::Malformed("missing choices[0].message.content".into()))
}

type Responder = Box<dyn Fn(&str) -> Result<String, QueryError> + Send + Sync>;

/// In-process model driven by a closure.
pub struct ScriptedModel {
    respond: Responder,
}

impl ScriptedModel {
    pub fn from_fn(f: impl Fn(&str) -> Result<String, QueryError> + Send + Sync + 'static) -> Self {
        Self { respond: Box::new(f) }
    }

    pub fn always(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::from_fn(move |_| Ok(text.clone()))
    }

    /// Looks the prompt up in `answers`; unknown prompts get an empty reply.
    pub fn lookup(answers: HashMap<String, String>) -> Self {
        Self::from_fn(move |p| Ok(answers.get(p).cloned().unwrap_or_default()))
    }
}

impl ChatModel for ScriptedModel {
    fn complete(&self, prompt: &str) -> Result<String, QueryError> {
        (self.respond)(prompt)
    }
}
