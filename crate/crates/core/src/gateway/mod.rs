//! Model access behind a backend boundary: a recorded-response replay cache,
//! an echoing mock and an HTTP chat-completion client.

mod cache;
mod http;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sql::{HeuristicCounter, TokenCount, TokenCounter};

pub use cache::{CacheEntry, ReplayCache};
pub use http::{HttpBackend, HttpConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("no recorded response for key {key}")]
    CacheMiss { key: String },
    #[error("provider returned status {status}: {body}")]
    ProviderError { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("key {key} is already recorded with a different response")]
    ConflictingRecording { key: String },
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed cache line {line}: {message}")]
    MalformedCache { line: usize, message: String },
    #[error("cache i/o: {0}")]
    Io(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// Arguments of one generation call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub system_prompt: String,
    pub model_name: String,
    pub temperature: f64,
}

impl GenerationRequest {
    /// A request at temperature 0.
    pub fn new(prompt: impl Into<String>, system_prompt: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            system_prompt: system_prompt.into(),
            model_name: model_name.into(),
            temperature: 0.0,
        }
    }

    /// Hex SHA-256 of `system \x1f prompt \x1f model`. A non-zero temperature
    /// is appended as a fourth `\x1f`-separated field.
    pub fn cache_key(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.system_prompt.as_bytes());
        h.update(b"\x1f");
        h.update(self.prompt.as_bytes());
        h.update(b"\x1f");
        h.update(self.model_name.as_bytes());
        if self.temperature != 0.0 {
            h.update(b"\x1f");
            h.update(format!("{}", self.temperature).as_bytes());
        }
        hex::encode(h.finalize())
    }

    fn validate(&self) -> Result<(), GatewayError> {
        if self.prompt.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Replay,
    Mock,
    Http,
}

/// Raw model output before demasking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub output_tokens: TokenCount,
    pub backend: BackendKind,
    pub cache_key: String,
}

/// A model endpoint. Implementations are shared across worker threads.
pub trait Generator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError>;
}

/// Prompt scaffolding lines the mock drops before echoing.
const SCAFFOLD_PREFIXES: &[&str] = &["META ", "LEGEND ", "#SPEC", "#RULES", "#SCHEMA"];

/// Echoes the SQL payload of the prompt: every line except metadata, legend
/// and context headers.
#[derive(Clone)]
pub struct MockBackend {
    counter: Arc<dyn TokenCounter>,
}

impl MockBackend {
    pub fn new(counter: Arc<dyn TokenCounter>) -> Self {
        Self { counter }
    }

    /// The prompt with scaffolding lines removed.
    pub fn payload(prompt: &str) -> String {
        prompt
            .split('\n')
            .filter(|l| !SCAFFOLD_PREFIXES.iter().any(|p| l.starts_with(p)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new(Arc::new(HeuristicCounter))
    }
}

impl Generator for MockBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError> {
        request.validate()?;
        let text = Self::payload(&request.prompt);
        Ok(GenerationResult {
            output_tokens: self.counter.count(&text),
            text,
            backend: BackendKind::Mock,
            cache_key: request.cache_key(),
        })
    }
}

/// Serves responses from a [`ReplayCache`]; a missing key is an error.
#[derive(Clone)]
pub struct ReplayBackend {
    cache: Arc<ReplayCache>,
    counter: Arc<dyn TokenCounter>,
}

impl ReplayBackend {
    pub fn new(cache: Arc<ReplayCache>, counter: Arc<dyn TokenCounter>) -> Self {
        Self { cache, counter }
    }

    pub fn cache(&self) -> &ReplayCache {
        &self.cache
    }
}

impl Generator for ReplayBackend {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResult, GatewayError> {
        request.validate()?;
        let key = request.cache_key();
        let text = self
            .cache
            .lookup(&key)
            .ok_or_else(|| GatewayError::CacheMiss { key: key.clone() })?;
        Ok(GenerationResult {
            output_tokens: self.counter.count(&text),
            text,
            backend: BackendKind::Replay,
            cache_key: key,
        })
    }
}

/// Adds `response` for `request` to `cache`. Returns `false` when the exact
/// pair was already present.
pub fn record(request: &GenerationRequest, response: &str, cache: &ReplayCache) -> Result<bool, GatewayError> {
    cache.record(&request.cache_key(), &request.model_name, response)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(p: &str) -> GenerationRequest {
        GenerationRequest::new(p, "sys", "m")
    }

    #[test]
    fn mock_echoes_payload() {
        let out = MockBackend::default().generate(&req("SELECT 1")).unwrap();
        assert_eq!(out.text, "SELECT 1");
        assert_eq!(out.backend, BackendKind::Mock);
        let out = MockBackend::default()
            .generate(&req("#SPEC keep ids\nLEGEND A=B\nMETA kind=table\nCREATE TABLE t(a INT)"))
            .unwrap();
        assert_eq!(out.text, "CREATE TABLE t(a INT)");
        assert_eq!(MockBackend::default().generate(&req(" ")), Err(GatewayError::EmptyPrompt));
    }

    #[test]
    fn key_is_stable_and_sensitive() {
        let a = req("SELECT 1");
        let mut oracle = Sha256::new();
        oracle.update("sys\u{1f}SELECT 1\u{1f}m".as_bytes());
        assert_eq!(a.cache_key(), hex::encode(oracle.finalize()));
        let mut hot = a.clone();
        hot.temperature = 0.7;
        assert_ne!(a.cache_key(), hot.cache_key());
        assert_ne!(a.cache_key(), req("SELECT 2").cache_key());
    }

    #[test]
    fn replay_round_trip() {
        let cache = Arc::new(ReplayCache::in_memory());
        let backend = ReplayBackend::new(cache.clone(), Arc::new(HeuristicCounter));
        let r = req("SELECT 1");
        assert!(matches!(backend.generate(&r), Err(GatewayError::CacheMiss { .. })));
        assert!(record(&r, "SELECT 1;", &cache).unwrap());
        assert!(!record(&r, "SELECT 1;", &cache).unwrap());
        assert_eq!(cache.len(), 1);
        assert!(matches!(record(&r, "SELECT 2;", &cache), Err(GatewayError::ConflictingRecording { .. })));
        let out = backend.generate(&r).unwrap();
        assert_eq!(out.text, "SELECT 1;");
        assert_eq!(out.output_tokens, TokenCount(4));
        assert_eq!(out.backend, BackendKind::Replay);
    }
}
