//! Provider-agnostic LLM and embedding access.
//!
//! A [`Gateway`] wraps a chat model and an embedding model behind a response
//! cache (backed by [`crate::store`]), a retry policy with exponential
//! backoff, and a process-wide token-bucket rate limiter. With a warm cache,
//! [`Gateway::complete`] is a pure function of its request: re-running a
//! harvest performs zero provider calls and reproduces its outputs byte for
//! byte, which is what makes offline fixtures and reproducibility checks
//! possible.
//!
//! Concrete providers:
//! - [`http::HttpChatModel`] / [`http::HttpEmbeddingModel`] — a single
//!   JSON-over-HTTP chat-completion style endpoint with a bearer token,
//!   configurable via environment variables (covers the usual hosted APIs).
//! - [`scripted::ScriptedChat`] / [`scripted::ScriptedEmbedder`] — table-driven
//!   test doubles.
//! - [`crate::mock`] — deterministic offline models selected by `--llm mock`.

pub mod http;
mod rate_limit;
pub mod scripted;

pub use rate_limit::RateLimiter;

use crate::store::{CacheKind, Store, StoreError};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use thiserror::Error;

/// Environment variables consulted by [`GatewayConfig::from_env`].
pub const ENV_BASE_URL: &str = "METAHARVEST_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "METAHARVEST_LLM_API_KEY";
pub const ENV_CHAT_MODEL: &str = "METAHARVEST_LLM_MODEL";
pub const ENV_EMBED_MODEL: &str = "METAHARVEST_EMBED_MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            text: text.into(),
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            text: text.into(),
        }
    }
}

/// One chat-completion request. Hashable so it can key the response cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.messages.is_empty() {
            return Err(GatewayError::InvalidRequest(
                "a chat request needs at least one message".into(),
            ));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(
                "temperature must be >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Stable cache key over everything that determines the response.
    pub fn fingerprint(&self, endpoint: &str) -> String {
        let key = serde_json::json!({
            "endpoint": endpoint,
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
        });
        crate::sha256_hex(key.to_string().as_bytes())
    }

    /// Concatenated message text, used by prompt-routing mocks.
    pub fn joined_text(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&m.text);
            out.push('\n');
        }
        out
    }
}

/// A fixed-length embedding. All vectors produced by one model have the same
/// length regardless of input text length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub model: String,
}

impl EmbeddingVector {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.values.is_empty() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(GatewayError::MalformedResponse(
                "embedding must be a non-empty vector of finite values".into(),
            ));
        }
        Ok(())
    }
}

/// Provider-level failure, before retry policy is applied.
#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("transient provider failure: {0}")]
    Transient(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

impl ProviderError {
    fn retryable(&self) -> bool {
        matches!(
            self,
            ProviderError::RateLimited(_) | ProviderError::Transient(_)
        )
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider failed after {attempts} attempt(s): {source}")]
    Provider {
        attempts: u32,
        #[source]
        source: ProviderError,
    },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("gateway is not configured: {0}")]
    NotConfigured(String),
}

/// A chat-completion backend.
pub trait ChatModel: Send + Sync {
    /// Stable endpoint identifier, part of every cache key.
    fn endpoint(&self) -> &str;
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError>;
}

/// An embedding backend.
pub trait EmbeddingModel: Send + Sync {
    fn endpoint(&self) -> &str;
    fn embed(&self, model: &str, text: &str) -> Result<Vec<f64>, ProviderError>;
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub chat_model: String,
    pub embed_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_retries: u32,
    /// Base backoff; attempt k sleeps `backoff_ms << k`.
    pub backoff_ms: u64,
    pub requests_per_minute: Option<u32>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            chat_model: "default".into(),
            embed_model: "default-embed".into(),
            // Extraction and consolidation calls run at temperature 0 so a
            // cold-cache harvest is as repeatable as the provider allows.
            temperature: 0.0,
            max_tokens: 4096,
            max_retries: 3,
            backoff_ms: 500,
            requests_per_minute: None,
        }
    }
}

/// Live-endpoint settings read from the environment.
#[derive(Debug, Clone)]
pub struct LiveSettings {
    pub base_url: String,
    pub api_key: String,
    pub chat_model: String,
    pub embed_model: String,
}

impl LiveSettings {
    /// Reads `METAHARVEST_LLM_*` variables; fails fast naming what is missing.
    pub fn from_env() -> Result<Self, GatewayError> {
        let need = |var: &str| {
            std::env::var(var)
                .ok()
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| GatewayError::NotConfigured(format!("{var} is not set")))
        };
        Ok(LiveSettings {
            base_url: need(ENV_BASE_URL)?,
            api_key: need(ENV_API_KEY)?,
            chat_model: need(ENV_CHAT_MODEL)?,
            embed_model: need(ENV_EMBED_MODEL)?,
        })
    }
}

/// Call counters, for run reports and reproducibility assertions.
#[derive(Debug, Default)]
struct Stats {
    chat_provider_calls: AtomicU64,
    embed_provider_calls: AtomicU64,
    cache_hits: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatsSnapshot {
    pub chat_provider_calls: u64,
    pub embed_provider_calls: u64,
    pub cache_hits: u64,
}

impl StatsSnapshot {
    pub fn provider_calls(&self) -> u64 {
        self.chat_provider_calls + self.embed_provider_calls
    }
}

/// LLM and embedding access with caching, retries and rate limiting.
pub struct Gateway {
    chat: Box<dyn ChatModel>,
    embedder: Box<dyn EmbeddingModel>,
    config: GatewayConfig,
    store: Option<Arc<Store>>,
    limiter: Option<RateLimiter>,
    stats: Stats,
}

impl Gateway {
    pub fn new(
        chat: Box<dyn ChatModel>,
        embedder: Box<dyn EmbeddingModel>,
        config: GatewayConfig,
        store: Option<Arc<Store>>,
    ) -> Self {
        let limiter = config.requests_per_minute.map(RateLimiter::per_minute);
        Gateway {
            chat,
            embedder,
            config,
            store,
            limiter,
            stats: Stats::default(),
        }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    /// Builds a request with the configured model and sampling settings.
    pub fn chat_request(&self, messages: Vec<Message>) -> ChatRequest {
        ChatRequest {
            model: self.config.chat_model.clone(),
            messages,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        }
    }

    pub fn stats(&self) -> StatsSnapshot {
        StatsSnapshot {
            chat_provider_calls: self.stats.chat_provider_calls.load(Ordering::Relaxed),
            embed_provider_calls: self.stats.embed_provider_calls.load(Ordering::Relaxed),
            cache_hits: self.stats.cache_hits.load(Ordering::Relaxed),
        }
    }

    /// Runs a chat completion. Cache hits return without touching the
    /// provider; misses go through the rate limiter and the retry policy
    /// (auth failures are never retried).
    pub fn complete(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        req.validate()?;
        let key = req.fingerprint(self.chat.endpoint());
        tracing::debug!(request_hash = %key, model = %req.model, "chat completion");
        if let Some(store) = &self.store {
            if let Some(bytes) = store.get(&key, CacheKind::Llm)? {
                self.stats.cache_hits.fetch_add(1, Ordering::Relaxed);
                return Ok(String::from_utf8_lossy(&bytes).into_owned());
            }
        }
        let text = self.call_with_retry(|| {
            self.stats
                .chat_provider_calls
                .fetch_add(1, Ordering::Relaxed);
            self.chat.complete(req)
        })?;
        if let Some(store) = &self.store {
            store.put(&key, text.as_bytes(), CacheKind::Llm)?;
        }
        Ok(text)
    }

    /// Embeds a text with the configured embedding model. Deterministic per
    /// (model, text); cached like completions.
    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::InvalidRequest(
                "cannot embed an empty text".into(),
            ));
        }
        let model = self.config.embed_model.clone();
        let key = crate::sha256_hex(
            serde_json::json!({
                "endpoint": self.embedder.endpoint(),
                "model": model,
                "text": text,
            })
            .to_string()
            .as_bytes(),
        );
        if let Some(store) = &self.store {
            if let Some(bytes) = store.get(&key, CacheKind::Embedding)? {
                self.stats.cache_hits.fetch_add(1, Ordering::Relaxed);
                let values: Vec<f64> = serde_json::from_slice(&bytes).map_err(|e| {
                    GatewayError::MalformedResponse(format!("corrupt cached embedding: {e}"))
                })?;
                return Ok(EmbeddingVector { values, model });
            }
        }
        let values = self.call_with_retry(|| {
            self.stats
                .embed_provider_calls
                .fetch_add(1, Ordering::Relaxed);
            self.embedder.embed(&model, text)
        })?;
        let vector = EmbeddingVector { values, model };
        vector.validate()?;
        if let Some(store) = &self.store {
            let bytes = serde_json::to_vec(&vector.values).expect("vector serializes");
            store.put(&key, &bytes, CacheKind::Embedding)?;
        }
        Ok(vector)
    }

    fn call_with_retry<T>(
        &self,
        mut call: impl FnMut() -> Result<T, ProviderError>,
    ) -> Result<T, GatewayError> {
        let mut attempts = 0;
        loop {
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            attempts += 1;
            match call() {
                Ok(value) => return Ok(value),
                Err(ProviderError::Auth(msg)) => return Err(GatewayError::Auth(msg)),
                Err(e) if e.retryable() && attempts <= self.config.max_retries => {
                    let sleep_ms = self.config.backoff_ms << (attempts - 1).min(8);
                    tracing::warn!(attempt = attempts, error = %e, "retrying provider call");
                    if sleep_ms > 0 {
                        std::thread::sleep(std::time::Duration::from_millis(sleep_ms));
                    }
                }
                Err(e) => {
                    return Err(GatewayError::Provider {
                        attempts,
                        source: e,
                    })
                }
            }
        }
    }
}
