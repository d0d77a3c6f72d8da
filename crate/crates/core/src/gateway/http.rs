//! Live provider over a single JSON chat-completion style HTTP endpoint.
//!
//! One wire format with a configurable base URL, model name and bearer token
//! covers the usual hosted chat and embedding APIs, so no per-vendor code
//! lives in the core.

use super::{ChatModel, ChatRequest, EmbeddingModel, LiveSettings, ProviderError, Role};
use serde_json::{json, Value};
use std::time::Duration;

pub struct HttpChatModel {
    agent: ureq::Agent,
    base_url: String,
    api_key: String,
}

pub struct HttpEmbeddingModel {
    agent: ureq::Agent,
    base_url: String,
    api_key: String,
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::AgentBuilder::new().timeout(timeout).build()
}

impl HttpChatModel {
    pub fn new(settings: &LiveSettings, timeout: Duration) -> Self {
        HttpChatModel {
            agent: agent(timeout),
            base_url: settings.base_url.trim_end_matches('/').to_string(),
            api_key: settings.api_key.clone(),
        }
    }
}

impl HttpEmbeddingModel {
    pub fn new(settings: &LiveSettings, timeout: Duration) -> Self {
        HttpEmbeddingModel {
            agent: agent(timeout),
            base_url: settings.base_url.trim_end_matches('/').to_string(),
            api_key: settings.api_key.clone(),
        }
    }
}

fn classify(err: ureq::Error) -> ProviderError {
    match err {
        ureq::Error::Status(401, _) | ureq::Error::Status(403, _) => {
            ProviderError::Auth("endpoint rejected the credential".into())
        }
        ureq::Error::Status(429, _) => ProviderError::RateLimited("HTTP 429".into()),
        ureq::Error::Status(code, _) if code >= 500 => {
            ProviderError::Transient(format!("HTTP {code}"))
        }
        ureq::Error::Status(code, _) => ProviderError::Malformed(format!("HTTP {code}")),
        ureq::Error::Transport(t) => ProviderError::Transient(t.to_string()),
    }
}

fn post(
    agent: &ureq::Agent,
    url: &str,
    api_key: &str,
    body: Value,
) -> Result<Value, ProviderError> {
    let response = agent
        .post(url)
        .set("Authorization", &format!("Bearer {api_key}"))
        .set("Content-Type", "application/json")
        .send_string(&body.to_string())
        .map_err(classify)?;
    let text = response
        .into_string()
        .map_err(|e| ProviderError::Transient(format!("failed to read response body: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| ProviderError::Malformed(format!("response is not JSON: {e}")))
}

impl ChatModel for HttpChatModel {
    fn endpoint(&self) -> &str {
        &self.base_url
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        let messages: Vec<Value> = req
            .messages
            .iter()
            .map(|m| {
                json!({
                    "role": match m.role { Role::System => "system", Role::User => "user" },
                    "content": m.text,
                })
            })
            .collect();
        let body = json!({
            "model": req.model,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let url = format!("{}/chat/completions", self.base_url);
        let value = post(&self.agent, &url, &self.api_key, body)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                ProviderError::Malformed("response lacks choices[0].message.content".into())
            })
    }
}

impl EmbeddingModel for HttpEmbeddingModel {
    fn endpoint(&self) -> &str {
        &self.base_url
    }

    fn embed(&self, model: &str, text: &str) -> Result<Vec<f64>, ProviderError> {
        let body = json!({ "model": model, "input": text });
        let url = format!("{}/embeddings", self.base_url);
        let value = post(&self.agent, &url, &self.api_key, body)?;
        let raw = value["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| ProviderError::Malformed("response lacks data[0].embedding".into()))?;
        raw.iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| ProviderError::Malformed("non-numeric embedding entry".into()))
            })
            .collect()
    }
}
