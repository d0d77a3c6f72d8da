//! Table-driven chat and embedding doubles for tests and fixtures.

use super::{ChatModel, ChatRequest, EmbeddingModel, ProviderError};
use std::collections::VecDeque;
use std::sync::Mutex;

/// Answers with the response of the first rule whose needle occurs in the
/// request text. Queued failures are raised first, one per call, which makes
/// retry behaviour scriptable.
#[derive(Default)]
pub struct ScriptedChat {
    rules: Vec<(String, String)>,
    failures: Mutex<VecDeque<ProviderError>>,
}

impl ScriptedChat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on(mut self, needle: impl Into<String>, response: impl Into<String>) -> Self {
        self.rules.push((needle.into(), response.into()));
        self
    }

    pub fn fail_first(self, error: ProviderError) -> Self {
        self.failures.lock().unwrap().push_back(error);
        self
    }

    pub fn fail_times(self, n: usize, make: impl Fn() -> ProviderError) -> Self {
        {
            let mut q = self.failures.lock().unwrap();
            for _ in 0..n {
                q.push_back(make());
            }
        }
        self
    }
}

impl ChatModel for ScriptedChat {
    fn endpoint(&self) -> &str {
        "scripted:"
    }

    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        if let Some(err) = self.failures.lock().unwrap().pop_front() {
            return Err(err);
        }
        let text = req.joined_text();
        for (needle, response) in &self.rules {
            if text.contains(needle) {
                return Ok(response.clone());
            }
        }
        Err(ProviderError::Malformed(
            "no scripted response matches the request".into(),
        ))
    }
}

/// Returns fixed vectors for exact texts; unknown texts are an error so tests
/// fail loudly instead of silently comparing garbage.
#[derive(Default)]
pub struct ScriptedEmbedder {
    rules: Vec<(String, Vec<f64>)>,
}

impl ScriptedEmbedder {
    pub fn on(mut self, text: impl Into<String>, vector: Vec<f64>) -> Self {
        self.rules.push((text.into(), vector));
        self
    }
}

impl EmbeddingModel for ScriptedEmbedder {
    fn endpoint(&self) -> &str {
        "scripted:"
    }

    fn embed(&self, _model: &str, text: &str) -> Result<Vec<f64>, ProviderError> {
        self.rules
            .iter()
            .find(|(t, _)| t == text)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| ProviderError::Malformed(format!("no scripted embedding for {text:?}")))
    }
}
