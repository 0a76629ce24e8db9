//! LLM providers: a chat-completions HTTP client and a fixture-replaying mock.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::{PromptKind, PromptRequest};

/// Environment variable holding the bearer token for the HTTP provider.
pub const API_KEY_ENV: &str = "GAZEGRAPH_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderResponse {
    pub raw_text: String,
    pub latency: Duration,
    pub attempt: u32,
}

/// Identifies a call for fixture lookup and logging. Attempts are numbered
/// from 1 per (sentence, prompt kind).
#[derive(Debug, Clone, Copy)]
pub struct CallContext<'a> {
    pub sentence_id: &'a str,
    pub attempt: u32,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProviderError {
    #[error("no fixture for sentence {sentence_id}, {prompt_kind} attempt {attempt}")]
    MissingFixture {
        sentence_id: String,
        prompt_kind: &'static str,
        attempt: u32,
    },
    #[error("environment variable {API_KEY_ENV} is not set")]
    MissingApiKey,
    #[error("HTTP request failed: {0}")]
    Http(String),
    #[error("unexpected response body: {0}")]
    MalformedResponse(String),
}

pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &'static str;

    fn complete(
        &self,
        request: &PromptRequest,
        ctx: CallContext<'_>,
    ) -> Result<ProviderResponse, ProviderError>;

    /// Number of `complete` calls made so far, failed ones included.
    fn call_count(&self) -> usize;
}

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub sentence_id: String,
    pub prompt_kind: PromptKind,
    pub attempt: u32,
    pub raw_text: String,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("reading fixtures: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("fixture line {line}: duplicate key ({sentence_id}, {prompt_kind}, {attempt})")]
    Duplicate {
        line: usize,
        sentence_id: String,
        prompt_kind: &'static str,
        attempt: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRecord {
    pub sentence_id: String,
    pub prompt_kind: PromptKind,
    pub attempt: u32,
}

/// Replays scripted responses keyed by (sentence id, prompt kind, attempt).
/// Never touches the network.
#[derive(Debug, Default)]
pub struct MockProvider {
    fixtures: HashMap<(String, PromptKind, u32), String>,
    calls: Mutex<Vec<CallRecord>>,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut mock = Self::new();
        for r in records {
            mock.insert(r.sentence_id, r.prompt_kind, r.attempt, r.raw_text);
        }
        mock
    }

    pub fn from_jsonl(path: impl AsRef<Path>) -> Result<Self, FixtureError> {
        let reader = BufReader::new(File::open(path)?);
        let mut mock = Self::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: FixtureRecord =
                serde_json::from_str(&line).map_err(|source| FixtureError::Json {
                    line: idx + 1,
                    source,
                })?;
            let key = (
                record.sentence_id.clone(),
                record.prompt_kind,
                record.attempt,
            );
            if mock.fixtures.contains_key(&key) {
                return Err(FixtureError::Duplicate {
                    line: idx + 1,
                    sentence_id: record.sentence_id,
                    prompt_kind: record.prompt_kind.as_str(),
                    attempt: record.attempt,
                });
            }
            mock.fixtures.insert(key, record.raw_text);
        }
        Ok(mock)
    }

    pub fn insert(
        &mut self,
        sentence_id: impl Into<String>,
        kind: PromptKind,
        attempt: u32,
        raw_text: impl Into<String>,
    ) {
        self.fixtures
            .insert((sentence_id.into(), kind, attempt), raw_text.into());
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.calls.lock().expect("call log poisoned").clone()
    }
}

impl LlmProvider for MockProvider {
    fn name(&self) -> &'static str {
        "mock"
    }

    fn complete(
        &self,
        request: &PromptRequest,
        ctx: CallContext<'_>,
    ) -> Result<ProviderResponse, ProviderError> {
        self.calls
            .lock()
            .expect("call log poisoned")
            .push(CallRecord {
                sentence_id: ctx.sentence_id.to_string(),
                prompt_kind: request.prompt_kind,
                attempt: ctx.attempt,
            });
        let key = (
            ctx.sentence_id.to_string(),
            request.prompt_kind,
            ctx.attempt,
        );
        match self.fixtures.get(&key) {
            Some(raw) => Ok(ProviderResponse {
                raw_text: raw.clone(),
                latency: Duration::ZERO,
                attempt: ctx.attempt,
            }),
            None => Err(ProviderError::MissingFixture {
                sentence_id: ctx.sentence_id.to_string(),
                prompt_kind: request.prompt_kind.as_str(),
                attempt: ctx.attempt,
            }),
        }
    }

    fn call_count(&self) -> usize {
        self.calls.lock().expect("call log poisoned").len()
    }
}

/// Chat-completions client: the prompt goes out as a single user message and
/// the answer is read from `choices[0].message.content`.
pub struct HttpProvider {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
    calls: AtomicUsize,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            agent,
            calls: AtomicUsize::new(0),
        }
    }

    /// Reads the API key from `GAZEGRAPH_API_KEY`.
    pub fn from_env(endpoint: impl Into<String>) -> Result<Self, ProviderError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| ProviderError::MissingApiKey)?;
        Ok(Self::new(endpoint, key, Duration::from_secs(120)))
    }
}

pub(crate) fn chat_request_body(request: &PromptRequest) -> serde_json::Value {
    serde_json::json!({
        "model": request.model_name,
        "temperature": request.temperature,
        "messages": [{"role": "user", "content": request.rendered_text}],
    })
}

pub(crate) fn extract_choice_text(body: &serde_json::Value) -> Result<String, ProviderError> {
    body.pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .ok_or_else(|| {
            ProviderError::MalformedResponse("missing choices[0].message.content".into())
        })
}

impl LlmProvider for HttpProvider {
    fn name(&self) -> &'static str {
        "http"
    }

    fn complete(
        &self,
        request: &PromptRequest,
        ctx: CallContext<'_>,
    ) -> Result<ProviderResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let started = Instant::now();
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(chat_request_body(request))
            .map_err(|e| ProviderError::Http(e.to_string()))?;
        let body: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        Ok(ProviderResponse {
            raw_text: extract_choice_text(&body)?,
            latency: started.elapsed(),
            attempt: ctx.attempt,
        })
    }

    fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(kind: PromptKind) -> PromptRequest {
        PromptRequest {
            prompt_kind: kind,
            rendered_text: "hello".into(),
            model_name: "gpt-4o".into(),
            temperature: 0.7,
        }
    }

    #[test]
    fn mock_replays_by_key_and_logs() {
        let mut mock = MockProvider::new();
        mock.insert("s1", PromptKind::KgExtraction, 1, "first");
        mock.insert("s1", PromptKind::KgExtraction, 2, "second");
        let ctx = |attempt| CallContext {
            sentence_id: "s1",
            attempt,
        };
        let r = mock
            .complete(&request(PromptKind::KgExtraction), ctx(2))
            .unwrap();
        assert_eq!(r.raw_text, "second");
        assert_eq!(r.attempt, 2);
        let missing = mock.complete(&request(PromptKind::ImportanceExtraction), ctx(1));
        assert!(matches!(missing, Err(ProviderError::MissingFixture { .. })));
        assert_eq!(mock.call_count(), 2);
        assert_eq!(
            mock.calls()[1].prompt_kind,
            PromptKind::ImportanceExtraction
        );
    }

    #[test]
    fn fixture_record_json_shape() {
        let line = r#"{"sentence_id":"s1","prompt_kind":"importance_extraction","attempt":1,"raw_text":"<nodes></nodes>"}"#;
        let rec: FixtureRecord = serde_json::from_str(line).unwrap();
        assert_eq!(rec.prompt_kind, PromptKind::ImportanceExtraction);
    }

    #[test]
    fn duplicate_fixture_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.jsonl");
        let line =
            r#"{"sentence_id":"s1","prompt_kind":"kg_extraction","attempt":1,"raw_text":"x"}"#;
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        assert!(matches!(
            MockProvider::from_jsonl(&path),
            Err(FixtureError::Duplicate { line: 2, .. })
        ));
    }

    #[test]
    fn request_body_is_single_user_message() {
        let body = chat_request_body(&request(PromptKind::KgExtraction));
        assert_eq!(body["model"], "gpt-4o");
        assert_eq!(body["messages"].as_array().unwrap().len(), 1);
        assert_eq!(body["messages"][0]["role"], "user");
        assert_eq!(body["messages"][0]["content"], "hello");
    }

    #[test]
    fn choice_text_extraction() {
        let body =
            serde_json::json!({"choices": [{"message": {"role": "assistant", "content": "ok"}}]});
        assert_eq!(extract_choice_text(&body).unwrap(), "ok");
        assert!(extract_choice_text(&serde_json::json!({"choices": []})).is_err());
    }
}
