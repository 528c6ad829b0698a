//! HTTP bindings: an OpenAI-compatible chat endpoint, a Custom Search JSON
//! API style search endpoint, and a hosted extractive-QA endpoint.

use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};
use ureq::http::Response;
use ureq::{Agent, Body};

use super::{ChatProvider, ChatRequest, ChatResponse, ExtractionProvider, ProviderError, SearchHit, SearchProvider, Span};
use crate::html;

pub const DEFAULT_CHAT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_SEARCH_ENDPOINT: &str = "https://www.googleapis.com/customsearch/v1";

/// A credential whose value never appears in `Debug` output.
#[derive(Clone)]
struct Secret(String);

impl std::fmt::Debug for Secret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("<redacted>")
    }
}

fn agent(timeout: Duration) -> Agent {
    Agent::config_builder().http_status_as_error(false).timeout_global(Some(timeout)).build().into()
}

fn transport(e: ureq::Error) -> ProviderError {
    ProviderError::Transport(e.to_string())
}

/// Maps non-success statuses; the key never appears in messages because
/// only the response body is quoted.
fn check_status(mut response: Response<Body>) -> Result<Response<Body>, ProviderError> {
    let status = response.status().as_u16();
    if (200..300).contains(&status) {
        return Ok(response);
    }
    let message: String = response.body_mut().read_to_string().unwrap_or_default().chars().take(500).collect();
    let quota = message.contains("rateLimitExceeded") || message.contains("insufficient_quota") || message.contains("dailyLimitExceeded");
    Err(match status {
        429 => ProviderError::Quota(message),
        403 if quota => ProviderError::Quota(message),
        500..=599 => ProviderError::Transport(format!("HTTP {status}: {message}")),
        _ => ProviderError::Rejected { status, message },
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(mut response: Response<Body>) -> Result<T, ProviderError> {
    response.body_mut().read_json().map_err(|e| ProviderError::Malformed(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct HttpChat {
    endpoint: String,
    key: Secret,
    agent: Agent,
    max_prompt_chars: Option<usize>,
}

impl HttpChat {
    pub fn new(endpoint: impl Into<String>, key: impl Into<String>, timeout: Duration) -> Self {
        Self { endpoint: endpoint.into(), key: Secret(key.into()), agent: agent(timeout), max_prompt_chars: None }
    }

    pub fn with_max_prompt_chars(mut self, limit: Option<usize>) -> Self {
        self.max_prompt_chars = limit;
        self
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

impl ChatProvider for HttpChat {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let mut body = json!({ "model": request.model, "messages": request.messages });
        let params = serde_json::to_value(request.params).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        if let (Value::Object(target), Value::Object(extra)) = (&mut body, params) {
            target.extend(extra);
        }
        let response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.key.0))
            .send_json(&body)
            .map_err(transport)?;
        let completion: Completion = read_json(check_status(response)?)?;
        let choice = completion.choices.into_iter().next().ok_or_else(|| ProviderError::Malformed("no choices".into()))?;
        Ok(ChatResponse {
            text: choice.message.content.unwrap_or_default(),
            truncated: choice.finish_reason.as_deref() == Some("length"),
        })
    }

    fn max_prompt_chars(&self) -> Option<usize> {
        self.max_prompt_chars
    }
}

/// Search over a Custom Search JSON API compatible endpoint (10 results per page).
#[derive(Debug, Clone)]
pub struct HttpSearch {
    endpoint: String,
    key: Secret,
    engine_id: String,
    agent: Agent,
    fetch_bodies: bool,
}

impl HttpSearch {
    pub fn new(endpoint: impl Into<String>, key: impl Into<String>, engine_id: impl Into<String>, timeout: Duration) -> Self {
        Self { endpoint: endpoint.into(), key: Secret(key.into()), engine_id: engine_id.into(), agent: agent(timeout), fetch_bodies: true }
    }

    pub fn with_body_fetch(mut self, enabled: bool) -> Self {
        self.fetch_bodies = enabled;
        self
    }
}

#[derive(Deserialize)]
struct SearchPage {
    #[serde(default)]
    items: Vec<SearchItem>,
}

#[derive(Deserialize)]
struct SearchItem {
    link: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
}

impl SearchProvider for HttpSearch {
    fn id(&self) -> String {
        format!("http:{}#{}", self.endpoint, self.engine_id)
    }

    fn search_page(&self, query: &str, page: usize, page_size: usize) -> Result<Vec<SearchHit>, ProviderError> {
        let response = self
            .agent
            .get(&self.endpoint)
            .query("key", &self.key.0)
            .query("cx", &self.engine_id)
            .query("q", query)
            .query("num", page_size.to_string())
            .query("start", (page * page_size + 1).to_string())
            .call()
            .map_err(transport)?;
        let page: SearchPage = read_json(check_status(response)?)?;
        Ok(page.items.into_iter().map(|i| SearchHit { url: i.link, title: i.title, snippet: i.snippet }).collect())
    }

    fn fetch_body(&self, url: &str) -> Result<String, ProviderError> {
        if !self.fetch_bodies {
            return Ok(String::new());
        }
        let response = self.agent.get(url).call().map_err(transport)?;
        let mut response = match check_status(response) {
            Ok(r) => r,
            Err(ProviderError::Rejected { .. }) => return Ok(String::new()),
            Err(e) => return Err(e),
        };
        let raw = response
            .body_mut()
            .with_config()
            .limit(10 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(html::to_text(&raw))
    }
}

/// Extractive QA over an inference endpoint taking
/// `{"inputs": {"question", "context"}}` and answering
/// `{"answer", "start", "score"}` (or a ranked list of those).
#[derive(Debug, Clone)]
pub struct HttpExtractor {
    endpoint: String,
    key: Option<Secret>,
    agent: Agent,
    max_context_chars: usize,
}

impl HttpExtractor {
    pub fn new(endpoint: impl Into<String>, key: Option<String>, timeout: Duration, max_context_chars: usize) -> Self {
        Self { endpoint: endpoint.into(), key: key.map(Secret), agent: agent(timeout), max_context_chars }
    }
}

#[derive(Deserialize)]
struct QaAnswer {
    answer: String,
    #[serde(default)]
    start: usize,
    score: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum QaReply {
    One(QaAnswer),
    Many(Vec<QaAnswer>),
}

impl ExtractionProvider for HttpExtractor {
    fn id(&self) -> String {
        format!("http:{}", self.endpoint)
    }

    fn max_context_chars(&self) -> usize {
        self.max_context_chars
    }

    fn extract(&self, question: &str, context: &str) -> Result<Option<Span>, ProviderError> {
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.key {
            request = request.header("Authorization", &format!("Bearer {}", key.0));
        }
        let response = request
            .send_json(json!({ "inputs": { "question": question, "context": context } }))
            .map_err(transport)?;
        let best = match read_json::<QaReply>(check_status(response)?)? {
            QaReply::One(a) => Some(a),
            QaReply::Many(list) => list.into_iter().next(),
        };
        Ok(best.filter(|a| !a.answer.trim().is_empty()).map(|a| Span {
            answer: a.answer,
            start: a.start,
            score: if a.score.is_finite() { a.score.clamp(0.0, 1.0) } else { 0.0 },
        }))
    }
}
