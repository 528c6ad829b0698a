//! Provider interfaces for chat completion, web search and extractive QA,
//! plus the shared gateway that adds caching, pacing and retries.

pub mod http;
pub mod mock;

use std::sync::Arc;

use mbc_core::prompts::{sha256_hex, Message, PromptMessages};
use serde::{Deserialize, Serialize};

use crate::cache::{hash_key, Cache};
use crate::throttle::{RateLimiter, RetryPolicy};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("quota exhausted: {0}")]
    Quota(String),
    #[error("request rejected (HTTP {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

impl ProviderError {
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl SamplingParams {
    pub fn with_temperature(temperature: f64) -> Self {
        Self { temperature: Some(temperature), ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub params: SamplingParams,
    /// Distinguishes repeated samples of the same prompt (ensemble votes).
    pub sample: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    /// The provider stopped early because of its output limit.
    #[serde(default)]
    pub truncated: bool,
}

pub trait ChatProvider: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
    /// Largest prompt (in characters over all messages) the provider accepts.
    fn max_prompt_chars(&self) -> Option<usize> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    pub title: String,
    pub snippet: String,
}

pub trait SearchProvider: Send + Sync {
    fn id(&self) -> String;
    fn page_size(&self) -> usize {
        10
    }
    fn max_pages(&self) -> usize {
        10
    }
    /// One page of results; `page` is 0-based.
    fn search_page(&self, query: &str, page: usize, page_size: usize) -> Result<Vec<SearchHit>, ProviderError>;
    /// Plain text of the page at `url`; empty when unavailable.
    fn fetch_body(&self, _url: &str) -> Result<String, ProviderError> {
        Ok(String::new())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub answer: String,
    pub start: usize,
    pub score: f64,
}

pub trait ExtractionProvider: Send + Sync {
    fn id(&self) -> String;
    /// Contexts longer than this are head-truncated before the call.
    fn max_context_chars(&self) -> usize {
        usize::MAX
    }
    fn extract(&self, question: &str, context: &str) -> Result<Option<Span>, ProviderError>;
}

/// Outcome of one chat call through the gateway.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub response: ChatResponse,
    pub request_hash: String,
    pub response_hash: String,
    pub from_cache: bool,
}

/// Cache, rate limiter and retry policy shared by all provider calls.
#[derive(Debug, Clone)]
pub struct Gateway {
    pub cache: Cache,
    pub limiter: Arc<RateLimiter>,
    pub retry: RetryPolicy,
}

impl Default for Gateway {
    fn default() -> Self {
        Self { cache: Cache::memory(), limiter: Arc::new(RateLimiter::unlimited()), retry: RetryPolicy::default() }
    }
}

#[derive(Serialize)]
struct ChatKey<'a> {
    provider: String,
    #[serde(flatten)]
    request: &'a ChatRequest,
}

#[derive(Serialize)]
struct PageKey<'a> {
    provider: String,
    query_text: &'a str,
    k: usize,
    page: usize,
}

#[derive(Serialize)]
struct QaKey<'a> {
    provider: String,
    question: &'a str,
    document: String,
}

impl Gateway {
    pub fn offline() -> Self {
        Self { retry: RetryPolicy::immediate(3), ..Self::default() }
    }

    pub fn with_cache(cache: Cache) -> Self {
        Self { cache, ..Self::default() }
    }

    pub fn chat(&self, provider: &dyn ChatProvider, request: &ChatRequest) -> Result<Exchange, ProviderError> {
        let key = ChatKey { provider: provider.id(), request };
        let request_hash = hash_key(&key);
        if let Some(response) = self.cache.get::<_, ChatResponse>("chat", &key) {
            let response_hash = sha256_hex(response.text.as_bytes());
            return Ok(Exchange { response, request_hash, response_hash, from_cache: true });
        }
        let response = self.retry.run(|| {
            self.limiter.acquire();
            provider.complete(request)
        })?;
        if let Err(e) = self.cache.put("chat", &key, &response) {
            log::warn!("chat cache write failed: {e}");
        }
        let response_hash = sha256_hex(response.text.as_bytes());
        Ok(Exchange { response, request_hash, response_hash, from_cache: false })
    }

    pub fn chat_prompt(
        &self,
        provider: &dyn ChatProvider,
        model: &str,
        prompt: &PromptMessages,
        params: SamplingParams,
        sample: u32,
    ) -> Result<Exchange, ProviderError> {
        let request = ChatRequest { model: model.to_string(), messages: prompt.messages.clone(), params, sample };
        self.chat(provider, &request)
    }

    pub fn search_page(
        &self,
        provider: &dyn SearchProvider,
        query_text: &str,
        k: usize,
        page: usize,
    ) -> Result<Vec<SearchHit>, ProviderError> {
        let key = PageKey { provider: provider.id(), query_text, k, page };
        if let Some(hits) = self.cache.get("search", &key) {
            return Ok(hits);
        }
        let hits = self.retry.run(|| {
            self.limiter.acquire();
            provider.search_page(query_text, page, provider.page_size())
        })?;
        if let Err(e) = self.cache.put("search", &key, &hits) {
            log::warn!("search cache write failed: {e}");
        }
        Ok(hits)
    }

    pub fn fetch_body(&self, provider: &dyn SearchProvider, url: &str) -> Result<String, ProviderError> {
        let key = (provider.id(), url);
        if let Some(body) = self.cache.get("pages", &key) {
            return Ok(body);
        }
        let body = self.retry.run(|| {
            self.limiter.acquire();
            provider.fetch_body(url)
        })?;
        if let Err(e) = self.cache.put("pages", &key, &body) {
            log::warn!("page cache write failed: {e}");
        }
        Ok(body)
    }

    pub fn extract(
        &self,
        provider: &dyn ExtractionProvider,
        question: &str,
        context: &str,
    ) -> Result<Option<Span>, ProviderError> {
        let key = QaKey { provider: provider.id(), question, document: sha256_hex(context.as_bytes()) };
        if let Some(span) = self.cache.get("qa", &key) {
            return Ok(span);
        }
        let span = self.retry.run(|| {
            self.limiter.acquire();
            provider.extract(question, context)
        })?;
        if let Err(e) = self.cache.put("qa", &key, &span) {
            log::warn!("qa cache write failed: {e}");
        }
        Ok(span)
    }
}

/// The providers a run needs, bound together with their gateway.
#[derive(Clone)]
pub struct Toolkit {
    pub chat: Arc<dyn ChatProvider>,
    pub model: String,
    pub search: Option<Arc<dyn SearchProvider>>,
    pub extractor: Option<Arc<dyn ExtractionProvider>>,
    pub gateway: Gateway,
}

impl std::fmt::Debug for Toolkit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Toolkit")
            .field("chat", &self.chat.id())
            .field("model", &self.model)
            .field("search", &self.search.as_ref().map(|s| s.id()))
            .field("extractor", &self.extractor.as_ref().map(|e| e.id()))
            .finish()
    }
}

impl Toolkit {
    pub fn new(chat: Arc<dyn ChatProvider>, model: impl Into<String>) -> Self {
        Self { chat, model: model.into(), search: None, extractor: None, gateway: Gateway::offline() }
    }

    pub fn with_retrieval(mut self, search: Arc<dyn SearchProvider>, extractor: Arc<dyn ExtractionProvider>) -> Self {
        self.search = Some(search);
        self.extractor = Some(extractor);
        self
    }

    pub fn with_gateway(mut self, gateway: Gateway) -> Self {
        self.gateway = gateway;
        self
    }
}
