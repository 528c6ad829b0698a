//! Deterministic in-process providers for tests, fixtures and offline runs.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use mbc_core::oracle;
use mbc_core::prompts::Role;
use mbc_core::verdict::Label;
use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, ChatResponse, ExtractionProvider, ProviderError, SearchHit, SearchProvider, Span};

const INITIAL_CUE: &str = "Build a background check for the news source \"";
const UPDATE_CUE: &str = "Google search has revealed some new information:\n\n";
const UPDATE_END: &str = "\n\nUpdate your background check for";
const CLAIM_CUE: &str = "The claim is: \"";
const PREMISE_CUE: &str = "\".\nThe text follows below:\n\"";
const FILL_CUE: &str = "The question is:\n";
const FILL_TEXT_CUE: &str = "\n\nThe text follows below:\n";
const FILL_END: &str = "\n\nFill in the blanks in the question";
const MARKER: &str = "**Background check**";

fn last_user(request: &ChatRequest) -> &str {
    request.messages.iter().rev().find(|m| m.role == Role::User).map_or("", |m| m.content.as_str())
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let to = from + text[from..].find(end)?;
    Some(&text[from..to])
}

/// Chat stand-in that understands the shipped prompt templates.
///
/// Initial prompts get the configured prior knowledge for the source (or a
/// one-line stub), update prompts append each new answer as a list item,
/// entailment prompts are judged by [`oracle::judge`], fill-in prompts are
/// answered by [`oracle::fill_blanks`], and anything else is echoed.
#[derive(Debug, Default)]
pub struct OfflineChat {
    prior: BTreeMap<String, String>,
    calls: AtomicUsize,
}

impl OfflineChat {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_prior(mut self, source_name: impl Into<String>, body: impl Into<String>) -> Self {
        self.prior.insert(source_name.into(), body.into());
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn initial(&self, source: &str) -> String {
        let body = self.prior.get(source).cloned().unwrap_or_else(|| format!("1. {source} is a news source."));
        format!("{MARKER}\n{body}")
    }

    fn update(request: &ChatRequest, user: &str) -> String {
        let previous = request
            .messages
            .iter()
            .rev()
            .find(|m| m.role == Role::Assistant)
            .map_or("", |m| m.content.as_str())
            .trim();
        let pairs = between(user, UPDATE_CUE, UPDATE_END).unwrap_or("");
        let mut body = previous.to_string();
        let mut n = previous.lines().filter(|l| list_number(l).is_some()).count();
        for line in pairs.lines() {
            let Some(answer) = line.strip_prefix("A: ") else { continue };
            let answer = answer.rfind(" (source: ").map_or(answer, |i| &answer[..i]).trim();
            if answer.is_empty() || body.contains(answer) {
                continue;
            }
            n += 1;
            let stop = if answer.ends_with(['.', '!', '?']) { "" } else { "." };
            if !body.is_empty() {
                body.push('\n');
            }
            body.push_str(&format!("{n}. {answer}{stop}"));
        }
        format!("{MARKER}\n{body}")
    }

    fn entailment(user: &str) -> Option<String> {
        let from = user.find(CLAIM_CUE)? + CLAIM_CUE.len();
        let split = from + user[from..].find(PREMISE_CUE)?;
        let claim = &user[from..split];
        let rest = &user[split + PREMISE_CUE.len()..];
        let tail = format!("\".\n\n{claim}? Thinking step by step");
        let premise = &rest[..rest.rfind(&tail)?];
        let label = oracle::judge(premise, claim);
        let verdict = match label {
            Label::True => "TRUE",
            Label::False => "FALSE",
            Label::Nei => "NOT ENOUGH EVIDENCE",
        };
        Some(format!("Comparing the claim with each sentence of the text.\n{verdict}"))
    }

    fn fill_in(user: &str) -> Option<String> {
        let template = between(user, FILL_CUE, FILL_TEXT_CUE)?;
        let from = user.find(FILL_TEXT_CUE)? + FILL_TEXT_CUE.len();
        let to = user.rfind(FILL_END)?;
        let text = user.get(from..to)?;
        Some(oracle::fill_blanks(template, text).unwrap_or_else(|| template.to_string()))
    }
}

fn list_number(line: &str) -> Option<usize> {
    let (n, _) = line.trim_start().split_once(". ")?;
    n.parse().ok()
}

impl ChatProvider for OfflineChat {
    fn id(&self) -> String {
        "offline".into()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let user = last_user(request);
        let text = if user.contains(UPDATE_CUE) {
            Self::update(request, user)
        } else if let Some(source) = between(user, INITIAL_CUE, "\"") {
            self.initial(source)
        } else if let Some(v) = Self::entailment(user) {
            v
        } else if let Some(f) = Self::fill_in(user) {
            f
        } else {
            user.to_string()
        };
        Ok(ChatResponse { text, truncated: false })
    }
}

type ChatFn = dyn Fn(&ChatRequest) -> Result<String, ProviderError> + Send + Sync;

/// Chat provider backed by a closure, counting its invocations.
pub struct FnChat {
    id: String,
    f: Box<ChatFn>,
    calls: AtomicUsize,
    max_prompt_chars: Option<usize>,
}

impl std::fmt::Debug for FnChat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnChat").field("id", &self.id).field("calls", &self.calls()).finish()
    }
}

impl FnChat {
    pub fn new(id: &str, f: impl Fn(&ChatRequest) -> Result<String, ProviderError> + Send + Sync + 'static) -> Self {
        Self { id: id.into(), f: Box::new(f), calls: AtomicUsize::new(0), max_prompt_chars: None }
    }

    /// Always answers `text`.
    pub fn fixed(text: &str) -> Self {
        let text = text.to_string();
        Self::new("fixed", move |_| Ok(text.clone()))
    }

    /// Answers with the last user message.
    pub fn echo() -> Self {
        Self::new("echo", |r| Ok(last_user(r).to_string()))
    }

    pub fn with_max_prompt_chars(mut self, limit: usize) -> Self {
        self.max_prompt_chars = Some(limit);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatProvider for FnChat {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(limit) = self.max_prompt_chars {
            let size: usize = request.messages.iter().map(|m| m.content.chars().count()).sum();
            if size > limit {
                return Err(ProviderError::Rejected { status: 400, message: format!("prompt of {size} chars exceeds {limit}") });
            }
        }
        (self.f)(request).map(|text| ChatResponse { text, truncated: false })
    }

    fn max_prompt_chars(&self) -> Option<usize> {
        self.max_prompt_chars
    }
}

/// A search hit plus the page text served for it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureDoc {
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default)]
    pub body: String,
}

/// Search provider serving fixed result lists keyed by exact query text.
#[derive(Debug, Default)]
pub struct FixtureSearch {
    results: BTreeMap<String, Vec<FixtureDoc>>,
    page_size: usize,
    fail_pages: BTreeMap<String, usize>,
    calls: AtomicUsize,
}

impl FixtureSearch {
    pub fn new() -> Self {
        Self { page_size: 10, ..Self::default() }
    }

    pub fn from_map(results: BTreeMap<String, Vec<FixtureDoc>>) -> Self {
        Self { results, ..Self::new() }
    }

    pub fn insert(&mut self, query_text: impl Into<String>, docs: Vec<FixtureDoc>) {
        self.results.insert(query_text.into(), docs);
    }

    /// Pages at or beyond `page` fail with a transport error for this query.
    pub fn fail_from_page(mut self, query_text: &str, page: usize) -> Self {
        self.fail_pages.insert(query_text.into(), page);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl SearchProvider for FixtureSearch {
    fn id(&self) -> String {
        "fixture".into()
    }

    fn page_size(&self) -> usize {
        self.page_size
    }

    fn search_page(&self, query: &str, page: usize, page_size: usize) -> Result<Vec<SearchHit>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if self.fail_pages.get(query).is_some_and(|&p| page >= p) {
            return Err(ProviderError::Transport(format!("fixture outage on page {page}")));
        }
        let docs = self.results.get(query).map_or(&[][..], Vec::as_slice);
        Ok(docs
            .iter()
            .skip(page * page_size)
            .take(page_size)
            .map(|d| SearchHit { url: d.url.clone(), title: d.title.clone(), snippet: d.snippet.clone() })
            .collect())
    }

    fn fetch_body(&self, url: &str) -> Result<String, ProviderError> {
        Ok(self.results.values().flatten().find(|d| d.url == url).map(|d| d.body.clone()).unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    /// Text after the cue up to the end of its sentence.
    AfterCue(String),
    /// The first sentence mentioning the quoted subject of the question.
    SubjectSentence,
}

/// Extractive QA stand-in driven by simple string rules.
#[derive(Debug)]
pub struct RuleExtractor {
    rule: Rule,
    score: f64,
    max_context_chars: usize,
}

impl RuleExtractor {
    pub fn after_cue(cue: &str) -> Self {
        Self { rule: Rule::AfterCue(cue.to_string()), score: 1.0, max_context_chars: usize::MAX }
    }

    pub fn subject_sentence() -> Self {
        Self { rule: Rule::SubjectSentence, score: 1.0, max_context_chars: usize::MAX }
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = score;
        self
    }

    pub fn with_max_context_chars(mut self, limit: usize) -> Self {
        self.max_context_chars = limit;
        self
    }
}

fn sentence_end(text: &str, from: usize) -> usize {
    let rest = &text[from..];
    let mut chars = rest.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '\n' {
            return from + i;
        }
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|(_, n)| n.is_whitespace()) {
            return from + i;
        }
    }
    text.len()
}

impl ExtractionProvider for RuleExtractor {
    fn id(&self) -> String {
        match &self.rule {
            Rule::AfterCue(cue) => format!("rule:after:{cue}"),
            Rule::SubjectSentence => "rule:subject".into(),
        }
    }

    fn max_context_chars(&self) -> usize {
        self.max_context_chars
    }

    fn extract(&self, question: &str, context: &str) -> Result<Option<Span>, ProviderError> {
        let (start, end) = match &self.rule {
            Rule::AfterCue(cue) => {
                let Some(at) = context.find(cue.as_str()) else { return Ok(None) };
                let start = at + cue.len();
                let start = start + (context[start..].len() - context[start..].trim_start().len());
                (start, sentence_end(context, start))
            }
            Rule::SubjectSentence => {
                let Some(subject) = between(question, "\"", "\"") else { return Ok(None) };
                let lower = context.to_lowercase();
                if lower.len() != context.len() {
                    return Ok(None);
                }
                let Some(at) = lower.find(&subject.to_lowercase()) else { return Ok(None) };
                let start = context[..at]
                    .rfind(['.', '!', '?', '\n'])
                    .map_or(0, |i| i + 1);
                let start = start + (context[start..].len() - context[start..].trim_start().len());
                let end = sentence_end(context, at);
                (start, (end + 1).min(context.len()))
            }
        };
        let answer = context[start..end].trim_end();
        if answer.is_empty() {
            return Ok(None);
        }
        Ok(Some(Span { answer: answer.to_string(), start, score: self.score }))
    }
}

type ExtractFn = dyn Fn(&str, &str) -> Result<Option<Span>, ProviderError> + Send + Sync;

/// Extraction provider backed by a closure.
pub struct FnExtractor {
    f: Box<ExtractFn>,
    calls: AtomicUsize,
}

impl std::fmt::Debug for FnExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnExtractor").field("calls", &self.calls()).finish()
    }
}

impl FnExtractor {
    pub fn new(f: impl Fn(&str, &str) -> Result<Option<Span>, ProviderError> + Send + Sync + 'static) -> Self {
        Self { f: Box::new(f), calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ExtractionProvider for FnExtractor {
    fn id(&self) -> String {
        "fn".into()
    }

    fn extract(&self, question: &str, context: &str) -> Result<Option<Span>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.f)(question, context)
    }
}
