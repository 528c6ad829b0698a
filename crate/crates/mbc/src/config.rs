//! Run configuration: defaults, environment, TOML file and flag layering,
//! validation, canonical hashing and provider construction.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use mbc_core::prompts::sha256_hex;
use mbc_core::query::{ExtraQuery, QueryConfig};
use mbc_core::scoring::RecallMode;
use mbc_core::ExclusionRules;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cache::{canonical_json, Cache};
use crate::error::{Error, Result};
use crate::evaluation::{Assessor, ChatJudge, OracleJudge};
use crate::extraction::ExtractionConfig;
use crate::providers::http::{HttpChat, HttpExtractor, HttpSearch, DEFAULT_CHAT_ENDPOINT, DEFAULT_SEARCH_ENDPOINT};
use crate::providers::mock::{FixtureDoc, FixtureSearch, OfflineChat, RuleExtractor};
use crate::providers::{ChatProvider, ExtractionProvider, Gateway, SamplingParams, SearchProvider, Toolkit};
use crate::synthesis::{BatchMode, PipelineConfig};
use crate::throttle::{RateLimiter, RetryPolicy};

pub const ENV_CHAT_KEY: &str = "MBC_CHAT_KEY";
pub const ENV_CHAT_ENDPOINT: &str = "MBC_CHAT_ENDPOINT";
pub const ENV_SEARCH_KEY: &str = "MBC_SEARCH_KEY";
pub const ENV_SEARCH_ENDPOINT: &str = "MBC_SEARCH_ENDPOINT";
pub const ENV_SEARCH_ENGINE: &str = "MBC_SEARCH_ENGINE_ID";
pub const ENV_QA_KEY: &str = "MBC_QA_KEY";
pub const ENV_QA_ENDPOINT: &str = "MBC_QA_ENDPOINT";
pub const ENV_CACHE_DIR: &str = "MBC_CACHE_DIR";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatKind {
    #[default]
    Offline,
    Http,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeKind {
    #[default]
    Oracle,
    Chat,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    #[default]
    None,
    Fixture,
    Http,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    #[default]
    Rule,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChatSettings {
    pub provider: ChatKind,
    pub model: String,
    pub endpoint: Option<String>,
    pub temperature: Option<f64>,
    pub max_prompt_chars: Option<usize>,
    pub timeout_secs: u64,
    /// JSON object mapping source names to the offline provider's initial bodies.
    pub prior: Option<PathBuf>,
}

impl Default for ChatSettings {
    fn default() -> Self {
        Self {
            provider: ChatKind::Offline,
            model: "gpt-4".into(),
            endpoint: None,
            temperature: None,
            max_prompt_chars: None,
            timeout_secs: 120,
            prior: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeSettings {
    pub provider: JudgeKind,
    /// Defaults to the chat model.
    pub model: Option<String>,
    pub temperature: f64,
}

impl Default for JudgeSettings {
    fn default() -> Self {
        Self { provider: JudgeKind::Oracle, model: None, temperature: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    pub provider: SearchKind,
    /// JSON object mapping query text to result lists.
    pub fixtures: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub engine_id: Option<String>,
    pub fetch_bodies: bool,
    pub k: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { provider: SearchKind::None, fixtures: None, endpoint: None, engine_id: None, fetch_bodies: true, k: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSettings {
    pub provider: ExtractorKind,
    /// `subject` or `after:<cue>` for the rule provider.
    pub rule: String,
    pub endpoint: Option<String>,
    pub threshold: f64,
    pub cap: usize,
    pub max_context_chars: usize,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            provider: ExtractorKind::Rule,
            rule: "subject".into(),
            endpoint: None,
            threshold: 0.5,
            cap: 8,
            max_context_chars: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub chat: ChatSettings,
    pub judge: JudgeSettings,
    pub search: SearchSettings,
    pub extraction: ExtractionSettings,
    pub retrieval: bool,
    pub batch_mode: BatchMode,
    pub strict: bool,
    pub recall_gold_true_only: bool,
    pub exclusions: ExclusionRules,
    pub extra_queries: Vec<ExtraQuery>,
    pub cache_dir: Option<PathBuf>,
    pub workers: usize,
    pub seed: u64,
    /// Outbound calls per second across all providers; 0 disables pacing.
    pub requests_per_second: f64,
    pub retry_attempts: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chat: ChatSettings::default(),
            judge: JudgeSettings::default(),
            search: SearchSettings::default(),
            extraction: ExtractionSettings::default(),
            retrieval: true,
            batch_mode: BatchMode::PerQuery,
            strict: false,
            recall_gold_true_only: false,
            exclusions: ExclusionRules::default(),
            extra_queries: Vec::new(),
            cache_dir: None,
            workers: 4,
            seed: 0,
            requests_per_second: 0.0,
            retry_attempts: 3,
        }
    }
}

/// Values given on the command line; `None` leaves the layered value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub retrieval: Option<bool>,
    pub strict: Option<bool>,
    pub batch_mode: Option<BatchMode>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub cap: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub recall_gold_true_only: Option<bool>,
    pub judge: Option<JudgeKind>,
}

fn merge(base: &mut Value, layer: Value) {
    match (base, layer) {
        (Value::Object(b), Value::Object(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn set_path(root: &mut Value, path: &[&str], value: Value) {
    let mut node = root;
    for key in &path[..path.len() - 1] {
        node = &mut node[*key];
    }
    node[path[path.len() - 1]] = value;
}

impl RunConfig {
    /// Layers defaults < environment < config file < flags.
    pub fn resolve(file: Option<&Path>, env: impl Fn(&str) -> Option<String>, flags: &Overrides) -> Result<Self> {
        let mut value = serde_json::to_value(RunConfig::default()).expect("config serializes");
        let env_paths: [(&str, &[&str]); 5] = [
            (ENV_CACHE_DIR, &["cache_dir"]),
            (ENV_CHAT_ENDPOINT, &["chat", "endpoint"]),
            (ENV_SEARCH_ENDPOINT, &["search", "endpoint"]),
            (ENV_SEARCH_ENGINE, &["search", "engine_id"]),
            (ENV_QA_ENDPOINT, &["extraction", "endpoint"]),
        ];
        for (var, path) in env_paths {
            if let Some(v) = env(var).filter(|v| !v.is_empty()) {
                set_path(&mut value, path, Value::String(v));
            }
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
            let table: toml::Table =
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            for secret in ["key", "api_key", "token"] {
                let found = table.contains_key(secret) || table.values().any(|v| v.as_table().is_some_and(|t| t.contains_key(secret)));
                if found {
                    return Err(Error::Config(format!(
                        "{}: credentials belong in {ENV_CHAT_KEY}/{ENV_SEARCH_KEY}/{ENV_QA_KEY}, not the config file",
                        path.display()
                    )));
                }
            }
            let layer = serde_json::to_value(table).map_err(|e| Error::Config(e.to_string()))?;
            merge(&mut value, layer);
        }
        let mut config: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.apply(flags);
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.retrieval {
            self.retrieval = v;
        }
        if let Some(v) = o.strict {
            self.strict = v;
        }
        if let Some(v) = o.batch_mode {
            self.batch_mode = v;
        }
        if let Some(v) = o.k {
            self.search.k = v;
        }
        if let Some(v) = o.threshold {
            self.extraction.threshold = v;
        }
        if let Some(v) = o.cap {
            self.extraction.cap = v;
        }
        if let Some(v) = &o.cache_dir {
            self.cache_dir = Some(v.clone());
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.recall_gold_true_only {
            self.recall_gold_true_only = v;
        }
        if let Some(v) = o.judge {
            self.judge.provider = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.search.k == 0 || self.search.k > 100 {
            return bad(format!("k must be within 1..=100, got {}", self.search.k));
        }
        if !(0.0..=1.0).contains(&self.extraction.threshold) {
            return bad(format!("threshold must be within [0, 1], got {}", self.extraction.threshold));
        }
        if self.extraction.cap == 0 {
            return bad("per-query cap must be at least 1".into());
        }
        if self.extraction.max_context_chars == 0 {
            return bad("max_context_chars must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.retry_attempts == 0 {
            return bad("retry_attempts must be at least 1".into());
        }
        if !(self.requests_per_second >= 0.0 && self.requests_per_second.is_finite()) {
            return bad(format!("requests_per_second must be a non-negative number, got {}", self.requests_per_second));
        }
        if !(self.judge.temperature >= 0.0 && self.judge.temperature.is_finite()) {
            return bad(format!("judge temperature must be non-negative, got {}", self.judge.temperature));
        }
        if self.chat.model.trim().is_empty() {
            return bad("chat model must be set".into());
        }
        if !self.extraction.rule.eq_ignore_ascii_case("subject") && !self.extraction.rule.starts_with("after:") {
            return bad(format!("extraction rule must be `subject` or `after:<cue>`, got `{}`", self.extraction.rule));
        }
        Ok(())
    }

    /// Canonical JSON of every setting that can change outputs.
    pub fn canonical(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut value {
            map.remove("cache_dir");
            map.remove("workers");
        }
        canonical_json(&value)
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.canonical().as_bytes())
    }

    pub fn recall_mode(&self) -> RecallMode {
        if self.recall_gold_true_only {
            RecallMode::GoldTrueOnly
        } else {
            RecallMode::AllKept
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            retrieval: self.retrieval,
            k: self.search.k,
            strict: self.strict,
            batch_mode: self.batch_mode,
            extraction: ExtractionConfig { threshold: self.extraction.threshold, cap: self.extraction.cap },
            exclusions: self.exclusions.clone(),
            queries: QueryConfig { extra: self.extra_queries.clone() },
            generation: SamplingParams { temperature: self.chat.temperature, ..SamplingParams::default() },
        }
    }

    pub fn gateway(&self) -> Gateway {
        let cache = match &self.cache_dir {
            Some(dir) => Cache::dir(dir),
            None => Cache::memory(),
        };
        Gateway {
            cache,
            limiter: Arc::new(RateLimiter::new(self.requests_per_second)),
            retry: RetryPolicy { attempts: self.retry_attempts, ..RetryPolicy::default() },
        }
    }

    /// Builds the configured providers; credentials are read from `env` here
    /// and nowhere else.
    pub fn toolkit(&self, env: impl Fn(&str) -> Option<String>) -> Result<Toolkit> {
        let timeout = Duration::from_secs(self.chat.timeout_secs.max(1));
        let chat: Arc<dyn ChatProvider> = match self.chat.provider {
            ChatKind::Offline => {
                let mut chat = OfflineChat::new();
                if let Some(path) = &self.chat.prior {
                    for (name, body) in read_json_file::<BTreeMap<String, String>>(path)? {
                        chat = chat.with_prior(name, body);
                    }
                }
                Arc::new(chat)
            }
            ChatKind::Http => {
                let key = require(&env, ENV_CHAT_KEY)?;
                let endpoint = self.chat.endpoint.clone().unwrap_or_else(|| DEFAULT_CHAT_ENDPOINT.into());
                Arc::new(HttpChat::new(endpoint, key, timeout).with_max_prompt_chars(self.chat.max_prompt_chars))
            }
        };
        let mut tk = Toolkit::new(chat, self.chat.model.clone()).with_gateway(self.gateway());
        if !self.retrieval {
            return Ok(tk);
        }
        let search: Arc<dyn SearchProvider> = match self.search.provider {
            SearchKind::None => {
                return Err(Error::Config("retrieval is enabled but no search provider is configured".into()));
            }
            SearchKind::Fixture => {
                let path = self.search.fixtures.as_ref().ok_or_else(|| Error::Config("search.fixtures is required".into()))?;
                Arc::new(FixtureSearch::from_map(read_json_file::<BTreeMap<String, Vec<FixtureDoc>>>(path)?))
            }
            SearchKind::Http => {
                let key = require(&env, ENV_SEARCH_KEY)?;
                let engine = self
                    .search
                    .engine_id
                    .clone()
                    .ok_or_else(|| Error::Config(format!("search.engine_id (or {ENV_SEARCH_ENGINE}) is required")))?;
                let endpoint = self.search.endpoint.clone().unwrap_or_else(|| DEFAULT_SEARCH_ENDPOINT.into());
                Arc::new(HttpSearch::new(endpoint, key, engine, timeout).with_body_fetch(self.search.fetch_bodies))
            }
        };
        let extractor: Arc<dyn ExtractionProvider> = match self.extraction.provider {
            ExtractorKind::Rule => {
                let rule = match self.extraction.rule.strip_prefix("after:") {
                    Some(cue) => RuleExtractor::after_cue(cue),
                    None => RuleExtractor::subject_sentence(),
                };
                Arc::new(rule.with_max_context_chars(self.extraction.max_context_chars))
            }
            ExtractorKind::Http => {
                let endpoint = self
                    .extraction
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config(format!("extraction.endpoint (or {ENV_QA_ENDPOINT}) is required")))?;
                let key = env(ENV_QA_KEY).filter(|k| !k.is_empty());
                Arc::new(HttpExtractor::new(endpoint, key, timeout, self.extraction.max_context_chars))
            }
        };
        tk = tk.with_retrieval(search, extractor);
        Ok(tk)
    }

    pub fn assessor(&self, tk: &Toolkit) -> Arc<dyn Assessor> {
        match self.judge.provider {
            JudgeKind::Oracle => Arc::new(OracleJudge),
            JudgeKind::Chat => {
                let model = self.judge.model.clone().unwrap_or_else(|| tk.model.clone());
                let mut judge = ChatJudge::new(tk.chat.clone(), model, tk.gateway.clone());
                judge.temperature = self.judge.temperature;
                Arc::new(judge)
            }
        }
    }
}

fn require(env: &impl Fn(&str) -> Option<String>, var: &str) -> Result<String> {
    env(var).filter(|v| !v.is_empty()).ok_or_else(|| Error::Config(format!("{var} is not set")))
}

fn read_json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn process_env(var: &str) -> Option<String> {
    std::env::var(var).ok()
}
