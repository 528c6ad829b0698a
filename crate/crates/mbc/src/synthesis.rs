//! Background-check generation: initial draft plus one expansion round per
//! query item that yields evidence.

use mbc_core::document::parse_mbc_response;
use mbc_core::exclusion::{apply_exclusions, host_of};
use mbc_core::prompts::{self, TemplateId};
use mbc_core::query::{build_query_plan, QueryConfig};
use mbc_core::ExclusionRules;
use serde::{Deserialize, Serialize};

use crate::error::{Error, PipelineFailure, Result, Stage};
use crate::extraction::{distill, ExtractionConfig, QAPair};
use crate::providers::{SamplingParams, Toolkit};
use crate::retrieval::{self, DEFAULT_K};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt: String,
    pub request_id: String,
    pub response_id: String,
    pub params: SamplingParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query_label: Option<String>,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbcDraft {
    pub source_name: String,
    pub body: String,
    pub revision: usize,
    pub provenance: Vec<QAPair>,
    pub transcript: Vec<TranscriptEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// One update call per query item with all of its pairs.
    #[default]
    PerQuery,
    /// One update call per pair; the round still counts as one revision.
    PerPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub retrieval: bool,
    pub k: usize,
    pub strict: bool,
    pub batch_mode: BatchMode,
    pub extraction: ExtractionConfig,
    pub exclusions: ExclusionRules,
    pub queries: QueryConfig,
    pub generation: SamplingParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            retrieval: true,
            k: DEFAULT_K,
            strict: false,
            batch_mode: BatchMode::default(),
            extraction: ExtractionConfig::default(),
            exclusions: ExclusionRules::default(),
            queries: QueryConfig::default(),
            generation: SamplingParams::default(),
        }
    }
}

struct Reply {
    body: String,
    entry: TranscriptEntry,
    warnings: Vec<String>,
}

fn call(
    tk: &Toolkit,
    prompt: &prompts::PromptMessages,
    params: SamplingParams,
    strict: bool,
    query_label: Option<&str>,
) -> std::result::Result<Reply, String> {
    let exchange = tk.gateway.chat_prompt(tk.chat.as_ref(), &tk.model, prompt, params, 0).map_err(|e| e.to_string())?;
    let name = prompt.template.name();
    let parsed = parse_mbc_response(&exchange.response.text, strict).map_err(|e| e.to_string())?;
    let mut warnings = Vec::new();
    if !parsed.marker_found {
        warnings.push(format!("{name} response carried no background-check marker; kept whole text"));
    }
    if exchange.response.truncated {
        warnings.push(format!("{name} response was truncated by the provider"));
    }
    Ok(Reply {
        body: parsed.body,
        entry: TranscriptEntry {
            prompt: name.to_string(),
            request_id: exchange.request_hash,
            response_id: exchange.response_hash,
            params,
            query_label: query_label.map(str::to_string),
            truncated: exchange.response.truncated,
        },
        warnings,
    })
}

pub fn generate_initial(source_name: &str, tk: &Toolkit, params: SamplingParams, strict: bool) -> Result<MbcDraft> {
    let prompt = prompts::render(TemplateId::Initial, &[(prompts::SOURCE_NAME, source_name)])?;
    let reply = call(tk, &prompt, params, strict, None).map_err(Error::Generation)?;
    Ok(MbcDraft {
        source_name: source_name.to_string(),
        body: reply.body,
        revision: 0,
        provenance: Vec::new(),
        transcript: vec![reply.entry],
        warnings: reply.warnings,
    })
}

/// `Q: <question>` / `A: <answer> (source: <domain>)` lines.
pub fn format_pairs(batch: &[QAPair]) -> String {
    batch
        .iter()
        .map(|p| {
            let domain = host_of(&p.source_url).unwrap_or_else(|| p.source_url.clone());
            format!("Q: {}\nA: {} (source: {domain})", p.question, p.answer)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_update(source_name: &str, previous: &str, batch: &[QAPair]) -> Result<prompts::PromptMessages> {
    let pairs = format_pairs(batch);
    Ok(prompts::render(
        TemplateId::Update,
        &[(prompts::SOURCE_NAME, source_name), (prompts::PREVIOUS_CHECK, previous), (prompts::QA_PAIRS, &pairs)],
    )?)
}

/// Applies `batch` to `draft`, splitting it in halves while the rendered
/// prompt exceeds the provider's size limit.
fn apply(draft: &mut MbcDraft, batch: &[QAPair], tk: &Toolkit, params: SamplingParams, strict: bool) -> Result<()> {
    let prompt = render_update(&draft.source_name, &draft.body, batch)?;
    let too_big = tk.chat.max_prompt_chars().is_some_and(|limit| prompt.total_chars() > limit);
    if too_big && batch.len() > 1 {
        let (left, right) = batch.split_at(batch.len() / 2);
        apply(draft, left, tk, params, strict)?;
        return apply(draft, right, tk, params, strict);
    }
    let label = batch.first().map(|p| p.query_label.as_str());
    let reply = call(tk, &prompt, params, strict, label).map_err(Error::Expansion)?;
    draft.body = reply.body;
    draft.transcript.push(reply.entry);
    draft.warnings.extend(reply.warnings);
    Ok(())
}

pub fn expand(draft: &MbcDraft, batch: &[QAPair], tk: &Toolkit, params: SamplingParams, strict: bool) -> Result<MbcDraft> {
    expand_with(draft, batch, tk, params, strict, BatchMode::PerQuery)
}

pub fn expand_with(
    draft: &MbcDraft,
    batch: &[QAPair],
    tk: &Toolkit,
    params: SamplingParams,
    strict: bool,
    mode: BatchMode,
) -> Result<MbcDraft> {
    if batch.is_empty() {
        return Err(Error::Precondition("expansion needs at least one question-answer pair".into()));
    }
    let mut next = draft.clone();
    match mode {
        BatchMode::PerQuery => apply(&mut next, batch, tk, params, strict)?,
        BatchMode::PerPair => {
            for pair in batch {
                apply(&mut next, std::slice::from_ref(pair), tk, params, strict)?;
            }
        }
    }
    next.revision += 1;
    next.provenance.extend_from_slice(batch);
    Ok(next)
}

fn fail(source_name: &str, stage: Stage, label: Option<&str>, cause: Error, partial: Option<MbcDraft>) -> Error {
    Error::Pipeline(Box::new(PipelineFailure {
        source_name: source_name.to_string(),
        stage,
        query_label: label.map(str::to_string),
        cause,
        partial,
    }))
}

pub fn run_pipeline(source_name: &str, tk: &Toolkit, config: &PipelineConfig) -> Result<MbcDraft> {
    let plan = build_query_plan(source_name, &config.queries).map_err(|e| fail(source_name, Stage::Initial, None, e.into(), None))?;
    let mut draft = generate_initial(source_name, tk, config.generation, config.strict)
        .map_err(|e| fail(source_name, Stage::Initial, None, e, None))?;
    if !config.retrieval {
        return Ok(draft);
    }
    let (Some(search), Some(extractor)) = (&tk.search, &tk.extractor) else {
        let cause = Error::Precondition("retrieval enabled without search and extraction providers".into());
        return Err(fail(source_name, Stage::Search, None, cause, Some(draft)));
    };
    for item in &plan.items {
        let label = Some(item.label.as_str());
        let found = match retrieval::search(&tk.gateway, search.as_ref(), item, config.k) {
            Ok(found) => found,
            Err(e) => return Err(fail(source_name, Stage::Search, label, e, Some(draft))),
        };
        draft.warnings.extend(found.warnings);
        let kept = apply_exclusions(&found.results, &config.exclusions);
        let distilled = distill(&tk.gateway, extractor.as_ref(), item, &kept, config.extraction);
        draft.warnings.extend(distilled.warnings);
        if distilled.pairs.is_empty() {
            continue;
        }
        draft = match expand_with(&draft, &distilled.pairs, tk, config.generation, config.strict, config.batch_mode) {
            Ok(next) => next,
            Err(e) => return Err(fail(source_name, Stage::Expansion, label, e, Some(draft))),
        };
    }
    Ok(draft)
}
