//! Distilling search results into question/answer evidence.

use std::collections::BTreeMap;

use mbc_core::{QueryItem, SearchResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::providers::{ExtractionProvider, Gateway};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub query_label: String,
    pub question: String,
    pub answer: String,
    pub source_url: String,
    pub rank: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub threshold: f64,
    pub cap: usize,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { threshold: 0.5, cap: 8 }
    }
}

fn head(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

/// The provider's top span for `question` in `document_text`, or `None`
/// when its score is below `threshold` or it is not a span of the text.
pub fn extract_answer(
    gateway: &Gateway,
    provider: &dyn ExtractionProvider,
    question: &str,
    document_text: &str,
    threshold: f64,
) -> Result<Option<(String, f64)>> {
    if document_text.trim().is_empty() {
        return Err(Error::Precondition("answer extraction needs a non-empty document".into()));
    }
    let context = head(document_text, provider.max_context_chars());
    let span = gateway.extract(provider, question, context).map_err(|e| Error::Extraction(e.to_string()))?;
    let Some(span) = span else { return Ok(None) };
    let score = if span.score.is_finite() { span.score.clamp(0.0, 1.0) } else { 0.0 };
    if score < threshold {
        return Ok(None);
    }
    let answer = span.answer.trim();
    if answer.is_empty() || !context.contains(answer) {
        log::warn!("discarding answer that is not a span of its document: {answer:?}");
        return Ok(None);
    }
    Ok(Some((answer.to_string(), score)))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Distilled {
    pub pairs: Vec<QAPair>,
    pub warnings: Vec<String>,
}

/// At most one pair per result, answers deduplicated case-insensitively
/// (lowest rank wins), ordered by rank and capped.
pub fn distill(
    gateway: &Gateway,
    provider: &dyn ExtractionProvider,
    item: &QueryItem,
    results: &[SearchResult],
    config: ExtractionConfig,
) -> Distilled {
    let answers: Vec<Result<Option<(String, f64)>>> = results
        .par_iter()
        .map(|r| {
            let text = r.document_text();
            if text.trim().is_empty() {
                return Ok(None);
            }
            extract_answer(gateway, provider, &item.question_text, text, config.threshold)
        })
        .collect();
    let mut out = Distilled::default();
    let mut best: BTreeMap<String, QAPair> = BTreeMap::new();
    for (result, answer) in results.iter().zip(answers) {
        let (answer, score) = match answer {
            Ok(Some(a)) => a,
            Ok(None) => continue,
            Err(e) => {
                out.warnings.push(format!("query `{}`: extraction from {} failed: {e}", item.label, result.url));
                continue;
            }
        };
        let pair = QAPair {
            query_label: item.label.clone(),
            question: item.question_text.clone(),
            answer,
            source_url: result.url.clone(),
            rank: result.rank,
            score,
        };
        let key = pair.answer.to_lowercase();
        match best.get(&key) {
            Some(kept) if kept.rank <= pair.rank => {}
            _ => {
                best.insert(key, pair);
            }
        }
    }
    let mut pairs: Vec<QAPair> = best.into_values().collect();
    pairs.sort_by_key(|p| p.rank);
    pairs.truncate(config.cap);
    out.pairs = pairs;
    out
}
