//! Downstream question answering from a single evidence document, with and
//! without a background check for the document's source.

use mbc_core::prompts::{self, sha256_hex, PromptMessages, TemplateId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::join;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::providers::{SamplingParams, Toolkit};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceCase {
    pub question: String,
    pub document: String,
    pub domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mbc: Option<String>,
}

impl EvidenceCase {
    pub fn validate(&self) -> Result<()> {
        if self.question.trim().is_empty() {
            return Err(Error::Precondition("evidence case has an empty question".into()));
        }
        if self.document.trim().is_empty() {
            return Err(Error::Precondition("evidence case has an empty document".into()));
        }
        Ok(())
    }

    pub fn render(&self) -> Result<PromptMessages> {
        self.validate()?;
        let domain = self.domain.to_lowercase();
        let mut bindings = vec![
            (prompts::QUESTION, self.question.as_str()),
            (prompts::SOURCE_DOCUMENT, self.document.as_str()),
            (prompts::DOMAIN, domain.as_str()),
        ];
        let template = match &self.mbc {
            Some(mbc) => {
                bindings.push((prompts::BACKGROUND_CHECK, mbc.as_str()));
                TemplateId::QaWithMbc
            }
            None => TemplateId::QaWithoutMbc,
        };
        Ok(prompts::render(template, &bindings)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub prompt_hash: String,
}

pub fn answer_with_evidence(case: &EvidenceCase, tk: &Toolkit, params: SamplingParams) -> Result<Answer> {
    let prompt = case.render()?;
    let exchange = tk
        .gateway
        .chat_prompt(tk.chat.as_ref(), &tk.model, &prompt, params, 0)
        .map_err(|e| Error::Generation(e.to_string()))?;
    Ok(Answer { text: exchange.response.text, prompt_hash: sha256_hex(prompt.to_transcript().as_bytes()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Without,
    With,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub question: String,
    pub domain: String,
    pub answer_without: Answer,
    pub answer_with: Answer,
    pub order_seed: u64,
    /// Blinded presentation order for annotation.
    pub presented: [Variant; 2],
}

pub fn presentation_order(seed: u64) -> [Variant; 2] {
    if ChaCha8Rng::seed_from_u64(seed).random_bool(0.5) {
        [Variant::With, Variant::Without]
    } else {
        [Variant::Without, Variant::With]
    }
}

pub fn build_comparison(case_base: &EvidenceCase, mbc: &str, tk: &Toolkit, params: SamplingParams, seed: u64) -> Result<Comparison> {
    if case_base.mbc.is_some() {
        return Err(Error::Precondition("comparison base case must not carry a background check".into()));
    }
    let with_case = EvidenceCase { mbc: Some(mbc.to_string()), ..case_base.clone() };
    let (without, with) = join(|| answer_with_evidence(case_base, tk, params), || answer_with_evidence(&with_case, tk, params));
    let label = |variant: &'static str| move |e: Error| Error::Answer { variant, source: Box::new(e) };
    Ok(Comparison {
        question: case_base.question.clone(),
        domain: case_base.domain.to_lowercase(),
        answer_without: without.map_err(label("without"))?,
        answer_with: with.map_err(label("with"))?,
        order_seed: seed,
        presented: presentation_order(seed),
    })
}
