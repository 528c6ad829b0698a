//! Prompt assets and byte-exact placeholder substitution.
//!
//! Each asset under `prompts/` is a sequence of messages introduced by a
//! `### <role>` line. Placeholders are `{name}`, where the name is made of
//! letters, spaces and hyphens. Substitution is single-pass: bound values are
//! never rescanned, so braces inside a value are left alone.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SOURCE_NAME: &str = "source name";
pub const PREVIOUS_CHECK: &str = "Previous background check";
pub const QA_PAIRS: &str = "Question-answer pairs";
pub const HYPOTHESIS: &str = "hypothesis";
pub const PREMISE: &str = "premise";
pub const TEMPLATE: &str = "template";
pub const GOLD_CHECK: &str = "gold background check";
pub const QUESTION: &str = "question";
pub const SOURCE_DOCUMENT: &str = "source document";
pub const DOMAIN: &str = "domain name of source document";
pub const BACKGROUND_CHECK: &str = "background check";

/// Marker for a blank in fact templates.
pub const BLANK: char = '_';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Initial,
    Update,
    Entailment,
    FillIn,
    QaWithoutMbc,
    QaWithMbc,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        TemplateId::Initial,
        TemplateId::Update,
        TemplateId::Entailment,
        TemplateId::FillIn,
        TemplateId::QaWithoutMbc,
        TemplateId::QaWithMbc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::Initial => "initial",
            TemplateId::Update => "update",
            TemplateId::Entailment => "entailment",
            TemplateId::FillIn => "fill_in",
            TemplateId::QaWithoutMbc => "qa_without_mbc",
            TemplateId::QaWithMbc => "qa_with_mbc",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, PromptError> {
        Self::ALL.into_iter().find(|t| t.name() == name).ok_or_else(|| PromptError::UnknownTemplate(name.to_owned()))
    }

    pub fn asset(self) -> &'static str {
        match self {
            TemplateId::Initial => include_str!("../prompts/initial.txt"),
            TemplateId::Update => include_str!("../prompts/update.txt"),
            TemplateId::Entailment => include_str!("../prompts/entailment.txt"),
            TemplateId::FillIn => include_str!("../prompts/fill_in.txt"),
            TemplateId::QaWithoutMbc => include_str!("../prompts/qa_without_mbc.txt"),
            TemplateId::QaWithMbc => include_str!("../prompts/qa_with_mbc.txt"),
        }
    }

    /// SHA-256 the shipped asset must hash to.
    pub fn pinned_checksum(self) -> &'static str {
        match self {
            TemplateId::Initial => "29a81bd6557e47bf0ffeb8d0da1a567d4b03497082729e6ec75b1bb50d07ab13",
            TemplateId::Update => "7a544787064bd511df78d1ab8a5fc947ef48f69d6e28d10a2eec51a7a1b67a9f",
            TemplateId::Entailment => "50d0514e651cb469210c1ad3dc66857fb6bb5f376167a186caf647f71f988513",
            TemplateId::FillIn => "746e5f55c0d7f2519e34ad8ad4213a80559f4e61bf440581c4271de3bb450c0f",
            TemplateId::QaWithoutMbc => "fb6ffebc891a5fae2cd80f09042a347fd6f323e279b647c42b6f5dcf4863bdea",
            TemplateId::QaWithMbc => "4878fb6fdfe5293823842173f67e7862aff6e75b76246c0e89c5f1d81edb1528",
        }
    }
}

pub const FACT_TEMPLATES_ASSET: &str = include_str!("../templates/atomic_facts.txt");
pub const FACT_TEMPLATES_CHECKSUM: &str = "39090e6e3ad01fb0ebb0d7e55cce791f1f81e3a4863960c17b65eae226e1ea46";
pub const FACT_TEMPLATE_COUNT: usize = 42;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
    #[error("no binding for placeholder `{{{0}}}`")]
    MissingBinding(String),
    #[error("malformed prompt asset: {0}")]
    MalformedAsset(String),
    #[error("checksum mismatch for asset `{name}`: expected {expected}, found {found}")]
    Checksum { name: String, expected: String, found: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptMessages {
    pub template: TemplateId,
    pub messages: Vec<Message>,
}

impl PromptMessages {
    /// Plain-text transcript, the format used by golden files.
    pub fn to_transcript(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            let role = match m.role {
                Role::System => "system",
                Role::User => "user",
                Role::Assistant => "assistant",
            };
            let _ = writeln!(out, "### {role}");
            out.push_str(&m.content);
            out.push('\n');
        }
        out
    }

    pub fn total_chars(&self) -> usize {
        self.messages.iter().map(|m| m.content.chars().count()).sum()
    }

    pub fn last_user(&self) -> Option<&str> {
        self.messages.iter().rev().find(|m| m.role == Role::User).map(|m| m.content.as_str())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Verifies every shipped asset against its pinned checksum.
pub fn verify_assets() -> Result<(), PromptError> {
    let mut assets: Vec<(&str, &str, &str)> =
        TemplateId::ALL.iter().map(|t| (t.name(), t.asset(), t.pinned_checksum())).collect();
    assets.push(("atomic_facts", FACT_TEMPLATES_ASSET, FACT_TEMPLATES_CHECKSUM));
    for (name, body, expected) in assets {
        let found = sha256_hex(body.as_bytes());
        if found != expected {
            return Err(PromptError::Checksum { name: name.to_owned(), expected: expected.to_owned(), found });
        }
    }
    Ok(())
}

/// `(asset name, sha256)` for every shipped asset, embedded in run outputs.
pub fn asset_checksums() -> Vec<(&'static str, String)> {
    let mut out: Vec<(&'static str, String)> =
        TemplateId::ALL.iter().map(|t| (t.name(), sha256_hex(t.asset().as_bytes()))).collect();
    out.push(("atomic_facts", sha256_hex(FACT_TEMPLATES_ASSET.as_bytes())));
    out
}

fn parse_asset(asset: &str) -> Result<Vec<(Role, String)>, PromptError> {
    let mut out: Vec<(Role, String)> = Vec::new();
    let mut current: Option<(Role, Vec<&str>)> = None;
    for line in asset.lines() {
        if let Some(role) = line.strip_prefix("### ") {
            if let Some((r, lines)) = current.take() {
                out.push((r, lines.join("\n")));
            }
            let role = match role.trim() {
                "system" => Role::System,
                "user" => Role::User,
                "assistant" => Role::Assistant,
                other => return Err(PromptError::MalformedAsset(alloc::format!("unknown role `{other}`"))),
            };
            current = Some((role, Vec::new()));
        } else if let Some((_, lines)) = current.as_mut() {
            lines.push(line);
        } else if !line.is_empty() {
            return Err(PromptError::MalformedAsset("text before the first role header".into()));
        }
    }
    if let Some((r, lines)) = current {
        out.push((r, lines.join("\n")));
    }
    match out.first() {
        Some((Role::System, _)) => Ok(out),
        _ => Err(PromptError::MalformedAsset("first message must be the system message".into())),
    }
}

fn is_placeholder_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphabetic() || c == ' ' || c == '-')
}

/// Placeholder names used by a piece of template text, in order of first use.
pub fn placeholders(text: &str) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_placeholder_name(&after[..close]) => {
                let name = &after[..close];
                if !out.contains(&name) {
                    out.push(name);
                }
                rest = &after[close + 1..];
            }
            _ => rest = after,
        }
    }
    out
}

/// Substitutes `{name}` placeholders in `text` from `bindings`.
pub fn substitute(text: &str, bindings: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) if is_placeholder_name(&after[..close]) => {
                let name = &after[..close];
                let value = bindings
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| PromptError::MissingBinding(name.to_owned()))?;
                out.push_str(value);
                rest = &after[close + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

pub fn render(template: TemplateId, bindings: &[(&str, &str)]) -> Result<PromptMessages, PromptError> {
    let messages = parse_asset(template.asset())?
        .into_iter()
        .map(|(role, body)| Ok(Message { role, content: substitute(&body, bindings)? }))
        .collect::<Result<Vec<_>, PromptError>>()?;
    Ok(PromptMessages { template, messages })
}

pub fn render_by_name(name: &str, bindings: &[(&str, &str)]) -> Result<PromptMessages, PromptError> {
    render(TemplateId::from_name(name)?, bindings)
}

/// One of the fixed atomic-fact templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactTemplate {
    /// 1-based position in the shipped list.
    pub id: usize,
    pub pattern: String,
}

impl FactTemplate {
    /// The pattern with the source name filled in and blanks left open.
    pub fn for_source(&self, source_name: &str) -> String {
        self.pattern.replace("{source name}", source_name)
    }

    pub fn blanks(&self) -> usize {
        self.pattern.matches(BLANK).count()
    }
}

pub fn fact_templates() -> Vec<FactTemplate> {
    FACT_TEMPLATES_ASSET
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| FactTemplate { id: i + 1, pattern: l.to_owned() })
        .collect()
}
