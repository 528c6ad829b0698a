//! Atomic-fact evaluation of generated checks against gold references.

use std::sync::Arc;

use mbc_core::lexmetrics::{meteor, rouge_l};
use mbc_core::oracle;
use mbc_core::prompts::{self, fact_templates, TemplateId, BLANK};
use mbc_core::scoring::{self, CorpusSummary, RecallMode};
use mbc_core::verdict::{parse_verdict, Label, VOTES_PER_VERDICT};
use mbc_core::{BackgroundCheck, EntailmentVotes};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::providers::{ChatProvider, Gateway, SamplingParams};

pub const DEFAULT_JUDGE_TEMPERATURE: f64 = 1.0;

/// Labels a statement against a premise; failures are absorbed as NEI votes.
pub trait EntailmentJudge: Send + Sync {
    fn id(&self) -> String;
    fn judge(&self, premise: &str, statement: &str) -> EntailmentVotes;
}

/// Fills the blanks of a fact template from a gold text.
pub trait BlankFiller: Send + Sync {
    fn fill(&self, template: &str, gold_text: &str) -> std::result::Result<String, String>;
}

/// A judge that can also fill templates.
pub trait Assessor: EntailmentJudge + BlankFiller {}

impl<T: EntailmentJudge + BlankFiller> Assessor for T {}

/// Deterministic judge and filler built on sentence-level token matching.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleJudge;

impl EntailmentJudge for OracleJudge {
    fn id(&self) -> String {
        "oracle".into()
    }

    fn judge(&self, premise: &str, statement: &str) -> EntailmentVotes {
        EntailmentVotes::unanimous(oracle::judge(premise, statement), "oracle")
    }
}

impl BlankFiller for OracleJudge {
    fn fill(&self, template: &str, gold_text: &str) -> std::result::Result<String, String> {
        Ok(oracle::fill_blanks(template, gold_text).unwrap_or_else(|| template.to_string()))
    }
}

/// Chat-model judge: four sampled runs of the entailment prompt, majority-voted.
#[derive(Clone)]
pub struct ChatJudge {
    pub chat: Arc<dyn ChatProvider>,
    pub model: String,
    pub temperature: f64,
    pub gateway: Gateway,
}

impl std::fmt::Debug for ChatJudge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatJudge").field("chat", &self.chat.id()).field("model", &self.model).finish()
    }
}

impl ChatJudge {
    pub fn new(chat: Arc<dyn ChatProvider>, model: impl Into<String>, gateway: Gateway) -> Self {
        Self { chat, model: model.into(), temperature: DEFAULT_JUDGE_TEMPERATURE, gateway }
    }
}

impl EntailmentJudge for ChatJudge {
    fn id(&self) -> String {
        format!("chat:{}:{}", self.chat.id(), self.model)
    }

    fn judge(&self, premise: &str, statement: &str) -> EntailmentVotes {
        let prompt = match prompts::render(TemplateId::Entailment, &[(prompts::HYPOTHESIS, statement), (prompts::PREMISE, premise)]) {
            Ok(p) => p,
            Err(e) => return EntailmentVotes::unanimous(Label::Nei, &format!("error: {e}")),
        };
        let params = SamplingParams::with_temperature(self.temperature);
        let runs: Vec<(Label, String)> = (0..VOTES_PER_VERDICT as u32)
            .into_par_iter()
            .map(|sample| match self.gateway.chat_prompt(self.chat.as_ref(), &self.model, &prompt, params, sample) {
                Ok(x) => (parse_verdict(&x.response.text), x.response.text),
                Err(e) => (Label::Nei, format!("error: {e}")),
            })
            .collect();
        let (votes, rationales) = runs.into_iter().unzip();
        EntailmentVotes::from_votes(votes, rationales)
    }
}

impl BlankFiller for ChatJudge {
    fn fill(&self, template: &str, gold_text: &str) -> std::result::Result<String, String> {
        let prompt = prompts::render(TemplateId::FillIn, &[(prompts::TEMPLATE, template), (prompts::GOLD_CHECK, gold_text)])
            .map_err(|e| e.to_string())?;
        self.gateway
            .chat_prompt(self.chat.as_ref(), &self.model, &prompt, SamplingParams::default(), 0)
            .map(|x| x.response.text)
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicFact {
    pub template_id: usize,
    pub statement: String,
    pub gold_verdict: EntailmentVotes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discarded {
    pub template_id: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Instantiation {
    pub facts: Vec<AtomicFact>,
    pub discarded: Vec<Discarded>,
    pub warnings: Vec<String>,
}

/// Why a filled-in template is unusable, if it is.
pub fn reject_fill(template: &str, response: &str) -> Option<&'static str> {
    if response.is_empty() {
        Some("empty response")
    } else if response.contains(BLANK) {
        Some("unfilled blank")
    } else if response.chars().count() > 3 * template.chars().count() {
        Some("response longer than three times the template")
    } else {
        None
    }
}

enum Outcome {
    Fact(AtomicFact),
    Dropped(Discarded),
    Failed(String),
}

/// Fills all 42 templates from the gold text and keeps the statements the
/// gold text entails or contradicts.
pub fn instantiate_templates(gold: &BackgroundCheck, filler: &dyn BlankFiller, judge: &dyn EntailmentJudge) -> Instantiation {
    let premise = gold.full_text();
    let outcomes: Vec<Outcome> = fact_templates()
        .par_iter()
        .map(|t| {
            let template = t.for_source(&gold.source_name);
            let response = match filler.fill(&template, premise) {
                Ok(r) => r,
                Err(e) => return Outcome::Failed(format!("template {}: {e}", t.id)),
            };
            let statement = response.trim();
            if let Some(reason) = reject_fill(&template, statement) {
                return Outcome::Dropped(Discarded { template_id: t.id, reason: reason.into() });
            }
            let verdict = judge.judge(premise, statement);
            if verdict.label.is_decisive() {
                Outcome::Fact(AtomicFact { template_id: t.id, statement: statement.to_string(), gold_verdict: verdict })
            } else {
                Outcome::Dropped(Discarded { template_id: t.id, reason: "gold text neither entails nor contradicts".into() })
            }
        })
        .collect();
    let mut out = Instantiation::default();
    for o in outcomes {
        match o {
            Outcome::Fact(f) => out.facts.push(f),
            Outcome::Dropped(d) => out.discarded.push(d),
            Outcome::Failed(w) => {
                log::warn!("{w}");
                out.warnings.push(w);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactAudit {
    pub template_id: usize,
    pub statement: String,
    pub gold: Label,
    pub predicted: Label,
    pub gold_votes: EntailmentVotes,
    pub predicted_votes: EntailmentVotes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactScoreReport {
    pub source_name: String,
    pub n_facts: usize,
    pub fact_recall: f64,
    pub error_rate: f64,
    pub degenerate: bool,
    pub per_fact: Vec<FactAudit>,
}

impl FactScoreReport {
    pub fn score(&self) -> scoring::FactScore {
        scoring::FactScore {
            n_facts: self.n_facts,
            fact_recall: self.fact_recall,
            error_rate: self.error_rate,
            degenerate: self.degenerate,
        }
    }
}

pub fn score_pair(
    source_name: &str,
    facts: &[AtomicFact],
    predicted_body: &str,
    judge: &dyn EntailmentJudge,
    mode: RecallMode,
) -> FactScoreReport {
    let per_fact: Vec<FactAudit> = facts
        .par_iter()
        .map(|f| {
            let predicted_votes = if predicted_body.trim().is_empty() {
                EntailmentVotes::unanimous(Label::Nei, "empty prediction")
            } else {
                judge.judge(predicted_body, &f.statement)
            };
            FactAudit {
                template_id: f.template_id,
                statement: f.statement.clone(),
                gold: f.gold_verdict.label,
                predicted: predicted_votes.label,
                gold_votes: f.gold_verdict.clone(),
                predicted_votes,
            }
        })
        .collect();
    let score = scoring::score_labels(per_fact.iter().map(|a| (a.gold, a.predicted)), mode);
    FactScoreReport {
        source_name: source_name.to_string(),
        n_facts: score.n_facts,
        fact_recall: score.fact_recall,
        error_rate: score.error_rate,
        degenerate: score.degenerate,
        per_fact,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEvaluation {
    #[serde(flatten)]
    pub facts: FactScoreReport,
    pub meteor: f64,
    pub rouge_l: f64,
    pub discarded: Vec<Discarded>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn evaluate_source(
    gold: &BackgroundCheck,
    predicted_body: &str,
    filler: &dyn BlankFiller,
    judge: &dyn EntailmentJudge,
    mode: RecallMode,
) -> SourceEvaluation {
    let inst = instantiate_templates(gold, filler, judge);
    let facts = score_pair(&gold.source_name, &inst.facts, predicted_body, judge, mode);
    SourceEvaluation {
        facts,
        meteor: meteor(predicted_body, gold.full_text()),
        rouge_l: rouge_l(predicted_body, gold.full_text()),
        discarded: inst.discarded,
        warnings: inst.warnings,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub summary: CorpusSummary,
    pub meteor: Option<f64>,
    pub rouge_l: Option<f64>,
    pub sources: Vec<SourceEvaluation>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(sources: Vec<SourceEvaluation>) -> EvaluationReport {
    let scores: Vec<scoring::FactScore> = sources.iter().map(|s| s.facts.score()).collect();
    EvaluationReport {
        summary: scoring::aggregate(&scores),
        meteor: mean(sources.iter().map(|s| s.meteor)),
        rouge_l: mean(sources.iter().map(|s| s.rouge_l)),
        sources,
    }
}

/// Pairs every prediction with its gold check by source name.
pub fn match_predictions<'a>(
    gold: &'a [BackgroundCheck],
    predictions: &'a [(String, String)],
) -> Result<Vec<(&'a BackgroundCheck, &'a str)>> {
    let index: std::collections::BTreeMap<&str, &BackgroundCheck> = gold.iter().map(|g| (g.source_name.as_str(), g)).collect();
    predictions
        .iter()
        .map(|(name, body)| {
            index
                .get(name.as_str())
                .map(|g| (*g, body.as_str()))
                .ok_or_else(|| Error::Validation(format!("no gold check for predicted source `{name}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::mock::{FnChat, OfflineChat};
    use mbc_core::Section;
    use std::sync::atomic::{AtomicUsize, Ordering};

    const GOLD: &str = "Founded in 2005, Natural News is a website. Mike Adams owns naturalnews.com. \
                        The website does not rely on subscriptions for revenue.";

    fn gold() -> BackgroundCheck {
        BackgroundCheck::new("naturalnews.com", vec![Section { heading: "History".into(), body: GOLD.into() }], Default::default())
    }

    fn fact(statement: &str, label: Label) -> AtomicFact {
        AtomicFact { template_id: 1, statement: statement.into(), gold_verdict: EntailmentVotes::unanimous(label, "") }
    }

    #[test]
    fn owner_template_fills_and_is_kept() {
        let inst = instantiate_templates(&gold(), &OracleJudge, &OracleJudge);
        let owner = inst.facts.iter().find(|f| f.statement == "Mike Adams owns naturalnews.com").unwrap();
        assert_eq!(owner.gold_verdict.label, Label::True);
        assert!(inst.facts.iter().all(|f| f.gold_verdict.label.is_decisive()));
        assert_eq!(inst.facts.len() + inst.discarded.len() + inst.warnings.len(), 42);
    }

    #[test]
    fn fill_validation() {
        assert_eq!(reject_fill("_ owns X", "Unknown _ owns X"), Some("unfilled blank"));
        assert_eq!(reject_fill("_ owns X", ""), Some("empty response"));
        assert_eq!(reject_fill("_ owns X", &"a".repeat(25)), Some("response longer than three times the template"));
        assert_eq!(reject_fill("_ owns X", &"a".repeat(24)), None);
    }

    #[test]
    fn nei_gold_verdicts_are_dropped() {
        struct Nei;
        impl EntailmentJudge for Nei {
            fn id(&self) -> String {
                "nei".into()
            }
            fn judge(&self, _: &str, _: &str) -> EntailmentVotes {
                EntailmentVotes::unanimous(Label::Nei, "")
            }
        }
        let inst = instantiate_templates(&gold(), &OracleJudge, &Nei);
        assert!(inst.facts.is_empty());
    }

    #[test]
    fn chat_judge_votes_and_failures() {
        let n = Arc::new(AtomicUsize::new(0));
        let counter = n.clone();
        let chat = FnChat::new("flaky", move |r| {
            counter.fetch_add(1, Ordering::SeqCst);
            match r.sample {
                0 | 1 => Ok("Reasoning. TRUE".into()),
                2 => Ok("FALSE".into()),
                _ => Err(crate::providers::ProviderError::Transport("down".into())),
            }
        });
        let judge = ChatJudge::new(Arc::new(chat), "m", Gateway::offline());
        let v = judge.judge("premise", "claim");
        assert_eq!(v.votes, [Label::True, Label::True, Label::False, Label::Nei]);
        assert_eq!(v.label, Label::True);
        assert!(v.rationales[3].starts_with("error:"));
        // 3 successful runs plus 3 attempts for the failing one
        assert_eq!(n.load(Ordering::SeqCst), 6);
    }

    #[test]
    fn chat_judge_uses_temperature_one() {
        let chat = FnChat::new("t", |r| Ok(format!("{:?} TRUE", r.params.temperature)));
        let judge = ChatJudge::new(Arc::new(chat), "m", Gateway::offline());
        assert!(judge.judge("p", "s").rationales.iter().all(|r| r == "Some(1.0) TRUE"));
    }

    #[test]
    fn scoring_fixture() {
        let facts = [fact("a b", Label::True), fact("c d", Label::False), fact("e f", Label::True)];
        // prediction entails the first and third, says nothing on the second
        struct Fixed;
        impl EntailmentJudge for Fixed {
            fn id(&self) -> String {
                "fixed".into()
            }
            fn judge(&self, _: &str, s: &str) -> EntailmentVotes {
                EntailmentVotes::unanimous(
                    match s {
                        "a b" => Label::True,
                        "c d" => Label::True,
                        _ => Label::Nei,
                    },
                    "",
                )
            }
        }
        let r = score_pair("s", &facts, "body", &Fixed, RecallMode::AllKept);
        assert_eq!((r.fact_recall, r.error_rate), (1.0 / 3.0, 1.0 / 3.0));
        let empty = score_pair("s", &[], "body", &Fixed, RecallMode::AllKept);
        assert!(empty.degenerate);
        assert_eq!((empty.fact_recall, empty.error_rate), (0.0, 0.0));
    }

    #[test]
    fn self_agreement_with_offline_chat() {
        let chat: Arc<dyn ChatProvider> = Arc::new(OfflineChat::new());
        let judge = ChatJudge::new(chat, "m", Gateway::offline());
        let eval = evaluate_source(&gold(), GOLD, &judge, &judge, RecallMode::AllKept);
        assert!(eval.facts.n_facts > 0);
        assert_eq!((eval.facts.fact_recall, eval.facts.error_rate), (1.0, 0.0));
        assert_eq!(eval.rouge_l, 1.0);
    }

    #[test]
    fn aggregate_means() {
        let mk = |recall: f64, degenerate: bool| SourceEvaluation {
            facts: FactScoreReport {
                source_name: "s".into(),
                n_facts: usize::from(!degenerate),
                fact_recall: recall,
                error_rate: 0.0,
                degenerate,
                per_fact: vec![],
            },
            meteor: 0.5,
            rouge_l: 0.25,
            discarded: vec![],
            warnings: vec![],
        };
        let r = aggregate(vec![mk(0.0, true), mk(0.5, false)]);
        assert_eq!(r.summary.fact_recall, Some(0.5));
        assert_eq!(r.summary.degenerate, 1);
        assert_eq!(r.rouge_l, Some(0.25));
    }
}
