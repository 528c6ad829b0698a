//! Fact recall and error rate from (gold, predicted) label pairs.

use crate::verdict::Label;
use serde::{Deserialize, Serialize};

/// Which facts count towards the recall numerator and denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    /// Agreement over every kept fact, TRUE and FALSE alike.
    #[default]
    AllKept,
    /// Agreement over gold-TRUE facts only.
    GoldTrueOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactScore {
    pub n_facts: usize,
    pub fact_recall: f64,
    pub error_rate: f64,
    pub degenerate: bool,
}

/// Polarity flip: entailed by one text and contradicted by the other.
pub fn is_flip(gold: Label, pred: Label) -> bool {
    matches!((gold, pred), (Label::True, Label::False) | (Label::False, Label::True))
}

pub fn score_labels<I>(pairs: I, mode: RecallMode) -> FactScore
where
    I: IntoIterator<Item = (Label, Label)>,
{
    let mut n = 0usize;
    let mut agree = 0usize;
    let mut flips = 0usize;
    let mut gold_true = 0usize;
    let mut gold_true_agree = 0usize;
    for (gold, pred) in pairs {
        n += 1;
        if gold == pred {
            agree += 1;
        }
        if is_flip(gold, pred) {
            flips += 1;
        }
        if gold == Label::True {
            gold_true += 1;
            if pred == Label::True {
                gold_true_agree += 1;
            }
        }
    }
    if n == 0 {
        return FactScore { n_facts: 0, fact_recall: 0.0, error_rate: 0.0, degenerate: true };
    }
    let fact_recall = match mode {
        RecallMode::AllKept => agree as f64 / n as f64,
        RecallMode::GoldTrueOnly if gold_true == 0 => 0.0,
        RecallMode::GoldTrueOnly => gold_true_agree as f64 / gold_true as f64,
    };
    FactScore { n_facts: n, fact_recall, error_rate: flips as f64 / n as f64, degenerate: false }
}

/// Corpus-level macro average over non-degenerate reports.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub sources: usize,
    pub scored: usize,
    pub degenerate: usize,
    pub fact_recall: Option<f64>,
    pub error_rate: Option<f64>,
}

pub fn aggregate<'a, I>(scores: I) -> CorpusSummary
where
    I: IntoIterator<Item = &'a FactScore>,
{
    let mut summary = CorpusSummary::default();
    let mut recall = 0.0;
    let mut error = 0.0;
    for s in scores {
        summary.sources += 1;
        if s.degenerate {
            summary.degenerate += 1;
            continue;
        }
        summary.scored += 1;
        recall += s.fact_recall;
        error += s.error_rate;
    }
    if summary.scored > 0 {
        summary.fact_recall = Some(recall / summary.scored as f64);
        summary.error_rate = Some(error / summary.scored as f64);
    }
    summary
}
