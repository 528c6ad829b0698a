//! Three-way entailment labels, response parsing and the 4-vote majority.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

/// Number of judge runs per statement.
pub const VOTES_PER_VERDICT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "TRUE")]
    True,
    #[serde(rename = "FALSE")]
    False,
    #[serde(rename = "NEI")]
    Nei,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::True, Label::False, Label::Nei];

    pub fn is_decisive(self) -> bool {
        self != Label::Nei
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::True => "TRUE",
            Label::False => "FALSE",
            Label::Nei => "NEI",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const MARKERS: [(&str, Label); 3] =
    [("NOT ENOUGH EVIDENCE", Label::Nei), ("FALSE", Label::False), ("TRUE", Label::True)];

/// Reads the verdict from a chain-of-thought judge response.
///
/// The reasoning comes first, so the last standalone uppercase occurrence of
/// `TRUE`, `FALSE` or `NOT ENOUGH EVIDENCE` wins. No occurrence means NEI.
pub fn parse_verdict(response: &str) -> Label {
    let mut best: Option<(usize, Label)> = None;
    for (marker, label) in MARKERS {
        let mut from = 0;
        while let Some(off) = response[from..].find(marker) {
            let start = from + off;
            let end = start + marker.len();
            if is_boundary(response, start, end) && best.is_none_or(|(pos, _)| start > pos) {
                best = Some((start, label));
            }
            from = start + 1;
        }
    }
    best.map_or(Label::Nei, |(_, l)| l)
}

fn is_boundary(text: &str, start: usize, end: usize) -> bool {
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    !word(before) && !word(after)
}

/// Majority over judge votes: the class with the unique highest count wins;
/// any tie for the top count resolves to NEI.
pub fn majority(votes: &[Label]) -> Label {
    let mut counts = [0usize; 3];
    for v in votes {
        counts[*v as usize] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0);
    if top == 0 {
        return Label::Nei;
    }
    let mut winners = Label::ALL.iter().filter(|l| counts[**l as usize] == top);
    match (winners.next(), winners.next()) {
        (Some(l), None) => *l,
        _ => Label::Nei,
    }
}

/// An aggregated verdict with the raw votes and judge rationales behind it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntailmentVotes {
    pub label: Label,
    pub votes: Vec<Label>,
    pub rationales: Vec<String>,
}

impl EntailmentVotes {
    pub fn from_votes(votes: Vec<Label>, rationales: Vec<String>) -> Self {
        Self { label: majority(&votes), votes, rationales }
    }

    /// A verdict with every vote equal to `label`, for deterministic judges.
    pub fn unanimous(label: Label, rationale: &str) -> Self {
        let votes = alloc::vec![label; VOTES_PER_VERDICT];
        let rationales = (0..VOTES_PER_VERDICT).map(|_| String::from(rationale)).collect();
        Self { label, votes, rationales }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn verdict_parsing() {
        assert_eq!(parse_verdict("...step by step... TRUE"), True);
        assert_eq!(parse_verdict("TRUE is tempting, but the text contradicts it. FALSE"), False);
        assert_eq!(parse_verdict("I'm not sure."), Nei);
        assert_eq!(parse_verdict("The answer is NOT ENOUGH EVIDENCE."), Nei);
        assert_eq!(parse_verdict("FALSE at first, then NOT ENOUGH EVIDENCE, finally TRUE."), True);
    }

    #[test]
    fn lowercase_and_embedded_words_ignored() {
        assert_eq!(parse_verdict("this is true"), Nei);
        assert_eq!(parse_verdict("UNTRUE"), Nei);
        assert_eq!(parse_verdict("TRUEST FALSEHOOD"), Nei);
        assert_eq!(parse_verdict("**TRUE**"), True);
    }

    #[test]
    fn majority_examples() {
        assert_eq!(majority(&[True, True, True, True]), True);
        assert_eq!(majority(&[True, True, False, Nei]), True);
        assert_eq!(majority(&[True, True, False, False]), Nei);
        assert_eq!(majority(&[True, Nei, Nei, False]), Nei);
        assert_eq!(majority(&[True, True, Nei, Nei]), Nei);
        assert_eq!(majority(&[]), Nei);
    }
}
