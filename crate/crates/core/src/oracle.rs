//! Deterministic stand-ins for the LLM judge and template filler.
//!
//! The judge labels a statement TRUE when its normalized tokens appear
//! contiguously in a premise sentence, FALSE when they only appear once
//! negations are removed, and NEI otherwise (or when sentences disagree).
//! The filler matches a fact template against whole sentences of a text.

use crate::prompts::BLANK;
use crate::text::nfc;
use crate::verdict::Label;
use alloc::string::String;
use alloc::vec::Vec;

const NEGATIONS: [&str; 3] = ["not", "never", "no"];

/// Lowercased word tokens with `n't` expanded and punctuation dropped.
pub fn normalize_tokens(text: &str) -> Vec<String> {
    let lowered: String = nfc(text).chars().flat_map(char::to_lowercase).collect();
    let expanded = lowered.replace("n't", " not").replace("n’t", " not");
    expanded
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// Splits on sentence-final punctuation followed by whitespace, and on newlines.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let next_ws = chars.peek().is_none_or(|(_, n)| n.is_whitespace());
        if c == '\n' || (matches!(c, '.' | '!' | '?') && next_ws) {
            let end = if c == '\n' { i } else { i + c.len_utf8() };
            let s = text[start..end].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = i + c.len_utf8();
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn strip_negations(tokens: &[String]) -> Vec<String> {
    tokens.iter().filter(|t| !NEGATIONS.contains(&t.as_str())).cloned().collect()
}

pub fn judge(premise: &str, statement: &str) -> Label {
    let claim = normalize_tokens(statement);
    if claim.is_empty() {
        return Label::Nei;
    }
    let claim_bare = strip_negations(&claim);
    let mut support = false;
    let mut contradict = false;
    for sentence in sentences(premise) {
        let tokens = normalize_tokens(sentence);
        if contains_run(&tokens, &claim) {
            support = true;
        } else if !claim_bare.is_empty() && contains_run(&strip_negations(&tokens), &claim_bare) {
            contradict = true;
        }
    }
    match (support, contradict) {
        (true, false) => Label::True,
        (false, true) => Label::False,
        _ => Label::Nei,
    }
}

/// A sentence, then its comma/semicolon-delimited prefixes, then its suffixes.
fn clauses(sentence: &str) -> Vec<&str> {
    let mut cuts = Vec::new();
    for (i, c) in sentence.char_indices() {
        if matches!(c, ',' | ';') {
            cuts.push(i);
        }
    }
    let mut out = Vec::from([sentence]);
    out.extend(cuts.iter().map(|&i| sentence[..i].trim()));
    out.extend(cuts.iter().map(|&i| sentence[i + 1..].trim()));
    out.retain(|c| !c.is_empty());
    out
}

/// Fills the blanks of `pattern` (source name already substituted) from the
/// first sentence of `text` that the whole pattern matches, case-insensitively.
/// When no whole sentence matches, clauses split at commas and semicolons are tried.
pub fn fill_blanks(pattern: &str, text: &str) -> Option<String> {
    let parts: Vec<&str> = pattern.split(BLANK).collect();
    if parts.len() == 1 {
        // no blanks: the statement stands as written
        return Some(String::from(pattern));
    }
    let all: Vec<&str> = sentences(text).into_iter().collect();
    let whole = all.iter().copied();
    let split = all.iter().flat_map(|s| clauses(s.trim_end_matches(['.', '!', '?'])).into_iter().skip(1));
    for sentence in whole.chain(split) {
        let sentence = sentence.trim_end_matches(['.', '!', '?']);
        let lower = sentence.to_lowercase();
        if lower.len() != sentence.len() {
            continue;
        }
        let lparts: Vec<String> = parts.iter().map(|p| p.to_lowercase()).collect();
        if let Some(fills) = match_parts(&lower, &lparts, 0) {
            let mut out = String::new();
            for (i, part) in parts.iter().enumerate() {
                out.push_str(part);
                if let Some((s, e)) = fills.get(i) {
                    out.push_str(&sentence[*s..*e]);
                }
            }
            return Some(out);
        }
    }
    None
}

/// Matches literal `parts` separated by non-empty wildcards against `text`
/// starting at `pos`, returning the wildcard byte ranges.
fn match_parts(text: &str, parts: &[String], pos: usize) -> Option<Vec<(usize, usize)>> {
    let first = &parts[0];
    if !text[pos..].starts_with(first.as_str()) {
        return None;
    }
    let after = pos + first.len();
    if parts.len() == 1 {
        return (after == text.len()).then(Vec::new);
    }
    let next = &parts[1];
    // wildcard spans text[after..k], k > after, with parts[1..] matching at k
    let mut k = after;
    while k < text.len() {
        k += text[k..].chars().next().map_or(1, char::len_utf8);
        if k > text.len() {
            break;
        }
        if text[k..].starts_with(next.as_str()) {
            if let Some(mut rest) = match_parts(text, &parts[1..], k) {
                let span = (after, k);
                if text[after..k].trim().is_empty() {
                    continue;
                }
                rest.insert(0, span);
                return Some(rest);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLD: &str = "Founded in 2005, Natural News is a conspiracy website. Mike Adams owns naturalnews.com. The website does not rely on subscriptions for revenue.";

    #[test]
    fn judge_labels() {
        assert_eq!(judge(GOLD, "Mike Adams owns naturalnews.com"), Label::True);
        assert_eq!(judge(GOLD, "The website relies on donations"), Label::Nei);
        assert_eq!(judge(GOLD, "The website does rely on subscriptions for revenue"), Label::False);
        assert_eq!(judge(GOLD, "The website relies on subscriptions for revenue"), Label::Nei);
        assert_eq!(judge(GOLD, "Mike Adams never owns naturalnews.com"), Label::False);
        assert_eq!(judge(GOLD, ""), Label::Nei);
    }

    #[test]
    fn conflicting_sentences_are_nei() {
        assert_eq!(judge("B is owned by A. B is not owned by A.", "B is owned by A"), Label::Nei);
    }

    #[test]
    fn sentences_keep_domains_whole() {
        assert_eq!(sentences("See naturalnews.com today. Next one!\nLast"), ["See naturalnews.com today.", "Next one!", "Last"]);
    }

    #[test]
    fn fills_from_matching_sentence() {
        assert_eq!(fill_blanks("_ owns naturalnews.com", GOLD).as_deref(), Some("Mike Adams owns naturalnews.com"));
        assert_eq!(fill_blanks("naturalnews.com was fined _ for _", GOLD), None);
        assert_eq!(
            fill_blanks("x.com was fined _ for _", "In 2019 x.com was fined $5 for libel.").as_deref(),
            None
        );
        assert_eq!(
            fill_blanks("x.com was fined _ for _", "x.com was fined $5 for libel.").as_deref(),
            Some("x.com was fined $5 for libel")
        );
        assert_eq!(fill_blanks("x.com uses a peer review process", "").as_deref(), Some("x.com uses a peer review process"));
    }

    #[test]
    fn fill_falls_back_to_clauses() {
        assert_eq!(
            fill_blanks("x.com was fined _ for _", "In 2019, x.com was fined $5 for libel.").as_deref(),
            Some("x.com was fined $5 for libel")
        );
        assert_eq!(
            fill_blanks("_ owns x.com", "Jane Roe owns x.com, according to filings.").as_deref(),
            Some("Jane Roe owns x.com")
        );
    }

    #[test]
    fn fill_is_case_insensitive_on_literals() {
        assert_eq!(
            fill_blanks("The remit of x.com is to _", "the remit of X.com is to inform readers.").as_deref(),
            Some("The remit of x.com is to inform readers")
        );
    }
}
