//! Background check documents: the heading/body file layout, hyperlink
//! extraction, and the `**Background check**` response marker.

use crate::exclusion::host_of;
use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

/// Heading used when a document has no detectable headings.
pub const DEFAULT_HEADING: &str = "Body";

const MAX_HEADING_TOKENS: usize = 8;

/// Label lines removed at parse time. Matched case-insensitively as a
/// line prefix followed by a colon.
const RATING_LABELS: [&str; 5] = [
    "bias rating",
    "factual reporting",
    "credibility rating",
    "mbfc credibility rating",
    "mbfc's credibility rating",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub const ASSIGNED: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "dev" | "valid" | "validation" => Some(Split::Dev),
            "test" => Some(Split::Test),
            "unassigned" => Some(Split::Unassigned),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    pub body: String,
}

/// A gold or generated background check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "StoredCheck")]
pub struct BackgroundCheck {
    pub source_name: String,
    pub sections: Vec<Section>,
    #[serde(skip)]
    full_text: String,
    pub hyperlinks: Vec<String>,
    pub split: Split,
}

impl BackgroundCheck {
    pub fn new(source_name: impl Into<String>, sections: Vec<Section>, split: Split) -> Self {
        let full_text = sections.iter().map(|s| s.body.as_str()).collect::<Vec<_>>().join("\n\n");
        let hyperlinks = extract_hyperlinks(&full_text);
        Self { source_name: source_name.into(), sections, full_text, hyperlinks, split }
    }

    /// Section bodies joined with blank lines.
    pub fn full_text(&self) -> &str {
        &self.full_text
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// The on-disk heading/body layout; parses back to an equal record.
    pub fn to_file_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&s.heading);
            out.push_str("\n\n");
            out.push_str(&s.body);
        }
        out.push('\n');
        out
    }
}

#[derive(Deserialize)]
struct StoredCheck {
    source_name: String,
    sections: Vec<Section>,
    #[serde(default)]
    split: Split,
}

impl From<StoredCheck> for BackgroundCheck {
    fn from(s: StoredCheck) -> Self {
        BackgroundCheck::new(s.source_name, s.sections, s.split)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocumentError {
    #[error("malformed input for `{source_name}`: empty document")]
    Empty { source_name: String },
    #[error("response has no \"Background check\" marker")]
    MissingMarker,
}

fn is_rating_line(line: &str) -> bool {
    let lower = line.trim().to_ascii_lowercase();
    RATING_LABELS.iter().any(|label| {
        lower.strip_prefix(label).is_some_and(|rest| rest.trim_start().starts_with(':'))
    })
}

fn is_list_item(line: &str) -> bool {
    let t = line.trim_start();
    if t.starts_with(['-', '*', '•']) {
        return true;
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    digits > 0 && t[digits..].starts_with(['.', ')'])
}

fn heading_like(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() || t.contains("://") || is_list_item(t) {
        return false;
    }
    if t.split_whitespace().count() > MAX_HEADING_TOKENS {
        return false;
    }
    !t.ends_with(['.', '!', '?', ';', ',', '…'])
}

fn blank(line: Option<&&str>) -> bool {
    line.is_none_or(|l| l.trim().is_empty())
}

/// Parses a background check in the heading/body layout.
///
/// A heading is a short line (at most eight tokens, no terminal punctuation)
/// that is followed by a blank line, or that opens a paragraph and is directly
/// followed by body text. Without headings the document becomes one `Body`
/// section. Rating label lines are dropped.
pub fn parse_mbc_file(raw: &str, source_name: &str) -> Result<BackgroundCheck, DocumentError> {
    if raw.trim().is_empty() {
        return Err(DocumentError::Empty { source_name: source_name.to_owned() });
    }
    let normalized = raw.replace("\r\n", "\n");
    let lines: Vec<&str> = normalized.lines().filter(|l| !is_rating_line(l)).collect();

    let mut sections: Vec<(String, Vec<&str>)> = Vec::new();
    let mut preamble: Vec<&str> = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let prev = if i == 0 { None } else { lines.get(i - 1) };
        let next = lines.get(i + 1);
        let is_heading = heading_like(line)
            && next.is_some()
            && (blank(next) || (blank(prev) && !blank(next) && !heading_like(next.unwrap_or(&""))));
        if is_heading {
            sections.push((line.trim().to_owned(), Vec::new()));
        } else if let Some((_, body)) = sections.last_mut() {
            body.push(line);
        } else {
            preamble.push(line);
        }
    }

    let join = |ls: &[&str]| ls.join("\n").trim_matches('\n').trim().to_owned();
    let mut out = Vec::new();
    let pre = join(&preamble);
    if !pre.is_empty() || sections.is_empty() {
        out.push(Section { heading: DEFAULT_HEADING.to_owned(), body: pre });
    }
    for (heading, body) in sections {
        out.push(Section { heading, body: join(&body) });
    }
    Ok(BackgroundCheck::new(source_name, out, Split::Unassigned))
}

/// Absolute http(s) URLs in order of first appearance, deduplicated.
pub fn extract_hyperlinks(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let lower = text.to_ascii_lowercase();
    let mut from = 0;
    while from < text.len() {
        let http = lower[from..].find("http://");
        let https = lower[from..].find("https://");
        let start = match (http, https) {
            (Some(a), Some(b)) => from + a.min(b),
            (Some(a), None) | (None, Some(a)) => from + a,
            (None, None) => break,
        };
        let rest = &text[start..];
        let end = rest
            .char_indices()
            .find(|(_, c)| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '\'' | '`' | '[' | ']' | '{' | '}'))
            .map_or(rest.len(), |(i, _)| i);
        let url = trim_url(&rest[..end]);
        if is_absolute_url(url) && !out.iter().any(|u| u == url) {
            out.push(url.to_owned());
        }
        from = start + end.max(1);
    }
    out
}

fn trim_url(mut url: &str) -> &str {
    loop {
        let before = url;
        url = url.trim_end_matches(['.', ',', ';', ':', '!', '?', '*']);
        if url.ends_with(')') && url.matches('(').count() < url.matches(')').count() {
            url = &url[..url.len() - 1];
        }
        if url == before {
            return url;
        }
    }
}

/// `scheme://host...` with an http(s) scheme and a non-empty host.
pub fn is_absolute_url(url: &str) -> bool {
    host_of(url).is_some()
}

/// Result of stripping the response marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub body: String,
    /// False when no marker was found and the whole text was kept.
    pub marker_found: bool,
}

const MARKER: &str = "background check";

/// Strips everything up to and including the first `Background check` marker
/// line (starred or not) and returns the trimmed remainder.
pub fn parse_mbc_response(raw: &str, strict: bool) -> Result<ParsedResponse, DocumentError> {
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        let lead = line.len() - line.trim_start_matches([' ', '\t', '*', '#']).len();
        let candidate = &line[lead..];
        if candidate.len() >= MARKER.len() && candidate[..MARKER.len()].eq_ignore_ascii_case(MARKER) {
            let rest = candidate[MARKER.len()..].trim_start_matches(['*', ':', ' ', '\t']);
            let rest_lower = rest.trim().to_ascii_lowercase();
            let title = rest_lower.starts_with("on ") || rest_lower.starts_with("for ");
            let first = if title { "" } else { rest };
            let mut body = String::from(first);
            body.push_str(&raw[offset + line.len()..]);
            return Ok(ParsedResponse { body: body.trim().to_owned(), marker_found: true });
        }
        offset += line.len();
    }
    if strict {
        Err(DocumentError::MissingMarker)
    } else {
        Ok(ParsedResponse { body: raw.trim().to_owned(), marker_found: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NATURAL_NEWS: &str = "History\nFounded in 2005, Natural News is a conspiracy and pseudoscience website that routinely publishes false information. The founder is Mike Adams, who owns several Questionable websites such as News Target and Trump.news.\n\nFunded by / Ownership\nNatural News is owned by Mike Adams, who owns numerous other fake and or controversial websites. The website, like all of Mike Adams's properties, is funded through online advertising.\n\nAnalysis / Bias\n...\n";

    #[test]
    fn figure_layout_sections() {
        let mbc = parse_mbc_file(NATURAL_NEWS, "Natural News").unwrap();
        let headings: Vec<&str> = mbc.sections.iter().map(|s| s.heading.as_str()).collect();
        assert_eq!(headings, ["History", "Funded by / Ownership", "Analysis / Bias"]);
        assert!(mbc.sections[1].body.starts_with("Natural News is owned by Mike Adams"));
        assert_eq!(mbc.sections[2].body, "...");
        assert!(mbc.hyperlinks.is_empty());
    }

    #[test]
    fn blank_line_after_heading_layout() {
        let raw = "History\n\nFounded in 2005.\n\nOwnership\n\nOwned by X. See https://example.com/about.\n";
        let mbc = parse_mbc_file(raw, "x").unwrap();
        assert_eq!(mbc.sections.len(), 2);
        assert_eq!(mbc.hyperlinks, ["https://example.com/about"]);
        assert_eq!(mbc.full_text(), "Founded in 2005.\n\nOwned by X. See https://example.com/about.");
    }

    #[test]
    fn empty_is_malformed() {
        assert_eq!(parse_mbc_file("", "Natural News"), Err(DocumentError::Empty { source_name: "Natural News".into() }));
        assert!(parse_mbc_file("  \n\n", "n").is_err());
    }

    #[test]
    fn single_paragraph_is_body() {
        let mbc = parse_mbc_file("Natural News is a conspiracy website that publishes false claims.", "n").unwrap();
        assert_eq!(mbc.sections.len(), 1);
        assert_eq!(mbc.sections[0].heading, DEFAULT_HEADING);
        assert!(mbc.hyperlinks.is_empty());
    }

    #[test]
    fn ratings_are_stripped() {
        let raw = "History\n\nFounded in 2005.\nBias Rating: RIGHT\nFactual Reporting : LOW\n";
        let mbc = parse_mbc_file(raw, "n").unwrap();
        assert_eq!(mbc.full_text(), "Founded in 2005.");
    }

    #[test]
    fn hyperlink_edges() {
        let links = extract_hyperlinks(
            "(see https://en.wikipedia.org/wiki/Natural_News_(site)) and http://a.com/x, HTTPS://B.org. http:// and https://a.com/x http://a.com/x",
        );
        assert_eq!(
            links,
            ["https://en.wikipedia.org/wiki/Natural_News_(site)", "http://a.com/x", "HTTPS://B.org", "https://a.com/x"]
        );
    }

    #[test]
    fn serialization_round_trip() {
        let mbc = parse_mbc_file(NATURAL_NEWS, "Natural News").unwrap();
        let again = parse_mbc_file(&mbc.to_file_text(), "Natural News").unwrap();
        assert_eq!(mbc, again);
    }

    #[test]
    fn response_marker_variants() {
        let p = parse_mbc_response("**Background check**\n1. X is owned by Y", true).unwrap();
        assert_eq!(p.body, "1. X is owned by Y");
        let p = parse_mbc_response("Background check\n\n1. Natural News is owned by Mike Adams.", true).unwrap();
        assert_eq!(p.body, "1. Natural News is owned by Mike Adams.");
        let p = parse_mbc_response("**Background check on naturalnews.com:**\n\n1. **Ownership**: Mike Adams", true).unwrap();
        assert_eq!(p.body, "1. **Ownership**: Mike Adams");
        let p = parse_mbc_response("Sure.\n  **Background check**: 1. A\n2. B\n", true).unwrap();
        assert_eq!(p.body, "1. A\n2. B");
    }

    #[test]
    fn response_without_marker() {
        assert_eq!(parse_mbc_response("I cannot help with that.", true), Err(DocumentError::MissingMarker));
        let p = parse_mbc_response("  I cannot help with that. ", false).unwrap();
        assert_eq!(p, ParsedResponse { body: "I cannot help with that.".into(), marker_found: false });
        assert!(parse_mbc_response("I cannot write a background check for them.", true).is_err());
    }
}
