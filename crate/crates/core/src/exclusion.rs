//! Search results and the domain / mention blocklist applied to them.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Host of an absolute http(s) URL: lowercased, without userinfo, port or a
/// trailing dot. `None` for anything else.
pub fn host_of(url: &str) -> Option<String> {
    let (scheme, rest) = url.split_once("://")?;
    if !scheme.eq_ignore_ascii_case("http") && !scheme.eq_ignore_ascii_case("https") {
        return None;
    }
    let authority = rest.split(['/', '?', '#']).next()?;
    let hostport = authority.rsplit_once('@').map_or(authority, |(_, h)| h);
    let host = if let Some(v6) = hostport.strip_prefix('[') {
        let (inner, _) = v6.split_once(']')?;
        inner
    } else {
        hostport.split(':').next()?
    };
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    let valid = !host.is_empty()
        && host.chars().all(|c| c.is_alphanumeric() || matches!(c, '.' | '-' | ':' | '_'))
        && !host.starts_with('.')
        && !host.contains("..");
    valid.then_some(host)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub url: String,
    pub domain: String,
    pub title: String,
    pub snippet: String,
    #[serde(default)]
    pub body: String,
    /// 1-based position in the provider's ranking.
    pub rank: usize,
}

impl SearchResult {
    /// Builds a result, deriving the domain. `None` if the URL is not an
    /// absolute http(s) URL or `rank` is zero.
    pub fn new(url: &str, title: &str, snippet: &str, body: &str, rank: usize) -> Option<Self> {
        let domain = host_of(url)?;
        (rank >= 1).then(|| Self {
            url: url.to_owned(),
            domain,
            title: title.to_owned(),
            snippet: snippet.to_owned(),
            body: body.to_owned(),
            rank,
        })
    }

    /// Text used for answer extraction: the body when fetched, else the snippet.
    pub fn document_text(&self) -> &str {
        if self.body.trim().is_empty() {
            &self.snippet
        } else {
            &self.body
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionRules {
    /// Blocked registrable domains; subdomains are blocked too.
    pub domains: Vec<String>,
    /// Case-insensitive strings that disqualify a page when found in its
    /// document text (the body, or the snippet when no body was fetched).
    #[serde(default)]
    pub mentions: Vec<String>,
}

impl Default for ExclusionRules {
    fn default() -> Self {
        Self {
            domains: alloc::vec!["mediabiasfactcheck.com".to_owned()],
            mentions: alloc::vec![
                "mediabiasfactcheck.com".to_owned(),
                "media bias/fact check".to_owned(),
                "media bias / fact check".to_owned(),
            ],
        }
    }
}

impl ExclusionRules {
    pub fn none() -> Self {
        Self { domains: Vec::new(), mentions: Vec::new() }
    }

    pub fn blocks_domain(&self, domain: &str) -> bool {
        let domain = domain.trim_end_matches('.').to_ascii_lowercase();
        self.domains.iter().any(|blocked| {
            let blocked = blocked.trim_end_matches('.').to_ascii_lowercase();
            domain == blocked
                || (domain.len() > blocked.len()
                    && domain.ends_with(blocked.as_str())
                    && domain.as_bytes()[domain.len() - blocked.len() - 1] == b'.')
        })
    }

    pub fn blocks_body(&self, body: &str) -> bool {
        if self.mentions.is_empty() {
            return false;
        }
        let lower = body.to_lowercase();
        self.mentions.iter().any(|m| !m.is_empty() && lower.contains(&m.to_lowercase()))
    }

    pub fn blocks(&self, result: &SearchResult) -> bool {
        self.blocks_domain(&result.domain) || self.blocks_body(result.document_text())
    }
}

/// Drops blocked results. Survivors keep their order and original ranks.
pub fn apply_exclusions(results: &[SearchResult], rules: &ExclusionRules) -> Vec<SearchResult> {
    results.iter().filter(|r| !rules.blocks(r)).cloned().collect()
}
