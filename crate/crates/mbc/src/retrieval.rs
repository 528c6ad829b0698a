//! Search execution: pagination, URL dedup, body fetch and caching.

use std::collections::BTreeSet;

use mbc_core::{QueryItem, SearchResult};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::providers::{Gateway, ProviderError, SearchProvider};

pub const DEFAULT_K: usize = 30;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SearchOutcome {
    pub results: Vec<SearchResult>,
    pub warnings: Vec<String>,
}

fn round_error(label: &str, e: ProviderError) -> Error {
    match e {
        ProviderError::Quota(message) => Error::RateLimited { label: label.to_string(), message },
        source => Error::Retrieval { label: label.to_string(), source },
    }
}

/// Up to `k` results for `item` in rank order, ranks 1..=n, no repeated URLs.
///
/// A failure on the first page fails the round; a failure on a later page
/// keeps the results gathered so far and records a warning.
pub fn search(gateway: &Gateway, provider: &dyn SearchProvider, item: &QueryItem, k: usize) -> Result<SearchOutcome> {
    let page_size = provider.page_size().max(1);
    let capacity = page_size.saturating_mul(provider.max_pages());
    if k == 0 || k > capacity {
        return Err(Error::Precondition(format!("k = {k} outside 1..={capacity} for provider {}", provider.id())));
    }
    let mut outcome = SearchOutcome::default();
    let mut seen = BTreeSet::new();
    let mut hits = Vec::new();
    for page in 0..provider.max_pages() {
        if hits.len() >= k {
            break;
        }
        let batch = match gateway.search_page(provider, &item.query_text, k, page) {
            Ok(batch) => batch,
            Err(e) if page == 0 => return Err(round_error(&item.label, e)),
            Err(e) => {
                outcome.warnings.push(format!("query `{}`: page {} failed, keeping {} results: {e}", item.label, page + 1, hits.len()));
                break;
            }
        };
        let short = batch.len() < page_size;
        for hit in batch {
            if hits.len() < k && seen.insert(hit.url.clone()) {
                hits.push(hit);
            }
        }
        if short {
            break;
        }
    }
    let bodies: Vec<std::result::Result<String, ProviderError>> =
        hits.par_iter().map(|h| gateway.fetch_body(provider, &h.url)).collect();
    for (hit, body) in hits.iter().zip(bodies) {
        let body = body.unwrap_or_else(|e| {
            outcome.warnings.push(format!("query `{}`: body fetch for {} failed: {e}", item.label, hit.url));
            String::new()
        });
        let rank = outcome.results.len() + 1;
        match SearchResult::new(&hit.url, &hit.title, &hit.snippet, &body, rank) {
            Some(r) => outcome.results.push(r),
            None => outcome.warnings.push(format!("query `{}`: skipped non-absolute URL `{}`", item.label, hit.url)),
        }
    }
    Ok(outcome)
}
