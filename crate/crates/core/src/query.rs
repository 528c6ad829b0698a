//! The fixed information-seeking query plan issued for every source.

use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// `(label, query pattern, question pattern)`; `{source name}` is replaced by
/// the source name wrapped in double quotes.
pub const DEFAULT_QUERIES: [(&str, &str, &str); 6] = [
    ("ownership", "{source name} ownership", "Who owns {source name}?"),
    ("funding", "{source name} funding", "How is {source name} funded?"),
    ("about", "{source name} about", "What is {source name}?"),
    ("political_leaning", "{source name} political leaning", "What is the political leaning of {source name}?"),
    ("fact_check", "{source name} fact-check", "Has {source name} failed any fact-checks?"),
    ("retracted_article", "{source name} retracted article", "Has {source name} retracted any articles?"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryItem {
    pub label: String,
    pub query_text: String,
    pub question_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub source_name: String,
    pub items: Vec<QueryItem>,
}

/// Extra query appended after the default six.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraQuery {
    pub label: String,
    pub query: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueryConfig {
    #[serde(default)]
    pub extra: Vec<ExtraQuery>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("source name must not be empty")]
    EmptySourceName,
    #[error("duplicate query label `{0}`")]
    DuplicateLabel(String),
    #[error("query `{0}` does not reference {{source name}}")]
    MissingSourceName(String),
}

fn instantiate(pattern: &str, source_name: &str) -> String {
    let quoted = alloc::format!("\"{source_name}\"");
    pattern.replace("{source name}", &quoted)
}

pub fn build_query_plan(source_name: &str, config: &QueryConfig) -> Result<QueryPlan, QueryError> {
    if source_name.trim().is_empty() {
        return Err(QueryError::EmptySourceName);
    }
    let defaults = DEFAULT_QUERIES.iter().map(|(l, q, a)| ((*l).to_owned(), *q, *a));
    let extras = config.extra.iter().map(|e| (e.label.clone(), e.query.as_str(), e.question.as_str()));
    let mut items: Vec<QueryItem> = Vec::new();
    for (label, query, question) in defaults.chain(extras) {
        if !query.contains("{source name}") || !question.contains("{source name}") {
            return Err(QueryError::MissingSourceName(label));
        }
        if items.iter().any(|i| i.label == label) {
            return Err(QueryError::DuplicateLabel(label));
        }
        items.push(QueryItem {
            label,
            query_text: instantiate(query, source_name),
            question_text: instantiate(question, source_name),
        });
    }
    Ok(QueryPlan { source_name: source_name.to_owned(), items })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn default_plan() {
        let plan = build_query_plan("naturalnews.com", &QueryConfig::default()).unwrap();
        assert_eq!(plan.items.len(), 6);
        assert_eq!(plan.items[0].query_text, "\"naturalnews.com\" ownership");
        assert_eq!(plan.items[0].question_text, "Who owns \"naturalnews.com\"?");
        assert_eq!(plan.items[5].question_text, "Has \"naturalnews.com\" retracted any articles?");
        for item in &plan.items {
            assert!(item.query_text.contains("naturalnews.com"));
            assert!(item.question_text.contains("naturalnews.com"));
        }
    }

    #[test]
    fn empty_name_rejected() {
        assert_eq!(build_query_plan("", &QueryConfig::default()), Err(QueryError::EmptySourceName));
        assert_eq!(build_query_plan("  ", &QueryConfig::default()), Err(QueryError::EmptySourceName));
    }

    #[test]
    fn extras_are_appended_and_validated() {
        let mut config = QueryConfig {
            extra: vec![ExtraQuery {
                label: "awards".into(),
                query: "{source name} awards".into(),
                question: "What awards has {source name} won?".into(),
            }],
        };
        let plan = build_query_plan("x.com", &config).unwrap();
        assert_eq!(plan.items.len(), 7);
        assert_eq!(plan.items[6].label, "awards");

        config.extra[0].label = "funding".into();
        assert_eq!(build_query_plan("x.com", &config), Err(QueryError::DuplicateLabel("funding".into())));
        config.extra[0].label = "z".into();
        config.extra[0].query = "awards".into();
        assert!(matches!(build_query_plan("x.com", &config), Err(QueryError::MissingSourceName(_))));
    }
}
