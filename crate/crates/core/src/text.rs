//! Tokenization shared by corpus statistics and lexical metrics.

use alloc::string::String;
use alloc::vec::Vec;
use unicode_normalization::UnicodeNormalization;

pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Whitespace token count on NFC-normalized text, punctuation left attached.
pub fn count_tokens(text: &str) -> usize {
    nfc(text).split_whitespace().count()
}

/// Number of non-empty (after trimming) newline-delimited lines.
pub fn count_lines(text: &str) -> usize {
    text.lines().filter(|l| !l.trim().is_empty()).count()
}

/// Lowercased, NFC-normalized tokens for metric computation.
///
/// Text is split on whitespace; leading and trailing punctuation is split off
/// each word into single-character tokens so that `sat.` and `sat` match.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(text: &str) -> Self {
        let normalized: String = nfc(text).chars().flat_map(char::to_lowercase).collect();
        let mut tokens = Vec::new();
        for word in normalized.split_whitespace() {
            let chars: Vec<char> = word.chars().collect();
            let mut start = 0;
            let mut end = chars.len();
            while start < end && chars[start].is_ascii_punctuation() {
                start += 1;
            }
            while end > start && chars[end - 1].is_ascii_punctuation() {
                end -= 1;
            }
            for c in &chars[..start] {
                tokens.push(String::from(*c));
            }
            if start < end {
                tokens.push(chars[start..end].iter().collect());
            }
            for c in &chars[end..] {
                tokens.push(String::from(*c));
            }
        }
        Self { tokens }
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { tokens: tokens.into_iter().map(Into::into).filter(|t: &String| !t.is_empty()).collect() }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
