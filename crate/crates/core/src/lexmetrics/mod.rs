//! ROUGE-L and METEOR over [`TokenSequence`]s.

mod meteor;
pub mod porter;

pub use meteor::{align, meteor, meteor_tokens, Alignment, MeteorParams};

use crate::text::TokenSequence;
use alloc::vec;

/// Length of the longest common subsequence of two token sequences.
///
/// Runs in O(|a|·|b|) time and O(min(|a|, |b|)) space.
pub fn lcs_length(a: &TokenSequence, b: &TokenSequence) -> usize {
    let (long, short) = if a.len() >= b.len() { (a.tokens(), b.tokens()) } else { (b.tokens(), a.tokens()) };
    if short.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; short.len() + 1];
    for x in long {
        let mut diag = 0;
        for (j, y) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[short.len()]
}

/// Summary-level ROUGE-L F1 between two whole texts.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    rouge_l_tokens(&TokenSequence::new(candidate), &TokenSequence::new(reference))
}

pub fn rouge_l_tokens(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    // 2PR/(P+R) with P = lcs/|c| and R = lcs/|r| reduces to 2·lcs/(|c|+|r|),
    // which avoids the extra rounding of the quotient form
    let lcs = lcs_length(candidate, reference);
    (2 * lcs) as f64 / (candidate.len() + reference.len()) as f64
}
