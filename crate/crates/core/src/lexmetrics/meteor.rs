//! Single-reference METEOR with exact and Porter-stem matching stages.
//!
//! Each stage aligns the still-unmatched unigrams. Any maximal matching
//! within a stage is maximum, since candidates only pair with equal keys.
//! Among maximum matchings the one with the fewest chunks is chosen by
//! exhaustive enumeration when the number of alternatives is small, and by
//! longest-run-first tiling otherwise.

use super::porter::stem;
use crate::text::TokenSequence;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

const EXHAUSTIVE_LIMIT: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self { alpha: 0.9, beta: 3.0, gamma: 0.5 }
    }
}

/// Matched (candidate index, reference index) pairs sorted by candidate index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub pairs: Vec<(usize, usize)>,
}

impl Alignment {
    pub fn matches(&self) -> usize {
        self.pairs.len()
    }

    pub fn chunks(&self) -> usize {
        chunk_count(&self.pairs)
    }
}

fn chunk_count(pairs: &[(usize, usize)]) -> usize {
    let mut sorted = pairs.to_vec();
    sorted.sort_unstable();
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(c, r) in &sorted {
        match prev {
            Some((pc, pr)) if c == pc + 1 && r == pr + 1 => {}
            _ => chunks += 1,
        }
        prev = Some((c, r));
    }
    chunks
}

pub fn meteor(candidate: &str, reference: &str) -> f64 {
    meteor_tokens(&TokenSequence::new(candidate), &TokenSequence::new(reference), MeteorParams::default())
}

pub fn meteor_tokens(candidate: &TokenSequence, reference: &TokenSequence, params: MeteorParams) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let alignment = align(candidate, reference);
    let matches = alignment.matches();
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let precision = m / candidate.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let frag = alignment.chunks() as f64 / m;
    let penalty = params.gamma * libm::pow(frag, params.beta);
    fmean * (1.0 - penalty)
}

/// Two-stage unigram alignment: exact tokens, then Porter stems.
pub fn align(candidate: &TokenSequence, reference: &TokenSequence) -> Alignment {
    let cand = candidate.tokens();
    let refs = reference.tokens();
    let mut cand_used = vec![false; cand.len()];
    let mut ref_used = vec![false; refs.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    let exact: Vec<String> = cand.to_vec();
    let exact_ref: Vec<String> = refs.to_vec();
    align_stage(&exact, &exact_ref, &mut cand_used, &mut ref_used, &mut pairs);

    let stems: Vec<String> = cand.iter().map(|t| stem(t)).collect();
    let stems_ref: Vec<String> = refs.iter().map(|t| stem(t)).collect();
    align_stage(&stems, &stems_ref, &mut cand_used, &mut ref_used, &mut pairs);

    pairs.sort_unstable();
    Alignment { pairs }
}

struct Class {
    cand: Vec<usize>,
    refs: Vec<usize>,
}

impl Class {
    fn alternatives(&self) -> u64 {
        let (big, small) = if self.cand.len() >= self.refs.len() {
            (self.cand.len() as u64, self.refs.len() as u64)
        } else {
            (self.refs.len() as u64, self.cand.len() as u64)
        };
        (0..small).fold(1u64, |acc, i| acc.saturating_mul(big - i))
    }
}

fn align_stage(
    cand_keys: &[String],
    ref_keys: &[String],
    cand_used: &mut [bool],
    ref_used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
) {
    let mut classes: BTreeMap<&str, Class> = BTreeMap::new();
    for (i, k) in cand_keys.iter().enumerate() {
        if !cand_used[i] {
            classes.entry(k.as_str()).or_insert_with(|| Class { cand: Vec::new(), refs: Vec::new() }).cand.push(i);
        }
    }
    for (j, k) in ref_keys.iter().enumerate() {
        if !ref_used[j] {
            if let Some(class) = classes.get_mut(k.as_str()) {
                class.refs.push(j);
            }
        }
    }
    let classes: Vec<Class> = classes.into_values().filter(|c| !c.cand.is_empty() && !c.refs.is_empty()).collect();
    if classes.is_empty() {
        return;
    }

    let total = classes.iter().fold(1u64, |acc, c| acc.saturating_mul(c.alternatives()));
    let chosen = if total <= EXHAUSTIVE_LIMIT {
        let mut search = Exhaustive { classes: &classes, fixed: pairs.clone(), best: None, current: Vec::new() };
        search.run(0);
        search.best.map(|(_, p)| p).unwrap_or_default()
    } else {
        tile(cand_keys, ref_keys, cand_used, ref_used)
    };
    for &(c, r) in &chosen {
        cand_used[c] = true;
        ref_used[r] = true;
    }
    pairs.extend(chosen);
}

struct Exhaustive<'a> {
    classes: &'a [Class],
    fixed: Vec<(usize, usize)>,
    best: Option<(usize, Vec<(usize, usize)>)>,
    current: Vec<(usize, usize)>,
}

impl Exhaustive<'_> {
    fn run(&mut self, class_idx: usize) {
        if class_idx == self.classes.len() {
            let mut all = self.fixed.clone();
            all.extend_from_slice(&self.current);
            let chunks = chunk_count(&all);
            if self.best.as_ref().is_none_or(|(b, _)| chunks < *b) {
                self.best = Some((chunks, self.current.clone()));
            }
            return;
        }
        let class = &self.classes[class_idx];
        let swap = class.cand.len() > class.refs.len();
        let (small, big) = if swap { (&class.refs, &class.cand) } else { (&class.cand, &class.refs) };
        let mut used = vec![false; big.len()];
        self.assign(class_idx, small, big, swap, 0, &mut used);
    }

    fn assign(&mut self, class_idx: usize, small: &[usize], big: &[usize], swap: bool, pos: usize, used: &mut [bool]) {
        if pos == small.len() {
            self.run(class_idx + 1);
            return;
        }
        for b in 0..big.len() {
            if used[b] {
                continue;
            }
            used[b] = true;
            let pair = if swap { (big[b], small[pos]) } else { (small[pos], big[b]) };
            self.current.push(pair);
            self.assign(class_idx, small, big, swap, pos + 1, used);
            self.current.pop();
            used[b] = false;
        }
    }
}

/// Repeatedly fixes the longest run of consecutive matchable positions.
fn tile(cand_keys: &[String], ref_keys: &[String], cand_used: &[bool], ref_used: &[bool]) -> Vec<(usize, usize)> {
    let mut cu = cand_used.to_vec();
    let mut ru = ref_used.to_vec();
    let mut out = Vec::new();
    let n = cand_keys.len();
    let m = ref_keys.len();
    loop {
        // run[j] = length of matchable run ending at (i, j)
        let mut best: Option<(usize, usize, usize)> = None;
        let mut prev = vec![0usize; m + 1];
        let mut cur = vec![0usize; m + 1];
        for i in 0..n {
            for j in 0..m {
                cur[j + 1] = if !cu[i] && !ru[j] && cand_keys[i] == ref_keys[j] { prev[j] + 1 } else { 0 };
                let len = cur[j + 1];
                if len > 0 {
                    let start = (i + 1 - len, j + 1 - len);
                    let better = match best {
                        None => true,
                        Some((bl, bi, bj)) => {
                            len > bl || (len == bl && start.0.abs_diff(start.1) < bi.abs_diff(bj))
                        }
                    };
                    if better {
                        best = Some((len, start.0, start.1));
                    }
                }
            }
            core::mem::swap(&mut prev, &mut cur);
        }
        let Some((len, i0, j0)) = best else { break };
        for t in 0..len {
            cu[i0 + t] = true;
            ru[j0 + t] = true;
            out.push((i0 + t, j0 + t));
        }
    }
    out
}
