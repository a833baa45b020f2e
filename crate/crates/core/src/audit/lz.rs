//! A Lempel–Ziv (1976) phrase-count estimator `K̂` and density profiles.
//!
//! Each phrase is the longest factor starting at position `i` that also
//! occurs starting at some `j < i` (overlap allowed), plus one more symbol.
//! Longest previous factors come from the suffix array and LCP array.

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::extension::ceil_log2;

/// Longest previous factor of every suffix.
pub fn longest_previous_factors(text: &[u8]) -> Vec<u32> {
    let n = text.len();
    if n == 0 {
        return Vec::new();
    }
    assert!(n < i32::MAX as usize, "text too long for a 32-bit suffix array");
    let mut sa = vec![0i32; n];
    divsufsort::sort_in_place(text, &mut sa);

    // Kasai: lcp[r] = lcp(sa[r-1], sa[r]).
    let mut rank = vec![0u32; n];
    for (r, &p) in sa.iter().enumerate() {
        rank[p as usize] = r as u32;
    }
    let mut lcp = vec![0u32; n + 1];
    let mut h = 0usize;
    for i in 0..n {
        let r = rank[i] as usize;
        if r > 0 {
            let j = sa[r - 1] as usize;
            while i + h < n && j + h < n && text[i + h] == text[j + h] {
                h += 1;
            }
            lcp[r] = h as u32;
            h = h.saturating_sub(1);
        } else {
            h = 0;
        }
    }
    drop(rank);

    // Crochemore–Ilie stack pass over the suffix array.
    let mut lpf = vec![0u32; n];
    let mut stack: Vec<usize> = vec![0];
    for i in 1..=n {
        let si = if i < n { sa[i] } else { -1 };
        while let Some(&top) = stack.last() {
            let st = sa[top];
            if si < st {
                lpf[st as usize] = lcp[top].max(lcp[i]);
                lcp[i] = lcp[top].min(lcp[i]);
            } else if lcp[i] <= lcp[top] {
                lpf[st as usize] = lcp[top];
            } else {
                break;
            }
            stack.pop();
        }
        if i < n {
            stack.push(i);
        }
    }
    lpf
}

/// Start positions of the phrases of the parse.
pub fn phrase_starts(text: &[u8]) -> Vec<usize> {
    let lpf = longest_previous_factors(text);
    let mut starts = Vec::new();
    let mut i = 0;
    while i < text.len() {
        starts.push(i);
        i += lpf[i] as usize + 1;
    }
    starts
}

fn symbols(s: &BitString) -> Vec<u8> {
    s.iter().map(u8::from).collect()
}

pub fn phrase_count(s: &BitString) -> u64 {
    phrase_starts(&symbols(s)).len() as u64
}

/// `c·⌈log₂(c + 1)⌉`.
pub fn khat_of_count(c: u64) -> u64 {
    c * ceil_log2(c + 1)
}

/// `K̂(σ)`.
pub fn lz_estimate(s: &BitString) -> u64 {
    khat_of_count(phrase_count(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityPoint {
    pub n: u64,
    pub khat: u64,
    pub ratio: f64,
}

/// `K̂(σ↾n)/n` at each checkpoint, from one parse of the longest prefix.
///
/// The parse of a prefix is the parse of the whole string cut at the
/// prefix end: a previous factor of the prefix is one of the whole string
/// truncated to the prefix. So `c(σ↾n)` counts phrase starts below `n`.
pub fn density_profile(s: &BitString, checkpoints: &[u64]) -> Result<Vec<DensityPoint>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("checkpoints must increase".into()));
    }
    let Some(&last) = checkpoints.last() else { return Ok(Vec::new()) };
    if last as usize > s.len() || checkpoints[0] == 0 {
        return Err(Error::Invalid(format!("checkpoints must lie in 1..={}", s.len())));
    }
    let starts = phrase_starts(&symbols(&s.prefix(last as usize)));
    Ok(checkpoints
        .iter()
        .map(|&n| {
            let c = starts.partition_point(|&p| (p as u64) < n) as u64;
            let khat = khat_of_count(c);
            DensityPoint { n, khat, ratio: khat as f64 / n as f64 }
        })
        .collect())
}
