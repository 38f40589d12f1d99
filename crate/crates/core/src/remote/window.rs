use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::RemoteError;

pub const DEFAULT_WINDOW: usize = 512;
pub const DEFAULT_STRIDE: usize = 256;

/// A window over model tokens together with the character span it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentWindow {
    pub token_start: usize,
    pub token_end: usize,
    pub char_start: usize,
    pub char_end: usize,
}

/// Token offsets `(start, end)` in characters, half-open.
pub type TokenSpan = (usize, usize);

/// Overlapping token windows starting at multiples of `stride`; the last
/// window is the first one that reaches `token_count`.
pub fn plan_windows(token_count: usize, window: usize, stride: usize) -> Result<Vec<Range<usize>>, RemoteError> {
    if window == 0 || stride == 0 || stride > window {
        return Err(RemoteError::InvalidWindow { window, stride });
    }
    let mut out = Vec::new();
    if token_count == 0 {
        return Ok(out);
    }
    let mut start = 0;
    loop {
        let end = (start + window).min(token_count);
        out.push(start..end);
        if end == token_count {
            return Ok(out);
        }
        start += stride;
    }
}

/// Checks that offsets are non-empty, strictly increasing and
/// non-overlapping within a text of `char_len` characters.
pub fn validate_offsets(tokens: &[TokenSpan], char_len: usize) -> Result<(), String> {
    let mut prev_end = 0;
    for (i, &(start, end)) in tokens.iter().enumerate() {
        if start >= end || end > char_len {
            return Err(format!("token {i} has invalid span [{start}, {end}) for text of {char_len} characters"));
        }
        if i > 0 && start < prev_end {
            return Err(format!("token {i} starts at {start}, before the previous token ends at {prev_end}"));
        }
        prev_end = end;
    }
    Ok(())
}

/// Maps token windows onto character spans.
pub fn segment_windows(tokens: &[TokenSpan], window: usize, stride: usize) -> Result<Vec<SegmentWindow>, RemoteError> {
    Ok(plan_windows(tokens.len(), window, stride)?
        .into_iter()
        .map(|r| SegmentWindow {
            token_start: r.start,
            token_end: r.end,
            char_start: tokens[r.start].0,
            char_end: tokens[r.end - 1].1,
        })
        .collect())
}

/// Character offsets of whitespace-separated words, used when the model
/// tokenizer is unavailable.
pub fn whitespace_tokens(text: &str) -> Vec<TokenSpan> {
    let mut out = Vec::new();
    let mut start = None;
    let mut n = 0;
    for (i, c) in text.chars().enumerate() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
        n = i + 1;
    }
    if let Some(s) = start {
        out.push((s, n));
    }
    out
}

/// Substring between two character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let byte_at = |c: usize| text.char_indices().nth(c).map_or(text.len(), |(b, _)| b);
    &text[byte_at(start)..byte_at(end)]
}

/// Strict majority of segment labels; an exact tie goes to the mean
/// positive probability (positive at >= 0.5), or to the positive class
/// when no probabilities are given.
pub fn aggregate_segments(labels: &[u8], probs: Option<&[f64]>) -> Result<u8, String> {
    if labels.is_empty() {
        return Err("no segments to aggregate".into());
    }
    if let Some(p) = probs {
        if p.len() != labels.len() {
            return Err(format!("{} labels but {} probabilities", labels.len(), p.len()));
        }
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    let zeros = labels.len() - ones;
    Ok(match ones.cmp(&zeros) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => match probs {
            Some(p) => u8::from(p.iter().sum::<f64>() / p.len() as f64 >= 0.5),
            None => 1,
        },
    })
}
