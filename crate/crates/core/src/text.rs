//! Normalization, character trigrams and Levenshtein distance.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use unicode_normalization::UnicodeNormalization;

/// A character trigram. Boundary positions are filled with [`PAD`].
pub type Trigram = [char; 3];

/// Boundary mark used when padding text for trigram extraction.
pub const PAD: char = '#';

/// Lowercase, NFC, collapse whitespace runs to one space and trim.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().flat_map(char::to_lowercase).nfc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

/// Distinct trigrams of `##text##`.
pub fn padded_trigrams(normalized: &str) -> BTreeSet<Trigram> {
    let mut chars = Vec::with_capacity(normalized.len() + 4);
    chars.extend([PAD, PAD]);
    chars.extend(normalized.chars());
    chars.extend([PAD, PAD]);
    chars.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

/// Jaccard coefficient of two trigram sets given their sizes and overlap.
pub fn jaccard(intersection: usize, left: usize, right: usize) -> f64 {
    let union = left + right - intersection;
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let subst = prev[j] + usize::from(ca != cb);
            cur[j + 1] = subst.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - levenshtein / max(len)`, with two empty strings counting as identical.
pub fn levenshtein_similarity(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}
