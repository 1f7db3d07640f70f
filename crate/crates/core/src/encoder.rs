//! 768-dimensional text embeddings.
//!
//! [`HashEncoder`] is a deterministic feature-hashing encoder: each token and
//! each character trigram of the normalized text is hashed into one of 768
//! buckets with a ±1 sign, and the result is L2-normalized. Remote encoders
//! implement [`TextEncoder`] in the `dblplink` crate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg;
use crate::text::normalize;

pub const TEXT_DIM: usize = 768;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EncodeError {
    #[error("text at index {index} is empty")]
    EmptyText { index: usize },
    #[error("remote encoder {endpoint} unavailable: {cause}")]
    RemoteUnavailable { endpoint: String, cause: String },
    #[error("remote encoder returned a bad vector at index {index}: {reason}")]
    BadRemoteVector { index: usize, reason: String },
}

/// A length-768 vector with finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbedding(Vec<f64>);

impl TextEmbedding {
    /// Validates length and finiteness; the error carries a reason.
    pub fn new(values: Vec<f64>) -> Result<Self, String> {
        if values.len() != TEXT_DIM {
            return Err(alloc::format!("expected {TEXT_DIM} components, got {}", values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(alloc::format!("component {i} is not finite"));
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; TEXT_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub trait TextEncoder {
    /// Encode every text; element `i` of the output belongs to `texts[i]`.
    fn encode_batch(&self, texts: &[&str]) -> Result<Vec<TextEmbedding>, EncodeError>;

    fn encode(&self, text: &str) -> Result<TextEmbedding, EncodeError> {
        let mut out = self.encode_batch(&[text])?;
        Ok(out.pop().expect("one embedding per input"))
    }
}

impl<T: TextEncoder + ?Sized> TextEncoder for &T {
    fn encode_batch(&self, texts: &[&str]) -> Result<Vec<TextEmbedding>, EncodeError> {
        (**self).encode_batch(texts)
    }
}

/// Index of the first text that is empty after normalization.
pub fn first_empty(texts: &[&str]) -> Option<usize> {
    texts.iter().position(|t| normalize(t).is_empty())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HashEncoder;

impl HashEncoder {
    pub fn embed(&self, text: &str) -> Option<TextEmbedding> {
        let norm = normalize(text);
        if norm.is_empty() {
            return None;
        }
        let mut v = vec![0.0; TEXT_DIM];
        let add = |v: &mut [f64], h: u64| {
            let bucket = ((h >> 1) % TEXT_DIM as u64) as usize;
            v[bucket] += if h & 1 == 1 { 1.0 } else { -1.0 };
        };
        for token in norm.split(' ') {
            add(&mut v, feature_hash(b't', token.chars()));
        }
        let chars: Vec<char> = norm.chars().collect();
        for w in chars.windows(3) {
            add(&mut v, feature_hash(b'g', w.iter().copied()));
        }
        if linalg::norm(&v) == 0.0 {
            // Every feature cancelled out; fall back to a single whole-text feature.
            add(&mut v, feature_hash(b'w', norm.chars()));
        }
        linalg::normalize_in_place(&mut v);
        Some(TextEmbedding(v))
    }
}

impl TextEncoder for HashEncoder {
    fn encode_batch(&self, texts: &[&str]) -> Result<Vec<TextEmbedding>, EncodeError> {
        texts
            .iter()
            .enumerate()
            .map(|(index, t)| self.embed(t).ok_or(EncodeError::EmptyText { index }))
            .collect()
    }
}

/// FNV-1a over a namespace byte and UTF-8 bytes, then a SplitMix64 finalizer.
fn feature_hash(namespace: u8, chars: impl Iterator<Item = char>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = (OFFSET ^ namespace as u64).wrapping_mul(PRIME);
    let mut buf = [0u8; 4];
    for c in chars {
        for &b in c.encode_utf8(&mut buf).as_bytes() {
            h = (h ^ b as u64).wrapping_mul(PRIME);
        }
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}
