//! Text embedders.
//!
//! The default [`HashEmbedder`] is a feature-hashing bag of words plus
//! character trigrams. It needs no model files, is deterministic across
//! runs and platforms, and gives related phrases ("sofa" / "couch sofa
//! seat") a clearly higher cosine than unrelated ones.

use serde::{Deserialize, Serialize};

use crate::service::{post_json, ServiceError};

pub const DEFAULT_EMBEDDING_DIM: usize = 1024;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding service returned {got} vectors of dimension {dim}, expected {expected}")]
    BadResponse { got: usize, dim: usize, expected: usize },
    #[error(transparent)]
    Service(#[from] ServiceError),
}

/// Maps text to unit-norm vectors of a fixed dimension.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "at", "by", "for", "in", "is", "it", "near", "none", "objects", "of", "on",
    "the", "then", "to", "with",
];

const WORD_WEIGHT: f64 = 1.0;
const TRIGRAM_WEIGHT: f64 = 0.4;

fn fnv1a(namespace: u8, bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in std::iter::once(&namespace).chain(bytes) {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // FNV's low bits mix poorly on short keys; finish with a 64-bit avalanche.
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}

/// Lowercased alphanumeric words, stopwords removed.
pub fn content_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Deterministic feature-hashing embedder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    fn add(&self, v: &mut [f64], namespace: u8, bytes: &[u8], weight: f64) {
        let h = fnv1a(namespace, bytes);
        let idx = (h % self.dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[idx] += sign * weight;
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_EMBEDDING_DIM)
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut v = vec![0.0; self.dim];
        let words = content_words(trimmed);
        for w in &words {
            self.add(&mut v, b'w', w.as_bytes(), WORD_WEIGHT);
            let padded: Vec<char> = format!("#{w}#").chars().collect();
            for tri in padded.windows(3) {
                let s: String = tri.iter().collect();
                self.add(&mut v, b'g', s.as_bytes(), TRIGRAM_WEIGHT);
            }
        }
        if normalize(&mut v).is_none() {
            // Only stopwords or punctuation, or the features cancelled out:
            // fall back to hashing the whole normalized string.
            v.iter_mut().for_each(|x| *x = 0.0);
            let key = trimmed.to_lowercase();
            self.add(&mut v, b's', key.as_bytes(), 1.0);
            normalize(&mut v);
        }
        Ok(v)
    }
}

/// L2-normalizes in place; `None` for a zero (or non-finite) vector.
pub fn normalize(v: &mut [f64]) -> Option<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(norm)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity; a zero vector has similarity 0 with everything.
/// Vectors of different length are compared as if zero-padded.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Cosine mapped from [-1, 1] to [0, 1].
pub fn unit_similarity(a: &[f64], b: &[f64]) -> f64 {
    0.5 * (1.0 + cosine(a, b))
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

/// Client for an external embedding service
/// (`POST {"texts": [...]}` → `{"vectors": [[...]]}`). Any failure falls
/// back to the deterministic hash embedder with a warning.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    url: String,
    fallback: HashEmbedder,
}

impl RemoteEmbedder {
    pub fn new(url: impl Into<String>, dim: usize) -> Self {
        Self {
            url: url.into(),
            fallback: HashEmbedder::new(dim),
        }
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let resp: EmbedResponse = post_json(&self.url, &EmbedRequest { texts })?;
        let dim = resp.vectors.first().map_or(0, Vec::len);
        if resp.vectors.len() != texts.len() || resp.vectors.iter().any(|v| v.len() != self.dim()) {
            return Err(EmbedError::BadResponse {
                got: resp.vectors.len(),
                dim,
                expected: self.dim(),
            });
        }
        let mut out = resp.vectors;
        for v in &mut out {
            if normalize(v).is_none() {
                return Err(EmbedError::BadResponse {
                    got: texts.len(),
                    dim,
                    expected: self.dim(),
                });
            }
        }
        Ok(out)
    }
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.fallback.dim()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        match self.request(texts) {
            Ok(v) => Ok(v),
            Err(e) => {
                log::warn!("embedding service at {} failed ({e}); using hash embedder", self.url);
                self.fallback.embed_batch(texts)
            }
        }
    }
}
