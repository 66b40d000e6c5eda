//! Keyword semantic vectors and similarity.
//!
//! Searches never call out to a network: they read an [`EmbeddingStore`]
//! holding keyword-level and node-level vectors. Stores come from a vectors
//! file written ahead of time (possibly by the optional [`remote`] pipeline)
//! or from the deterministic [`hash_embed`] provider, which derives a unit
//! vector from a stable hash of the keyword so that runs are reproducible
//! on any platform.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SocialNodeId;

#[cfg(feature = "remote")]
pub mod remote;

/// A fixed-dimension semantic vector. The zero vector is reserved as the
/// sentinel for empty keyword sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn zero(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Scale to unit length; the zero vector stays zero.
    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for x in &mut self.0 {
                *x /= n;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("no embedding available for any of the keywords {0:?}")]
    MissingKeywords(Vec<String>),
    #[error("no embedding available for social node {0}")]
    MissingNode(SocialNodeId),
    #[error("keyword set is empty")]
    EmptyKeywordSet,
}

/// Cosine similarity. Returns 0 when either vector is zero.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SemanticsError> {
    if a.dimension() != b.dimension() {
        return Err(SemanticsError::DimensionMismatch {
            left: a.dimension(),
            right: b.dimension(),
        });
    }
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

/// Canonical keyword form used for lookups and hashing: trimmed, lowercased.
pub fn normalize_keyword(kw: &str) -> String {
    kw.trim().to_lowercase()
}

/// FNV-1a 64-bit hash; stable across runs and platforms.
pub fn stable_hash64(s: &str) -> u64 {
    stable_hash_bytes(s.as_bytes())
}

/// FNV-1a 64-bit over raw bytes (file checksums).
pub fn stable_hash_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Key under which a whole keyword set's vector is stored: the stable hash
/// of the sorted, normalized keywords joined by a separator, in hex.
pub fn set_key(keywords: &BTreeSet<String>) -> String {
    let normalized: BTreeSet<String> = keywords.iter().map(|k| normalize_keyword(k)).collect();
    let joined = normalized.into_iter().collect::<Vec<_>>().join("\u{1f}");
    format!("{:016x}", stable_hash64(&joined))
}

/// Deterministic fallback embedding: a unit vector drawn from a ChaCha
/// stream seeded by the keyword's stable hash and the store seed. The same
/// keyword (after normalization) always maps to the same vector.
pub fn hash_embed(keyword: &str, dimension: usize, seed: u64) -> EmbeddingVector {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    debug_assert!(dimension >= 2);
    let h = stable_hash64(&normalize_keyword(keyword));
    let mut seed_bytes = [0u8; 32];
    seed_bytes[0..8].copy_from_slice(&h.to_le_bytes());
    seed_bytes[8..16].copy_from_slice(&seed.to_le_bytes());
    seed_bytes[16..24].copy_from_slice(&h.rotate_left(32).to_le_bytes());
    seed_bytes[24..32].copy_from_slice(&(h ^ seed).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed_bytes);
    let mut v: Vec<f64> = (0..dimension).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    } else {
        v[0] = 1.0;
    }
    EmbeddingVector(v)
}

/// Default dimension of the hash provider when no vectors file fixes one.
pub const DEFAULT_HASH_DIMENSION: usize = 64;

/// Keyword-level, node-level, and set-level vectors with a single dimension.
///
/// With a hash fallback configured, any keyword resolves; otherwise lookups
/// are limited to the stored entries.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dimension: usize,
    node_vectors: BTreeMap<SocialNodeId, EmbeddingVector>,
    keyword_vectors: BTreeMap<String, EmbeddingVector>,
    set_vectors: BTreeMap<String, EmbeddingVector>,
    hash_seed: Option<u64>,
}

impl EmbeddingStore {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            node_vectors: BTreeMap::new(),
            keyword_vectors: BTreeMap::new(),
            set_vectors: BTreeMap::new(),
            hash_seed: None,
        }
    }

    /// A store that derives any missing keyword vector with [`hash_embed`].
    pub fn with_hash_fallback(dimension: usize, seed: u64) -> Self {
        let mut s = Self::new(dimension);
        s.hash_seed = Some(seed);
        s
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn hash_seed(&self) -> Option<u64> {
        self.hash_seed
    }

    fn check_dimension(&self, v: &EmbeddingVector) -> Result<(), SemanticsError> {
        if v.dimension() != self.dimension {
            return Err(SemanticsError::DimensionMismatch {
                left: v.dimension(),
                right: self.dimension,
            });
        }
        Ok(())
    }

    pub fn insert_keyword(
        &mut self,
        keyword: &str,
        v: EmbeddingVector,
    ) -> Result<(), SemanticsError> {
        self.check_dimension(&v)?;
        self.keyword_vectors.insert(normalize_keyword(keyword), v);
        Ok(())
    }

    pub fn insert_node(
        &mut self,
        id: SocialNodeId,
        v: EmbeddingVector,
    ) -> Result<(), SemanticsError> {
        self.check_dimension(&v)?;
        self.node_vectors.insert(id, v);
        Ok(())
    }

    pub fn insert_set(&mut self, key: String, v: EmbeddingVector) -> Result<(), SemanticsError> {
        self.check_dimension(&v)?;
        self.set_vectors.insert(key, v);
        Ok(())
    }

    pub fn keyword_entries(&self) -> impl Iterator<Item = (&String, &EmbeddingVector)> {
        self.keyword_vectors.iter()
    }

    pub fn node_entries(&self) -> impl Iterator<Item = (&SocialNodeId, &EmbeddingVector)> {
        self.node_vectors.iter()
    }

    pub fn set_entries(&self) -> impl Iterator<Item = (&String, &EmbeddingVector)> {
        self.set_vectors.iter()
    }

    /// Vector for one keyword: the stored entry, else the hash fallback.
    pub fn keyword_vector(&self, keyword: &str) -> Option<EmbeddingVector> {
        let norm = normalize_keyword(keyword);
        if let Some(v) = self.keyword_vectors.get(&norm) {
            return Some(v.clone());
        }
        self.hash_seed
            .map(|seed| hash_embed(&norm, self.dimension, seed))
    }

    /// Node-level vector. Nodes with keywords must have one (stores are
    /// completed against the social network at load time); keywordless
    /// nodes hold the zero sentinel.
    pub fn node_vector(&self, id: SocialNodeId) -> Result<&EmbeddingVector, SemanticsError> {
        self.node_vectors
            .get(&id)
            .ok_or(SemanticsError::MissingNode(id))
    }

    /// Vector for a whole query keyword set: the stored set-level entry if
    /// present, else the normalized mean of the resolvable keyword vectors.
    pub fn query_vector(
        &self,
        keywords: &BTreeSet<String>,
    ) -> Result<EmbeddingVector, SemanticsError> {
        if keywords.is_empty() {
            return Err(SemanticsError::EmptyKeywordSet);
        }
        if let Some(v) = self.set_vectors.get(&set_key(keywords)) {
            return Ok(v.clone());
        }
        self.mean_keyword_vector(keywords)?
            .ok_or_else(|| SemanticsError::MissingKeywords(keywords.iter().cloned().collect()))
    }

    /// Normalized mean over the resolvable keyword vectors; `None` when no
    /// keyword resolves, `Some(zero)` never happens for non-empty input.
    fn mean_keyword_vector(
        &self,
        keywords: &BTreeSet<String>,
    ) -> Result<Option<EmbeddingVector>, SemanticsError> {
        let mut sum = vec![0.0; self.dimension];
        let mut count = 0usize;
        for kw in keywords {
            if let Some(v) = self.keyword_vector(kw) {
                self.check_dimension(&v)?;
                for (s, x) in sum.iter_mut().zip(v.as_slice()) {
                    *s += x;
                }
                count += 1;
            }
        }
        if count == 0 {
            return Ok(None);
        }
        for s in &mut sum {
            *s /= count as f64;
        }
        Ok(Some(EmbeddingVector(sum).normalized()))
    }

    /// Derive and insert node-level vectors for every social node that does
    /// not already have one: the normalized mean of its keyword vectors, or
    /// the zero sentinel for keywordless nodes.
    pub fn ensure_node_vectors(
        &mut self,
        social: &crate::model::AttributedSocialNetwork,
    ) -> Result<(), SemanticsError> {
        for node in social.nodes() {
            if self.node_vectors.contains_key(&node.id) {
                continue;
            }
            let v = if node.keywords.is_empty() {
                EmbeddingVector::zero(self.dimension)
            } else {
                self.mean_keyword_vector(&node.keywords)?.ok_or_else(|| {
                    SemanticsError::MissingKeywords(node.keywords.iter().cloned().collect())
                })?
            };
            self.node_vectors.insert(node.id, v);
        }
        Ok(())
    }

    /// Normalized mean of the member node vectors, excluding zero-vector
    /// members; the zero vector when every member lacks keywords.
    pub fn community_vector<'a, I>(&self, members: I) -> Result<EmbeddingVector, SemanticsError>
    where
        I: IntoIterator<Item = &'a SocialNodeId>,
    {
        let mut sum = vec![0.0; self.dimension];
        let mut count = 0usize;
        for &id in members {
            let v = self.node_vector(id)?;
            if v.is_zero() {
                continue;
            }
            for (s, x) in sum.iter_mut().zip(v.as_slice()) {
                *s += x;
            }
            count += 1;
        }
        if count == 0 {
            return Ok(EmbeddingVector::zero(self.dimension));
        }
        for s in &mut sum {
            *s /= count as f64;
        }
        Ok(EmbeddingVector(sum).normalized())
    }

    /// Best cosine over all (node keyword, query keyword) vector pairs;
    /// 0 when either side is empty or nothing resolves.
    pub fn node_best_keyword_sim(
        &self,
        node_keywords: &BTreeSet<String>,
        query_keywords: &BTreeSet<String>,
    ) -> Result<f64, SemanticsError> {
        let node_vecs: Vec<EmbeddingVector> = node_keywords
            .iter()
            .filter_map(|k| self.keyword_vector(k))
            .collect();
        let query_vecs: Vec<EmbeddingVector> = query_keywords
            .iter()
            .filter_map(|k| self.keyword_vector(k))
            .collect();
        if node_vecs.is_empty() || query_vecs.is_empty() {
            return Ok(0.0);
        }
        let mut best = f64::NEG_INFINITY;
        for a in &node_vecs {
            for b in &query_vecs {
                best = best.max(cosine(a, b)?);
            }
        }
        Ok(best)
    }
}
