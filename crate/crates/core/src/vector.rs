//! Exact cosine top-k over clip descriptor embeddings.
//!
//! Vectors are unit-normalized on the way in, so cosine similarity is a
//! plain dot product. Search is a full scan; ties are broken by
//! `(video_id, clip_index)` ascending so rankings are deterministic.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::segmentation::Millis;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VectorError {
    #[error("cannot normalize a zero or non-finite vector")]
    ZeroVector,
    #[error("empty vector")]
    Empty,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("clip window start {start}s must precede end {end}s")]
    BadWindow { start: Millis, end: Millis },
}

/// A unit-length embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Scales `values` to unit L2 norm.
    pub fn normalize(values: &[f64]) -> Result<Embedding, VectorError> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        let norm = libm::sqrt(values.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 || !norm.is_finite() {
            return Err(VectorError::ZeroVector);
        }
        Ok(Embedding(values.iter().map(|v| v / norm).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = VectorError;

    /// Vectors that are already unit length (within 1e-9) are kept bit for
    /// bit; anything else is normalized.
    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        if values.is_empty() {
            return Err(VectorError::Empty);
        }
        let norm_sq: f64 = values.iter().map(|v| v * v).sum();
        if (libm::sqrt(norm_sq) - 1.0).abs() <= 1e-9 {
            Ok(Embedding(values))
        } else {
            Embedding::normalize(&values)
        }
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

/// Sequential dot product. Summation order is fixed so every caller sees
/// bit-identical scores.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Cosine similarity of two unit vectors, clamped to `[-1, 1]`.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, VectorError> {
    if a.dim() != b.dim() {
        return Err(VectorError::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(dot(&a.0, &b.0).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClipKey {
    pub video_id: String,
    pub clip_index: u32,
}

impl ClipKey {
    pub fn new(video_id: impl Into<String>, clip_index: u32) -> Self {
        ClipKey { video_id: video_id.into(), clip_index }
    }
}

impl core::fmt::Display for ClipKey {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}#{}", self.video_id, self.clip_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipDescriptor {
    pub video_id: String,
    pub clip_index: u32,
    #[serde(rename = "start_s")]
    pub start: Millis,
    #[serde(rename = "end_s")]
    pub end: Millis,
    pub description: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl ClipDescriptor {
    pub fn key(&self) -> ClipKey {
        ClipKey::new(self.video_id.clone(), self.clip_index)
    }

    pub fn validate(&self) -> Result<(), VectorError> {
        if self.start >= self.end {
            return Err(VectorError::BadWindow { start: self.start, end: self.end });
        }
        Ok(())
    }

    /// True when both descriptors belong to the same video and their time
    /// windows intersect.
    pub fn overlaps(&self, other: &ClipDescriptor) -> bool {
        self.video_id == other.video_id && self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub descriptor: ClipDescriptor,
    pub score: f64,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub descriptor: ClipDescriptor,
    pub embedding: Embedding,
}

/// Exact cosine index keyed by `(video_id, clip_index)`.
#[derive(Debug, Default)]
pub struct VectorIndex {
    dim: Option<usize>,
    entries: BTreeMap<ClipKey, IndexEntry>,
    reads: AtomicUsize,
}

impl Clone for VectorIndex {
    fn clone(&self) -> Self {
        VectorIndex {
            dim: self.dim,
            entries: self.entries.clone(),
            reads: AtomicUsize::new(self.reads.load(AtomicOrdering::Relaxed)),
        }
    }
}

impl PartialEq for VectorIndex {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.entries == other.entries
    }
}

impl VectorIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_dim(dim: usize) -> Self {
        VectorIndex { dim: Some(dim), ..Self::default() }
    }

    /// Dimension fixed by the first insert (or [`VectorIndex::with_dim`]).
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or replaces the entry for the descriptor's key.
    pub fn upsert(&mut self, descriptor: ClipDescriptor, embedding: Embedding) -> Result<(), VectorError> {
        descriptor.validate()?;
        match self.dim {
            Some(d) if d != embedding.dim() => {
                return Err(VectorError::DimensionMismatch { expected: d, actual: embedding.dim() })
            }
            Some(_) => {}
            None => self.dim = Some(embedding.dim()),
        }
        self.entries.insert(descriptor.key(), IndexEntry { descriptor, embedding });
        Ok(())
    }

    pub fn get(&self, key: &ClipKey) -> Option<&IndexEntry> {
        self.entries.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = &IndexEntry> {
        self.entries.values()
    }

    /// Number of search and lookup reads served; used to prove that refused
    /// queries never touch the index.
    pub fn reads(&self) -> usize {
        self.reads.load(AtomicOrdering::Relaxed)
    }

    /// Counted lookup used by the answer pipeline.
    pub fn fetch(&self, key: &ClipKey) -> Option<&IndexEntry> {
        self.reads.fetch_add(1, AtomicOrdering::Relaxed);
        self.entries.get(key)
    }

    /// The `k` most similar entries, optionally restricted to one video.
    pub fn top_k(&self, query: &Embedding, k: usize, video_filter: Option<&str>) -> Result<Vec<RankedHit>, VectorError> {
        self.reads.fetch_add(1, AtomicOrdering::Relaxed);
        if k == 0 || self.entries.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(d) = self.dim {
            if d != query.dim() {
                return Err(VectorError::DimensionMismatch { expected: d, actual: query.dim() });
            }
        }
        let mut scored: Vec<(f64, &IndexEntry)> = self
            .entries
            .values()
            .filter(|e| video_filter.is_none_or(|v| e.descriptor.video_id == v))
            .map(|e| (dot(query.values(), e.embedding.values()).clamp(-1.0, 1.0), e))
            .collect();
        scored.sort_by(|a, b| rank_order(a.0, &a.1.descriptor, b.0, &b.1.descriptor));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (score, e))| RankedHit { descriptor: e.descriptor.clone(), score, rank: i as u32 + 1 })
            .collect())
    }
}

/// Descending score, then `(video_id, clip_index)` ascending.
pub fn rank_order(sa: f64, da: &ClipDescriptor, sb: f64, db: &ClipDescriptor) -> Ordering {
    sb.total_cmp(&sa)
        .then_with(|| da.video_id.cmp(&db.video_id))
        .then_with(|| da.clip_index.cmp(&db.clip_index))
}
