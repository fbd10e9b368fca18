//! Cell-value embeddings and cosine distance.
//!
//! An [`EmbeddingProvider`] wraps one [`Embedder`] backend with an exact-string
//! cache. Three backends ship: hashed character n-grams (deterministic, no
//! model), a synonym dictionary used by fixtures, and an HTTP client for an
//! external embedding service.

mod dictionary;
mod ngram;
#[cfg(feature = "remote")]
mod remote;

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

pub use dictionary::DictionaryEmbedder;
pub use ngram::{NgramConfig, NgramEmbedder};
#[cfg(feature = "remote")]
pub use remote::{RemoteConfig, RemoteEmbedder};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("text #{index} is blank")]
    BlankText { index: usize },
    /// Transport failure; the batch can be resubmitted as is.
    #[error("embedding request failed ({reason}){}", retry_note(batch))]
    Retriable { batch: Vec<String>, reason: String },
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding service returned {found} vectors for {expected} texts")]
    CountMismatch { expected: usize, found: usize },
    #[error("embedding provider misconfigured: {0}")]
    Config(String),
}

fn retry_note(batch: &[String]) -> String {
    match batch.len() {
        0 => String::new(),
        n => format!("; {n} texts can be retried"),
    }
}

impl EmbeddingError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, EmbeddingError::Retriable { .. })
    }
}

/// Fixed-dimension real vector with its cached Euclidean norm.
#[derive(Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Arc<[f64]>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = dot(&values, &values).sqrt();
        Self {
            values: values.into(),
            norm,
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.values.iter().map(|x| x * factor).collect())
    }
}

impl fmt::Debug for EmbeddingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingVector")
            .field("dimension", &self.values.len())
            .field("norm", &self.norm)
            .finish()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the loop vectorize.
    let mut acc = [0.0f64; 4];
    let (ac, ar) = a.split_at(a.len() - a.len() % 4);
    let (bc, br) = b.split_at(b.len() - b.len() % 4);
    for (x, y) in ac.chunks_exact(4).zip(bc.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ar.iter().zip(br).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`. A zero vector is at distance 2
/// from everything, so it never matches.
///
/// Panics if the dimensions differ.
pub fn cosine_distance(u: &EmbeddingVector, v: &EmbeddingVector) -> f64 {
    assert_eq!(
        u.dimension(),
        v.dimension(),
        "cosine distance between vectors of different dimension"
    );
    if u.norm == 0.0 || v.norm == 0.0 {
        return 2.0;
    }
    let sim = dot(&u.values, &v.values) / (u.norm * v.norm);
    (1.0 - sim).clamp(0.0, 2.0)
}

/// Which backend a provider wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    CharNgram,
    Dictionary,
    Remote,
}

/// A source of raw vectors. Implementations must be deterministic: the same
/// text always maps to the same vector.
pub trait Embedder: Send + Sync {
    fn kind(&self) -> ProviderKind;
    fn dimension(&self) -> usize;
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
    pub entries: usize,
}

/// Embedding backend plus a per-instance cache keyed by exact string.
pub struct EmbeddingProvider {
    backend: Box<dyn Embedder>,
    cache: Mutex<HashMap<String, EmbeddingVector>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl fmt::Debug for EmbeddingProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EmbeddingProvider")
            .field("kind", &self.backend.kind())
            .field("dimension", &self.backend.dimension())
            .finish()
    }
}

impl EmbeddingProvider {
    pub fn new(backend: impl Embedder + 'static) -> Self {
        Self {
            backend: Box::new(backend),
            cache: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    /// Character trigrams hashed into 256 buckets.
    pub fn ngram() -> Self {
        Self::new(NgramEmbedder::new(NgramConfig::default()))
    }

    pub fn kind(&self) -> ProviderKind {
        self.backend.kind()
    }

    pub fn dimension(&self) -> usize {
        self.backend.dimension()
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.cache.lock().expect("cache lock").len(),
        }
    }

    /// One vector per input text, in order. Only texts missing from the
    /// cache reach the backend, each at most once per call.
    pub fn embed_batch<S: AsRef<str>>(
        &self,
        texts: &[S],
    ) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        if let Some(index) = texts.iter().position(|t| t.as_ref().trim().is_empty()) {
            return Err(EmbeddingError::BlankText { index });
        }
        let mut missing: Vec<&str> = Vec::new();
        {
            let cache = self.cache.lock().expect("cache lock");
            let mut queued = std::collections::HashSet::new();
            for text in texts {
                let text = text.as_ref();
                if !cache.contains_key(text) && queued.insert(text) {
                    missing.push(text);
                }
            }
        }
        self.misses.fetch_add(missing.len(), Ordering::Relaxed);
        self.hits
            .fetch_add(texts.len() - missing.len(), Ordering::Relaxed);

        if !missing.is_empty() {
            let raw = self.backend.embed(&missing)?;
            if raw.len() != missing.len() {
                return Err(EmbeddingError::CountMismatch {
                    expected: missing.len(),
                    found: raw.len(),
                });
            }
            let dim = self.backend.dimension();
            if let Some(bad) = raw.iter().find(|v| v.len() != dim) {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: dim,
                    found: bad.len(),
                });
            }
            let mut cache = self.cache.lock().expect("cache lock");
            for (text, values) in missing.iter().zip(raw) {
                cache
                    .entry(text.to_string())
                    .or_insert_with(|| EmbeddingVector::new(values));
            }
        }

        let cache = self.cache.lock().expect("cache lock");
        Ok(texts.iter().map(|t| cache[t.as_ref()].clone()).collect())
    }

    pub fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(xs.to_vec())
    }

    #[test]
    fn distance_identity_orthogonal_antipodal() {
        let u = v(&[0.3, -1.2, 4.0]);
        assert!(cosine_distance(&u, &u).abs() < 1e-12);
        assert_eq!(cosine_distance(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])), 1.0);
        assert_eq!(cosine_distance(&v(&[1.0, 0.0]), &v(&[-1.0, 0.0])), 2.0);
    }

    #[test]
    fn zero_vector_is_maximally_distant() {
        let zero = v(&[0.0, 0.0]);
        assert_eq!(zero.norm(), 0.0);
        assert_eq!(cosine_distance(&zero, &v(&[1.0, 1.0])), 2.0);
        assert_eq!(cosine_distance(&zero, &zero), 2.0);
    }

    #[test]
    #[should_panic(expected = "different dimension")]
    fn dimension_mismatch_panics() {
        cosine_distance(&v(&[1.0]), &v(&[1.0, 0.0]));
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (1..=7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 140.0);
    }

    struct Counting(std::sync::atomic::AtomicUsize);

    impl Embedder for Counting {
        fn kind(&self) -> ProviderKind {
            ProviderKind::CharNgram
        }
        fn dimension(&self) -> usize {
            2
        }
        fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
            self.0.fetch_add(texts.len(), Ordering::SeqCst);
            Ok(texts.iter().map(|t| vec![t.len() as f64, 1.0]).collect())
        }
    }

    #[test]
    fn repeat_calls_hit_the_cache() {
        let provider = EmbeddingProvider::new(Counting(AtomicUsize::new(0)));
        let a = provider.embed_batch(&["Berlin", "Berlin"]).unwrap();
        assert_eq!(a[0], a[1]);
        let b = provider.embed_batch(&["Berlin"]).unwrap();
        assert_eq!(a[0], b[0]);
        let stats = provider.stats();
        assert_eq!(stats.misses, 1);
        assert_eq!(stats.hits, 2);
        assert_eq!(stats.entries, 1);
    }

    #[test]
    fn blank_text_is_rejected() {
        let provider = EmbeddingProvider::ngram();
        assert!(matches!(
            provider.embed_batch(&["ok", "  "]),
            Err(EmbeddingError::BlankText { index: 1 })
        ));
        assert!(provider.embed_batch::<&str>(&[]).unwrap().is_empty());
    }

    struct WrongDim;

    impl Embedder for WrongDim {
        fn kind(&self) -> ProviderKind {
            ProviderKind::Remote
        }
        fn dimension(&self) -> usize {
            3
        }
        fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
            Ok(texts.iter().map(|_| vec![1.0]).collect())
        }
    }

    #[test]
    fn backend_dimension_mismatch_is_fatal() {
        let provider = EmbeddingProvider::new(WrongDim);
        let err = provider.embed_batch(&["x"]).unwrap_err();
        assert!(matches!(
            err,
            EmbeddingError::DimensionMismatch {
                expected: 3,
                found: 1
            }
        ));
        assert!(!err.is_retriable());
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 6)
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(a in vec_strategy(), b in vec_strategy()) {
            let (u, w) = (v(&a), v(&b));
            prop_assert_eq!(cosine_distance(&u, &w).to_bits(), cosine_distance(&w, &u).to_bits());
        }

        #[test]
        fn distance_is_scale_invariant(a in vec_strategy(), b in vec_strategy(), alpha in 0.01f64..100.0) {
            let (u, w) = (v(&a), v(&b));
            prop_assume!(u.norm() > 1e-3 && w.norm() > 1e-3);
            let d1 = cosine_distance(&u.scaled(alpha), &w);
            let d0 = cosine_distance(&u, &w);
            prop_assert!((d1 - d0).abs() <= 1e-9);
            prop_assert!((0.0..=2.0).contains(&d0));
        }
    }
}
