use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::{Embedder, EmbeddingError, NgramConfig, NgramEmbedder, ProviderKind};

/// Synonym groups mapped to shared one-hot vectors.
///
/// Every member of group `k` embeds to the unit vector `e_k`. Values outside
/// all groups fall back to a character n-gram vector in a separate block, so
/// they are orthogonal to every group (distance 1) while still comparing to
/// each other by surface form.
#[derive(Debug, Clone)]
pub struct DictionaryEmbedder {
    group_of: HashMap<String, usize>,
    groups: usize,
    fallback: NgramEmbedder,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DictionaryFile {
    Groups(Vec<Vec<String>>),
    Wrapped { groups: Vec<Vec<String>> },
}

impl DictionaryEmbedder {
    pub fn new<G, S>(groups: G) -> Result<Self, EmbeddingError>
    where
        G: IntoIterator,
        G::Item: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut group_of = HashMap::new();
        let mut count = 0;
        for (k, group) in groups.into_iter().enumerate() {
            for value in group {
                let value = value.into();
                if let Some(prev) = group_of.insert(value.clone(), k) {
                    if prev != k {
                        return Err(EmbeddingError::Config(format!(
                            "{value:?} appears in synonym groups {prev} and {k}"
                        )));
                    }
                }
            }
            count = k + 1;
        }
        Ok(Self {
            group_of,
            groups: count,
            fallback: NgramEmbedder::new(NgramConfig::default()),
        })
    }

    /// Reads `[["Berlin", "Berlinn"], ...]` or `{"groups": [...]}`.
    pub fn from_json(text: &str) -> Result<Self, EmbeddingError> {
        let parsed: DictionaryFile = serde_json::from_str(text)
            .map_err(|e| EmbeddingError::Config(format!("synonym dictionary: {e}")))?;
        let groups = match parsed {
            DictionaryFile::Groups(g) | DictionaryFile::Wrapped { groups: g } => g,
        };
        Self::new(groups)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EmbeddingError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn group(&self, value: &str) -> Option<usize> {
        self.group_of.get(value).copied()
    }

    fn vector(&self, text: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        match self.group_of.get(text) {
            Some(&k) => out[k] = 1.0,
            None => out[self.groups..].copy_from_slice(&self.fallback.vector(text)),
        }
        out
    }
}

impl Embedder for DictionaryEmbedder {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Dictionary
    }

    fn dimension(&self) -> usize {
        self.groups + self.fallback.config().dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}
