use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Embedder, EmbeddingError, ProviderKind};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Service root, e.g. `http://127.0.0.1:8000`.
    pub url: String,
    /// Expected dimension; when `None` it is read from `GET /info`.
    pub dimension: Option<usize>,
    pub timeout: Duration,
    /// Extra attempts after the first failure of a batch.
    pub retries: usize,
    pub batch_size: usize,
    /// Maximum batches in flight at once.
    pub parallelism: usize,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            dimension: None,
            timeout: Duration::from_secs(30),
            retries: 2,
            batch_size: 64,
            parallelism: 4,
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f64>>,
    dim: usize,
}

#[derive(Deserialize)]
struct InfoResponse {
    dim: usize,
}

/// Client for an embedding service speaking
/// `POST /embed {"texts": [...]} -> {"embeddings": [[...]], "dim": d}`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    config: RemoteConfig,
    dimension: usize,
    agent: ureq::Agent,
}

impl RemoteEmbedder {
    pub fn connect(config: RemoteConfig) -> Result<Self, EmbeddingError> {
        if config.batch_size == 0 || config.parallelism == 0 {
            return Err(EmbeddingError::Config(
                "batch size and parallelism must be positive".into(),
            ));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        let dimension = match config.dimension {
            Some(d) => d,
            None => {
                let url = format!("{}/info", config.url.trim_end_matches('/'));
                let info: InfoResponse = agent
                    .get(&url)
                    .call()
                    .and_then(|mut r| r.body_mut().read_json())
                    .map_err(|e| classify(e, Vec::new()))?;
                info.dim
            }
        };
        Ok(Self {
            config,
            dimension,
            agent,
        })
    }

    fn embed_one_batch(&self, batch: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        let url = format!("{}/embed", self.config.url.trim_end_matches('/'));
        let mut attempt = 0;
        loop {
            let result = self
                .agent
                .post(&url)
                .send_json(EmbedRequest { texts: batch })
                .and_then(|mut r| r.body_mut().read_json::<EmbedResponse>());
            match result {
                Ok(resp) => return self.check(batch.len(), resp),
                Err(e) => {
                    let err = classify(e, batch.iter().map(|s| s.to_string()).collect());
                    if !err.is_retriable() || attempt >= self.config.retries {
                        return Err(err);
                    }
                    attempt += 1;
                }
            }
        }
    }

    fn check(&self, expected: usize, resp: EmbedResponse) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        if resp.dim != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dimension,
                found: resp.dim,
            });
        }
        if resp.embeddings.len() != expected {
            return Err(EmbeddingError::CountMismatch {
                expected,
                found: resp.embeddings.len(),
            });
        }
        if let Some(v) = resp.embeddings.iter().find(|v| v.len() != self.dimension) {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dimension,
                found: v.len(),
            });
        }
        Ok(resp.embeddings)
    }
}

fn classify(err: ureq::Error, batch: Vec<String>) -> EmbeddingError {
    use ureq::Error as E;
    match err {
        E::StatusCode(code) if code >= 500 => EmbeddingError::Retriable {
            batch,
            reason: format!("HTTP {code}"),
        },
        E::Io(_) | E::Timeout(_) | E::HostNotFound | E::ConnectionFailed | E::Protocol(_) => {
            EmbeddingError::Retriable {
                batch,
                reason: err.to_string(),
            }
        }
        other => EmbeddingError::Config(other.to_string()),
    }
}

impl Embedder for RemoteEmbedder {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Remote
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        let batches: Vec<&[&str]> = texts.chunks(self.config.batch_size).collect();
        let mut out = Vec::with_capacity(texts.len());
        for wave in batches.chunks(self.config.parallelism) {
            let results: Vec<_> = thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|batch| s.spawn(move || self.embed_one_batch(batch)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("embedding worker panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}
