use super::{Embedder, EmbeddingError, ProviderKind};

const BOUNDARY_START: char = '\u{2}';
const BOUNDARY_END: char = '\u{3}';

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgramConfig {
    pub n: usize,
    pub dimension: usize,
    pub seed: u64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        Self {
            n: 3,
            dimension: 256,
            seed: 0x5eed_f00d,
        }
    }
}

/// Hashed character n-gram counts, L2-normalized.
///
/// Text is lowercased and padded with `n - 1` boundary markers on each side,
/// so short strings and word edges still produce grams.
#[derive(Debug, Clone)]
pub struct NgramEmbedder {
    config: NgramConfig,
}

impl NgramEmbedder {
    pub fn new(config: NgramConfig) -> Self {
        assert!(config.n >= 1 && config.dimension >= 1);
        Self { config }
    }

    pub fn config(&self) -> NgramConfig {
        self.config
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let n = self.config.n;
        let chars: Vec<char> = std::iter::repeat_n(BOUNDARY_START, n - 1)
            .chain(text.chars().flat_map(char::to_lowercase))
            .chain(std::iter::repeat_n(BOUNDARY_END, n - 1))
            .collect();
        let mut out = vec![0.0; self.config.dimension];
        let mut buf = [0u8; 4];
        for gram in chars.windows(n) {
            let mut h = fnv_start(self.config.seed);
            for c in gram {
                for b in c.encode_utf8(&mut buf).bytes() {
                    h = fnv_step(h, b);
                }
            }
            out[(h % self.config.dimension as u64) as usize] += 1.0;
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|x| *x /= norm);
        }
        out
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv_start(seed: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes() {
        h = fnv_step(h, b);
    }
    h
}

#[inline]
fn fnv_step(h: u64, byte: u8) -> u64 {
    (h ^ u64::from(byte)).wrapping_mul(FNV_PRIME)
}

impl Embedder for NgramEmbedder {
    fn kind(&self) -> ProviderKind {
        ProviderKind::CharNgram
    }

    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}
