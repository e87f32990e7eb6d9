use std::collections::BTreeMap;
use std::hash::Hasher;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbeddingProvider, Modality, ProviderError, ProviderInput};

const PROJECTION_SEED: u64 = 0x6d6f_636b_5f70_726a;

/// Deterministic pseudo-embeddings with no external dependency.
///
/// Text is split into character 1-, 2- and 3-grams, images into 4-byte
/// shingles. Each feature is hashed to a signed bucket, and the bucket counts
/// are multiplied by a fixed ±1/√dim random matrix. Inputs sharing features
/// land near each other.
pub struct MockProvider {
    name: String,
    modality: Modality,
    dim: usize,
    /// Sign bits of the projection, column-major: bit `j * dim + i` is entry (i, j).
    signs: Vec<u64>,
}

impl MockProvider {
    pub fn new(modality: Modality, dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(PROJECTION_SEED);
        let signs = (0..(dim * dim).div_ceil(64)).map(|_| rng.next_u64()).collect();
        MockProvider {
            name: format!("mock-{modality}-{dim}"),
            modality,
            dim,
            signs,
        }
    }

    fn sign(&self, row: usize, col: usize) -> f64 {
        let bit = col * self.dim + row;
        if self.signs[bit / 64] >> (bit % 64) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    fn features(&self, input: ProviderInput<'_>) -> BTreeMap<usize, f64> {
        let mut buckets = BTreeMap::new();
        let mut add = |gram: &[u8]| {
            let mut h = fnv::FnvHasher::default();
            h.write(gram);
            let hash = h.finish();
            let sign = if hash >> 63 == 0 { 1.0 } else { -1.0 };
            *buckets.entry((hash % self.dim as u64) as usize).or_insert(0.0) += sign;
        };
        match input {
            ProviderInput::Text(text) => {
                let chars: Vec<char> = text.chars().collect();
                for n in 1..=3 {
                    for w in chars.windows(n) {
                        let gram: String = w.iter().collect();
                        add(gram.as_bytes());
                    }
                }
            }
            ProviderInput::Image { bytes, .. } => {
                if bytes.len() < 4 {
                    add(bytes);
                }
                for w in bytes.windows(4) {
                    add(w);
                }
            }
        }
        buckets
    }
}

impl EmbeddingProvider for MockProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn modality(&self) -> Modality {
        self.modality
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_raw(&self, input: ProviderInput<'_>) -> Result<Vec<f32>, ProviderError> {
        let scale = 1.0 / (self.dim as f64).sqrt();
        let mut out = vec![0f64; self.dim];
        for (col, weight) in self.features(input) {
            for (row, acc) in out.iter_mut().enumerate() {
                *acc += weight * self.sign(row, col);
            }
        }
        Ok(out.into_iter().map(|x| (x * scale) as f32).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{embed_image, embed_text, EmbeddingError};

    fn cosine(a: &[f32], b: &[f32]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
        let na: f64 = a.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn deterministic_across_instances() {
        let a = embed_text(&MockProvider::new(Modality::Text, 64), "CCO").unwrap();
        let b = embed_text(&MockProvider::new(Modality::Text, 64), "CCO").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_inputs_are_separated() {
        let p = MockProvider::new(Modality::Text, 256);
        let a = embed_text(&p, "CCO").unwrap();
        let b = embed_text(&p, "c1ccccc1").unwrap();
        assert!(cosine(a.values(), b.values()) < 0.99);
    }

    #[test]
    fn shared_ngrams_are_closer() {
        let p = MockProvider::new(Modality::Text, 256);
        let base = embed_text(&p, "CCCCCCO").unwrap();
        let near = embed_text(&p, "CCCCCCCO").unwrap();
        let far = embed_text(&p, "c1ccncc1").unwrap();
        assert!(cosine(base.values(), near.values()) > cosine(base.values(), far.values()));
    }

    #[test]
    fn modality_is_enforced() {
        let p = MockProvider::new(Modality::Image, 16);
        assert!(matches!(
            embed_text(&p, "CCO"),
            Err(EmbeddingError::ModalityMismatch { .. })
        ));
        let v = embed_image(&p, "a.png", &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(v.dim(), 16);
    }
}
