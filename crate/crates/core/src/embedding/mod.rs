//! Embedding vectors, providers and the query algebra.

mod embv1;
mod expr;
mod file;
mod http;
mod mock;

use std::fmt;

use thiserror::Error;

use crate::chem::{canonicalize, parse_reaction, parse_smiles, ReactionError, SmilesError};

pub use embv1::{read_embv1, write_embv1, Embv1, Embv1Error, EMBV1_MAGIC};
pub use expr::{evaluate, Leaf, ProviderSet, QueryExpression};
pub use file::FileProvider;
pub use http::HttpProvider;
pub use mock::MockProvider;

/// Tolerance on `‖v‖₂ − 1` for vectors flagged as normalized.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("vector has no components")]
    EmptyVector,
    #[error("vector has a NaN or infinite component")]
    NonFinite,
    #[error("average over an empty list")]
    EmptyAverage,
    #[error("scale factor {0} is not finite")]
    NonFiniteScale(f64),
    #[error("provider {provider} serves {serves} input, got {given}")]
    ModalityMismatch {
        provider: String,
        serves: Modality,
        given: Modality,
    },
    #[error("no {0} provider bound")]
    NoProvider(Modality),
    #[error("provider failure: {0}")]
    ProviderFailure(#[from] ProviderError),
    #[error("invalid structure: {0}")]
    Structure(#[from] SmilesError),
    #[error("invalid reaction: {0}")]
    Reaction(#[from] ReactionError),
    #[error("compound list is empty")]
    NoCompounds,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("{provider}: no embedding stored for {key:?}")]
    Missing { provider: String, key: String },
    #[error("{provider}: request failed: {detail}")]
    Transport { provider: String, detail: String },
    #[error("{provider}: bad response: {detail}")]
    BadResponse { provider: String, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Text => "text",
            Modality::Image => "image",
        })
    }
}

/// Input handed to a provider. Images carry a name (the key file providers
/// look up) alongside their bytes.
#[derive(Debug, Clone, Copy)]
pub enum ProviderInput<'a> {
    Text(&'a str),
    Image { name: &'a str, bytes: &'a [u8] },
}

impl ProviderInput<'_> {
    pub fn modality(&self) -> Modality {
        match self {
            ProviderInput::Text(_) => Modality::Text,
            ProviderInput::Image { .. } => Modality::Image,
        }
    }
}

/// Source of embeddings for one modality. Implementations must return the
/// same vector for the same input and tolerate concurrent calls.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn modality(&self) -> Modality;
    fn dim(&self) -> usize;
    /// Raw provider output; dimension and finiteness are checked by callers.
    fn embed_raw(&self, input: ProviderInput<'_>) -> Result<Vec<f32>, ProviderError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
    normalized: bool,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::EmptyVector);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(EmbeddingVector {
            values,
            normalized: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    pub(crate) fn from_f64(values: &[f64], normalized: bool) -> Result<Self, EmbeddingError> {
        let mut v = EmbeddingVector::new(values.iter().map(|&x| x as f32).collect())?;
        v.normalized = normalized;
        Ok(v)
    }
}

pub fn l2_normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, EmbeddingError> {
    let values: Vec<f64> = v.values.iter().map(|&x| x as f64).collect();
    EmbeddingVector::from_f64(&normalize_f64(&values)?, true)
}

pub(crate) fn normalize_f64(values: &[f64]) -> Result<Vec<f64>, EmbeddingError> {
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok(values.iter().map(|x| x / norm).collect())
}

fn embed_checked(
    provider: &dyn EmbeddingProvider,
    input: ProviderInput<'_>,
) -> Result<EmbeddingVector, EmbeddingError> {
    if provider.modality() != input.modality() {
        return Err(EmbeddingError::ModalityMismatch {
            provider: provider.name().to_owned(),
            serves: provider.modality(),
            given: input.modality(),
        });
    }
    let values = provider.embed_raw(input)?;
    if values.len() != provider.dim() {
        return Err(EmbeddingError::DimMismatch {
            expected: provider.dim(),
            found: values.len(),
        });
    }
    EmbeddingVector::new(values)
}

pub fn embed_text(provider: &dyn EmbeddingProvider, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
    embed_checked(provider, ProviderInput::Text(text))
}

pub fn embed_image(
    provider: &dyn EmbeddingProvider,
    name: &str,
    bytes: &[u8],
) -> Result<EmbeddingVector, EmbeddingError> {
    embed_checked(provider, ProviderInput::Image { name, bytes })
}

/// Text actually embedded for a structure string: reactions and anything with
/// a wildcard atom are validated and kept verbatim; small molecules are
/// replaced by their canonical SMILES.
pub fn prepare_structure_text(text: &str) -> Result<String, EmbeddingError> {
    if text.contains('>') {
        parse_reaction(text)?;
        return Ok(text.to_owned());
    }
    let graph = parse_smiles(text)?;
    if graph.atoms().iter().any(|a| a.is_wildcard()) {
        return Ok(text.to_owned());
    }
    Ok(canonicalize(&graph))
}

/// Mean of the canonical-SMILES embeddings of every compound in a sample,
/// left unnormalized.
pub fn embed_spectrum_compounds(
    provider: &dyn EmbeddingProvider,
    smiles_list: &[impl AsRef<str>],
) -> Result<EmbeddingVector, EmbeddingError> {
    if smiles_list.is_empty() {
        return Err(EmbeddingError::NoCompounds);
    }
    let mut sum = vec![0f64; provider.dim()];
    for s in smiles_list {
        let canonical = canonicalize(&parse_smiles(s.as_ref())?);
        let v = embed_text(provider, &canonical)?;
        for (acc, &x) in sum.iter_mut().zip(v.values()) {
            *acc += x as f64;
        }
    }
    let k = smiles_list.len() as f64;
    let mean: Vec<f64> = sum.into_iter().map(|x| x / k).collect();
    EmbeddingVector::from_f64(&mean, false)
}

/// Unit direction of `v` scaled to length `weight`. Molecular-weight
/// collections store each compound at its own weight and query at the target
/// weight, so distance reflects both direction and mass.
pub fn weight_scaled(v: &EmbeddingVector, weight: f64) -> Result<EmbeddingVector, EmbeddingError> {
    evaluate(
        &QueryExpression::Scale(
            Box::new(QueryExpression::Normalize(Box::new(QueryExpression::Embed(
                Leaf::Vector(v.values().to_vec()),
            )))),
            weight,
        ),
        &ProviderSet::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let n = l2_normalize(&v(&[3.0, 4.0])).unwrap();
        assert_eq!(n.values(), &[0.6, 0.8]);
        assert!(n.is_normalized());
        let unit = v(&[0.0, 1.0, 0.0]);
        assert_eq!(l2_normalize(&unit).unwrap().values(), unit.values());
        assert!(matches!(l2_normalize(&v(&[0.0, 0.0])), Err(EmbeddingError::ZeroVector)));
    }

    #[test]
    fn rejects_bad_components() {
        assert!(matches!(EmbeddingVector::new(vec![]), Err(EmbeddingError::EmptyVector)));
        assert!(matches!(
            EmbeddingVector::new(vec![f32::NAN]),
            Err(EmbeddingError::NonFinite)
        ));
        assert!(matches!(
            EmbeddingVector::new(vec![1.0, f32::INFINITY]),
            Err(EmbeddingError::NonFinite)
        ));
    }

    #[test]
    fn structure_text_policy() {
        assert_eq!(
            prepare_structure_text("OCC").unwrap(),
            prepare_structure_text("CCO").unwrap()
        );
        assert_eq!(prepare_structure_text("[*:1]CC[*:2]").unwrap(), "[*:1]CC[*:2]");
        assert_eq!(prepare_structure_text("OCC>>CC=O").unwrap(), "OCC>>CC=O");
        assert!(matches!(
            prepare_structure_text("C1CC"),
            Err(EmbeddingError::Structure(_))
        ));
        assert!(matches!(
            prepare_structure_text("C>C"),
            Err(EmbeddingError::Reaction(_))
        ));
    }

    #[test]
    fn weight_scaling() {
        let s = weight_scaled(&v(&[3.0, 4.0]), 180.0).unwrap();
        assert!((s.norm() - 180.0).abs() < 1e-4);
        assert!(!s.is_normalized());
    }
}
