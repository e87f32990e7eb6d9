use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use super::{read_embv1, EmbeddingProvider, Embv1Error, Modality, ProviderError, ProviderInput};

/// Serves precomputed vectors from an EMBV1 file. Text inputs are looked up
/// by the text itself, images by their name. Misses are errors.
#[derive(Debug)]
pub struct FileProvider {
    name: String,
    modality: Modality,
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl FileProvider {
    pub fn open(path: impl AsRef<Path>, modality: Modality) -> Result<Self, Embv1Error> {
        let path = path.as_ref();
        let data = read_embv1(BufReader::new(File::open(path)?))?;
        Ok(FileProvider {
            name: format!("file:{}", path.display()),
            modality,
            dim: data.dim,
            vectors: data.records.into_iter().collect(),
        })
    }

    pub fn from_records(name: &str, modality: Modality, dim: usize, records: Vec<(String, Vec<f32>)>) -> Self {
        FileProvider {
            name: name.to_owned(),
            modality,
            dim,
            vectors: records.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl EmbeddingProvider for FileProvider {
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
        let key = match input {
            ProviderInput::Text(t) => t,
            ProviderInput::Image { name, .. } => name,
        };
        self.vectors.get(key).cloned().ok_or_else(|| ProviderError::Missing {
            provider: self.name.clone(),
            key: key.to_owned(),
        })
    }
}
