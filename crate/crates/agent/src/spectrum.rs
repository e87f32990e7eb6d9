//! Spectrum manifest entries and the linked record pair each one becomes.
//!
//! The image record carries the caption rendered at ingest time, so reports
//! never need the raw acquisition metadata. It links to a compound record
//! whose vector is the mean embedding of the sample's structures.

use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

use chemvecrag_core::embedding::{embed_spectrum_compounds, EmbeddingError, EmbeddingProvider};
use chemvecrag_core::store::{
    CollectionRecord, CollectionSchema, FieldType, IndexKind, Link, MetaValue, Metadata, PayloadKind,
};

use crate::caption::{generate_caption, CaptionError};
use crate::retrieve::image_vector;

/// One line of a spectrum manifest.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SpectrumEntry {
    pub id: String,
    pub image_path: String,
    pub smiles_list: Vec<String>,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("{id}: {source}")]
    Caption { id: String, source: CaptionError },
    #[error("{id}: {source}")]
    Embedding { id: String, source: EmbeddingError },
}

pub fn spectrum_schema(name: &str, dim: usize, index: IndexKind) -> CollectionSchema {
    CollectionSchema::new(name, dim, index, PayloadKind::ImageRef)
        .with_field("caption", FieldType::String)
        .with_field("peaks", FieldType::String)
}

pub fn compound_schema(name: &str, dim: usize, index: IndexKind) -> CollectionSchema {
    CollectionSchema::new(name, dim, index, PayloadKind::Smiles).with_field("spectrum", FieldType::String)
}

pub fn compound_record_id(spectrum_id: &str) -> String {
    format!("{spectrum_id}/compounds")
}

/// Peaks as they appear in captions and reports.
fn peak_text(meta: &Map<String, Value>) -> String {
    match meta.get("peaks") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect::<Vec<_>>()
            .join(", "),
        _ => String::new(),
    }
}

/// Builds the (spectrum, compound) records for one entry. Insert the
/// compound record first: the spectrum record links to it.
pub fn spectrum_records(
    entry: &SpectrumEntry,
    image_bytes: &[u8],
    image_provider: &dyn EmbeddingProvider,
    text_provider: &dyn EmbeddingProvider,
    compounds_collection: &str,
) -> Result<(CollectionRecord, CollectionRecord), SpectrumError> {
    let id = entry.id.clone();
    let caption = generate_caption(&entry.meta).map_err(|source| SpectrumError::Caption { id: id.clone(), source })?;
    let embedding = |source| SpectrumError::Embedding { id: id.clone(), source };
    let image = image_vector(image_provider, &entry.image_path, image_bytes).map_err(embedding)?;
    let compounds = embed_spectrum_compounds(text_provider, &entry.smiles_list).map_err(embedding)?;

    let compound_id = compound_record_id(&entry.id);
    let mut spectrum_meta = Metadata::new();
    spectrum_meta.insert("caption".into(), MetaValue::Str(caption));
    spectrum_meta.insert("peaks".into(), MetaValue::Str(peak_text(&entry.meta)));
    let mut compound_meta = Metadata::new();
    compound_meta.insert("spectrum".into(), MetaValue::Str(entry.id.clone()));

    let compound = CollectionRecord {
        id: compound_id.clone(),
        vector: compounds.into_values(),
        payload: entry.smiles_list.join(";"),
        metadata: compound_meta,
        links: vec![],
    };
    let spectrum = CollectionRecord {
        id: entry.id.clone(),
        vector: image,
        payload: entry.image_path.clone(),
        metadata: spectrum_meta,
        links: vec![Link::new(compounds_collection, &compound_id)],
    };
    Ok((spectrum, compound))
}
