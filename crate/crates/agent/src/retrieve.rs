//! Turning a question into store hits for one worker.
//!
//! Structure collections hold unit-length text embeddings of the prepared
//! structure string; spectrum collections hold raw image embeddings. Ingest
//! and retrieval both go through [`structure_vector`] and [`image_vector`] so
//! the two sides cannot drift apart.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use chemvecrag_core::embedding::{
    embed_image, embed_text, l2_normalize, prepare_structure_text, EmbeddingError, EmbeddingProvider,
};
use chemvecrag_core::store::{LinkedRecord, Metadata, SearchHit, SearchOptions, Store};

use crate::extract::{extract_structures, image_paths};
use crate::worker::Worker;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    pub collection: String,
    pub id: String,
    pub payload: String,
    pub metadata: Metadata,
    pub l2_distance: f32,
    /// Records reachable through links, filled for spectrum hits.
    pub linked: Vec<LinkedRecord>,
}

impl Document {
    pub fn from_hit(collection: &str, hit: SearchHit) -> Self {
        Document {
            collection: collection.to_owned(),
            id: hit.id,
            payload: hit.payload,
            metadata: hit.metadata,
            l2_distance: hit.l2_distance,
            linked: Vec::new(),
        }
    }
}

/// What the question was searched with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum QueryPayload {
    Smiles(String),
    Reaction(String),
    Image(String),
    /// Free text, used when a spectrum question names no image.
    Text(String),
}

impl QueryPayload {
    pub fn value(&self) -> &str {
        match self {
            QueryPayload::Smiles(s) | QueryPayload::Reaction(s) | QueryPayload::Image(s) | QueryPayload::Text(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub docs: Vec<Document>,
    pub payload: QueryPayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrieveError {
    #[error("no query payload: {0}")]
    NoQueryPayload(String),
    #[error("store unavailable: {0}")]
    StoreUnavailable(String),
    #[error("image: {0}")]
    Image(String),
    #[error("embedding: {0}")]
    Embedding(String),
}

impl From<EmbeddingError> for RetrieveError {
    fn from(e: EmbeddingError) -> Self {
        RetrieveError::Embedding(e.to_string())
    }
}

pub trait Retriever: Send + Sync {
    fn retrieve(&self, worker: Worker, question: &str, k: usize) -> Result<Retrieval, RetrieveError>;
}

/// Unit-length embedding of a molecule, polymer or reaction string.
pub fn structure_vector(provider: &dyn EmbeddingProvider, structure: &str) -> Result<Vec<f32>, EmbeddingError> {
    let text = prepare_structure_text(structure)?;
    Ok(l2_normalize(&embed_text(provider, &text)?)?.into_values())
}

/// Raw image embedding; spectrum vectors are deliberately left unnormalized.
pub fn image_vector(provider: &dyn EmbeddingProvider, name: &str, bytes: &[u8]) -> Result<Vec<f32>, EmbeddingError> {
    Ok(embed_image(provider, name, bytes)?.into_values())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkerCollections {
    pub small_molecule: String,
    pub polymer: String,
    pub reaction: String,
    /// Spectrum images, linked to their compound records.
    pub nmr: String,
    /// Caption text embeddings searched when a spectrum question has no image.
    pub nmr_captions: Option<String>,
}

impl Default for WorkerCollections {
    fn default() -> Self {
        WorkerCollections {
            small_molecule: "small_molecules".into(),
            polymer: "polymers".into(),
            reaction: "reactions".into(),
            nmr: "spectra".into(),
            nmr_captions: None,
        }
    }
}

impl WorkerCollections {
    pub fn for_worker(&self, worker: Worker) -> &str {
        match worker {
            Worker::SmallMolecule => &self.small_molecule,
            Worker::Polymer => &self.polymer,
            Worker::Reaction => &self.reaction,
            Worker::Nmr => &self.nmr,
        }
    }
}

pub struct StoreRetriever<'a> {
    pub store: &'a Store,
    pub text: &'a dyn EmbeddingProvider,
    pub image: Option<&'a dyn EmbeddingProvider>,
    pub collections: WorkerCollections,
    /// Relative image paths in questions resolve against this directory.
    pub image_root: PathBuf,
    /// Drop hits whose payload is the query itself. Off by default, so a
    /// record already in the store is returned as its own nearest match.
    pub exclude_self: bool,
}

impl<'a> StoreRetriever<'a> {
    pub fn new(store: &'a Store, text: &'a dyn EmbeddingProvider, collections: WorkerCollections) -> Self {
        StoreRetriever {
            store,
            text,
            image: None,
            collections,
            image_root: PathBuf::from("."),
            exclude_self: false,
        }
    }

    fn search(
        &self,
        collection: &str,
        vector: &[f32],
        k: usize,
        skip: &[&str],
    ) -> Result<Vec<Document>, RetrieveError> {
        let fetch = if self.exclude_self { k + skip.len() } else { k };
        let hits = self
            .store
            .search(collection, vector, fetch, &SearchOptions::default())
            .map_err(|e| RetrieveError::StoreUnavailable(e.to_string()))?;
        Ok(hits
            .into_iter()
            .filter(|h| !self.exclude_self || !skip.contains(&h.payload.as_str()))
            .take(k)
            .map(|h| Document::from_hit(collection, h))
            .collect())
    }

    fn attach_links(&self, collection: &str, docs: &mut [Document]) -> Result<(), RetrieveError> {
        let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        let groups = self
            .store
            .cross_lookup(collection, &ids)
            .map_err(|e| RetrieveError::StoreUnavailable(e.to_string()))?;
        for (doc, group) in docs.iter_mut().zip(groups) {
            doc.linked = group.linked;
        }
        Ok(())
    }

    fn retrieve_spectra(&self, question: &str, k: usize) -> Result<Retrieval, RetrieveError> {
        if let Some(path) = image_paths(question).into_iter().next() {
            let provider = self
                .image
                .ok_or_else(|| RetrieveError::Image("no image provider bound".into()))?;
            let full = resolve(&self.image_root, &path);
            let bytes = std::fs::read(&full).map_err(|e| RetrieveError::Image(format!("{}: {e}", full.display())))?;
            let vector = image_vector(provider, &path, &bytes)?;
            let mut docs = self.search(&self.collections.nmr, &vector, k, &[&path])?;
            self.attach_links(&self.collections.nmr, &mut docs)?;
            return Ok(Retrieval {
                docs,
                payload: QueryPayload::Image(path),
            });
        }
        let Some(captions) = &self.collections.nmr_captions else {
            return Err(RetrieveError::NoQueryPayload(
                "spectrum question names no image and no caption collection is configured".into(),
            ));
        };
        let vector = l2_normalize(&embed_text(self.text, question)?)?.into_values();
        let mut docs = self.search(captions, &vector, k, &[])?;
        self.attach_links(captions, &mut docs)?;
        Ok(Retrieval {
            docs,
            payload: QueryPayload::Text(question.to_owned()),
        })
    }
}

fn resolve(root: &Path, path: &str) -> PathBuf {
    root.join(path)
}

/// The structure a worker should search with: the first candidate of the
/// worker's own kind, else the first candidate of any kind.
fn pick_structure(worker: Worker, candidates: &[String]) -> Option<&String> {
    let fits = |s: &&String| match worker {
        Worker::Reaction => s.contains('>'),
        Worker::Polymer => s.contains('*') && !s.contains('>'),
        _ => !s.contains('>') && !s.contains('*'),
    };
    candidates.iter().find(fits).or(candidates.first())
}

impl Retriever for StoreRetriever<'_> {
    fn retrieve(&self, worker: Worker, question: &str, k: usize) -> Result<Retrieval, RetrieveError> {
        if worker == Worker::Nmr {
            return self.retrieve_spectra(question, k);
        }
        let extraction = extract_structures(question);
        let Some(structure) = pick_structure(worker, &extraction.structures) else {
            return Err(RetrieveError::NoQueryPayload(
                extraction
                    .last_error
                    .unwrap_or_else(|| "no structure found in the question".into()),
            ));
        };
        let prepared = prepare_structure_text(structure)?;
        let vector = structure_vector(self.text, structure)?;
        let collection = self.collections.for_worker(worker);
        let docs = self.search(collection, &vector, k, &[structure.as_str(), prepared.as_str()])?;
        let payload = if structure.contains('>') {
            QueryPayload::Reaction(structure.clone())
        } else {
            QueryPayload::Smiles(structure.clone())
        };
        Ok(Retrieval { docs, payload })
    }
}
