use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::hnsw::HnswParams;
use super::ivf::IvfParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Flat,
    Hnsw,
    IvfFlat,
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexKind::Flat => "flat",
            IndexKind::Hnsw => "hnsw",
            IndexKind::IvfFlat => "ivf_flat",
        })
    }
}

/// Only Euclidean distance is supported; cosine is computed by the metrics panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Smiles,
    Reaction,
    Caption,
    ImageRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Float,
    Int,
    String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionSchema {
    pub name: String,
    pub dim: usize,
    pub index: IndexKind,
    #[serde(default)]
    pub metric: Metric,
    pub payload_kind: PayloadKind,
    #[serde(default)]
    pub metadata_fields: BTreeMap<String, FieldType>,
    #[serde(default)]
    pub hnsw: HnswParams,
    #[serde(default)]
    pub ivf: IvfParams,
}

impl CollectionSchema {
    pub fn new(name: &str, dim: usize, index: IndexKind, payload_kind: PayloadKind) -> Self {
        CollectionSchema {
            name: name.to_owned(),
            dim,
            index,
            metric: Metric::L2,
            payload_kind,
            metadata_fields: BTreeMap::new(),
            hnsw: HnswParams::default(),
            ivf: IvfParams::default(),
        }
    }

    pub fn with_field(mut self, name: &str, ty: FieldType) -> Self {
        self.metadata_fields.insert(name.to_owned(), ty);
        self
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("collection name is empty".into());
        }
        if self.dim == 0 {
            return Err("dim must be positive".into());
        }
        let h = &self.hnsw;
        if h.m < 2 || h.m0 < h.m || h.ef_construction == 0 || h.ef_search == 0 {
            return Err("hnsw parameters need m >= 2, m0 >= m, ef > 0".into());
        }
        if self.ivf.nlist == Some(0) || self.ivf.nprobe == Some(0) {
            return Err("ivf nlist and nprobe must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetaValue {
    Int(i64),
    Float(f64),
    Str(String),
}

impl MetaValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetaValue::Int(i) => Some(*i as f64),
            MetaValue::Float(f) => Some(*f),
            MetaValue::Str(_) => None,
        }
    }

    pub fn fits(&self, ty: FieldType) -> bool {
        matches!(
            (self, ty),
            (MetaValue::Int(_), FieldType::Int | FieldType::Float)
                | (MetaValue::Float(_), FieldType::Float)
                | (MetaValue::Str(_), FieldType::String)
        )
    }
}

impl fmt::Display for MetaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaValue::Int(i) => write!(f, "{i}"),
            MetaValue::Float(x) => write!(f, "{x}"),
            MetaValue::Str(s) => f.write_str(s),
        }
    }
}

pub type Metadata = BTreeMap<String, MetaValue>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub collection: String,
    pub id: String,
}

impl Link {
    pub fn new(collection: &str, id: &str) -> Self {
        Link {
            collection: collection.to_owned(),
            id: id.to_owned(),
        }
    }
}
