//! Six-metric similarity panel comparing a query molecule with its hits.
//!
//! Two columns come from embeddings (cosine, Euclidean similarity) and four
//! from fingerprints. The `rdkit_path` column is Tanimoto over this crate's
//! path fingerprint; it mirrors the role of a toolkit path fingerprint but is
//! not bit-compatible with any toolkit.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::chem::{parse_smiles, MolecularGraph, SmilesError};
use crate::fingerprint::{
    dice, maccs_fingerprint, morgan_fingerprint, path_fingerprint, tanimoto, Fingerprint, DEFAULT_MAX_PATH_LEN,
    DEFAULT_MORGAN_RADIUS, DEFAULT_WIDTH,
};

pub const HEATMAP_HEADER: [&str; 8] = [
    "rank",
    "hit_id",
    "cosine",
    "euclidean",
    "tanimoto",
    "rdkit_path",
    "maccs",
    "dice",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanelError {
    #[error("distance {0} is negative or not finite")]
    NegativeDistance(f64),
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("vector dimensions differ: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("query structure: {0}")]
    Query(#[from] SmilesError),
}

/// Maps an L2 distance to a similarity in (0, 1]: `1 / (1 + e_d)`.
pub fn euclidean_similarity(e_d: f64) -> Result<f64, PanelError> {
    if !e_d.is_finite() || e_d < 0.0 {
        return Err(PanelError::NegativeDistance(e_d));
    }
    Ok(1.0 / (1.0 + e_d))
}

pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64, PanelError> {
    if a.len() != b.len() {
        return Err(PanelError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(PanelError::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn l2_distance(a: &[f32], b: &[f32]) -> Result<f64, PanelError> {
    if a.len() != b.len() {
        return Err(PanelError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        .sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PanelValues {
    /// Clipped to [0, 1].
    pub cosine: f64,
    pub euclidean_sim: f64,
    pub tanimoto: f64,
    pub path_sim: f64,
    pub maccs_sim: f64,
    pub dice: f64,
}

impl PanelValues {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.cosine,
            self.euclidean_sim,
            self.tanimoto,
            self.path_sim,
            self.maccs_sim,
            self.dice,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelRow {
    pub rank: usize,
    pub hit_id: String,
    #[serde(flatten)]
    pub values: Option<PanelValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityPanel {
    pub query_id: String,
    pub rows: Vec<PanelRow>,
}

/// One retrieved record: its structure text and stored embedding.
#[derive(Debug, Clone, Copy)]
pub struct PanelHit<'a> {
    pub id: &'a str,
    pub smiles: &'a str,
    pub vector: &'a [f32],
}

struct Prints {
    morgan: Fingerprint,
    path: Fingerprint,
    maccs: Fingerprint,
}

impl Prints {
    fn of(g: &MolecularGraph) -> Self {
        Prints {
            morgan: morgan_fingerprint(g, DEFAULT_MORGAN_RADIUS, DEFAULT_WIDTH),
            path: path_fingerprint(g, DEFAULT_MAX_PATH_LEN, DEFAULT_WIDTH),
            maccs: maccs_fingerprint(g),
        }
    }
}

/// Builds one row per hit, in the given order. A hit that fails to parse or
/// whose vector is unusable yields a row carrying the error.
pub fn build_panel(
    query_id: &str,
    query_smiles: &str,
    query_vector: &[f32],
    hits: &[PanelHit<'_>],
) -> Result<SimilarityPanel, PanelError> {
    let query = Prints::of(&parse_smiles(query_smiles)?);
    let rows = hits
        .iter()
        .enumerate()
        .map(|(i, hit)| {
            let (values, error) = match row_values(&query, query_vector, hit) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e)),
            };
            PanelRow {
                rank: i + 1,
                hit_id: hit.id.to_owned(),
                values,
                error,
            }
        })
        .collect();
    Ok(SimilarityPanel {
        query_id: query_id.to_owned(),
        rows,
    })
}

fn row_values(query: &Prints, query_vector: &[f32], hit: &PanelHit<'_>) -> Result<PanelValues, String> {
    let graph = parse_smiles(hit.smiles).map_err(|e| format!("hit structure: {e}"))?;
    let prints = Prints::of(&graph);
    let cosine = cosine_similarity(query_vector, hit.vector).map_err(|e| e.to_string())?;
    let distance = l2_distance(query_vector, hit.vector).map_err(|e| e.to_string())?;
    let fp = |r: Result<f64, _>| r.map_err(|e: crate::fingerprint::FingerprintError| e.to_string());
    Ok(PanelValues {
        cosine: cosine.clamp(0.0, 1.0),
        euclidean_sim: euclidean_similarity(distance).map_err(|e| e.to_string())?,
        tanimoto: fp(tanimoto(&query.morgan, &prints.morgan))?,
        path_sim: fp(tanimoto(&query.path, &prints.path))?,
        maccs_sim: fp(tanimoto(&query.maccs, &prints.maccs))?,
        dice: fp(dice(&query.morgan, &prints.morgan))?,
    })
}

/// Writes the heatmap CSV: fixed header, six decimals, LF endings. Failed
/// rows keep their rank and id with empty metric cells.
pub fn write_heatmap<W: Write>(panel: &SimilarityPanel, out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEATMAP_HEADER)?;
    for row in &panel.rows {
        let mut cells = vec![row.rank.to_string(), row.hit_id.clone()];
        match &row.values {
            Some(v) => cells.extend(v.as_array().iter().map(|x| format!("{x:.6}"))),
            None => cells.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_heatmap(panel: &SimilarityPanel, path: &Path) -> Result<(), csv::Error> {
    write_heatmap(panel, std::fs::File::create(path)?)
}
