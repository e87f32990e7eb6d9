//! Reaction SMILES (`reactants>agents>products`).

use std::fmt;

use thiserror::Error;

use super::graph::MolecularGraph;
use super::smiles::{parse_smiles, SmilesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReactionSide {
    Reactants,
    Agents,
    Products,
}

impl fmt::Display for ReactionSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReactionSide::Reactants => "reactants",
            ReactionSide::Agents => "agents",
            ReactionSide::Products => "products",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReactionError {
    #[error("reaction SMILES needs exactly two '>' separators, found {found}")]
    WrongSeparatorCount { found: usize },
    #[error("in {side} component {index}: {source}")]
    Side {
        side: ReactionSide,
        index: usize,
        #[source]
        source: SmilesError,
    },
}

#[derive(Debug, Clone)]
pub struct ReactionRecord {
    pub reactants: Vec<MolecularGraph>,
    pub agents: Vec<MolecularGraph>,
    pub products: Vec<MolecularGraph>,
    pub source_text: String,
}

pub fn parse_reaction(text: &str) -> Result<ReactionRecord, ReactionError> {
    let found = text.matches('>').count();
    if found != 2 {
        return Err(ReactionError::WrongSeparatorCount { found });
    }
    let mut sides = text.split('>');
    let mut parse_side = |side| -> Result<Vec<MolecularGraph>, ReactionError> {
        let part = sides.next().unwrap_or_default();
        if part.is_empty() {
            return Ok(Vec::new());
        }
        part.split('.')
            .enumerate()
            .map(|(index, component)| {
                parse_smiles(component).map_err(|source| ReactionError::Side { side, index, source })
            })
            .collect()
    };
    let reactants = parse_side(ReactionSide::Reactants)?;
    let agents = parse_side(ReactionSide::Agents)?;
    let products = parse_side(ReactionSide::Products)?;
    Ok(ReactionRecord {
        reactants,
        agents,
        products,
        source_text: text.to_owned(),
    })
}
