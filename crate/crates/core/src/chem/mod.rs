//! Chemical language: SMILES parsing, canonical forms, reactions and molar mass.

mod canon;
mod elements;
mod graph;
mod reaction;
mod smiles;

pub use canon::canonicalize;
pub use elements::{Element, HYDROGEN_WEIGHT};
pub use graph::{Atom, Bond, BondOrder, BondStereo, MolecularGraph};
pub use reaction::{parse_reaction, ReactionError, ReactionRecord, ReactionSide};
pub use smiles::{
    count_tokens, parse_smiles, parse_smiles_with, split_components, ParseOptions, SmilesError, DEFAULT_MAX_TOKENS,
};

/// Molar mass of a parsed molecule in g/mol.
pub fn molecular_weight(graph: &MolecularGraph) -> f64 {
    graph.molecular_weight()
}
