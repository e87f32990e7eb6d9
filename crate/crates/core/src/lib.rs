//! Core of the chemvecrag search engine.

pub mod chem;
pub mod embedding;
pub mod fingerprint;
pub mod panel;
pub mod store;
