//! Pulls chemical payloads out of free-text questions.
//!
//! Questions mix prose with SMILES, often wrapped in `$...$`, backticks,
//! quotes or bold markers. Each whitespace token is unwrapped and offered to
//! the parser; a token counts only if it parses and either has two or more
//! atoms or uses SMILES-only punctuation, which keeps words like "I" or "C"
//! from matching.

use chemvecrag_core::chem::{parse_reaction, parse_smiles};

const IMAGE_EXTENSIONS: [&str; 7] = [".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".gif"];
const SMILES_PUNCTUATION: &[char] = &['=', '#', '(', ')', '[', ']', '@', '/', '\\', '%', '*', '+'];

/// Strips markdown, quoting and sentence punctuation around a token.
pub fn unwrap_token(token: &str) -> &str {
    let mut t = token;
    loop {
        let before = t;
        t = t.trim_start_matches(['$', '`', '\'', '"', '(']);
        t = t.trim_end_matches(['$', '`', '\'', '"', '.', ',', ';', ':', '?', '!']);
        t = t.strip_prefix("**").unwrap_or(t);
        t = t.strip_suffix("**").unwrap_or(t);
        if t == before {
            return t;
        }
    }
}

pub fn is_image_path(token: &str) -> bool {
    let lower = token.to_ascii_lowercase();
    IMAGE_EXTENSIONS
        .iter()
        .any(|ext| lower.len() > ext.len() && lower.ends_with(ext))
}

pub fn has_image_path(text: &str) -> bool {
    text.split_whitespace().any(|t| is_image_path(unwrap_token(t)))
}

/// Image paths mentioned in the text, in order.
pub fn image_paths(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(unwrap_token)
        .filter(|t| is_image_path(t))
        .map(str::to_owned)
        .collect()
}

/// The outcome of scanning a question for structures.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Extraction {
    /// Accepted candidates in order of appearance.
    pub structures: Vec<String>,
    /// The parse error of the last token that looked structural but failed.
    pub last_error: Option<String>,
}

/// Molecule, polymer and reaction strings found in the text.
pub fn extract_structures(text: &str) -> Extraction {
    let mut out = Extraction::default();
    for raw in text.split_whitespace() {
        let token = unwrap_token(raw);
        if token.is_empty() || is_image_path(token) {
            continue;
        }
        if token.contains('>') {
            match parse_reaction(token) {
                Ok(_) => out.structures.push(token.to_owned()),
                Err(e) => out.last_error = Some(format!("{token}: {e}")),
            }
            continue;
        }
        let looks_structural = token.contains(SMILES_PUNCTUATION) || token.chars().any(|c| c.is_ascii_digit());
        match parse_smiles(token) {
            Ok(g) if g.atom_count() >= 2 || looks_structural => out.structures.push(token.to_owned()),
            Ok(_) => {}
            Err(e) if looks_structural => out.last_error = Some(format!("{token}: {e}")),
            Err(_) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwraps_markup() {
        assert_eq!(unwrap_token("$CCO$."), "CCO");
        assert_eq!(unwrap_token("**c1ccccc1**"), "c1ccccc1");
        assert_eq!(unwrap_token("`CC(=O)O`,"), "CC(=O)O");
        assert_eq!(unwrap_token("'data/a-1.png'."), "data/a-1.png");
        assert_eq!(unwrap_token("?!"), "");
    }

    #[test]
    fn finds_structures_in_prose() {
        let e = extract_structures("Find analogues of $CC(=O)Oc1ccccc1C(=O)O$ and CCO, not I or C.");
        assert_eq!(e.structures, vec!["CC(=O)Oc1ccccc1C(=O)O", "CCO"]);
        let e = extract_structures("polymers like [*:1]CC[*:2] please");
        assert_eq!(e.structures, vec!["[*:1]CC[*:2]"]);
        let e = extract_structures("what does CCO.CC(=O)O>>CCOC(C)=O give");
        assert_eq!(e.structures, vec!["CCO.CC(=O)O>>CCOC(C)=O"]);
    }

    #[test]
    fn keeps_the_last_parse_error() {
        let e = extract_structures("compare C1CC( with words");
        assert!(e.structures.is_empty());
        assert!(e.last_error.unwrap().starts_with("C1CC("));
        assert_eq!(extract_structures("no chemistry here").last_error, None);
    }

    #[test]
    fn image_paths_are_found() {
        let q = "similar to those depicted in the provided image. data/images/NMR/83a-13C/83a-1.png'.";
        assert_eq!(image_paths(q), vec!["data/images/NMR/83a-13C/83a-1.png"]);
        assert!(!has_image_path("a .png alone"));
        assert!(extract_structures(q).structures.is_empty());
    }
}
