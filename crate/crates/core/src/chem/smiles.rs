//! SMILES reader.
//!
//! Supported: organic-subset and bracket atoms, isotopes, charges, hydrogen
//! counts, atom classes (`[*:1]`), aromatic lowercase atoms, branches, ring
//! closures `0`-`9` and `%nn`, and `.`-separated components. Stereo markers
//! are kept as annotations. Quadruple bonds (`$`) and dots inside branches are
//! rejected, as are ring closures that span a `.`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::elements::Element;
use super::graph::{implicit_hydrogens, Atom, Bond, BondOrder, BondStereo, MolecularGraph};

/// Default cap on SMILES tokens accepted by the parser.
pub const DEFAULT_MAX_TOKENS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("SMILES has {count} tokens, more than the limit of {max}")]
    TooManyTokens { count: usize, max: usize },
    #[error("ring closure {label} opened at byte {offset} is never closed")]
    UnclosedRing { label: u16, offset: usize },
    #[error("unbalanced parenthesis at byte {offset}")]
    UnbalancedParenthesis { offset: usize },
    #[error("unknown element '{symbol}' at byte {offset}")]
    UnknownElement { symbol: String, offset: usize },
    #[error("malformed bracket atom at byte {offset}: {reason}")]
    BadBracketAtom { offset: usize, reason: &'static str },
    #[error("unexpected character '{ch}' at byte {offset}")]
    UnexpectedCharacter { ch: char, offset: usize },
    #[error("ring closure {label} opened at byte {offset} spans a '.' separator")]
    RingClosureAcrossDot { label: u16, offset: usize },
    #[error("conflicting bond symbols on ring closure {label} at byte {offset}")]
    RingBondConflict { label: u16, offset: usize },
    #[error("bond at byte {offset} duplicates an existing bond or joins an atom to itself")]
    DuplicateBond { offset: usize },
    #[error("bond symbol at byte {offset} is not followed by an atom")]
    DanglingBond { offset: usize },
    #[error("atom at byte {offset} exceeds its allowed valence")]
    ValenceExceeded { offset: usize },
    #[error("aromatic atom at byte {offset} is not part of a ring")]
    AromaticOutsideRing { offset: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub max_tokens: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

/// Count SMILES tokens: bracket atoms, two-letter organic atoms and `%nn`
/// ring labels are one token each; every other character is one token.
pub fn count_tokens(text: &str) -> usize {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut count = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'[' => {
                i = text[i..].find(']').map_or(bytes.len(), |j| i + j + 1);
            }
            b'%' => i += 3,
            b'C' if bytes.get(i + 1) == Some(&b'l') => i += 2,
            b'B' if bytes.get(i + 1) == Some(&b'r') => i += 2,
            _ => i += utf8_len(bytes[i]),
        }
        count += 1;
    }
    count
}

fn utf8_len(first: u8) -> usize {
    match first {
        0xF0.. => 4,
        0xE0.. => 3,
        0xC0.. => 2,
        _ => 1,
    }
}

pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    parse_smiles_with(text, &ParseOptions::default())
}

pub fn parse_smiles_with(text: &str, options: &ParseOptions) -> Result<MolecularGraph, SmilesError> {
    if text.is_empty() {
        return Err(SmilesError::Empty);
    }
    let count = count_tokens(text);
    if count > options.max_tokens {
        return Err(SmilesError::TooManyTokens {
            count,
            max: options.max_tokens,
        });
    }
    Parser::new(text).run()
}

/// Split a multi-component SMILES on its `.` separators, preserving order.
/// The whole string is validated first.
pub fn split_components(text: &str) -> Result<Vec<String>, SmilesError> {
    parse_smiles(text)?;
    Ok(text.split('.').map(str::to_owned).collect())
}

struct PendingBond {
    order: BondOrder,
    stereo: Option<BondStereo>,
    offset: usize,
}

struct OpenRing {
    atom: usize,
    bond: Option<PendingBond>,
    offset: usize,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<Bond>,
    implicit_aromatic: Vec<bool>,
    prev: Option<usize>,
    pending: Option<PendingBond>,
    branches: Vec<(usize, usize, usize)>,
    rings: BTreeMap<u16, OpenRing>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            atom_offsets: Vec::new(),
            bonds: Vec::new(),
            implicit_aromatic: Vec::new(),
            prev: None,
            pending: None,
            branches: Vec::new(),
            rings: BTreeMap::new(),
        }
    }

    fn unexpected(&self, offset: usize) -> SmilesError {
        SmilesError::UnexpectedCharacter {
            ch: self.text[offset..].chars().next().unwrap_or('?'),
            offset,
        }
    }

    fn run(mut self) -> Result<MolecularGraph, SmilesError> {
        while self.pos < self.bytes.len() {
            let offset = self.pos;
            let c = self.bytes[offset];
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(SmilesError::UnbalancedParenthesis { offset });
                    };
                    if let Some(p) = &self.pending {
                        return Err(SmilesError::DanglingBond { offset: p.offset });
                    }
                    self.branches.push((prev, offset, self.atoms.len()));
                    self.pos += 1;
                }
                b')' => {
                    let Some((atom, _, atoms_before)) = self.branches.pop() else {
                        return Err(SmilesError::UnbalancedParenthesis { offset });
                    };
                    if let Some(p) = &self.pending {
                        return Err(SmilesError::DanglingBond { offset: p.offset });
                    }
                    if self.atoms.len() == atoms_before {
                        return Err(self.unexpected(offset));
                    }
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return Err(SmilesError::DanglingBond { offset });
                    }
                    let (order, stereo) = match c {
                        b'-' => (BondOrder::Single, None),
                        b'=' => (BondOrder::Double, None),
                        b'#' => (BondOrder::Triple, None),
                        b':' => (BondOrder::Aromatic, None),
                        b'/' => (BondOrder::Single, Some(BondStereo::Up)),
                        _ => (BondOrder::Single, Some(BondStereo::Down)),
                    };
                    self.pending = Some(PendingBond { order, stereo, offset });
                    self.pos += 1;
                }
                b'.' => {
                    if let Some(p) = &self.pending {
                        return Err(SmilesError::DanglingBond { offset: p.offset });
                    }
                    if self.prev.is_none() || !self.branches.is_empty() {
                        return Err(self.unexpected(offset));
                    }
                    if let Some((&label, ring)) = self.rings.iter().next() {
                        return Err(SmilesError::RingClosureAcrossDot {
                            label,
                            offset: ring.offset,
                        });
                    }
                    self.prev = None;
                    self.pos += 1;
                    if self.pos == self.bytes.len() {
                        return Err(self.unexpected(offset));
                    }
                }
                b'0'..=b'9' => {
                    self.pos += 1;
                    self.ring_closure((c - b'0') as u16, offset)?;
                }
                b'%' => {
                    let digits = self.bytes.get(offset + 1..offset + 3);
                    match digits {
                        Some(&[a, b]) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            self.pos += 3;
                            self.ring_closure(((a - b'0') * 10 + (b - b'0')) as u16, offset)?;
                        }
                        _ => return Err(self.unexpected(offset)),
                    }
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, offset)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, offset)?;
                }
            }
        }
        if let Some(p) = &self.pending {
            return Err(SmilesError::DanglingBond { offset: p.offset });
        }
        if let Some(&(_, offset, _)) = self.branches.last() {
            return Err(SmilesError::UnbalancedParenthesis { offset });
        }
        if let Some((&label, ring)) = self.rings.iter().next() {
            return Err(SmilesError::UnclosedRing {
                label,
                offset: ring.offset,
            });
        }
        self.finish()
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let offset = self.pos;
        let c = self.bytes[offset];
        let next = self.bytes.get(offset + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (Element::CHLORINE, false, 2),
            (b'B', Some(b'r')) => (Element::BROMINE, false, 2),
            (b'*', _) => (Element::WILDCARD, false, 1),
            (b'B', _) => (Element::BORON, false, 1),
            (b'C', _) => (Element::CARBON, false, 1),
            (b'N', _) => (Element::NITROGEN, false, 1),
            (b'O', _) => (Element::OXYGEN, false, 1),
            (b'P', _) => (Element::PHOSPHORUS, false, 1),
            (b'S', _) => (Element::SULFUR, false, 1),
            (b'F', _) => (Element::FLUORINE, false, 1),
            (b'I', _) => (Element::IODINE, false, 1),
            (b'b', _) => (Element::BORON, true, 1),
            (b'c', _) => (Element::CARBON, true, 1),
            (b'n', _) => (Element::NITROGEN, true, 1),
            (b'o', _) => (Element::OXYGEN, true, 1),
            (b'p', _) => (Element::PHOSPHORUS, true, 1),
            (b's', _) => (Element::SULFUR, true, 1),
            (c, next) if c.is_ascii_alphabetic() => {
                let mut symbol = String::from(c as char);
                if c.is_ascii_uppercase() {
                    if let Some(n) = next.filter(u8::is_ascii_lowercase) {
                        symbol.push(n as char);
                    }
                }
                return Err(SmilesError::UnknownElement { symbol, offset });
            }
            _ => return Err(self.unexpected(offset)),
        };
        self.pos += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let offset = self.pos;
        let bad = |reason| SmilesError::BadBracketAtom { offset, reason };
        let close = self.text[offset..]
            .find(']')
            .map(|j| offset + j)
            .ok_or(bad("missing ']'"))?;
        let body = &self.bytes[offset + 1..close];
        let mut i = 0;

        let digits = |i: &mut usize| {
            let start = *i;
            while *i < body.len() && body[*i].is_ascii_digit() {
                *i += 1;
            }
            (start < *i).then(|| &body[start..*i])
        };
        let as_number = |d: &[u8]| -> Option<u32> { std::str::from_utf8(d).ok()?.parse().ok() };

        let isotope = match digits(&mut i) {
            Some(d) => Some(
                as_number(d)
                    .filter(|&n| n >= 1 && n <= u16::MAX as u32)
                    .ok_or(bad("isotope out of range"))? as u16,
            ),
            None => None,
        };

        let (element, aromatic) = match body.get(i) {
            Some(b'*') => {
                i += 1;
                (Element::WILDCARD, false)
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = body.get(i..i + 2).and_then(|s| std::str::from_utf8(s).ok());
                let (symbol, len) = match two {
                    Some(s @ ("se" | "as" | "te")) => (s.to_string(), 2),
                    _ => ((*c as char).to_string(), 1),
                };
                let capitalised = capitalise(&symbol);
                let element = Element::from_symbol(&capitalised)
                    .filter(|e| e.can_be_aromatic())
                    .ok_or_else(|| SmilesError::UnknownElement {
                        symbol: symbol.clone(),
                        offset: offset + 1 + i,
                    })?;
                i += len;
                (element, true)
            }
            Some(c) if c.is_ascii_uppercase() => {
                let mut symbol = String::from(*c as char);
                if let Some(n) = body.get(i + 1).filter(|n| n.is_ascii_lowercase()) {
                    symbol.push(*n as char);
                }
                let element = Element::from_symbol(&symbol).ok_or_else(|| SmilesError::UnknownElement {
                    symbol: symbol.clone(),
                    offset: offset + 1 + i,
                })?;
                i += symbol.len();
                (element, false)
            }
            _ => return Err(bad("missing element symbol")),
        };

        let mut chirality = None;
        if body.get(i) == Some(&b'@') {
            let start = i;
            i += 1;
            if body.get(i) == Some(&b'@') {
                i += 1;
            } else {
                while i < body.len() && body[i].is_ascii_uppercase() && body[i] != b'H' {
                    i += 1;
                }
                digits(&mut i);
            }
            chirality = Some(String::from_utf8_lossy(&body[start..i]).into_owned());
        }

        let mut h = 0u8;
        if body.get(i) == Some(&b'H') {
            i += 1;
            h = match digits(&mut i) {
                Some(d) => as_number(d)
                    .filter(|&n| n <= 9)
                    .ok_or(bad("hydrogen count out of range"))? as u8,
                None => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(&sign @ (b'+' | b'-')) = body.get(i) {
            let unit = if sign == b'+' { 1 } else { -1 };
            i += 1;
            if let Some(d) = digits(&mut i) {
                charge = unit * as_number(d).ok_or(bad("charge out of range"))? as i32;
            } else {
                charge = unit;
                while body.get(i) == Some(&sign) {
                    charge += unit;
                    i += 1;
                }
            }
            if !(-8..=8).contains(&charge) {
                return Err(bad("charge outside [-8, 8]"));
            }
        }

        let mut map_number = None;
        if body.get(i) == Some(&b':') {
            i += 1;
            let d = digits(&mut i).ok_or(bad("missing atom-class number"))?;
            let n = as_number(d).ok_or(bad("atom-class number out of range"))?;
            if n == 0 {
                return Err(bad("atom-class number must be at least 1"));
            }
            map_number = Some(n);
        }

        if i != body.len() {
            return Err(bad("unexpected trailing characters"));
        }
        self.pos = close + 1;
        Ok(Atom {
            element,
            aromatic,
            charge: charge as i8,
            explicit_h: Some(h),
            map_number,
            isotope,
            chirality,
        })
    }

    fn add_atom(&mut self, atom: Atom, offset: usize) -> Result<(), SmilesError> {
        let index = self.atoms.len();
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let pending = self.pending.take();
            let bond_offset = pending.as_ref().map_or(offset, |p| p.offset);
            self.add_bond(prev, index, pending, bond_offset)?;
        }
        self.prev = Some(index);
        Ok(())
    }

    fn add_bond(&mut self, a: usize, b: usize, written: Option<PendingBond>, offset: usize) -> Result<(), SmilesError> {
        if a == b || self.bonds.iter().any(|x| x.atoms == (a, b) || x.atoms == (b, a)) {
            return Err(SmilesError::DuplicateBond { offset });
        }
        let both_aromatic = self.atoms[a].aromatic && self.atoms[b].aromatic;
        let (order, stereo, implicit) = match written {
            Some(p) => (p.order, p.stereo, false),
            None if both_aromatic => (BondOrder::Aromatic, None, true),
            None => (BondOrder::Single, None, false),
        };
        self.bonds.push(Bond {
            atoms: (a, b),
            order,
            stereo,
        });
        self.implicit_aromatic.push(implicit);
        Ok(())
    }

    fn ring_closure(&mut self, label: u16, offset: usize) -> Result<(), SmilesError> {
        let Some(atom) = self.prev else {
            return Err(self.unexpected(offset));
        };
        let pending = self.pending.take();
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(
                    label,
                    OpenRing {
                        atom,
                        bond: pending,
                        offset,
                    },
                );
                Ok(())
            }
            Some(open) => {
                let written = match (open.bond, pending) {
                    (Some(x), Some(y)) => {
                        if x.order != y.order {
                            return Err(SmilesError::RingBondConflict { label, offset });
                        }
                        Some(x)
                    }
                    (x, None) => x,
                    (None, y) => y,
                };
                self.add_bond(open.atom, atom, written, offset)
            }
        }
    }

    fn finish(self) -> Result<MolecularGraph, SmilesError> {
        if self.atoms.is_empty() {
            return Err(SmilesError::Empty);
        }
        let Parser {
            text,
            atoms,
            atom_offsets,
            mut bonds,
            implicit_aromatic,
            ..
        } = self;

        // Implied aromatic bonds that are not on a ring (e.g. the biaryl bond
        // in `c1ccccc1c1ccccc1`) are single bonds.
        let probe = MolecularGraph::from_validated(atoms.clone(), bonds.clone(), String::new());
        for (i, bond) in bonds.iter_mut().enumerate() {
            if implicit_aromatic[i] && !probe.is_ring_bond(i) {
                bond.order = BondOrder::Single;
            }
        }
        let graph = MolecularGraph::from_validated(atoms, bonds, text.to_owned());

        for (i, atom) in graph.atoms().iter().enumerate() {
            if atom.aromatic && !graph.is_ring_atom(i) {
                return Err(SmilesError::AromaticOutsideRing {
                    offset: atom_offsets[i],
                });
            }
            if atom.explicit_h.is_none() {
                let used = graph
                    .neighbors(i)
                    .iter()
                    .map(|&(_, b)| graph.bonds()[b].order.valence())
                    .sum();
                if implicit_hydrogens(atom, used).is_none() {
                    return Err(SmilesError::ValenceExceeded {
                        offset: atom_offsets[i],
                    });
                }
            }
        }
        Ok(graph)
    }
}

fn capitalise(symbol: &str) -> String {
    let mut chars = symbol.chars();
    match chars.next() {
        Some(first) => first.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}
