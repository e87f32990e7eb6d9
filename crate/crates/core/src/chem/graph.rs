//! Molecular graph types produced by the SMILES parser.

use std::fmt;

use super::elements::{Element, HYDROGEN_WEIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Valence consumed on each endpoint. Aromatic bonds count as one; the
    /// extra aromatic electron is accounted for per atom.
    pub fn valence(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

/// Directional single-bond marker (`/` or `\`). Kept as an annotation only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondStereo {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub charge: i8,
    /// Hydrogen count written inside a bracket atom. `None` for organic-subset
    /// atoms, whose hydrogens are implicit.
    pub explicit_h: Option<u8>,
    /// Atom-class label, e.g. the `1` in `[*:1]`.
    pub map_number: Option<u32>,
    pub isotope: Option<u16>,
    /// Tetrahedral/other chirality marker as written (`@`, `@@`, `@TH1`, ...).
    pub chirality: Option<String>,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            aromatic: false,
            charge: 0,
            explicit_h: None,
            map_number: None,
            isotope: None,
            chirality: None,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        self.element.is_wildcard()
    }

    pub fn is_bracket(&self) -> bool {
        self.explicit_h.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bond {
    pub atoms: (usize, usize),
    pub order: BondOrder,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.atoms.0 == atom {
            self.atoms.1
        } else {
            self.atoms.0
        }
    }
}

/// A validated molecular graph. Construct one with [`crate::chem::parse_smiles`].
#[derive(Debug, Clone)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source_text: String,
    adjacency: Vec<Vec<(usize, usize)>>,
    hydrogens: Vec<u8>,
    ring_bonds: Vec<bool>,
}

/// Implicit hydrogen count for an organic-subset atom, or `None` if the bonds
/// already exceed every allowed valence.
pub(crate) fn implicit_hydrogens(atom: &Atom, valence_used: u32) -> Option<u8> {
    if let Some(h) = atom.explicit_h {
        return Some(h);
    }
    let valences = atom.element.default_valences();
    let Some(&max) = valences.last() else {
        return Some(0);
    };
    if valence_used > max as u32 {
        return None;
    }
    if atom.aromatic {
        let lowest = valences[0] as u32;
        return Some(lowest.saturating_sub(valence_used + 1) as u8);
    }
    valences
        .iter()
        .find(|&&v| v as u32 >= valence_used)
        .map(|&v| (v as u32 - valence_used) as u8)
}

impl MolecularGraph {
    /// Assemble a graph whose structure has already been validated by the caller.
    pub(crate) fn from_validated(atoms: Vec<Atom>, bonds: Vec<Bond>, source_text: String) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.atoms.0].push((b.atoms.1, i));
            adjacency[b.atoms.1].push((b.atoms.0, i));
        }
        let ring_bonds = find_ring_bonds(atoms.len(), &bonds, &adjacency);
        let hydrogens = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let used = adjacency[i].iter().map(|&(_, b)| bonds[b].order.valence()).sum();
                implicit_hydrogens(a, used).unwrap_or(0)
            })
            .collect();
        MolecularGraph {
            atoms,
            bonds,
            source_text,
            adjacency,
            hydrogens,
            ring_bonds,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// `(neighbor atom, bond index)` pairs for `atom`.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Total attached hydrogens (implicit or written in brackets).
    pub fn hydrogen_count(&self, atom: usize) -> u8 {
        self.hydrogens[atom]
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, i)| &self.bonds[i])
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bonds[bond]
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.adjacency[atom].iter().any(|&(_, b)| self.ring_bonds[b])
    }

    /// Number of independent rings (cyclomatic number).
    pub fn ring_count(&self) -> usize {
        (self.bonds.len() + self.connected_components().len()).saturating_sub(self.atoms.len())
    }

    /// Atom indices of each connected component, in order of first atom.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.atoms.len()];
        let mut components = Vec::new();
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut members = Vec::new();
            while let Some(a) = stack.pop() {
                members.push(a);
                for &(n, _) in &self.adjacency[a] {
                    if !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        components
    }

    /// Molar mass in g/mol: standard atomic weights plus attached hydrogens.
    /// Wildcard atoms weigh nothing; isotope labels do not change the mass.
    pub fn molecular_weight(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.hydrogens)
            .map(|(a, &h)| a.element.atomic_weight() + h as f64 * HYDROGEN_WEIGHT)
            .sum()
    }

    /// Relabel atoms: atom `i` of the result is atom `order[i]` of `self`.
    ///
    /// # Panics
    /// Panics if `order` is not a permutation of `0..atom_count()`.
    pub fn permuted(&self, order: &[usize]) -> MolecularGraph {
        assert_eq!(order.len(), self.atoms.len(), "permutation length");
        let mut inverse = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            assert!(inverse[old] == usize::MAX, "not a permutation");
            inverse[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                atoms: (inverse[b.atoms.0], inverse[b.atoms.1]),
                ..b.clone()
            })
            .collect();
        let mut g = MolecularGraph::from_validated(atoms, bonds, self.source_text.clone());
        g.hydrogens = order.iter().map(|&old| self.hydrogens[old]).collect();
        g
    }

    /// Subgraph induced by `keep` (atoms in the given order). Implicit
    /// hydrogens are recomputed for organic-subset atoms that lost bonds.
    pub fn induced_subgraph(&self, keep: &[usize]) -> MolecularGraph {
        let mut index = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let atoms = keep.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| index[b.atoms.0] != usize::MAX && index[b.atoms.1] != usize::MAX)
            .map(|b| Bond {
                atoms: (index[b.atoms.0], index[b.atoms.1]),
                ..b.clone()
            })
            .collect();
        MolecularGraph::from_validated(atoms, bonds, String::new())
    }
}

impl fmt::Display for MolecularGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

/// Marks bonds that lie on a cycle (i.e. are not bridges).
fn find_ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, bond used to enter it, next adjacency position)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(top) = stack.last_mut() {
            let (v, via) = (top.0, top.1);
            if top.2 < adjacency[v].len() {
                let (w, b) = adjacency[v][top.2];
                top.2 += 1;
                if b == via {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, b, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        ring[via] = false;
                    }
                }
            }
        }
    }
    ring
}
