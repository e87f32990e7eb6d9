//! Canonical SMILES.
//!
//! Atoms are ranked by iterative refinement of local invariants (element,
//! aromaticity, charge, hydrogens, degree, isotope, atom class) over
//! neighbour ranks and bond orders. Remaining ties are broken by trying every
//! member of the first tied class and keeping the lexicographically smallest
//! output, so the result does not depend on the input atom order. Output is a
//! depth-first walk from the lowest-ranked atom of each component. Stereo
//! annotations are dropped.

use std::fmt::Write;

use super::graph::{implicit_hydrogens, BondOrder, MolecularGraph};

/// Upper bound on complete labellings explored while breaking symmetric ties.
const MAX_LEAVES: usize = 4096;

pub fn canonicalize(graph: &MolecularGraph) -> String {
    if graph.atom_count() == 0 {
        return String::new();
    }
    let initial = dense_ranks(
        &(0..graph.atom_count())
            .map(|i| atom_invariant(graph, i))
            .collect::<Vec<_>>(),
    );
    let mut best: Option<String> = None;
    let mut leaves = 0;
    search(graph, initial, &mut best, &mut leaves);
    best.unwrap_or_default()
}

type Invariant = (u8, bool, i8, u8, usize, u16, u32);

fn atom_invariant(graph: &MolecularGraph, i: usize) -> Invariant {
    let a = &graph.atoms()[i];
    (
        a.element.atomic_number(),
        a.aromatic,
        a.charge,
        graph.hydrogen_count(i),
        graph.degree(i),
        a.isotope.unwrap_or(0),
        a.map_number.unwrap_or(0),
    )
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0u32; keys.len()];
    let mut rank = 0;
    for w in 0..order.len() {
        if w > 0 && keys[order[w]] != keys[order[w - 1]] {
            rank += 1;
        }
        ranks[order[w]] = rank;
    }
    ranks
}

fn class_count(ranks: &[u32]) -> usize {
    ranks.iter().copied().max().map_or(0, |m| m as usize + 1)
}

fn refine(graph: &MolecularGraph, mut ranks: Vec<u32>) -> Vec<u32> {
    let mut classes = class_count(&ranks);
    loop {
        if classes == ranks.len() {
            return ranks;
        }
        let keys: Vec<(u32, Vec<(u32, u8)>)> = (0..graph.atom_count())
            .map(|i| {
                let mut env: Vec<(u32, u8)> = graph
                    .neighbors(i)
                    .iter()
                    .map(|&(n, b)| (ranks[n], graph.bonds()[b].order.code()))
                    .collect();
                env.sort_unstable();
                (ranks[i], env)
            })
            .collect();
        let next = dense_ranks(&keys);
        let next_classes = class_count(&next);
        if next_classes == classes {
            return ranks;
        }
        ranks = next;
        classes = next_classes;
    }
}

fn first_tied_class(ranks: &[u32]) -> Option<Vec<usize>> {
    let mut counts = vec![0usize; class_count(ranks)];
    for &r in ranks {
        counts[r as usize] += 1;
    }
    let tied = counts.iter().position(|&c| c > 1)? as u32;
    Some((0..ranks.len()).filter(|&i| ranks[i] == tied).collect())
}

fn break_tie(ranks: &[u32], chosen: usize) -> Vec<u32> {
    let keys: Vec<(u32, bool)> = ranks.iter().enumerate().map(|(i, &r)| (r, i != chosen)).collect();
    dense_ranks(&keys)
}

fn search(graph: &MolecularGraph, ranks: Vec<u32>, best: &mut Option<String>, leaves: &mut usize) {
    let ranks = refine(graph, ranks);
    match first_tied_class(&ranks) {
        None => {
            *leaves += 1;
            let s = write_smiles(graph, &ranks);
            if best.as_ref().is_none_or(|b| s < *b) {
                *best = Some(s);
            }
        }
        Some(class) => {
            // Tied atoms with identical neighbour lists are exchanged by an
            // automorphism, so only one of them needs to be tried.
            let mut tried: Vec<Vec<(usize, u8)>> = Vec::new();
            for &atom in &class {
                let mut env: Vec<(usize, u8)> = graph
                    .neighbors(atom)
                    .iter()
                    .map(|&(n, b)| (n, graph.bonds()[b].order.code()))
                    .collect();
                env.sort_unstable();
                if tried.contains(&env) {
                    continue;
                }
                tried.push(env);
                if *leaves >= MAX_LEAVES && best.is_some() {
                    return;
                }
                search(graph, break_tie(&ranks, atom), best, leaves);
            }
        }
    }
}

/// Writes `graph` as SMILES, visiting atoms in `ranks` order.
fn write_smiles(graph: &MolecularGraph, ranks: &[u32]) -> String {
    let n = graph.atom_count();
    let mut by_rank: Vec<usize> = (0..n).collect();
    by_rank.sort_by_key(|&i| ranks[i]);
    let sorted_neighbors: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|v| {
            let mut nbrs = graph.neighbors(v).to_vec();
            nbrs.sort_by_key(|&(w, _)| ranks[w]);
            nbrs
        })
        .collect();

    let mut w = Writer {
        graph,
        visit: vec![usize::MAX; n],
        parent_bond: vec![usize::MAX; n],
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
        bond_digit: vec![usize::MAX; graph.bonds().len()],
        digits: Vec::new(),
        written: vec![false; n],
        out: String::new(),
    };

    // Pass 1: spanning forest in rank order; non-tree bonds become ring closures.
    let mut roots = Vec::new();
    let mut is_tree = vec![false; graph.bonds().len()];
    let mut counter = 0;
    for &root in &by_rank {
        if w.visit[root] == usize::MAX {
            roots.push(root);
            w.discover(root, &sorted_neighbors, &mut is_tree, &mut counter);
        }
    }
    for (b, bond) in graph.bonds().iter().enumerate() {
        if !is_tree[b] {
            let (x, y) = bond.atoms;
            w.closures[x].push((y, b));
            w.closures[y].push((x, b));
        }
    }
    for v in 0..n {
        let visit = &w.visit;
        w.closures[v].sort_by_key(|&(p, _)| visit[p]);
    }

    // Pass 2: emit.
    for (i, &root) in roots.iter().enumerate() {
        if i > 0 {
            w.out.push('.');
        }
        w.emit(root);
    }
    w.out
}

struct Writer<'g> {
    graph: &'g MolecularGraph,
    visit: Vec<usize>,
    parent_bond: Vec<usize>,
    children: Vec<Vec<usize>>,
    closures: Vec<Vec<(usize, usize)>>,
    bond_digit: Vec<usize>,
    digits: Vec<bool>,
    written: Vec<bool>,
    out: String,
}

impl Writer<'_> {
    fn discover(
        &mut self,
        v: usize,
        sorted_neighbors: &[Vec<(usize, usize)>],
        is_tree: &mut [bool],
        counter: &mut usize,
    ) {
        self.visit[v] = *counter;
        *counter += 1;
        for &(w, b) in &sorted_neighbors[v] {
            if self.visit[w] == usize::MAX {
                self.parent_bond[w] = b;
                is_tree[b] = true;
                self.children[v].push(w);
                self.discover(w, sorted_neighbors, is_tree, counter);
            }
        }
    }

    fn emit(&mut self, v: usize) {
        if self.parent_bond[v] != usize::MAX {
            self.out.push_str(bond_symbol(self.graph, self.parent_bond[v]));
        }
        write_atom(self.graph, v, &mut self.out);
        self.written[v] = true;
        let mut freed = Vec::new();
        for i in 0..self.closures[v].len() {
            let (partner, b) = self.closures[v][i];
            let digit = if self.written[partner] {
                freed.push(self.bond_digit[b]);
                self.bond_digit[b]
            } else {
                let d = match self.digits.iter().position(|used| !used) {
                    Some(d) => d,
                    None => {
                        self.digits.push(false);
                        self.digits.len() - 1
                    }
                };
                self.digits[d] = true;
                self.bond_digit[b] = d;
                self.out.push_str(bond_symbol(self.graph, b));
                d
            };
            push_ring_label(&mut self.out, digit + 1);
        }
        for d in freed {
            self.digits[d] = false;
        }
        let kids = std::mem::take(&mut self.children[v]);
        if let Some((&last, rest)) = kids.split_last() {
            for &c in rest {
                self.out.push('(');
                self.emit(c);
                self.out.push(')');
            }
            self.emit(last);
        }
    }
}

fn push_ring_label(out: &mut String, label: usize) {
    if label < 10 {
        out.push(char::from(b'0' + label as u8));
    } else {
        let _ = write!(out, "%{label:02}");
    }
}

fn bond_symbol(graph: &MolecularGraph, b: usize) -> &'static str {
    let bond = &graph.bonds()[b];
    let (x, y) = bond.atoms;
    let both_aromatic = graph.atoms()[x].aromatic && graph.atoms()[y].aromatic;
    match bond.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic && graph.is_ring_bond(b) => "",
        BondOrder::Aromatic => ":",
    }
}

fn write_atom(graph: &MolecularGraph, i: usize, out: &mut String) {
    let atom = &graph.atoms()[i];
    let h = graph.hydrogen_count(i);
    let symbol = atom.element.symbol();
    let used: u32 = graph
        .neighbors(i)
        .iter()
        .map(|&(_, b)| graph.bonds()[b].order.valence())
        .sum();
    let mut organic = atom.clone();
    organic.explicit_h = None;
    let bare = atom.element.in_organic_subset()
        && atom.charge == 0
        && atom.isotope.is_none()
        && atom.map_number.is_none()
        && (!atom.aromatic || atom.element.can_be_aromatic())
        && implicit_hydrogens(&organic, used) == Some(h);
    let shown = if atom.aromatic {
        symbol.to_ascii_lowercase()
    } else {
        symbol.to_string()
    };
    if bare {
        out.push_str(&shown);
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        let _ = write!(out, "{iso}");
    }
    out.push_str(&shown);
    match h {
        0 => {}
        1 => out.push('H'),
        _ => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    if let Some(m) = atom.map_number {
        let _ = write!(out, ":{m}");
    }
    out.push(']');
}
