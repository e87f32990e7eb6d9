//! 166 MACCS-style structural keys.
//!
//! Key `k` (1-based) is stored at bit `k - 1`. Keys are expressed as small
//! labelled query graphs matched by backtracking; a key with threshold `t`
//! is set when more than `t` distinct atom sets match. Keys listed in
//! [`MACCS_UNIMPLEMENTED_KEYS`] need recursive environment queries and are
//! always clear.

use std::collections::HashSet;
use std::sync::OnceLock;

use super::{Fingerprint, FingerprintKind};
use crate::chem::{BondOrder, MolecularGraph};

pub const MACCS_KEY_COUNT: usize = 166;

/// Keys that are never set: 1 (isotope flag, undefined in the public key
/// list), 44 ("other"), and 90, 91, 116, 118, 128, 129, 147 (recursive
/// environment alternatives).
pub const MACCS_UNIMPLEMENTED_KEYS: [u8; 9] = [1, 44, 90, 91, 116, 118, 128, 129, 147];

pub fn maccs_fingerprint(graph: &MolecularGraph) -> Fingerprint {
    let mut fp = Fingerprint::empty(FingerprintKind::Maccs, MACCS_KEY_COUNT);
    for (i, key) in keys().iter().enumerate() {
        if key.test(graph) {
            fp.set(i);
        }
    }
    fp
}

type AtomQ = fn(&MolecularGraph, usize) -> bool;

#[derive(Clone, Copy)]
enum BondQ {
    Any,
    Single,
    Double,
    Triple,
    Aromatic,
    NotAromatic,
    Ring,
    NotRing,
    DoubleRing,
    /// Unwritten SMARTS bond: single or aromatic.
    Implicit,
}

impl BondQ {
    fn accepts(self, graph: &MolecularGraph, bond: usize) -> bool {
        let order = graph.bonds()[bond].order;
        let ring = graph.is_ring_bond(bond);
        match self {
            BondQ::Any => true,
            BondQ::Single => order == BondOrder::Single,
            BondQ::Double => order == BondOrder::Double,
            BondQ::Triple => order == BondOrder::Triple,
            BondQ::Aromatic => order == BondOrder::Aromatic,
            BondQ::NotAromatic => order != BondOrder::Aromatic,
            BondQ::Ring => ring,
            BondQ::NotRing => !ring,
            BondQ::DoubleRing => order == BondOrder::Double && ring,
            BondQ::Implicit => matches!(order, BondOrder::Single | BondOrder::Aromatic),
        }
    }
}

/// Connected query graph; every atom after the first is bonded to an earlier one.
struct Pattern {
    atoms: Vec<AtomQ>,
    bonds: Vec<(usize, usize, BondQ)>,
}

impl Pattern {
    fn chain(atoms: &[AtomQ], bonds: &[BondQ]) -> Pattern {
        debug_assert_eq!(atoms.len(), bonds.len() + 1);
        Pattern {
            atoms: atoms.to_vec(),
            bonds: bonds.iter().enumerate().map(|(i, &b)| (i, i + 1, b)).collect(),
        }
    }

    /// `center` bonded to each arm atom.
    fn star(center: AtomQ, arms: &[(BondQ, AtomQ)]) -> Pattern {
        let mut atoms = vec![center];
        let mut bonds = Vec::new();
        for &(b, a) in arms {
            bonds.push((0, atoms.len(), b));
            atoms.push(a);
        }
        Pattern { atoms, bonds }
    }

    /// Cycle of `size` atoms; the first may be constrained.
    fn ring(size: usize, first: AtomQ) -> Pattern {
        let mut p = Pattern::chain(
            &std::iter::once(first)
                .chain(std::iter::repeat_n(any as AtomQ, size - 1))
                .collect::<Vec<_>>(),
            &vec![BondQ::Any; size - 1],
        );
        p.bonds.push((size - 1, 0, BondQ::Any));
        p
    }

    /// Counts distinct matched atom sets, stopping once `limit` is exceeded.
    fn count_matches(&self, graph: &MolecularGraph, limit: usize) -> usize {
        let mut found = HashSet::new();
        let mut mapping = Vec::with_capacity(self.atoms.len());
        let mut used = vec![false; graph.atom_count()];
        for start in 0..graph.atom_count() {
            if !(self.atoms[0])(graph, start) {
                continue;
            }
            mapping.push(start);
            used[start] = true;
            self.extend(graph, &mut mapping, &mut used, &mut found, limit);
            used[start] = false;
            mapping.pop();
            if found.len() > limit {
                break;
            }
        }
        found.len()
    }

    fn extend(
        &self,
        graph: &MolecularGraph,
        mapping: &mut Vec<usize>,
        used: &mut [bool],
        found: &mut HashSet<Vec<usize>>,
        limit: usize,
    ) {
        if found.len() > limit {
            return;
        }
        let next = mapping.len();
        if next == self.atoms.len() {
            let mut set = mapping.clone();
            set.sort_unstable();
            found.insert(set);
            return;
        }
        let anchor = self
            .bonds
            .iter()
            .find_map(|&(x, y, _)| match (x == next, y == next) {
                (true, _) if y < next => Some(y),
                (_, true) if x < next => Some(x),
                _ => None,
            })
            .expect("pattern atoms are connected in order");
        for &(cand, _) in graph.neighbors(mapping[anchor]) {
            if used[cand] || !(self.atoms[next])(graph, cand) {
                continue;
            }
            let bonds_ok = self.bonds.iter().all(|&(x, y, q)| {
                let other = match (x == next, y == next) {
                    (true, _) if y < next => y,
                    (_, true) if x < next => x,
                    _ => return true,
                };
                graph
                    .neighbors(cand)
                    .iter()
                    .find(|&&(n, _)| n == mapping[other])
                    .is_some_and(|&(_, b)| q.accepts(graph, b))
            });
            if !bonds_ok {
                continue;
            }
            mapping.push(cand);
            used[cand] = true;
            self.extend(graph, mapping, used, found, limit);
            used[cand] = false;
            mapping.pop();
        }
    }
}

enum Key {
    Unimplemented,
    Match(Pattern, usize),
    CycleAtLeast(usize),
    AromaticRingsAbove(usize),
    FragmentsAbove(usize),
}

impl Key {
    fn test(&self, graph: &MolecularGraph) -> bool {
        match self {
            Key::Unimplemented => false,
            Key::Match(p, t) => p.count_matches(graph, *t) > *t,
            Key::CycleAtLeast(min) => has_cycle_at_least(graph, *min),
            Key::AromaticRingsAbove(t) => aromatic_ring_count(graph) > *t,
            Key::FragmentsAbove(t) => graph.connected_components().len() > *t,
        }
    }
}

/// Longest cycle searched for by [`Key::CycleAtLeast`].
const MAX_CYCLE: usize = 14;

fn has_cycle_at_least(graph: &MolecularGraph, min: usize) -> bool {
    fn walk(g: &MolecularGraph, start: usize, v: usize, depth: usize, min: usize, on: &mut [bool]) -> bool {
        for &(w, b) in g.neighbors(v) {
            if !g.is_ring_bond(b) {
                continue;
            }
            if w == start && depth + 1 >= min {
                return true;
            }
            // Only visit atoms above `start` so each cycle is rooted at its minimum.
            if on[w] || w < start || depth + 1 >= MAX_CYCLE {
                continue;
            }
            on[w] = true;
            let hit = walk(g, start, w, depth + 1, min, on);
            on[w] = false;
            if hit {
                return true;
            }
        }
        false
    }
    let mut on = vec![false; graph.atom_count()];
    (0..graph.atom_count()).filter(|&a| graph.is_ring_atom(a)).any(|a| {
        on[a] = true;
        let hit = walk(graph, a, a, 0, min, &mut on);
        on[a] = false;
        hit
    })
}

/// Cyclomatic number of the subgraph of aromatic ring bonds.
fn aromatic_ring_count(graph: &MolecularGraph) -> usize {
    let arom: Vec<usize> = (0..graph.bonds().len())
        .filter(|&b| graph.bonds()[b].order == BondOrder::Aromatic && graph.is_ring_bond(b))
        .collect();
    let mut parent: Vec<usize> = (0..graph.atom_count()).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut cycles = 0;
    for b in arom {
        let (x, y) = graph.bonds()[b].atoms;
        let (rx, ry) = (root(&mut parent, x), root(&mut parent, y));
        if rx == ry {
            cycles += 1;
        } else {
            parent[rx] = ry;
        }
    }
    cycles
}

// Atom predicates. Names follow the query shorthand: `q` is any atom other
// than C or H, `x` a halogen, `a_` aliphatic, trailing `h` "has hydrogen".

fn z(g: &MolecularGraph, i: usize) -> u8 {
    g.atoms()[i].element.atomic_number()
}
fn aliphatic(g: &MolecularGraph, i: usize, zz: u8) -> bool {
    z(g, i) == zz && !g.atoms()[i].aromatic
}
fn any(_: &MolecularGraph, _: usize) -> bool {
    true
}
fn c(g: &MolecularGraph, i: usize) -> bool {
    z(g, i) == 6
}
fn n(g: &MolecularGraph, i: usize) -> bool {
    z(g, i) == 7
}
fn o(g: &MolecularGraph, i: usize) -> bool {
    z(g, i) == 8
}
fn s(g: &MolecularGraph, i: usize) -> bool {
    z(g, i) == 16
}
fn q(g: &MolecularGraph, i: usize) -> bool {
    !matches!(z(g, i), 1 | 6)
}
fn qh(g: &MolecularGraph, i: usize) -> bool {
    q(g, i) && g.hydrogen_count(i) > 0
}
fn x(g: &MolecularGraph, i: usize) -> bool {
    matches!(z(g, i), 9 | 17 | 35 | 53)
}
fn ch2(g: &MolecularGraph, i: usize) -> bool {
    aliphatic(g, i, 6) && g.hydrogen_count(i) == 2
}
fn ch3(g: &MolecularGraph, i: usize) -> bool {
    aliphatic(g, i, 6) && g.hydrogen_count(i) == 3
}
fn ch3_or_ch4(g: &MolecularGraph, i: usize) -> bool {
    aliphatic(g, i, 6) && matches!(g.hydrogen_count(i), 3 | 4)
}
fn ch2_or_ch3(g: &MolecularGraph, i: usize) -> bool {
    aliphatic(g, i, 6) && matches!(g.hydrogen_count(i), 2 | 3)
}
fn nh2(g: &MolecularGraph, i: usize) -> bool {
    aliphatic(g, i, 7) && g.hydrogen_count(i) == 2
}
fn nh(g: &MolecularGraph, i: usize) -> bool {
    n(g, i) && g.hydrogen_count(i) > 0
}
fn oh(g: &MolecularGraph, i: usize) -> bool {
    aliphatic(g, i, 8) && g.hydrogen_count(i) > 0
}
fn ring(g: &MolecularGraph, i: usize) -> bool {
    g.is_ring_atom(i)
}
fn hetero_ring(g: &MolecularGraph, i: usize) -> bool {
    z(g, i) != 6 && ring(g, i)
}
fn aromatic(g: &MolecularGraph, i: usize) -> bool {
    g.atoms()[i].aromatic
}
fn charged(g: &MolecularGraph, i: usize) -> bool {
    g.atoms()[i].charge != 0
}

macro_rules! element_set {
    ($name:ident, $($z:pat_param)|+) => {
        fn $name(g: &MolecularGraph, i: usize) -> bool {
            matches!(z(g, i), $($z)|+)
        }
    };
}
element_set!(transactinide, 104..=118);
element_set!(heavy_p_block, 32 | 33 | 34 | 50 | 51 | 52 | 82 | 83 | 84);
element_set!(actinide, 89..=103);
element_set!(group3_4, 21 | 22 | 39 | 40 | 72);
element_set!(lanthanide, 57..=71);
element_set!(group5_7, 23 | 24 | 25 | 41 | 42 | 43 | 73 | 74 | 75);
element_set!(group8_10, 26 | 27 | 28 | 44 | 45 | 46 | 76 | 77 | 78);
element_set!(alkaline_earth, 4 | 12 | 20 | 38 | 56 | 88);
element_set!(group11_12, 29 | 30 | 47 | 48 | 79 | 80);
element_set!(group13, 5 | 13 | 31 | 49 | 81);
element_set!(alkali, 3 | 11 | 19 | 37 | 55 | 87);
element_set!(si, 14);
element_set!(p, 15);
element_set!(f, 9);
element_set!(cl, 17);
element_set!(br, 35);
element_set!(iodine, 53);

fn s_ring(g: &MolecularGraph, i: usize) -> bool {
    s(g, i) && ring(g, i)
}
fn o_ring(g: &MolecularGraph, i: usize) -> bool {
    o(g, i) && ring(g, i)
}
fn n_ring(g: &MolecularGraph, i: usize) -> bool {
    n(g, i) && ring(g, i)
}

fn keys() -> &'static [Key] {
    static KEYS: OnceLock<Vec<Key>> = OnceLock::new();
    KEYS.get_or_init(build_keys)
}

fn build_keys() -> Vec<Key> {
    use BondQ::*;
    let atom = |a: AtomQ| Key::Match(Pattern::star(a, &[]), 0);
    let atoms_above = |a: AtomQ, t: usize| Key::Match(Pattern::star(a, &[]), t);
    let chain = |a: &[AtomQ], b: &[BondQ]| Key::Match(Pattern::chain(a, b), 0);
    let chain_above = |a: &[AtomQ], b: &[BondQ], t| Key::Match(Pattern::chain(a, b), t);
    let any_chain = |a: &[AtomQ]| Key::Match(Pattern::chain(a, &vec![Any; a.len() - 1]), 0);
    let star = |center: AtomQ, arms: &[AtomQ]| {
        let arms: Vec<_> = arms.iter().map(|&a| (Any, a)).collect();
        Key::Match(Pattern::star(center, &arms), 0)
    };
    let ring_key = |size, first: AtomQ| Key::Match(Pattern::ring(size, first), 0);

    let keys = vec![
        Key::Unimplemented,                                                            // 1
        atom(transactinide),                                                           // 2
        atom(heavy_p_block),                                                           // 3
        atom(actinide),                                                                // 4
        atom(group3_4),                                                                // 5
        atom(lanthanide),                                                              // 6
        atom(group5_7),                                                                // 7
        ring_key(4, q),                                                                // 8
        atom(group8_10),                                                               // 9
        atom(alkaline_earth),                                                          // 10
        ring_key(4, any),                                                              // 11
        atom(group11_12),                                                              // 12
        star(n, &[o, c, c]),                                                           // 13
        chain(&[s, s], &[Single]),                                                     // 14
        star(c, &[o, o, o]),                                                           // 15
        ring_key(3, q),                                                                // 16
        chain(&[c, c], &[Triple]),                                                     // 17
        atom(group13),                                                                 // 18
        ring_key(7, any),                                                              // 19
        atom(si),                                                                      // 20
        Key::Match(Pattern::star(c, &[(Double, c), (Any, q), (Any, q)]), 0),           // 21
        ring_key(3, any),                                                              // 22
        star(c, &[n, o, o]),                                                           // 23
        chain(&[n, o], &[Single]),                                                     // 24
        star(c, &[n, n, n]),                                                           // 25
        Key::Match(Pattern::star(c, &[(DoubleRing, c), (Ring, any), (Ring, any)]), 0), // 26
        atom(iodine),                                                                  // 27
        any_chain(&[q, ch2, q]),                                                       // 28
        atom(p),                                                                       // 29
        star(q, &[c, c, c, any]),                                                      // 30
        any_chain(&[q, x]),                                                            // 31
        any_chain(&[c, s, n]),                                                         // 32
        any_chain(&[n, s]),                                                            // 33
        chain(&[ch2, any], &[Double]),                                                 // 34
        atom(alkali),                                                                  // 35
        atom(s_ring),                                                                  // 36
        star(c, &[n, o, n]),                                                           // 37
        star(c, &[n, c, n]),                                                           // 38
        star(s, &[o, o, o]),                                                           // 39
        chain(&[s, o], &[Single]),                                                     // 40
        chain(&[c, n], &[Triple]),                                                     // 41
        atom(f),                                                                       // 42
        any_chain(&[qh, any, qh]),                                                     // 43
        Key::Unimplemented,                                                            // 44
        chain(&[c, c, n], &[Double, Any]),                                             // 45
        atom(br),                                                                      // 46
        any_chain(&[s, any, n]),                                                       // 47
        star(q, &[o, o, o]),                                                           // 48
        atom(charged),                                                                 // 49
        Key::Match(Pattern::star(c, &[(Double, c), (Any, c), (Any, c)]), 0),           // 50
        any_chain(&[c, s, o]),                                                         // 51
        any_chain(&[n, n]),                                                            // 52
        any_chain(&[qh, any, any, any, qh]),                                           // 53
        any_chain(&[qh, any, any, qh]),                                                // 54
        any_chain(&[o, s, o]),                                                         // 55
        star(n, &[o, o, c]),                                                           // 56
        atom(o_ring),                                                                  // 57
        any_chain(&[q, s, q]),                                                         // 58
        chain(&[s, any, any], &[NotAromatic, Aromatic]),                               // 59
        chain(&[s, o], &[Double]),                                                     // 60
        star(s, &[any, any, any]),                                                     // 61
        chain(&[any, any, any, any], &[Ring, NotRing, Ring]),                          // 62
        chain(&[n, o], &[Double]),                                                     // 63
        chain(&[any, any, s], &[Ring, NotRing]),                                       // 64
        chain(&[c, n], &[Aromatic]),                                                   // 65
        star(c, &[c, c, c, any]),                                                      // 66
        any_chain(&[q, s]),                                                            // 67
        any_chain(&[qh, qh]),                                                          // 68
        any_chain(&[q, qh]),                                                           // 69
        any_chain(&[q, n, q]),                                                         // 70
        any_chain(&[n, o]),                                                            // 71
        any_chain(&[o, any, any, o]),                                                  // 72
        chain(&[s, any], &[Double]),                                                   // 73
        any_chain(&[ch3, any, ch3]),                                                   // 74
        chain(&[any, n, any], &[NotRing, Ring]),                                       // 75
        Key::Match(Pattern::star(c, &[(Double, c), (Any, any), (Any, any)]), 0),       // 76
        any_chain(&[n, any, n]),                                                       // 77
        chain(&[c, n], &[Double]),                                                     // 78
        any_chain(&[n, any, any, n]),                                                  // 79
        any_chain(&[n, any, any, any, n]),                                             // 80
        star(any, &[s, any, any]),                                                     // 81
        any_chain(&[any, ch2, qh]),                                                    // 82
        ring_key(5, q),                                                                // 83
        atom(nh2),                                                                     // 84
        star(n, &[c, c, c]),                                                           // 85
        chain(&[ch2_or_ch3, q, ch2_or_ch3], &[Implicit, Implicit]),                    // 86
        chain(&[x, any, any], &[NotRing, Ring]),                                       // 87
        atom(s),                                                                       // 88
        any_chain(&[o, any, any, any, o]),                                             // 89
        Key::Unimplemented,                                                            // 90
        Key::Unimplemented,                                                            // 91
        star(c, &[o, n, c]),                                                           // 92
        any_chain(&[q, ch3]),                                                          // 93
        any_chain(&[q, n]),                                                            // 94
        any_chain(&[n, any, any, o]),                                                  // 95
        ring_key(5, any),                                                              // 96
        any_chain(&[n, any, any, any, o]),                                             // 97
        ring_key(6, q),                                                                // 98
        chain(&[c, c], &[Double]),                                                     // 99
        any_chain(&[any, ch2, n]),                                                     // 100
        Key::CycleAtLeast(8),                                                          // 101
        any_chain(&[q, o]),                                                            // 102
        atom(cl),                                                                      // 103
        any_chain(&[qh, any, ch2, any]),                                               // 104
        Key::Match(Pattern::star(any, &[(Ring, any), (Ring, any), (Ring, any)]), 0),   // 105
        star(any, &[q, q, q]),                                                         // 106
        star(any, &[x, any, any]),                                                     // 107
        any_chain(&[ch3, any, any, any, ch2, any]),                                    // 108
        any_chain(&[any, ch2, o]),                                                     // 109
        any_chain(&[n, c, o]),                                                         // 110
        any_chain(&[n, any, ch2, any]),                                                // 111
        star(any, &[any, any, any, any]),                                              // 112
        chain(&[o, any, any], &[NotAromatic, Aromatic]),                               // 113
        any_chain(&[ch3, ch2, any]),                                                   // 114
        any_chain(&[ch3, any, ch2, any]),                                              // 115
        Key::Unimplemented,                                                            // 116
        any_chain(&[n, any, o]),                                                       // 117
        Key::Unimplemented,                                                            // 118
        chain(&[n, any], &[Double]),                                                   // 119
        atoms_above(hetero_ring, 1),                                                   // 120
        atom(n_ring),                                                                  // 121
        star(n, &[any, any, any]),                                                     // 122
        any_chain(&[o, c, o]),                                                         // 123
        any_chain(&[q, q]),                                                            // 124
        Key::AromaticRingsAbove(1),                                                    // 125
        chain(&[any, o, any], &[NotRing, NotRing]),                                    // 126
        chain_above(&[any, any, o], &[Ring, NotRing], 1),                              // 127
        Key::Unimplemented,                                                            // 128
        Key::Unimplemented,                                                            // 129
        Key::Match(Pattern::chain(&[q, q], &[Any]), 1),                                // 130
        atoms_above(qh, 1),                                                            // 131
        any_chain(&[o, any, ch2, any]),                                                // 132
        chain(&[any, any, n], &[Ring, NotRing]),                                       // 133
        atom(x),                                                                       // 134
        chain(&[n, any, any], &[NotAromatic, Aromatic]),                               // 135
        Key::Match(Pattern::chain(&[o, any], &[Double]), 1),                           // 136
        atom(hetero_ring),                                                             // 137
        Key::Match(Pattern::chain(&[q, ch2, any], &[Any, Any]), 1),                    // 138
        atom(oh),                                                                      // 139
        atoms_above(o, 3),                                                             // 140
        atoms_above(ch3, 2),                                                           // 141
        atoms_above(n, 1),                                                             // 142
        chain(&[any, any, o], &[Ring, NotRing]),                                       // 143
        chain(&[any, any, any, any], &[NotAromatic, Aromatic, NotAromatic]),           // 144
        Key::Match(Pattern::ring(6, any), 1),                                          // 145
        atoms_above(o, 2),                                                             // 146
        Key::Unimplemented,                                                            // 147
        star(q, &[any, any, any]),                                                     // 148
        atoms_above(ch3_or_ch4, 1),                                                    // 149
        chain(&[any, any, any, any], &[NotRing, Ring, NotRing]),                       // 150
        atom(nh),                                                                      // 151
        star(c, &[o, c, c]),                                                           // 152
        any_chain(&[q, ch2, any]),                                                     // 153
        chain(&[c, o], &[Double]),                                                     // 154
        chain(&[any, ch2, any], &[NotRing, NotRing]),                                  // 155
        star(any, &[n, any, any]),                                                     // 156
        chain(&[c, o], &[Single]),                                                     // 157
        chain(&[c, n], &[Single]),                                                     // 158
        atoms_above(o, 1),                                                             // 159
        atom(ch3_or_ch4),                                                              // 160
        atom(n),                                                                       // 161
        atom(aromatic),                                                                // 162
        ring_key(6, any),                                                              // 163
        atom(o),                                                                       // 164
        atom(ring),                                                                    // 165
        Key::FragmentsAbove(1),                                                        // 166
    ];
    debug_assert_eq!(keys.len(), MACCS_KEY_COUNT);
    keys
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn on_keys(s: &str) -> Vec<usize> {
        maccs_fingerprint(&parse_smiles(s).unwrap())
            .ones()
            .map(|b| b + 1)
            .collect()
    }

    #[test]
    fn table_has_every_key() {
        assert_eq!(keys().len(), MACCS_KEY_COUNT);
        for k in MACCS_UNIMPLEMENTED_KEYS {
            assert!(matches!(keys()[k as usize - 1], Key::Unimplemented));
        }
        let unimplemented = keys().iter().filter(|k| matches!(k, Key::Unimplemented)).count();
        assert_eq!(unimplemented, MACCS_UNIMPLEMENTED_KEYS.len());
    }

    #[test]
    fn sulfur_and_ring_keys() {
        assert!(on_keys("CS").contains(&88));
        assert!(!on_keys("CC").contains(&88));
        let cyclopropane = on_keys("C1CC1");
        assert!(cyclopropane.contains(&165));
        assert!(cyclopropane.contains(&22));
    }

    #[test]
    fn benzene() {
        assert_eq!(on_keys("c1ccccc1"), vec![162, 163, 165]);
    }

    #[test]
    fn ethanol() {
        assert_eq!(on_keys("CCO"), vec![82, 109, 114, 139, 153, 155, 157, 160, 164]);
    }

    #[test]
    fn counted_keys() {
        // Two aromatic rings, two six-membered rings, and a ten-membered envelope.
        let naphthalene = on_keys("c1ccc2ccccc2c1");
        for k in [101, 105, 125, 145, 162, 163, 165] {
            assert!(naphthalene.contains(&k), "key {k}");
        }
        assert!(on_keys("CCO.O").contains(&166));
        assert!(!on_keys("CCO").contains(&166));
    }
}
