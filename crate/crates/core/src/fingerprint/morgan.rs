use fixedbitset::FixedBitSet;

use super::{fnv64, fold, Fingerprint, FingerprintKind};
use crate::chem::MolecularGraph;

/// Circular-environment fingerprint.
///
/// Radius-0 identifiers depend only on the atom itself (element, charge,
/// aromaticity, isotope), so every atom of an induced subgraph contributes a
/// bit its parent molecule also has. Each later round hashes the previous
/// identifier with degree, hydrogen count, ring membership and the sorted
/// (bond, neighbour identifier) list. An environment whose bond set was
/// already produced is dropped; within a round the smaller identifier wins.
///
/// # Panics
/// Panics if `width` is not a power of two.
pub fn morgan_fingerprint(graph: &MolecularGraph, radius: u32, width: usize) -> Fingerprint {
    assert!(width.is_power_of_two(), "width must be a power of two");
    let mut fp = Fingerprint::empty(FingerprintKind::Morgan { radius }, width);
    let n = graph.atom_count();
    let nb = graph.bonds().len();

    let mut ids: Vec<u64> = graph
        .atoms()
        .iter()
        .map(|a| {
            let words = [
                a.element.atomic_number() as u64,
                a.charge as i64 as u64,
                a.aromatic as u64,
                a.isotope.unwrap_or(0) as u64,
            ];
            fnv64(&words)
        })
        .collect();
    for &id in &ids {
        fp.set(fold(id, width));
    }

    let mut envs: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(nb); n];
    let mut seen_envs: Vec<FixedBitSet> = Vec::new();
    for round in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_envs = Vec::with_capacity(n);
        for i in 0..n {
            let mut nbrs: Vec<(u64, u64)> = graph
                .neighbors(i)
                .iter()
                .map(|&(w, b)| (graph.bonds()[b].order.code() as u64, ids[w]))
                .collect();
            nbrs.sort_unstable();
            let mut words = vec![
                round as u64,
                ids[i],
                graph.degree(i) as u64,
                graph.hydrogen_count(i) as u64,
                graph.is_ring_atom(i) as u64,
            ];
            for (bond, id) in nbrs {
                words.push(bond);
                words.push(id);
            }
            next_ids.push(fnv64(&words));

            let mut env = envs[i].clone();
            for &(w, b) in graph.neighbors(i) {
                env.insert(b);
                env.union_with(&envs[w]);
            }
            next_envs.push(env);
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| {
            next_envs[x]
                .as_slice()
                .cmp(next_envs[y].as_slice())
                .then(next_ids[x].cmp(&next_ids[y]))
        });
        for i in order {
            let env = &next_envs[i];
            if env.is_clear() || seen_envs.contains(env) {
                continue;
            }
            seen_envs.push(env.clone());
            fp.set(fold(next_ids[i], width));
        }
        ids = next_ids;
        envs = next_envs;
    }
    fp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn fp(s: &str, r: u32) -> Fingerprint {
        morgan_fingerprint(&parse_smiles(s).unwrap(), r, 2048)
    }

    #[test]
    fn methane_radius_zero_has_one_bit() {
        assert_eq!(fp("C", 0).count_ones(), 1);
        assert_eq!(fp("C", 2).count_ones(), 1);
    }

    #[test]
    fn traversal_order_does_not_matter() {
        assert_eq!(fp("CCO", 2), fp("OCC", 2));
        assert_eq!(fp("c1ccccc1O", 2), fp("Oc1ccccc1", 2));
    }

    #[test]
    fn ethanol_and_propanol_overlap_partially() {
        let a = fp("CCO", 2);
        let b = fp("CCCO", 2);
        assert!(a.ones().any(|bit| b.contains(bit)));
        assert!(a.ones().any(|bit| !b.contains(bit)) || b.ones().any(|bit| !a.contains(bit)));
    }

    #[test]
    fn ethane_environments() {
        // One atom identifier at radius 0; at radius 1 both atoms cover the
        // same single bond, so only one environment survives.
        assert_eq!(fp("CC", 0).count_ones(), 1);
        assert_eq!(fp("CC", 1).count_ones(), 2);
    }
}
