use super::{fnv64, fold, Fingerprint, FingerprintKind};
use crate::chem::MolecularGraph;

/// Linear-path fingerprint: one hashed bit per distinct label sequence over
/// all simple bond paths of 1..=`max_path_len` bonds. A label alternates
/// atom (element, aromatic) and bond order; the lexicographically smaller of
/// the two reading directions is hashed.
///
/// # Panics
/// Panics if `width` is not a power of two.
pub fn path_fingerprint(graph: &MolecularGraph, max_path_len: u32, width: usize) -> Fingerprint {
    assert!(width.is_power_of_two(), "width must be a power of two");
    let mut fp = Fingerprint::empty(FingerprintKind::Path { max_path_len }, width);
    let mut on_path = vec![false; graph.atom_count()];
    let mut labels = Vec::new();
    for start in 0..graph.atom_count() {
        on_path[start] = true;
        let mut seq = vec![atom_word(graph, start)];
        extend(
            graph,
            start,
            max_path_len as usize,
            &mut on_path,
            &mut seq,
            &mut fp,
            &mut labels,
        );
        on_path[start] = false;
    }
    fp
}

fn atom_word(graph: &MolecularGraph, i: usize) -> u64 {
    let a = &graph.atoms()[i];
    (a.element.atomic_number() as u64) << 1 | a.aromatic as u64
}

fn extend(
    graph: &MolecularGraph,
    v: usize,
    remaining: usize,
    on_path: &mut [bool],
    seq: &mut Vec<u64>,
    fp: &mut Fingerprint,
    scratch: &mut Vec<u64>,
) {
    if remaining == 0 {
        return;
    }
    for &(w, b) in graph.neighbors(v) {
        if on_path[w] {
            continue;
        }
        seq.push(graph.bonds()[b].order.code() as u64);
        seq.push(atom_word(graph, w));
        scratch.clear();
        scratch.extend(seq.iter().rev());
        let label = if scratch.as_slice() < seq.as_slice() {
            &scratch[..]
        } else {
            &seq[..]
        };
        fp.set(fold(fnv64(label), fp.width()));
        on_path[w] = true;
        extend(graph, w, remaining - 1, on_path, seq, fp, scratch);
        on_path[w] = false;
        seq.truncate(seq.len() - 2);
    }
}
