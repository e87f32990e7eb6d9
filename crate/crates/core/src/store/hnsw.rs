//! Hierarchical navigable small-world graph over a flat vector arena.
//!
//! Nodes are dense `u32` slots owned by the collection; deleted slots stay in
//! the graph for navigation and are filtered by the caller. Level draws come
//! from a ChaCha8 stream owned by the index, so a fixed seed and insertion
//! order always produce the same graph.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distance::squared_l2;

const MAX_LEVEL: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HnswParams {
    pub m: usize,
    pub m0: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        HnswParams {
            m: 16,
            m0: 32,
            ef_construction: 200,
            ef_search: 400,
            seed: 0x686e_7377,
        }
    }
}

/// Squared distance paired with its node; ordered by distance, then node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub d: f32,
    pub node: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d.total_cmp(&other.d).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) struct Vectors<'a> {
    pub data: &'a [f32],
    pub dim: usize,
}

impl Vectors<'_> {
    #[inline]
    pub fn get(&self, node: u32) -> &[f32] {
        let i = node as usize * self.dim;
        &self.data[i..i + self.dim]
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Hnsw {
    pub params: HnswParams,
    pub rng: ChaCha8Rng,
    /// `links[node][layer]`; a node's top layer is `links[node].len() - 1`.
    pub links: Vec<Vec<Vec<u32>>>,
    pub entry: Option<u32>,
}

impl Hnsw {
    pub fn new(params: HnswParams) -> Self {
        Hnsw {
            params,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            links: Vec::new(),
            entry: None,
        }
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    fn top_level(&self) -> usize {
        self.entry.map_or(0, |e| self.links[e as usize].len() - 1)
    }

    fn capacity(&self, layer: usize) -> usize {
        if layer == 0 {
            self.params.m0
        } else {
            self.params.m
        }
    }

    fn draw_level(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let mult = 1.0 / (self.params.m as f64).ln();
        ((-(1.0 - u).ln() * mult).floor() as usize).min(MAX_LEVEL)
    }

    /// Adds the next slot; `node` must equal the current length.
    pub fn insert(&mut self, node: u32, vectors: &Vectors<'_>) {
        debug_assert_eq!(node as usize, self.links.len());
        let level = self.draw_level();
        self.links.push(vec![Vec::new(); level + 1]);
        let Some(entry) = self.entry else {
            self.entry = Some(node);
            return;
        };
        let q = vectors.get(node);
        let top = self.top_level();
        let mut ep = Candidate {
            d: squared_l2(q, vectors.get(entry)),
            node: entry,
        };
        for layer in (level + 1..=top).rev() {
            ep = self.greedy(q, ep, layer, vectors);
        }
        let mut entry_points = vec![ep];
        for layer in (0..=level.min(top)).rev() {
            let found = self.search_layer(q, &entry_points, self.params.ef_construction, layer, vectors);
            let chosen = select_neighbors(&found, self.params.m, vectors);
            for &n in &chosen {
                self.connect(n, node, layer, vectors);
            }
            self.links[node as usize][layer] = chosen;
            entry_points = found;
        }
        if level > top {
            self.entry = Some(node);
        }
    }

    fn connect(&mut self, from: u32, to: u32, layer: usize, vectors: &Vectors<'_>) {
        let cap = self.capacity(layer);
        let list = &mut self.links[from as usize][layer];
        list.push(to);
        if list.len() <= cap {
            return;
        }
        let base = vectors.get(from);
        let mut cands: Vec<Candidate> = list
            .iter()
            .map(|&n| Candidate {
                d: squared_l2(base, vectors.get(n)),
                node: n,
            })
            .collect();
        cands.sort_unstable();
        *list = select_neighbors(&cands, cap, vectors);
    }

    fn greedy(&self, q: &[f32], mut ep: Candidate, layer: usize, vectors: &Vectors<'_>) -> Candidate {
        loop {
            let mut improved = false;
            for &n in &self.links[ep.node as usize][layer] {
                let c = Candidate {
                    d: squared_l2(q, vectors.get(n)),
                    node: n,
                };
                if c < ep {
                    ep = c;
                    improved = true;
                }
            }
            if !improved {
                return ep;
            }
        }
    }

    /// Beam search on one layer; returns up to `ef` candidates, nearest first.
    fn search_layer(
        &self,
        q: &[f32],
        entry_points: &[Candidate],
        ef: usize,
        layer: usize,
        vectors: &Vectors<'_>,
    ) -> Vec<Candidate> {
        let mut visited = vec![false; self.links.len()];
        let mut frontier: BinaryHeap<Reverse<Candidate>> = BinaryHeap::new();
        let mut best: BinaryHeap<Candidate> = BinaryHeap::new();
        for &ep in entry_points {
            if !std::mem::replace(&mut visited[ep.node as usize], true) {
                frontier.push(Reverse(ep));
                best.push(ep);
            }
        }
        while best.len() > ef {
            best.pop();
        }
        while let Some(Reverse(c)) = frontier.pop() {
            // Stop only once the result set is full and nothing closer remains.
            if best.len() == ef && c.d > best.peek().map_or(f32::INFINITY, |w| w.d) {
                break;
            }
            for &n in &self.links[c.node as usize][layer] {
                if std::mem::replace(&mut visited[n as usize], true) {
                    continue;
                }
                let cand = Candidate {
                    d: squared_l2(q, vectors.get(n)),
                    node: n,
                };
                if best.len() < ef || cand < *best.peek().unwrap() {
                    frontier.push(Reverse(cand));
                    best.push(cand);
                    if best.len() > ef {
                        best.pop();
                    }
                }
            }
        }
        best.into_sorted_vec()
    }

    /// Returns up to `k` approximate neighbours of `q`, nearest first.
    pub fn search(&self, q: &[f32], k: usize, ef: usize, vectors: &Vectors<'_>) -> Vec<Candidate> {
        let Some(entry) = self.entry else {
            return Vec::new();
        };
        let mut ep = Candidate {
            d: squared_l2(q, vectors.get(entry)),
            node: entry,
        };
        for layer in (1..=self.top_level()).rev() {
            ep = self.greedy(q, ep, layer, vectors);
        }
        let mut found = self.search_layer(q, &[ep], ef.max(k), 0, vectors);
        found.truncate(k);
        found
    }
}

/// Keeps a candidate only if it is closer to the base than to every neighbour
/// already kept, which spreads links across directions.
fn select_neighbors(sorted: &[Candidate], m: usize, vectors: &Vectors<'_>) -> Vec<u32> {
    let mut kept: Vec<u32> = Vec::with_capacity(m);
    for c in sorted {
        if kept.len() >= m {
            break;
        }
        let v = vectors.get(c.node);
        if kept.iter().all(|&r| squared_l2(v, vectors.get(r)) >= c.d) {
            kept.push(c.node);
        }
    }
    kept
}
