//! Inverted-file index with exact scans inside probed lists.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::distance::squared_l2;
use super::hnsw::{Candidate, Vectors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct IvfParams {
    /// `None` picks `round(sqrt(n))` at training time.
    pub nlist: Option<usize>,
    /// `None` probes `max(1, nlist / 8)` lists.
    pub nprobe: Option<usize>,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for IvfParams {
    fn default() -> Self {
        IvfParams {
            nlist: None,
            nprobe: None,
            iterations: 20,
            seed: 0x6976_6621,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Ivf {
    pub trained: bool,
    pub centroids: Vec<f32>,
    pub lists: Vec<Vec<u32>>,
}

impl Ivf {
    pub fn nlist(&self) -> usize {
        self.lists.len()
    }

    pub fn default_nprobe(&self) -> usize {
        (self.nlist() / 8).max(1)
    }

    fn centroid(&self, c: usize, dim: usize) -> &[f32] {
        &self.centroids[c * dim..(c + 1) * dim]
    }

    fn nearest_centroid(&self, v: &[f32], dim: usize) -> usize {
        nearest(v, &self.centroids, dim)
    }

    /// Clusters the given slots with seeded k-means++ and Lloyd iterations,
    /// then rebuilds every list from scratch.
    pub fn train(&mut self, params: &IvfParams, nodes: &[u32], vectors: &Vectors<'_>) {
        let dim = vectors.dim;
        let n = nodes.len();
        self.trained = true;
        self.centroids.clear();
        self.lists.clear();
        if n == 0 {
            return;
        }
        let nlist = params
            .nlist
            .unwrap_or_else(|| (n as f64).sqrt().round() as usize)
            .clamp(1, n);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        self.centroids = seed_centroids(&mut rng, nlist, nodes, vectors);

        let mut assignment = vec![0usize; n];
        for _ in 0..params.iterations {
            for (a, &node) in assignment.iter_mut().zip(nodes) {
                *a = nearest(vectors.get(node), &self.centroids, dim);
            }
            let mut sums = vec![0f64; nlist * dim];
            let mut counts = vec![0usize; nlist];
            for (&c, &node) in assignment.iter().zip(nodes) {
                counts[c] += 1;
                for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(vectors.get(node)) {
                    *s += x as f64;
                }
            }
            for c in 0..nlist {
                // An empty cluster keeps its previous centroid.
                if counts[c] == 0 {
                    continue;
                }
                for j in 0..dim {
                    self.centroids[c * dim + j] = (sums[c * dim + j] / counts[c] as f64) as f32;
                }
            }
        }
        self.lists = vec![Vec::new(); nlist];
        for &node in nodes {
            let c = self.nearest_centroid(vectors.get(node), dim);
            self.lists[c].push(node);
        }
    }

    pub fn add(&mut self, node: u32, vectors: &Vectors<'_>) {
        if self.trained && !self.lists.is_empty() {
            let c = self.nearest_centroid(vectors.get(node), vectors.dim);
            self.lists[c].push(node);
        }
    }

    /// Exact distances to every member of the `nprobe` nearest lists, unsorted.
    pub fn search(&self, q: &[f32], nprobe: usize, vectors: &Vectors<'_>) -> Vec<Candidate> {
        let dim = vectors.dim;
        let mut order: Vec<Candidate> = (0..self.nlist())
            .map(|c| Candidate {
                d: squared_l2(q, self.centroid(c, dim)),
                node: c as u32,
            })
            .collect();
        order.sort_unstable();
        let mut out = Vec::new();
        for c in order.iter().take(nprobe) {
            for &node in &self.lists[c.node as usize] {
                out.push(Candidate {
                    d: squared_l2(q, vectors.get(node)),
                    node,
                });
            }
        }
        out
    }
}

fn nearest(v: &[f32], centroids: &[f32], dim: usize) -> usize {
    let mut best = (f32::INFINITY, 0);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_l2(v, centroid);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

fn seed_centroids(rng: &mut ChaCha8Rng, k: usize, nodes: &[u32], vectors: &Vectors<'_>) -> Vec<f32> {
    let dim = vectors.dim;
    let mut centroids = Vec::with_capacity(k * dim);
    centroids.extend_from_slice(vectors.get(nodes[rng.random_range(0..nodes.len())]));
    let mut d2: Vec<f64> = nodes
        .iter()
        .map(|&n| squared_l2(vectors.get(n), &centroids[..dim]) as f64)
        .collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&w| {
                    acc += w;
                    acc > target
                })
                .unwrap_or(nodes.len() - 1)
        } else {
            rng.random_range(0..nodes.len())
        };
        let start = centroids.len();
        centroids.extend_from_slice(vectors.get(nodes[pick]));
        for (w, &n) in d2.iter_mut().zip(nodes) {
            *w = w.min(squared_l2(vectors.get(n), &centroids[start..]) as f64);
        }
    }
    centroids
}
