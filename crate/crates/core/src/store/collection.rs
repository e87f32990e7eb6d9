use std::collections::{HashMap, HashSet};

use super::filter::MetadataFilter;
use super::hnsw::{Candidate, Hnsw, Vectors};
use super::ivf::Ivf;
use super::schema::{CollectionSchema, IndexKind, Link, Metadata};
use super::{CollectionRecord, SearchHit, SearchOptions, StoreError};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Slot {
    pub id: String,
    pub payload: String,
    pub metadata: Metadata,
    pub links: Vec<Link>,
    pub live: bool,
}

#[derive(Debug, Clone)]
pub(crate) enum Index {
    Flat,
    Hnsw(Hnsw),
    Ivf(Ivf),
}

/// Records live in dense slots; slot `i` owns `vectors[i * dim..(i + 1) * dim]`.
/// Deleted slots are tombstoned, never reused.
#[derive(Debug, Clone)]
pub(crate) struct Collection {
    pub schema: CollectionSchema,
    pub slots: Vec<Slot>,
    pub vectors: Vec<f32>,
    pub by_id: HashMap<String, u32>,
    pub index: Index,
}

impl Collection {
    pub fn new(schema: CollectionSchema) -> Self {
        let index = match schema.index {
            IndexKind::Flat => Index::Flat,
            IndexKind::Hnsw => Index::Hnsw(Hnsw::new(schema.hnsw)),
            IndexKind::IvfFlat => Index::Ivf(Ivf::default()),
        };
        Collection {
            schema,
            slots: Vec::new(),
            vectors: Vec::new(),
            by_id: HashMap::new(),
            index,
        }
    }

    pub fn view(&self) -> Vectors<'_> {
        Vectors {
            data: &self.vectors,
            dim: self.schema.dim,
        }
    }

    pub fn live_count(&self) -> usize {
        self.by_id.len()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn record(&self, slot: u32) -> CollectionRecord {
        let s = &self.slots[slot as usize];
        let dim = self.schema.dim;
        let start = slot as usize * dim;
        CollectionRecord {
            id: s.id.clone(),
            vector: self.vectors[start..start + dim].to_vec(),
            payload: s.payload.clone(),
            metadata: s.metadata.clone(),
            links: s.links.clone(),
        }
    }

    /// Checks a whole batch without mutating anything. Links into this
    /// collection may point at existing records or at others in the batch.
    pub fn validate(&self, records: &[CollectionRecord]) -> Result<(), StoreError> {
        let mut seen = HashSet::new();
        let mut dups = Vec::new();
        for r in records {
            if self.contains(&r.id) || !seen.insert(r.id.as_str()) {
                dups.push(r.id.clone());
            }
        }
        if !dups.is_empty() {
            return Err(StoreError::DuplicateId(dups));
        }
        for r in records {
            if r.id.is_empty() {
                return Err(StoreError::InvalidRecord {
                    id: r.id.clone(),
                    detail: "empty id".into(),
                });
            }
            if r.vector.len() != self.schema.dim {
                return Err(StoreError::DimMismatch {
                    expected: self.schema.dim,
                    found: r.vector.len(),
                });
            }
            if r.vector.iter().any(|x| !x.is_finite()) {
                return Err(StoreError::InvalidRecord {
                    id: r.id.clone(),
                    detail: "vector has a non-finite component".into(),
                });
            }
            for (field, value) in &r.metadata {
                match self.schema.metadata_fields.get(field) {
                    None => {
                        return Err(StoreError::InvalidRecord {
                            id: r.id.clone(),
                            detail: format!("metadata field {field:?} is not declared"),
                        })
                    }
                    Some(&ty) if !value.fits(ty) => {
                        return Err(StoreError::InvalidRecord {
                            id: r.id.clone(),
                            detail: format!("metadata field {field:?} expects {ty:?}"),
                        })
                    }
                    _ => {}
                }
            }
            for link in r.links.iter().filter(|l| l.collection == self.schema.name) {
                if !self.contains(&link.id) && !seen.contains(link.id.as_str()) {
                    return Err(StoreError::BrokenLink {
                        id: r.id.clone(),
                        target: link.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn push(&mut self, r: CollectionRecord) {
        let slot = self.slots.len() as u32;
        self.vectors.extend_from_slice(&r.vector);
        self.by_id.insert(r.id.clone(), slot);
        self.slots.push(Slot {
            id: r.id,
            payload: r.payload,
            metadata: r.metadata,
            links: r.links,
            live: true,
        });
        let vectors = Vectors {
            data: &self.vectors,
            dim: self.schema.dim,
        };
        match &mut self.index {
            Index::Flat => {}
            Index::Hnsw(h) => h.insert(slot, &vectors),
            Index::Ivf(ivf) => ivf.add(slot, &vectors),
        }
    }

    /// Tombstones a record, returning its outgoing links.
    pub fn delete(&mut self, id: &str) -> Option<Vec<Link>> {
        let slot = self.by_id.remove(id)?;
        let s = &mut self.slots[slot as usize];
        s.live = false;
        Some(s.links.clone())
    }

    pub fn train(&mut self) {
        let live: Vec<u32> = (0..self.slots.len() as u32)
            .filter(|&i| self.slots[i as usize].live)
            .collect();
        let params = self.schema.ivf;
        let vectors = Vectors {
            data: &self.vectors,
            dim: self.schema.dim,
        };
        if let Index::Ivf(ivf) = &mut self.index {
            ivf.train(&params, &live, &vectors);
        }
    }

    pub fn check_query(&self, query: &[f32], k: usize, filter: Option<&MetadataFilter>) -> Result<(), StoreError> {
        if k == 0 {
            return Err(StoreError::InvalidK);
        }
        if query.len() != self.schema.dim {
            return Err(StoreError::DimMismatch {
                expected: self.schema.dim,
                found: query.len(),
            });
        }
        if let Some(f) = filter {
            f.validate(&self.schema)?;
        }
        Ok(())
    }

    pub fn search(&self, query: &[f32], k: usize, opts: &SearchOptions) -> Result<Vec<SearchHit>, StoreError> {
        let filter = opts.filter.as_ref();
        self.check_query(query, k, filter)?;
        let vectors = self.view();
        match &self.index {
            Index::Flat => Ok(self.flat(query, k, filter)),
            Index::Hnsw(h) => {
                let ef = opts.ef_search.unwrap_or(self.schema.hnsw.ef_search);
                Ok(self.gather(k, filter, |want| {
                    (h.search(query, want, ef.max(want), &vectors), want >= h.len())
                }))
            }
            Index::Ivf(ivf) => {
                if !ivf.trained {
                    return Err(StoreError::NotTrained(self.schema.name.clone()));
                }
                let nprobe = opts.nprobe.unwrap_or_else(|| ivf.default_nprobe());
                Ok(self.gather(k, filter, |_| (ivf.search(query, nprobe, &vectors), true)))
            }
        }
    }

    pub fn flat(&self, query: &[f32], k: usize, filter: Option<&MetadataFilter>) -> Vec<SearchHit> {
        let vectors = self.view();
        self.gather(k, filter, |_| {
            let all = self
                .by_id
                .values()
                .map(|&node| Candidate {
                    d: super::distance::squared_l2(query, vectors.get(node)),
                    node,
                })
                .collect();
            (all, true)
        })
    }

    /// Asks `fetch` for progressively more candidates (four times `k` when
    /// filtering, doubling after each shortfall) until `k` survivors are found
    /// or the source reports it is exhausted.
    fn gather(
        &self,
        k: usize,
        filter: Option<&MetadataFilter>,
        mut fetch: impl FnMut(usize) -> (Vec<Candidate>, bool),
    ) -> Vec<SearchHit> {
        let mut want = if filter.is_some() { k.saturating_mul(4) } else { k };
        loop {
            let (cands, exhausted) = fetch(want);
            let mut kept: Vec<Candidate> = cands
                .into_iter()
                .filter(|c| {
                    let s = &self.slots[c.node as usize];
                    s.live && filter.is_none_or(|f| f.accepts(&s.metadata))
                })
                .collect();
            if kept.len() >= k || exhausted {
                kept.sort_unstable_by(|a, b| {
                    a.d.total_cmp(&b.d)
                        .then_with(|| self.slots[a.node as usize].id.cmp(&self.slots[b.node as usize].id))
                });
                kept.truncate(k);
                return kept.into_iter().map(|c| self.hit(c)).collect();
            }
            want = want.saturating_mul(2);
        }
    }

    fn hit(&self, c: Candidate) -> SearchHit {
        let s = &self.slots[c.node as usize];
        SearchHit {
            id: s.id.clone(),
            l2_distance: c.d.sqrt(),
            payload: s.payload.clone(),
            metadata: s.metadata.clone(),
        }
    }
}
