//! Multi-collection vector store with flat, HNSW and IVF indexes.
//!
//! Each collection sits behind its own reader-writer lock. No operation holds
//! two collection locks at once, so concurrent inserts that link across
//! collections cannot deadlock. Links are checked when written; a later delete
//! of the target leaves a dangling link that lookups skip.

mod collection;
mod distance;
mod filter;
mod hnsw;
mod ivf;
mod schema;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use collection::Collection;
pub use distance::squared_l2;
pub use filter::{FilterError, MetadataFilter, Predicate};
pub use hnsw::HnswParams;
pub use ivf::IvfParams;
pub use schema::{CollectionSchema, FieldType, IndexKind, Link, MetaValue, Metadata, Metric, PayloadKind};
pub use snapshot::{SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown collection {0:?}")]
    UnknownCollection(String),
    #[error("collection {0:?} already exists")]
    DuplicateCollection(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("duplicate ids: {}", .0.join(", "))]
    DuplicateId(Vec<String>),
    #[error("expected dimension {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("record {id:?}: {detail}")]
    InvalidRecord { id: String, detail: String },
    #[error("record {id:?} links to missing record {}/{}", target.collection, target.id)]
    BrokenLink { id: String, target: Link },
    #[error("no record {id:?} in collection {collection:?}")]
    UnknownId { collection: String, id: String },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("the IVF index of collection {0:?} has not been trained")]
    NotTrained(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    #[error("snapshot format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionRecord {
    pub id: String,
    pub vector: Vec<f32>,
    pub payload: String,
    #[serde(default)]
    pub metadata: Metadata,
    #[serde(default)]
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: String,
    /// Euclidean (not squared) distance to the query.
    pub l2_distance: f32,
    pub payload: String,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    pub filter: Option<MetadataFilter>,
    /// Overrides the collection's HNSW `ef_search`.
    pub ef_search: Option<usize>,
    /// Overrides the collection's IVF probe count.
    pub nprobe: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkedRecord {
    pub collection: String,
    pub id: String,
    pub payload: String,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkGroup {
    pub hit_id: String,
    pub linked: Vec<LinkedRecord>,
}

#[derive(Default)]
pub struct Store {
    collections: RwLock<BTreeMap<String, Arc<RwLock<Collection>>>>,
    /// Target record to the set of records linking to it.
    backlinks: RwLock<HashMap<Link, BTreeSet<Link>>>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    fn handle(&self, name: &str) -> Result<Arc<RwLock<Collection>>, StoreError> {
        self.collections
            .read()
            .get(name)
            .cloned()
            .ok_or_else(|| StoreError::UnknownCollection(name.to_owned()))
    }

    pub fn create_collection(&self, schema: CollectionSchema) -> Result<(), StoreError> {
        schema.validate().map_err(StoreError::InvalidSchema)?;
        let mut map = self.collections.write();
        if map.contains_key(&schema.name) {
            return Err(StoreError::DuplicateCollection(schema.name));
        }
        map.insert(schema.name.clone(), Arc::new(RwLock::new(Collection::new(schema))));
        Ok(())
    }

    pub fn collection_names(&self) -> Vec<String> {
        self.collections.read().keys().cloned().collect()
    }

    pub fn schema(&self, collection: &str) -> Result<CollectionSchema, StoreError> {
        Ok(self.handle(collection)?.read().schema.clone())
    }

    /// Number of live records.
    pub fn len(&self, collection: &str) -> Result<usize, StoreError> {
        Ok(self.handle(collection)?.read().live_count())
    }

    pub fn get(&self, collection: &str, id: &str) -> Result<Option<CollectionRecord>, StoreError> {
        let handle = self.handle(collection)?;
        let c = handle.read();
        Ok(c.by_id.get(id).map(|&slot| c.record(slot)))
    }

    /// Inserts a batch atomically: either every record goes in or none does.
    pub fn insert(&self, collection: &str, records: Vec<CollectionRecord>) -> Result<usize, StoreError> {
        let handle = self.handle(collection)?;
        for r in &records {
            for link in r.links.iter().filter(|l| l.collection != collection) {
                let exists = match self.handle(&link.collection) {
                    Ok(target) => target.read().contains(&link.id),
                    Err(_) => false,
                };
                if !exists {
                    return Err(StoreError::BrokenLink {
                        id: r.id.clone(),
                        target: link.clone(),
                    });
                }
            }
        }
        let n = records.len();
        let mut new_links = Vec::new();
        {
            let mut c = handle.write();
            c.validate(&records)?;
            for r in records {
                let source = Link::new(collection, &r.id);
                new_links.extend(r.links.iter().map(|l| (l.clone(), source.clone())));
                c.push(r);
            }
        }
        let mut back = self.backlinks.write();
        for (target, source) in new_links {
            back.entry(target).or_default().insert(source);
        }
        Ok(n)
    }

    /// Tombstones the given ids and returns how many were live.
    pub fn delete(&self, collection: &str, ids: &[impl AsRef<str>]) -> Result<usize, StoreError> {
        let handle = self.handle(collection)?;
        let mut removed = Vec::new();
        {
            let mut c = handle.write();
            for id in ids {
                if let Some(links) = c.delete(id.as_ref()) {
                    removed.push((Link::new(collection, id.as_ref()), links));
                }
            }
        }
        let mut back = self.backlinks.write();
        for (source, links) in &removed {
            for target in links {
                if let Some(set) = back.get_mut(target) {
                    set.remove(source);
                }
            }
        }
        Ok(removed.len())
    }

    /// Clusters an IVF collection over its live records. A no-op for other
    /// index kinds, whose structures are maintained on insert.
    pub fn train(&self, collection: &str) -> Result<(), StoreError> {
        self.handle(collection)?.write().train();
        Ok(())
    }

    /// Searches with the collection's own index, nearest first, ties by id.
    pub fn search(
        &self,
        collection: &str,
        query: &[f32],
        k: usize,
        opts: &SearchOptions,
    ) -> Result<Vec<SearchHit>, StoreError> {
        self.handle(collection)?.read().search(query, k, opts)
    }

    /// Exhaustive search regardless of the collection's index kind.
    pub fn flat_search(
        &self,
        collection: &str,
        query: &[f32],
        k: usize,
        filter: Option<&MetadataFilter>,
    ) -> Result<Vec<SearchHit>, StoreError> {
        let handle = self.handle(collection)?;
        let c = handle.read();
        c.check_query(query, k, filter)?;
        Ok(c.flat(query, k, filter))
    }

    /// For each hit, the live records it links to plus those linking to it,
    /// sorted by (collection, id).
    pub fn cross_lookup(&self, collection: &str, hit_ids: &[impl AsRef<str>]) -> Result<Vec<LinkGroup>, StoreError> {
        let handle = self.handle(collection)?;
        let mut wanted = Vec::with_capacity(hit_ids.len());
        {
            let c = handle.read();
            for id in hit_ids {
                let id = id.as_ref();
                let slot = *c.by_id.get(id).ok_or_else(|| StoreError::UnknownId {
                    collection: collection.to_owned(),
                    id: id.to_owned(),
                })?;
                let targets: BTreeSet<Link> = c.slots[slot as usize].links.iter().cloned().collect();
                wanted.push((id.to_owned(), targets));
            }
        }
        {
            let back = self.backlinks.read();
            for (id, targets) in &mut wanted {
                if let Some(sources) = back.get(&Link::new(collection, id)) {
                    targets.extend(sources.iter().cloned());
                }
            }
        }
        let mut groups = Vec::with_capacity(wanted.len());
        for (hit_id, targets) in wanted {
            let mut linked = Vec::new();
            for t in targets {
                let Ok(target) = self.handle(&t.collection) else {
                    continue;
                };
                let c = target.read();
                if let Some(&slot) = c.by_id.get(&t.id) {
                    let s = &c.slots[slot as usize];
                    linked.push(LinkedRecord {
                        collection: t.collection,
                        id: t.id,
                        payload: s.payload.clone(),
                        metadata: s.metadata.clone(),
                    });
                }
            }
            groups.push(LinkGroup { hit_id, linked });
        }
        Ok(groups)
    }

    /// Writes a checksummed snapshot, replacing `path` atomically.
    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        let bytes = self.snapshot_bytes();
        let tmp = path.with_extension("cvrs.tmp");
        std::fs::write(&tmp, &bytes)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Store, StoreError> {
        Store::from_snapshot_bytes(&std::fs::read(path)?)
    }

    pub fn snapshot_bytes(&self) -> Vec<u8> {
        let map = self.collections.read();
        let guards: Vec<_> = map.values().map(|c| c.read()).collect();
        snapshot::encode(guards.iter().map(|g| &**g))
    }

    pub fn from_snapshot_bytes(bytes: &[u8]) -> Result<Store, StoreError> {
        let collections = snapshot::decode(bytes)?;
        let mut back: HashMap<Link, BTreeSet<Link>> = HashMap::new();
        let mut map = BTreeMap::new();
        for c in collections {
            for s in c.slots.iter().filter(|s| s.live) {
                let source = Link::new(&c.schema.name, &s.id);
                for target in &s.links {
                    back.entry(target.clone()).or_default().insert(source.clone());
                }
            }
            map.insert(c.schema.name.clone(), Arc::new(RwLock::new(c)));
        }
        Ok(Store {
            collections: RwLock::new(map),
            backlinks: RwLock::new(back),
        })
    }
}
