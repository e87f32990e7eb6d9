//! Operations shared by the CLI and the HTTP server.
//!
//! Both front ends parse their input into the request types here and call
//! the same methods, so identical inputs give identical results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use chemvecrag_agent::retrieve::{image_vector, structure_vector};
use chemvecrag_agent::spectrum::{compound_record_id, spectrum_records, SpectrumEntry};
use chemvecrag_agent::state::trace_to_jsonl;
use chemvecrag_agent::{
    ask, Failure, ModelClient, RouteSource, RuleBasedClient, ScriptedClient, StoreRetriever, TimeoutClient, TraceEvent,
    Worker,
};
use chemvecrag_core::chem::{molecular_weight, parse_smiles};
use chemvecrag_core::embedding::{
    embed_spectrum_compounds, embed_text, evaluate, l2_normalize, prepare_structure_text, weight_scaled,
    EmbeddingProvider, EmbeddingVector, FileProvider, HttpProvider, MockProvider, ProviderSet,
};
use chemvecrag_core::panel::{build_panel, PanelHit, SimilarityPanel};
use chemvecrag_core::store::{
    CollectionRecord, IndexKind, Link, LinkGroup, MetaValue, Metadata, MetadataFilter, SearchHit, SearchOptions, Store,
    StoreError,
};

use crate::config::{ClientKind, CollectionConfig, Config, ProviderBinding, RecordKind};
use crate::error::{ErrorClass, ServiceError};
use crate::query::{parse_expression, LeafSource};

/// One structure to ingest, with the input position it came from.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct StructureItem {
    pub id: String,
    #[serde(alias = "reaction")]
    pub smiles: String,
    #[serde(default)]
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IngestItems {
    Structures(Vec<(String, StructureItem)>),
    Spectra(Vec<(String, SpectrumEntry)>),
}

/// Body of `POST /collections/{name}/records`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordsRequest {
    #[serde(default)]
    pub kind: Option<RecordKind>,
    pub records: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestResponse {
    pub inserted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuerySpec {
    Smiles(String),
    Image(String),
    Expr(Value),
    Vector(Vec<f32>),
}

fn default_k() -> usize {
    10
}

/// Body of `POST /collections/{name}/search`; the CLI builds the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRequest {
    #[serde(flatten)]
    pub query: QuerySpec,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub filter: Option<String>,
    /// Rescales the query to this length before searching a
    /// weight-scaled collection.
    #[serde(default)]
    pub target_mw: Option<f64>,
    #[serde(default)]
    pub panel: bool,
    #[serde(default)]
    pub ef_search: Option<usize>,
    #[serde(default)]
    pub nprobe: Option<usize>,
}

impl SearchRequest {
    pub fn new(query: QuerySpec, k: usize) -> Self {
        SearchRequest {
            query,
            k,
            filter: None,
            target_mw: None,
            panel: false,
            ef_search: None,
            nprobe: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResponse {
    pub collection: String,
    pub hits: Vec<SearchHit>,
    /// Linked records per hit, for collections that carry links.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linked: Option<Vec<LinkGroup>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub panel: Option<SimilarityPanel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AskResponse {
    pub trace_id: String,
    pub worker: Worker,
    pub route_source: RouteSource,
    pub report: String,
    pub trace: Vec<TraceEvent>,
    pub failure: Option<Failure>,
}

impl AskResponse {
    pub fn trace_jsonl(&self) -> String {
        trace_to_jsonl(&self.trace)
    }
}

pub struct Service {
    config: Config,
    store: Store,
    providers: BTreeMap<String, Arc<dyn EmbeddingProvider>>,
    client: Arc<dyn ModelClient>,
    /// Serializes ingest-and-persist so snapshots never interleave.
    writes: Mutex<()>,
}

fn build_provider(name: &str, binding: &ProviderBinding) -> Result<Arc<dyn EmbeddingProvider>, ServiceError> {
    Ok(match binding {
        ProviderBinding::Mock { modality, dim } => Arc::new(MockProvider::new(*modality, *dim)),
        ProviderBinding::File { modality, path } => Arc::new(
            FileProvider::open(path, *modality)
                .map_err(|e| ServiceError::backend("provider", format!("provider {name:?}: {e}")))?,
        ),
        ProviderBinding::Http {
            modality,
            endpoint,
            dim,
            timeout_ms,
        } => Arc::new(HttpProvider::new(
            endpoint,
            *modality,
            *dim,
            Duration::from_millis(*timeout_ms),
        )),
    })
}

fn build_client(config: &Config) -> Result<Arc<dyn ModelClient>, ServiceError> {
    let inner: Arc<dyn ModelClient> = match config.client.kind {
        ClientKind::Rules => Arc::new(RuleBasedClient::default()),
        ClientKind::Scripted => {
            let path = config.client.transcript.as_deref().unwrap_or(Path::new(""));
            let text = std::fs::read_to_string(path)
                .map_err(|e| ServiceError::usage(format!("client transcript {}: {e}", path.display())))?;
            Arc::new(ScriptedClient::from_json(&text).map_err(|e| ServiceError::usage(e.to_string()))?)
        }
    };
    Ok(Arc::new(TimeoutClient::new(
        inner,
        Duration::from_millis(config.client.timeout_ms),
    )))
}

/// Splits a tab-separated structure file: `SMILES <tab> id [<tab> JSON metadata]`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_structure_lines(text: &str) -> Result<Vec<(String, StructureItem)>, ServiceError> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let origin = format!("line {}", i + 1);
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |why: String| ServiceError::data("bad_input", format!("{origin}: {why}"));
        if fields.len() > 3 {
            return Err(bad(format!(
                "expected at most 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let id = fields.get(1).map(|s| s.trim()).filter(|s| !s.is_empty());
        let Some(id) = id else {
            return Err(bad("missing record id in the second field".into()));
        };
        let metadata = match fields.get(2).map(|s| s.trim()).filter(|s| !s.is_empty()) {
            Some(json) => serde_json::from_str(json).map_err(|e| bad(format!("metadata: {e}")))?,
            None => Metadata::new(),
        };
        items.push((
            origin,
            StructureItem {
                id: id.to_owned(),
                smiles: fields[0].trim().to_owned(),
                metadata,
            },
        ));
    }
    Ok(items)
}

/// One JSON spectrum entry per non-blank line.
pub fn parse_spectrum_lines(text: &str) -> Result<Vec<(String, SpectrumEntry)>, ServiceError> {
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let origin = format!("line {}", i + 1);
        let entry =
            serde_json::from_str(line).map_err(|e| ServiceError::data("bad_input", format!("{origin}: {e}")))?;
        items.push((origin, entry));
    }
    Ok(items)
}

struct CollectionLeaves<'a> {
    service: &'a Service,
    collection: &'a CollectionConfig,
}

impl LeafSource for CollectionLeaves<'_> {
    fn structure(&self, smiles: &str) -> Result<Vec<f32>, ServiceError> {
        self.service.structure_query(self.collection, smiles)
    }

    fn image(&self, path: &str) -> Result<Vec<u8>, ServiceError> {
        self.service.read_image(path)
    }
}

impl Service {
    /// Builds providers and the client, loads the snapshot if one exists and
    /// creates any configured collection it lacks.
    pub fn open(config: Config) -> Result<Service, ServiceError> {
        let client = build_client(&config)?;
        Service::with_client(config, client)
    }

    pub fn with_client(config: Config, client: Arc<dyn ModelClient>) -> Result<Service, ServiceError> {
        config.validate()?;
        let mut providers = BTreeMap::new();
        for (name, binding) in &config.providers {
            providers.insert(name.clone(), build_provider(name, binding)?);
        }
        let snapshot = config.snapshot_path();
        let store = if snapshot.exists() {
            Store::load(&snapshot)?
        } else {
            Store::new()
        };
        for c in &config.collections {
            let wanted = c.schema();
            match store.schema(&c.name) {
                Ok(existing) if existing.dim == wanted.dim && existing.index == wanted.index => {}
                Ok(existing) => {
                    return Err(ServiceError::data(
                        "bad_schema",
                        format!(
                            "snapshot collection {:?} is {}/{} but the config says {}/{}",
                            c.name, existing.dim, existing.index, wanted.dim, wanted.index
                        ),
                    ))
                }
                Err(StoreError::UnknownCollection(_)) => store.create_collection(wanted)?,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Service {
            config,
            store,
            providers,
            client,
            writes: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn provider(&self, name: &str) -> Result<&dyn EmbeddingProvider, ServiceError> {
        self.providers
            .get(name)
            .map(|p| p.as_ref())
            .ok_or_else(|| ServiceError::usage(format!("no provider named {name:?}")))
    }

    fn collection(&self, name: &str) -> Result<&CollectionConfig, ServiceError> {
        match self.config.collection(name) {
            Some(c) => Ok(c),
            None => {
                self.store.schema(name)?;
                Err(ServiceError::usage(format!(
                    "collection {name:?} exists but is not configured"
                )))
            }
        }
    }

    fn image_path(&self, path: &str) -> PathBuf {
        self.config.image_root().join(path)
    }

    fn read_image(&self, path: &str) -> Result<Vec<u8>, ServiceError> {
        let full = self.image_path(path);
        std::fs::read(&full).map_err(|e| ServiceError::data("image", format!("{}: {e}", full.display())))
    }

    fn persist(&self) -> Result<(), ServiceError> {
        std::fs::create_dir_all(&self.config.data_dir)
            .map_err(|e| ServiceError::backend("io", format!("{}: {e}", self.config.data_dir.display())))?;
        self.store.save(&self.config.snapshot_path())?;
        Ok(())
    }

    fn train_if_ivf(&self, collection: &str) -> Result<(), ServiceError> {
        if self.store.schema(collection)?.index == IndexKind::IvfFlat {
            self.store.train(collection)?;
        }
        Ok(())
    }

    fn check_kind(&self, c: &CollectionConfig, kind: Option<RecordKind>) -> Result<(), ServiceError> {
        if let Some(k) = kind {
            if k != c.kind {
                return Err(ServiceError::usage(format!(
                    "collection {:?} holds {} records, not {}",
                    c.name,
                    c.kind.as_str(),
                    k.as_str()
                )));
            }
        }
        if matches!(c.kind, RecordKind::Compounds | RecordKind::Captions) {
            return Err(ServiceError::usage(format!(
                "collection {:?} is filled by spectrum ingest",
                c.name
            )));
        }
        Ok(())
    }

    /// Parses a whole input file for the collection's kind.
    pub fn parse_input(
        &self,
        collection: &str,
        kind: Option<RecordKind>,
        text: &str,
    ) -> Result<IngestItems, ServiceError> {
        let c = self.collection(collection)?;
        self.check_kind(c, kind)?;
        Ok(match c.kind {
            RecordKind::Spectrum => IngestItems::Spectra(parse_spectrum_lines(text)?),
            _ => IngestItems::Structures(parse_structure_lines(text)?),
        })
    }

    /// Parses an HTTP records body for the collection's kind.
    pub fn parse_records(&self, collection: &str, body: RecordsRequest) -> Result<IngestItems, ServiceError> {
        let c = self.collection(collection)?;
        self.check_kind(c, body.kind)?;
        let origin = |i: usize| format!("record {}", i + 1);
        let bad = |i: usize, e: serde_json::Error| ServiceError::data("bad_input", format!("{}: {e}", origin(i)));
        Ok(match c.kind {
            RecordKind::Spectrum => IngestItems::Spectra(
                body.records
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| serde_json::from_value(v).map(|e| (origin(i), e)).map_err(|e| bad(i, e)))
                    .collect::<Result<_, _>>()?,
            ),
            _ => IngestItems::Structures(
                body.records
                    .into_iter()
                    .enumerate()
                    .map(|(i, v)| serde_json::from_value(v).map(|e| (origin(i), e)).map_err(|e| bad(i, e)))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    pub fn ingest_text(&self, collection: &str, kind: Option<RecordKind>, text: &str) -> Result<usize, ServiceError> {
        let items = self.parse_input(collection, kind, text)?;
        self.ingest(collection, items)
    }

    /// Embeds and inserts all items or none, then persists the store.
    pub fn ingest(&self, collection: &str, items: IngestItems) -> Result<usize, ServiceError> {
        let c = self.collection(collection)?;
        let _guard = self.writes.lock();
        let n = match items {
            IngestItems::Structures(items) => {
                let records = items
                    .iter()
                    .map(|(origin, item)| {
                        self.structure_record(c, item).map_err(|e| ServiceError {
                            detail: format!("{origin}: {}", e.detail),
                            ..e
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let n = self.store.insert(&c.name, records)?;
                self.train_if_ivf(&c.name)?;
                n
            }
            IngestItems::Spectra(items) => self.ingest_spectra(c, &items)?,
        };
        self.persist()?;
        Ok(n)
    }

    fn structure_record(&self, c: &CollectionConfig, item: &StructureItem) -> Result<CollectionRecord, ServiceError> {
        let is_reaction = item.smiles.contains('>');
        match (c.kind, is_reaction) {
            (RecordKind::Reaction, false) => {
                return Err(ServiceError::data(
                    "bad_structure",
                    format!("{:?} is not a reaction", item.smiles),
                ))
            }
            (RecordKind::Smiles, true) => {
                return Err(ServiceError::data(
                    "bad_structure",
                    format!("{:?} is a reaction; use a reaction collection", item.smiles),
                ))
            }
            _ => {}
        }
        let provider = self.provider(&c.provider)?;
        let payload = prepare_structure_text(&item.smiles)?;
        let unit = structure_vector(provider, &item.smiles)?;
        let mut metadata = item.metadata.clone();
        let wants_mw = c.kind == RecordKind::Smiles && c.schema().metadata_fields.contains_key("mw");
        if wants_mw && !metadata.contains_key("mw") {
            let mw =
                molecular_weight(&parse_smiles(&payload).map_err(chemvecrag_core::embedding::EmbeddingError::from)?);
            metadata.insert("mw".into(), MetaValue::Float(mw));
        }
        let vector = if c.weight_scaled {
            let mw = metadata.get("mw").and_then(MetaValue::as_f64).unwrap_or_default();
            weight_scaled(&EmbeddingVector::new(unit)?, mw)?.into_values()
        } else {
            unit
        };
        Ok(CollectionRecord {
            id: item.id.clone(),
            vector,
            payload,
            metadata,
            links: vec![],
        })
    }

    fn ingest_spectra(&self, c: &CollectionConfig, items: &[(String, SpectrumEntry)]) -> Result<usize, ServiceError> {
        let compounds = c.compounds.as_deref().unwrap_or_default();
        let image = self.provider(&c.provider)?;
        let text = self.provider(c.text_provider.as_deref().unwrap_or_default())?;
        let (mut spectra, mut compound_records) = (Vec::new(), Vec::new());
        for (origin, entry) in items {
            let at = |e: ServiceError| ServiceError {
                detail: format!("{origin}: {}", e.detail),
                ..e
            };
            let bytes = self.read_image(&entry.image_path).map_err(at)?;
            let (s, k) = spectrum_records(entry, &bytes, image, text, compounds)
                .map_err(|e| at(ServiceError::data("bad_spectrum", e.to_string())))?;
            spectra.push(s);
            compound_records.push(k);
        }
        let captions = match &c.captions {
            Some(name) => Some((name.as_str(), self.caption_records(c, &spectra, text)?)),
            None => None,
        };
        let compound_ids: Vec<String> = items.iter().map(|(_, e)| compound_record_id(&e.id)).collect();
        let spectrum_ids: Vec<String> = items.iter().map(|(_, e)| e.id.clone()).collect();
        let n = spectra.len();
        // Link targets must exist first, so insert compounds, then spectra,
        // then captions, undoing earlier steps if a later one fails.
        self.store.insert(compounds, compound_records)?;
        if let Err(e) = self.store.insert(&c.name, spectra) {
            self.store.delete(compounds, &compound_ids)?;
            return Err(e.into());
        }
        if let Some((name, records)) = captions {
            if let Err(e) = self.store.insert(name, records) {
                self.store.delete(&c.name, &spectrum_ids)?;
                self.store.delete(compounds, &compound_ids)?;
                return Err(e.into());
            }
            self.train_if_ivf(name)?;
        }
        self.train_if_ivf(compounds)?;
        self.train_if_ivf(&c.name)?;
        Ok(n)
    }

    fn caption_records(
        &self,
        c: &CollectionConfig,
        spectra: &[CollectionRecord],
        text: &dyn EmbeddingProvider,
    ) -> Result<Vec<CollectionRecord>, ServiceError> {
        spectra
            .iter()
            .map(|s| {
                let caption = match s.metadata.get("caption") {
                    Some(MetaValue::Str(t)) => t.clone(),
                    _ => String::new(),
                };
                let vector = l2_normalize(&embed_text(text, &caption)?)?.into_values();
                let mut metadata = Metadata::new();
                metadata.insert("spectrum".into(), MetaValue::Str(s.id.clone()));
                Ok(CollectionRecord {
                    id: format!("{}/caption", s.id),
                    vector,
                    payload: caption,
                    metadata,
                    links: vec![Link::new(&c.name, &s.id)],
                })
            })
            .collect()
    }

    /// The vector a structure string is compared with in this collection.
    fn structure_query(&self, c: &CollectionConfig, smiles: &str) -> Result<Vec<f32>, ServiceError> {
        match c.kind {
            RecordKind::Spectrum => Err(ServiceError::usage(format!(
                "collection {:?} holds spectra; query it with an image",
                c.name
            ))),
            RecordKind::Compounds => {
                let parts: Vec<&str> = smiles.split(';').collect();
                Ok(embed_spectrum_compounds(self.provider(&c.provider)?, &parts)?.into_values())
            }
            RecordKind::Captions => Ok(l2_normalize(&embed_text(self.provider(&c.provider)?, smiles)?)?.into_values()),
            RecordKind::Smiles | RecordKind::Reaction => Ok(structure_vector(self.provider(&c.provider)?, smiles)?),
        }
    }

    fn query_vector(&self, c: &CollectionConfig, query: &QuerySpec) -> Result<Vec<f32>, ServiceError> {
        match query {
            QuerySpec::Smiles(s) => self.structure_query(c, s),
            QuerySpec::Image(path) => {
                if c.kind != RecordKind::Spectrum {
                    return Err(ServiceError::usage(format!(
                        "collection {:?} does not hold images",
                        c.name
                    )));
                }
                Ok(image_vector(
                    self.provider(&c.provider)?,
                    path,
                    &self.read_image(path)?,
                )?)
            }
            QuerySpec::Vector(v) => Ok(v.clone()),
            QuerySpec::Expr(v) => {
                let expr = parse_expression(
                    v,
                    &CollectionLeaves {
                        service: self,
                        collection: c,
                    },
                )?;
                let own = self.provider(&c.provider)?;
                let text_name = c.text_provider.as_deref().unwrap_or(&self.config.agent.text_provider);
                let text = if c.kind == RecordKind::Spectrum {
                    self.providers.get(text_name).map(|p| p.as_ref())
                } else {
                    Some(own)
                };
                let image = if c.kind == RecordKind::Spectrum {
                    Some(own)
                } else {
                    None
                };
                Ok(evaluate(&expr, &ProviderSet { text, image })?.into_values())
            }
        }
    }

    pub fn search(&self, collection: &str, req: &SearchRequest) -> Result<SearchResponse, ServiceError> {
        let c = self.collection(collection)?;
        let mut vector = self.query_vector(c, &req.query)?;
        if let Some(m) = req.target_mw {
            vector = weight_scaled(&EmbeddingVector::new(vector)?, m)?.into_values();
        }
        let filter = match &req.filter {
            Some(text) => Some(MetadataFilter::parse(text).map_err(StoreError::from)?),
            None => None,
        };
        let opts = SearchOptions {
            filter,
            ef_search: req.ef_search,
            nprobe: req.nprobe,
        };
        let hits = self.store.search(&c.name, &vector, req.k, &opts)?;
        let linked = match c.kind {
            RecordKind::Spectrum | RecordKind::Compounds | RecordKind::Captions => {
                let ids: Vec<&str> = hits.iter().map(|h| h.id.as_str()).collect();
                Some(self.store.cross_lookup(&c.name, &ids)?)
            }
            _ => None,
        };
        let panel = if req.panel {
            let QuerySpec::Smiles(smiles) = &req.query else {
                return Err(ServiceError::usage("a similarity panel needs a SMILES query"));
            };
            let mut stored = Vec::with_capacity(hits.len());
            for h in &hits {
                let record = self.store.get(&c.name, &h.id)?.ok_or_else(|| {
                    ServiceError::new(
                        ErrorClass::NotFound,
                        "unknown_id",
                        format!("{} vanished mid-query", h.id),
                    )
                })?;
                stored.push(record.vector);
            }
            let panel_hits: Vec<PanelHit> = hits
                .iter()
                .zip(&stored)
                .map(|(h, v)| PanelHit {
                    id: &h.id,
                    smiles: &h.payload,
                    vector: v,
                })
                .collect();
            Some(build_panel(smiles, smiles, &vector, &panel_hits)?)
        } else {
            None
        };
        Ok(SearchResponse {
            collection: c.name.clone(),
            hits,
            linked,
            panel,
        })
    }

    pub fn ask(&self, question: &str) -> Result<AskResponse, ServiceError> {
        if question.trim().is_empty() {
            return Err(ServiceError::usage("question is empty"));
        }
        let agent = &self.config.agent;
        let text = self.provider(&agent.text_provider)?;
        let image_name = agent.image_provider.clone().or_else(|| {
            self.config
                .collection(&self.config.workers.nmr)
                .filter(|c| c.kind == RecordKind::Spectrum)
                .map(|c| c.provider.clone())
        });
        let mut retriever = StoreRetriever::new(&self.store, text, self.config.workers.clone());
        retriever.image = match &image_name {
            Some(name) => Some(self.provider(name)?),
            None => None,
        };
        retriever.image_root = self.config.image_root().to_path_buf();
        retriever.exclude_self = agent.exclude_self;
        let run = ask(question, self.client.as_ref(), &retriever, &agent.agent_config())?;
        Ok(AskResponse {
            trace_id: uuid::Uuid::new_v4().to_string(),
            worker: run.route.worker,
            route_source: run.route.source,
            report: run.report.to_markdown(),
            trace: run.state.trace,
            failure: run.state.failure,
        })
    }
}
