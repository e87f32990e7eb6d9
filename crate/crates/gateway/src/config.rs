//! Service configuration, read from TOML.
//!
//! Relative paths are resolved against the directory holding the config
//! file, so a config and its data can move together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use chemvecrag_agent::{AgentConfig, Bounds, WorkerCollections};
use chemvecrag_core::embedding::Modality;
use chemvecrag_core::store::{CollectionSchema, FieldType, HnswParams, IndexKind, IvfParams, PayloadKind};

pub const CONFIG_ENV: &str = "CHEMVECRAG_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "chemvecrag.toml";
pub const SNAPSHOT_FILE: &str = "store.cvrs";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProviderBinding {
    Mock {
        modality: Modality,
        dim: usize,
    },
    File {
        modality: Modality,
        path: PathBuf,
    },
    Http {
        modality: Modality,
        endpoint: String,
        dim: usize,
        #[serde(default = "default_http_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_http_timeout_ms() -> u64 {
    10_000
}

impl ProviderBinding {
    pub fn modality(&self) -> Modality {
        match self {
            ProviderBinding::Mock { modality, .. }
            | ProviderBinding::File { modality, .. }
            | ProviderBinding::Http { modality, .. } => *modality,
        }
    }
}

/// What a collection holds, which decides how ingest turns input into records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Smiles,
    Reaction,
    Spectrum,
    /// Filled by spectrum ingest; holds averaged compound embeddings.
    Compounds,
    /// Filled by spectrum ingest; holds caption text embeddings.
    Captions,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Smiles => "smiles",
            RecordKind::Reaction => "reaction",
            RecordKind::Spectrum => "spectrum",
            RecordKind::Compounds => "compounds",
            RecordKind::Captions => "captions",
        }
    }

    fn payload_kind(self) -> PayloadKind {
        match self {
            RecordKind::Smiles | RecordKind::Compounds => PayloadKind::Smiles,
            RecordKind::Reaction => PayloadKind::Reaction,
            RecordKind::Spectrum => PayloadKind::ImageRef,
            RecordKind::Captions => PayloadKind::Caption,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionConfig {
    pub name: String,
    pub kind: RecordKind,
    pub dim: usize,
    pub index: IndexKind,
    /// Provider embedding this collection's own payloads.
    pub provider: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, FieldType>,
    /// Store each structure at length equal to its molecular weight.
    #[serde(default)]
    pub weight_scaled: bool,
    /// Spectrum collections: where the linked compound records go.
    #[serde(default)]
    pub compounds: Option<String>,
    /// Spectrum collections: optional caption collection to fill.
    #[serde(default)]
    pub captions: Option<String>,
    /// Spectrum collections: text provider for compounds and captions.
    #[serde(default)]
    pub text_provider: Option<String>,
    #[serde(default)]
    pub hnsw: Option<HnswParams>,
    #[serde(default)]
    pub ivf: Option<IvfParams>,
}

impl CollectionConfig {
    pub fn schema(&self) -> CollectionSchema {
        let mut schema = match self.kind {
            RecordKind::Spectrum => chemvecrag_agent::spectrum::spectrum_schema(&self.name, self.dim, self.index),
            RecordKind::Compounds => chemvecrag_agent::spectrum::compound_schema(&self.name, self.dim, self.index),
            RecordKind::Captions => CollectionSchema::new(&self.name, self.dim, self.index, PayloadKind::Caption)
                .with_field("spectrum", FieldType::String),
            kind => CollectionSchema::new(&self.name, self.dim, self.index, kind.payload_kind()),
        };
        if self.weight_scaled {
            schema.metadata_fields.insert("mw".into(), FieldType::Float);
        }
        schema
            .metadata_fields
            .extend(self.metadata.iter().map(|(k, v)| (k.clone(), *v)));
        if let Some(h) = self.hnsw {
            schema.hnsw = h;
        }
        if let Some(i) = self.ivf {
            schema.ivf = i;
        }
        schema
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientKind {
    /// Deterministic fingerprint rules, no language model.
    Rules,
    /// Replays a JSON transcript; meant for tests and demos.
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    pub kind: ClientKind,
    #[serde(default)]
    pub transcript: Option<PathBuf>,
    #[serde(default = "default_client_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_client_timeout_ms() -> u64 {
    30_000
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            kind: ClientKind::Rules,
            transcript: None,
            timeout_ms: default_client_timeout_ms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    #[serde(default)]
    pub bounds: Bounds,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_text_provider")]
    pub text_provider: String,
    #[serde(default)]
    pub image_provider: Option<String>,
    #[serde(default)]
    pub exclude_self: bool,
}

fn default_k() -> usize {
    AgentConfig::default().k
}

fn default_text_provider() -> String {
    "text".into()
}

impl Default for AgentSection {
    fn default() -> Self {
        AgentSection {
            bounds: Bounds::default(),
            k: default_k(),
            text_provider: default_text_provider(),
            image_provider: None,
            exclude_self: false,
        }
    }
}

impl AgentSection {
    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            bounds: self.bounds,
            k: self.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    #[serde(default = "default_port")]
    pub port: u32,
    /// Image paths in inputs and questions resolve against this directory.
    #[serde(default)]
    pub image_root: Option<PathBuf>,
    #[serde(default)]
    pub providers: BTreeMap<String, ProviderBinding>,
    #[serde(default)]
    pub collections: Vec<CollectionConfig>,
    #[serde(default)]
    pub workers: WorkerCollections,
    #[serde(default)]
    pub agent: AgentSection,
    #[serde(default)]
    pub client: ClientConfig,
}

fn default_port() -> u32 {
    8080
}

impl Config {
    /// `explicit`, else `$CHEMVECRAG_CONFIG`, else `./chemvecrag.toml`.
    pub fn locate(explicit: Option<&Path>) -> PathBuf {
        match explicit {
            Some(p) => p.to_path_buf(),
            None => std::env::var_os(CONFIG_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG_FILE)),
        }
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Config::from_toml(&text, &base).map_err(|e| match e {
            ConfigError::Parse { source, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    /// Parses and validates, resolving relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Config, ConfigError> {
        let mut config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            source: Box::new(e),
        })?;
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        match &mut self.image_root {
            Some(root) => fix(root),
            None => self.image_root = Some(base.to_path_buf()),
        }
        for binding in self.providers.values_mut() {
            if let ProviderBinding::File { path, .. } = binding {
                fix(path);
            }
        }
        if let Some(t) = &mut self.client.transcript {
            fix(t);
        }
    }

    pub fn image_root(&self) -> &Path {
        self.image_root.as_deref().unwrap_or(Path::new("."))
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.data_dir.join(SNAPSHOT_FILE)
    }

    pub fn collection(&self, name: &str) -> Option<&CollectionConfig> {
        self.collections.iter().find(|c| c.name == name)
    }

    fn provider_of(&self, name: &str, modality: Modality, who: &str) -> Result<&ProviderBinding, ConfigError> {
        let binding = self
            .providers
            .get(name)
            .ok_or_else(|| ConfigError::Invalid(format!("{who} names unknown provider {name:?}")))?;
        if binding.modality() != modality {
            return Err(ConfigError::Invalid(format!(
                "{who} needs {modality} embeddings but provider {name:?} serves {}",
                binding.modality()
            )));
        }
        Ok(binding)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !(1..=65535).contains(&self.port) {
            return invalid(format!("port {} is outside 1..=65535", self.port));
        }
        if let Some(root) = &self.image_root {
            if !root.is_dir() {
                return invalid(format!("image_root {} is not a directory", root.display()));
            }
        }
        for (name, binding) in &self.providers {
            match binding {
                ProviderBinding::File { path, .. } if !path.is_file() => {
                    return invalid(format!("provider {name:?}: {} does not exist", path.display()));
                }
                ProviderBinding::Mock { dim: 0, .. } | ProviderBinding::Http { dim: 0, .. } => {
                    return invalid(format!("provider {name:?}: dim must be positive"));
                }
                _ => {}
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.collections {
            let who = format!("collection {:?}", c.name);
            if !seen.insert(c.name.as_str()) {
                return invalid(format!("{who} is declared twice"));
            }
            let modality = if c.kind == RecordKind::Spectrum {
                Modality::Image
            } else {
                Modality::Text
            };
            let binding = self.provider_of(&c.provider, modality, &who)?;
            if let ProviderBinding::Mock { dim, .. } | ProviderBinding::Http { dim, .. } = binding {
                if *dim != c.dim {
                    return invalid(format!(
                        "{who} has dim {} but provider {:?} yields {dim}",
                        c.dim, c.provider
                    ));
                }
            }
            if c.kind == RecordKind::Spectrum {
                let compounds = c
                    .compounds
                    .as_deref()
                    .ok_or_else(|| ConfigError::Invalid(format!("{who} needs a compounds collection")))?;
                let text = c
                    .text_provider
                    .as_deref()
                    .ok_or_else(|| ConfigError::Invalid(format!("{who} needs a text_provider")))?;
                self.provider_of(text, Modality::Text, &who)?;
                let linked = [
                    (Some(compounds), RecordKind::Compounds),
                    (c.captions.as_deref(), RecordKind::Captions),
                ];
                for (name, kind) in linked {
                    let Some(name) = name else { continue };
                    match self.collection(name) {
                        Some(t) if t.kind == kind => {}
                        _ => {
                            return invalid(format!(
                                "{who} links to {name:?}, which is not a {} collection",
                                kind.as_str()
                            ))
                        }
                    }
                }
            }
        }
        if self.agent.k == 0 {
            return invalid("agent.k must be positive".into());
        }
        if self.agent.bounds.retrievals == 0 {
            return invalid("agent.bounds.retrievals must be positive".into());
        }
        if !self.providers.is_empty() {
            self.provider_of(&self.agent.text_provider, Modality::Text, "agent")?;
        }
        if let Some(image) = &self.agent.image_provider {
            self.provider_of(image, Modality::Image, "agent")?;
        }
        if self.client.kind == ClientKind::Scripted {
            match &self.client.transcript {
                Some(t) if t.is_file() => {}
                Some(t) => return invalid(format!("client transcript {} does not exist", t.display())),
                None => return invalid("a scripted client needs a transcript".into()),
            }
        }
        if self.client.timeout_ms == 0 {
            return invalid("client.timeout_ms must be positive".into());
        }
        Ok(())
    }
}
