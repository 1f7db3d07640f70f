//! Service configuration (TOML) and resource loading.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use dblplink_core::pipeline::{LinkOptions, Reranker, Resources, SimilarityTarget, TriggerRule, DEFAULT_K};
use dblplink_core::span::LexiconDetector;
use dblplink_core::{EmbeddingKind, HashEncoder, SpanModelId};
use serde::Deserialize;

use crate::artifacts::{load_embeddings, load_index, load_params, ArtifactError};
use crate::remote::{RemoteEncoder, RemoteSpanDetector};

pub const ENV_CONFIG: &str = "DBLPLINK_CONFIG";
pub const ENV_LISTEN: &str = "DBLPLINK_LISTEN";
pub const ENV_ENCODER_URL: &str = "DBLPLINK_ENCODER_URL";
pub const ENV_SPAN_URL: &str = "DBLPLINK_SPAN_URL";

const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// Label index container (also holds the entity store).
    pub index: PathBuf,
    #[serde(default = "default_k")]
    pub default_k: usize,
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default)]
    pub sample_questions: Vec<String>,
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    #[serde(default)]
    pub trigger: Trigger,
    #[serde(default)]
    pub similarity: Similarity,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub detectors: Vec<DetectorConfig>,
    #[serde(default)]
    pub embeddings: Vec<EmbeddingConfig>,
    #[serde(default)]
    pub dataset: DatasetFields,
}

fn default_k() -> usize {
    DEFAULT_K
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    #[default]
    TopCandidate,
    AnyPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Similarity {
    #[default]
    Question,
    Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderBackend {
    #[default]
    Hash,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    #[serde(default)]
    pub backend: EncoderBackend,
    pub endpoint: Option<String>,
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorBackend {
    Lexicon,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub id: String,
    pub backend: DetectorBackend,
    pub endpoint: Option<String>,
    /// Model name sent to the remote service; defaults to `id`.
    pub model: Option<String>,
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub kind: String,
    pub vectors: PathBuf,
    pub params: PathBuf,
}

/// Field names of a question set; `question` may be a dotted path and may
/// point at an object with a `string` member.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetFields {
    pub questions: String,
    pub id: String,
    pub question: String,
    pub gold: String,
}

impl Default for DatasetFields {
    fn default() -> Self {
        Self { questions: "questions".into(), id: "id".into(), question: "question".into(), gold: "entities".into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    File(#[from] crate::io::FileError),
    #[error("{}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{role} file not found: {}", path.display())]
    MissingFile { role: &'static str, path: PathBuf },
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
}

impl ServiceConfig {
    /// Read, resolve relative paths against the file's directory, apply
    /// environment overrides and validate.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = crate::io::read_text(path)?;
        let mut cfg: ServiceConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Syntax { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.apply_env(|k| std::env::var(k).ok());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.index);
        if let Some(d) = &mut self.static_dir {
            fix(d);
        }
        for e in &mut self.embeddings {
            fix(&mut e.vectors);
            fix(&mut e.params);
        }
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(listen) = var(ENV_LISTEN) {
            self.listen = listen;
        }
        if let Some(url) = var(ENV_ENCODER_URL) {
            self.encoder.endpoint = Some(url);
        }
        if let Some(url) = var(ENV_SPAN_URL) {
            for d in self.detectors.iter_mut().filter(|d| d.backend == DetectorBackend::Remote) {
                d.endpoint = Some(url.clone());
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.default_k == 0 {
            return invalid("default_k must be at least 1".into());
        }
        let addr: SocketAddr = match self.listen.parse() {
            Ok(a) => a,
            Err(_) => return invalid(format!("listen address {:?} is not host:port", self.listen)),
        };
        if addr.port() == 0 {
            return invalid("listen port must be in 1..=65535".into());
        }
        if self.encoder.backend == EncoderBackend::Remote {
            check_url("encoder endpoint", self.encoder.endpoint.as_deref())?;
        }
        let mut ids = std::collections::BTreeSet::new();
        for d in &self.detectors {
            if d.id.trim().is_empty() {
                return invalid("detector id is empty".into());
            }
            if !ids.insert(d.id.as_str()) {
                return invalid(format!("detector {:?} configured twice", d.id));
            }
            if d.backend == DetectorBackend::Remote {
                check_url("span detector endpoint", d.endpoint.as_deref())?;
            }
        }
        let mut kinds = std::collections::BTreeSet::new();
        for e in &self.embeddings {
            let kind: EmbeddingKind = e.kind.parse().map_err(|e: dblplink_core::embed::UnknownKind| ConfigError::Invalid(e.to_string()))?;
            if !kinds.insert(kind) {
                return invalid(format!("{kind} embeddings configured twice"));
            }
        }
        Ok(())
    }

    /// Fail on the first referenced file that does not exist.
    pub fn check_files(&self) -> Result<(), ConfigError> {
        let mut files: Vec<(&'static str, &Path)> = vec![("index", &self.index)];
        for e in &self.embeddings {
            files.push(("embedding", &e.vectors));
            files.push(("re-ranker parameters", &e.params));
        }
        for (role, path) in files {
            if !path.is_file() {
                return Err(ConfigError::MissingFile { role, path: path.to_path_buf() });
            }
        }
        if let Some(dir) = &self.static_dir {
            if !dir.is_dir() {
                return Err(ConfigError::MissingFile { role: "static", path: dir.clone() });
            }
        }
        Ok(())
    }

    pub fn link_options(&self) -> LinkOptions {
        LinkOptions {
            trigger: match self.trigger {
                Trigger::TopCandidate => TriggerRule::TopCandidate,
                Trigger::AnyPair => TriggerRule::AnyPair,
            },
            similarity: match self.similarity {
                Similarity::Question => SimilarityTarget::Question,
                Similarity::Span => SimilarityTarget::Span,
            },
        }
    }

    /// Load every artifact and build detectors and encoder.
    pub fn load_resources(&self) -> Result<Resources, ConfigError> {
        self.check_files()?;
        let (_, index) = load_index(&self.index)?;
        let encoder: dblplink_core::pipeline::SharedEncoder = match self.encoder.backend {
            EncoderBackend::Hash => Box::new(HashEncoder),
            EncoderBackend::Remote => Box::new(RemoteEncoder::new(
                self.encoder.endpoint.clone().unwrap_or_default(),
                timeout(self.encoder.timeout_ms),
            )),
        };
        let lexicon = self
            .detectors
            .iter()
            .any(|d| d.backend == DetectorBackend::Lexicon)
            .then(|| LexiconDetector::new(&index));
        let mut resources = Resources::new(index, encoder).with_options(self.link_options());
        for d in &self.detectors {
            let detector: dblplink_core::pipeline::SharedDetector = match d.backend {
                DetectorBackend::Lexicon => Box::new(lexicon.clone().expect("built above")),
                DetectorBackend::Remote => Box::new(RemoteSpanDetector::new(
                    d.endpoint.clone().unwrap_or_default(),
                    d.model.clone().unwrap_or_else(|| d.id.clone()),
                    timeout(d.timeout_ms),
                )),
            };
            resources
                .add_detector(SpanModelId::new(d.id.clone()), detector)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        for e in &self.embeddings {
            let kind: EmbeddingKind = e.kind.parse().map_err(|e: dblplink_core::embed::UnknownKind| ConfigError::Invalid(e.to_string()))?;
            let embeddings = load_embeddings(&e.vectors, Some(kind))?;
            let params = load_params(&e.params)?;
            resources
                .add_reranker(Reranker { embeddings, params })
                .map_err(|err| ConfigError::Invalid(format!("{}: {err}", e.vectors.display())))?;
        }
        Ok(resources)
    }
}

fn timeout(ms: Option<u64>) -> Duration {
    Duration::from_millis(ms.unwrap_or(DEFAULT_TIMEOUT_MS))
}

fn check_url(what: &str, url: Option<&str>) -> Result<(), ConfigError> {
    match url {
        Some(u) if u.starts_with("http://") || u.starts_with("https://") => Ok(()),
        Some(u) => Err(ConfigError::Invalid(format!("{what} {u:?} is not an absolute http(s) URL"))),
        None => Err(ConfigError::Invalid(format!("{what} is required for the remote backend"))),
    }
}
