//! Service configuration: one TOML file plus environment overrides.
//!
//! The file is found via `--config`, then `ATLAS_CONFIG`; without either
//! every setting takes its default. Overrides:
//!
//! | variable | setting |
//! |---|---|
//! | `ATLAS_BIND` | `service.bind` |
//! | `ATLAS_SNAPSHOT` | `service.snapshot` |
//! | `ATLAS_MEDIA_DIR` | `service.media_dir` |
//! | `ATLAS_K` | `retrieval.k` |
//! | `ATLAS_<ROLE>_ENDPOINT` | `backends.<role>.endpoint`, switching the role to remote |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use atlas_core::gateway::{BackendConfig, BackendMode};
use atlas_core::graph::CanonParams;
use atlas_core::grounding::{GroundingParams, DEFAULT_LAYOUT_SAMPLES};
use atlas_core::pipeline::{BandThresholds, PipelineConfig};
use atlas_core::taxonomy::TaxonomyDocument;
use atlas_core::{Gateway, Role, SegmentationParams, Taxonomy};
use serde::{Deserialize, Serialize};

use crate::remote::{RemoteBackend, RetryPolicy};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid setting {key}: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationSection {
    pub clip_len_s: u64,
    pub overlap_s: u64,
}

impl Default for SegmentationSection {
    fn default() -> Self {
        SegmentationSection { clip_len_s: 30, overlap_s: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub k: usize,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection { k: atlas_core::pipeline::DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub context_window: usize,
    pub retain_active_clip: bool,
    pub band_high: f64,
    pub band_medium: f64,
    pub lexical_threshold: f64,
    pub coref_threshold: f64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let b = BandThresholds::default();
        let c = CanonParams::default();
        PipelineSection {
            context_window: atlas_core::pipeline::DEFAULT_CONTEXT_WINDOW,
            retain_active_clip: true,
            band_high: b.high,
            band_medium: b.medium,
            lexical_threshold: c.lexical_threshold,
            coref_threshold: c.coref_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroundingSection {
    /// Shared by track grounding and layout reference-frame counting.
    pub confidence_threshold: f64,
    pub iou_threshold: f64,
    pub layout_samples: usize,
}

impl Default for GroundingSection {
    fn default() -> Self {
        let g = GroundingParams::default();
        GroundingSection { confidence_threshold: g.confidence_threshold, iou_threshold: g.iou_threshold, layout_samples: DEFAULT_LAYOUT_SAMPLES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: String,
    pub snapshot: PathBuf,
    pub media_dir: Option<PathBuf>,
    /// Taxonomy document (JSON); the built-in taxonomy when unset.
    pub taxonomy: Option<PathBuf>,
}

impl Default for ServiceSection {
    fn default() -> Self {
        ServiceSection { bind: "127.0.0.1:8080".into(), snapshot: PathBuf::from("atlas.snap"), media_dir: None, taxonomy: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoleSection {
    #[serde(default)]
    pub mode: BackendMode,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub credentials_ref: Option<String>,
    #[serde(default)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrySection {
    pub attempts: u32,
    pub base_delay_ms: u64,
    pub timeout_s: u64,
}

impl Default for RetrySection {
    fn default() -> Self {
        let p = RetryPolicy::default();
        RetrySection { attempts: p.attempts, base_delay_ms: p.base_delay.as_millis() as u64, timeout_s: p.timeout.as_secs() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtlasConfig {
    pub segmentation: SegmentationSection,
    pub retrieval: RetrievalSection,
    pub pipeline: PipelineSection,
    pub grounding: GroundingSection,
    pub service: ServiceSection,
    pub retry: RetrySection,
    /// Keyed by role name: captioner, embedder, enricher, narrator, extractor.
    pub backends: BTreeMap<String, RoleSection>,
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.into(), message: message.into() }
}

impl AtlasConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: AtlasConfig = toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path`, or `ATLAS_CONFIG` when `path` is `None`, then applies
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let env_path = std::env::var_os("ATLAS_CONFIG").map(PathBuf::from);
        let mut cfg = match path.map(Path::to_path_buf).or(env_path) {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
                Self::parse(&text, &p)?
            }
            None => AtlasConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = var("ATLAS_BIND") {
            self.service.bind = v;
        }
        if let Some(v) = var("ATLAS_SNAPSHOT") {
            self.service.snapshot = PathBuf::from(v);
        }
        if let Some(v) = var("ATLAS_MEDIA_DIR") {
            self.service.media_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = var("ATLAS_K") {
            self.retrieval.k = v.parse().map_err(|_| invalid("ATLAS_K", format!("`{v}` is not a positive integer")))?;
        }
        for role in Role::ALL {
            let key = format!("ATLAS_{}_ENDPOINT", role.as_str().to_uppercase());
            if let Some(v) = var(&key) {
                let section = self.backends.entry(role.as_str().to_string()).or_insert(RoleSection {
                    mode: BackendMode::Remote,
                    endpoint: None,
                    credentials_ref: None,
                    temperature: None,
                });
                section.mode = BackendMode::Remote;
                section.endpoint = Some(v);
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.segmentation_params()?;
        if self.retrieval.k == 0 {
            return Err(invalid("retrieval.k", "must be at least 1"));
        }
        let unit = |key: &str, v: f64| if (0.0..=1.0).contains(&v) { Ok(()) } else { Err(invalid(key, "must be within [0, 1]")) };
        unit("grounding.confidence_threshold", self.grounding.confidence_threshold)?;
        unit("grounding.iou_threshold", self.grounding.iou_threshold)?;
        unit("pipeline.lexical_threshold", self.pipeline.lexical_threshold)?;
        unit("pipeline.coref_threshold", self.pipeline.coref_threshold)?;
        if self.pipeline.band_medium > self.pipeline.band_high {
            return Err(invalid("pipeline.band_medium", "must not exceed band_high"));
        }
        if self.grounding.layout_samples == 0 {
            return Err(invalid("grounding.layout_samples", "must be at least 1"));
        }
        if self.retry.attempts == 0 {
            return Err(invalid("retry.attempts", "must be at least 1"));
        }
        for name in self.backends.keys() {
            if !Role::ALL.iter().any(|r| r.as_str() == name) {
                return Err(invalid(&format!("backends.{name}"), "unknown role"));
            }
        }
        for role in Role::ALL {
            self.backend(role).validate().map_err(|e| invalid(&format!("backends.{role}"), e.to_string()))?;
        }
        Ok(())
    }

    pub fn segmentation_params(&self) -> Result<SegmentationParams, ConfigError> {
        SegmentationParams::from_secs(self.segmentation.clip_len_s, self.segmentation.overlap_s)
            .map_err(|e| invalid("segmentation", e.to_string()))
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            k: self.retrieval.k,
            context_window: self.pipeline.context_window,
            bands: BandThresholds { high: self.pipeline.band_high, medium: self.pipeline.band_medium },
            canon: CanonParams { lexical_threshold: self.pipeline.lexical_threshold, coref_threshold: self.pipeline.coref_threshold },
            grounding: GroundingParams { confidence_threshold: self.grounding.confidence_threshold, iou_threshold: self.grounding.iou_threshold },
            retain_active_clip: self.pipeline.retain_active_clip,
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            attempts: self.retry.attempts,
            base_delay: Duration::from_millis(self.retry.base_delay_ms),
            timeout: Duration::from_secs(self.retry.timeout_s),
        }
    }

    pub fn backend(&self, role: Role) -> BackendConfig {
        match self.backends.get(role.as_str()) {
            None => BackendConfig::mock(role),
            Some(s) => BackendConfig {
                role,
                mode: s.mode,
                endpoint: s.endpoint.clone(),
                credentials_ref: s.credentials_ref.clone(),
                temperature: s.temperature.unwrap_or(role.default_temperature()),
            },
        }
    }

    pub fn taxonomy(&self) -> Result<Taxonomy, ConfigError> {
        let Some(path) = &self.service.taxonomy else { return Ok(Taxonomy::default()) };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
        let doc: TaxonomyDocument = serde_json::from_str(&text).map_err(|e| ConfigError::Parse { path: path.clone(), message: e.to_string() })?;
        Taxonomy::from_document(doc).map_err(|e| invalid("service.taxonomy", e.to_string()))
    }

    /// Mock gateway with every remote-mode role swapped for an HTTP backend.
    pub fn gateway(&self, taxonomy: &Taxonomy) -> Result<Gateway, ConfigError> {
        let mut g = Gateway::mock(taxonomy);
        let policy = self.retry_policy();
        for role in Role::ALL {
            let cfg = self.backend(role);
            if cfg.mode != BackendMode::Remote {
                continue;
            }
            let b = RemoteBackend::new(&cfg, policy).map_err(|e| invalid(&format!("backends.{role}"), e.to_string()))?;
            match role {
                Role::Captioner => g.captioner = Box::new(b),
                Role::Embedder => g.embedder = Box::new(b),
                Role::Enricher => g.enricher = Box::new(b),
                Role::Narrator => g.narrator = Box::new(b),
                Role::Extractor => g.extractor = Box::new(b),
            }
        }
        Ok(g)
    }
}
