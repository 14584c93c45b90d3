//! Engine configuration: one TOML file holding every tunable.
//!
//! Relative paths inside the file resolve against the file's directory.
//! Unknown keys are rejected at load.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use webmap_core::embedding::{
    EmbeddingProvider, FileProvider, StubProvider, DEFAULT_STUB_DIMENSION,
};
use webmap_core::overlay::TrcFallback;
use webmap_core::proxgraph::{
    Approach, HistoryCap, ProxGraphConfig, TermSelector, DEFAULT_STOPWORDS,
};
use webmap_core::signpost::SignpostConfig;
use webmap_core::subcluster::MeanShiftConfig;

use crate::error::WebmapError;

/// Name of the config copy written into every populated data dir.
pub const SNAPSHOT_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub seed: u64,
    pub data_dir: PathBuf,
    #[serde(default)]
    pub embedding: EmbeddingSettings,
    #[serde(default)]
    pub selector: SelectorSettings,
    #[serde(default = "default_proxgraph")]
    pub proxgraph: ProxGraphConfig,
    #[serde(default)]
    pub overlay: OverlaySettings,
    #[serde(default)]
    pub signpost: SignpostConfig,
    #[serde(default)]
    pub meanshift: MeanShiftSettings,
    #[serde(default)]
    pub peers: Vec<PeerSettings>,
    /// Directory the file was loaded from; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Stub,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSettings {
    pub kind: EmbeddingKind,
    pub dimension: usize,
    /// Weight of the sentence vector in stub occurrence embeddings.
    pub context_mix: f64,
    /// JSONL vectors; required when `kind = "file"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector_file: Option<PathBuf>,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        Self {
            kind: EmbeddingKind::Stub,
            dimension: DEFAULT_STUB_DIMENSION,
            context_mix: 1.0,
            vector_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorSettings {
    pub min_len: usize,
    pub stopwords: Vec<String>,
    /// One term per line; when set only these terms are selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowlist_file: Option<PathBuf>,
}

impl Default for SelectorSettings {
    fn default() -> Self {
        Self {
            min_len: TermSelector::default().min_len,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            allowlist_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackSetting {
    Fail,
    #[default]
    MostFrequentTerm,
}

impl From<FallbackSetting> for TrcFallback {
    fn from(f: FallbackSetting) -> Self {
        match f {
            FallbackSetting::Fail => TrcFallback::Fail,
            FallbackSetting::MostFrequentTerm => TrcFallback::MostFrequentTerm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlaySettings {
    /// Used when none of a document's terms is in the peer's graph.
    pub trc_fallback: FallbackSetting,
}

/// Mean-shift settings; `h` defaults per run to the median pairwise
/// distance of the cluster's feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanShiftSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub epsilon: f64,
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_radius: Option<f64>,
    pub min_pts: usize,
    pub tau: f64,
}

impl Default for MeanShiftSettings {
    fn default() -> Self {
        let d = MeanShiftConfig::with_bandwidth(1.0);
        Self {
            h: None,
            epsilon: d.epsilon,
            max_iter: d.max_iter,
            merge_radius: d.merge_radius,
            min_pts: d.min_pts,
            tau: d.tau,
        }
    }
}

impl MeanShiftSettings {
    pub fn with_bandwidth(&self, h: f64) -> MeanShiftConfig {
        MeanShiftConfig {
            h,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            merge_radius: self.merge_radius,
            min_pts: self.min_pts,
            tau: self.tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeerSettings {
    pub peer_id: String,
    /// Glob patterns of JSONL files or `.txt` directories.
    #[serde(default)]
    pub corpus: Vec<String>,
}

fn default_proxgraph() -> ProxGraphConfig {
    ProxGraphConfig {
        s: 0.3,
        t: HistoryCap::Unbounded,
        approach: Approach::Sentence,
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            data_dir: PathBuf::from("data"),
            embedding: EmbeddingSettings::default(),
            selector: SelectorSettings::default(),
            proxgraph: default_proxgraph(),
            overlay: OverlaySettings::default(),
            signpost: SignpostConfig::default(),
            meanshift: MeanShiftSettings::default(),
            peers: vec![PeerSettings {
                peer_id: "peer-1".into(),
                corpus: vec!["corpus/*.jsonl".into()],
            }],
            base_dir: PathBuf::from("."),
        }
    }
}

impl EngineConfig {
    pub fn load(path: &Path) -> Result<Self, WebmapError> {
        let body = fs::read_to_string(path).map_err(|e| WebmapError::ConfigRead {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::parse(&body).map_err(|e| match e {
            WebmapError::ConfigParse { message, .. } => WebmapError::ConfigParse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        cfg.base_dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        Ok(cfg)
    }

    /// Parses and validates a config body; relative paths resolve against `.`.
    pub fn parse(body: &str) -> Result<Self, WebmapError> {
        let cfg: Self = toml::from_str(body).map_err(|e| WebmapError::ConfigParse {
            path: PathBuf::new(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(Self {
            base_dir: PathBuf::from("."),
            ..cfg
        })
    }

    pub fn validate(&self) -> Result<(), WebmapError> {
        let invalid = |m: String| Err(WebmapError::InvalidConfig(m));
        self.proxgraph
            .validate()
            .map_err(|e| WebmapError::InvalidConfig(e.to_string()))?;
        self.signpost
            .validate()
            .map_err(|e| WebmapError::InvalidConfig(e.to_string()))?;
        if let Some(h) = self.meanshift.h {
            if !(h.is_finite() && h > 0.0) {
                return invalid(format!("meanshift.h must be positive, got {h}"));
            }
        }
        self.meanshift
            .with_bandwidth(self.meanshift.h.unwrap_or(1.0))
            .validate()
            .map_err(|e| WebmapError::InvalidConfig(e.to_string()))?;
        if self.embedding.dimension < 2 {
            return invalid("embedding.dimension must be at least 2".into());
        }
        if !(self.embedding.context_mix.is_finite() && self.embedding.context_mix >= 0.0) {
            return invalid("embedding.context_mix must be non-negative".into());
        }
        if self.embedding.kind == EmbeddingKind::File && self.embedding.vector_file.is_none() {
            return invalid("embedding.vector_file is required when kind = \"file\"".into());
        }
        if self.selector.min_len == 0 {
            return invalid("selector.min_len must be at least 1".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in &self.peers {
            if p.peer_id.trim().is_empty() {
                return invalid("peer_id must not be empty".into());
            }
            if !seen.insert(p.peer_id.as_str()) {
                return invalid(format!("duplicate peer_id {:?}", p.peer_id));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.resolve(&self.data_dir)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    pub fn provider(&self) -> Result<EmbeddingProvider, WebmapError> {
        match self.embedding.kind {
            EmbeddingKind::Stub => Ok(StubProvider::with_context_mix(
                self.seed,
                self.embedding.dimension,
                self.embedding.context_mix,
            )?
            .into()),
            EmbeddingKind::File => {
                let path = self.resolve(self.embedding.vector_file.as_deref().expect("validated"));
                Ok(FileProvider::from_path(&path)?.into())
            }
        }
    }

    pub fn selector(&self) -> Result<TermSelector, WebmapError> {
        let mut sel = TermSelector::with_stopwords(self.selector.stopwords.iter().cloned());
        sel.min_len = self.selector.min_len;
        if let Some(file) = &self.selector.allowlist_file {
            let path = self.resolve(file);
            let body = fs::read_to_string(&path).map_err(|e| WebmapError::Io {
                path: path.clone(),
                source: e,
            })?;
            sel = sel.with_allowlist(TermSelector::parse_allowlist(&body));
        }
        Ok(sel)
    }
}
