use std::path::PathBuf;

use thiserror::Error;
use webmap_core::embedding::EmbeddingError;
use webmap_core::overlay::OverlayError;
use webmap_core::signpost::SignpostError;
use webmap_core::subcluster::SubclusterError;

#[derive(Debug, Error)]
pub enum WebmapError {
    #[error("cannot read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: std::net::SocketAddr,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Corpus { path: PathBuf, message: String },
    #[error("corrupt data dir entry {path}: {message}")]
    Store { path: PathBuf, message: String },
    #[error("no data found in {0}; run `webmap ingest` first")]
    EmptyStore(PathBuf),
    #[error("unknown cluster {0:?}")]
    UnknownCluster(String),
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
    #[error(transparent)]
    Signpost(#[from] SignpostError),
    #[error(transparent)]
    Subcluster(#[from] SubclusterError),
}

impl WebmapError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// Whether the error stems from user input rather than an engine fault.
    pub fn is_user_error(&self) -> bool {
        match self {
            Self::ConfigRead { .. }
            | Self::ConfigParse { .. }
            | Self::InvalidConfig(_)
            | Self::Bind { .. }
            | Self::Corpus { .. }
            | Self::EmptyStore(_)
            | Self::UnknownCluster(_)
            | Self::UnknownDocument(_)
            | Self::Embedding(_) => true,
            Self::Overlay(e) => matches!(
                e,
                OverlayError::NoMatch { .. }
                    | OverlayError::EmptyQuery
                    | OverlayError::UnknownDocument(_)
                    | OverlayError::UnknownCluster { .. }
                    | OverlayError::UnknownPeer(_)
            ),
            Self::Signpost(e) => matches!(e, SignpostError::NotFound(_)),
            Self::Io { .. } | Self::Store { .. } | Self::Subcluster(_) => false,
        }
    }
}
