//! Service layer of the WebMap overlay: configuration, corpus ingestion,
//! the on-disk data dir, and the read-only HTTP API.

pub mod api;
pub mod config;
pub mod corpus;
pub mod error;
pub mod ingest;
pub mod store;

pub use config::EngineConfig;
pub use error::WebmapError;
pub use ingest::{ingest, IngestReport};
pub use store::Store;
