//! Core engine of a semantic overlay over a document web.
//!
//! Peers build term proximity graphs from their documents, derive a
//! text-representing centroid (TRC) for each document and attach it to a
//! globally linked cluster file. Inside a cluster, weighted HITS over
//! document-specific term association graphs yields keywords and source
//! topics that chain documents together, and a B-spline mean shift splits
//! the cluster into subclusters with outliers.

pub mod embedding;
pub mod overlay;
pub mod proxgraph;
pub mod signpost;
pub mod subcluster;

pub use embedding::{cosine, EmbeddingError, EmbeddingProvider, Occurrence, Vector};
pub use proxgraph::{Document, ProxGraphConfig, TermProximityGraph, TermSelector};
