//! Local term proximity graphs.
//!
//! Documents are reduced to selected term occurrences, compared pairwise
//! through their embeddings (either averaged per term or sentence by
//! sentence), and folded into an undirected graph whose edge weights are
//! running means of the observed similarities.

mod graph;
mod pairs;
mod path;
mod terms;

use thiserror::Error;

pub use graph::{
    EdgeRecord, HistoryCap, PersistedEdge, PersistedGraph, ProxGraphConfig, TermProximityGraph,
    UpdateReport,
};
pub use pairs::{
    averaged_embeddings, compute_pairs, pairs_approach_a, pairs_approach_b, Approach,
    SimilarityPair,
};
pub use path::{distances_from, edge_distance, shortest_path, TermPath, MIN_EDGE_DISTANCE};
pub use terms::{select_terms, split_sentences, Document, TermSelector, DEFAULT_STOPWORDS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProxGraphError {
    #[error("empty input text")]
    EmptyInput,
    #[error("invalid proximity graph config: {0}")]
    InvalidConfig(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("term {0:?} is not in the graph")]
    UnknownTerm(String),
    #[error("no source terms given")]
    EmptySources,
    #[error("{0:?} is not reachable from any source")]
    NotReachable(String),
}

/// Convenience wrapper matching the update contract: mutates `graph` and reports counts.
pub fn update_graph(
    graph: &mut TermProximityGraph,
    pairs: &[SimilarityPair],
    cfg: &ProxGraphConfig,
) -> UpdateReport {
    graph.update(pairs, cfg)
}
