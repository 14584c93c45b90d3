use std::collections::BTreeMap;

use crate::proxgraph::{distances_from, Document, TermProximityGraph};

use super::OverlayError;

/// Distance charged for a document term the candidate cannot reach.
const UNREACHABLE_PENALTY: f64 = 1.0;

/// Summed shortest-path distance from every graph node to the document's
/// in-graph terms. Empty when no document term is in the graph.
pub fn trc_scores(graph: &TermProximityGraph, doc: &Document) -> BTreeMap<String, f64> {
    let anchors: Vec<&str> = doc
        .distinct_terms()
        .into_iter()
        .filter(|t| graph.contains(t))
        .collect();
    if anchors.is_empty() {
        return BTreeMap::new();
    }
    let tables: Vec<BTreeMap<String, f64>> =
        anchors.iter().map(|t| distances_from(graph, t)).collect();
    graph
        .nodes()
        .iter()
        .map(|candidate| {
            let total = tables
                .iter()
                .map(|d| d.get(candidate).copied().unwrap_or(UNREACHABLE_PENALTY))
                .sum();
            (candidate.clone(), total)
        })
        .collect()
}

/// Text-representing centroid of a document: the graph node with the
/// smallest summed distance to the document's terms. Ties go to the higher
/// degree, then to the lexicographically smaller term.
pub fn derive_trc(graph: &TermProximityGraph, doc: &Document) -> Result<String, OverlayError> {
    let scores = trc_scores(graph, doc);
    let mut best: Option<(&String, f64, usize)> = None;
    for (term, &score) in &scores {
        let degree = graph.degree(term);
        let better = match best {
            None => true,
            Some((_, s, d)) => score < s || (score == s && degree > d),
        };
        if better {
            best = Some((term, score, degree));
        }
    }
    best.map(|(t, _, _)| t.clone())
        .ok_or(OverlayError::NoAnchor)
}
