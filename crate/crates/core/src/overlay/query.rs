use serde::Serialize;

use crate::embedding::{cosine, EmbeddingProvider};
use crate::proxgraph::{distances_from, select_terms, ProxGraphError, TermSelector};
use crate::subcluster::doc_feature_vector;

use super::{derive_trc, ClusterRef, OverlayError, WebMap};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedDocument {
    pub doc_id: String,
    pub url: String,
    pub title: String,
    pub owner_peer: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub trc: String,
    pub cluster: ClusterRef,
    pub documents: Vec<RankedDocument>,
    pub related_clusters: Vec<ClusterRef>,
}

/// Maps a query to a cluster and ranks the cluster's documents by cosine
/// similarity between the query's feature vector and each document's.
///
/// A single-term query naming a registered TRC resolves directly. Otherwise
/// the TRC is derived on `peer_id`'s graph, or, when no peer is given, on
/// the first peer (by id) whose graph contains a query term.
pub fn resolve_query(
    map: &WebMap,
    provider: &EmbeddingProvider,
    selector: &TermSelector,
    query_text: &str,
    peer_id: Option<&str>,
) -> Result<QueryResult, OverlayError> {
    if let Some(id) = peer_id {
        map.peer(id)?;
    }
    let query = match select_terms("query", "", "", query_text, selector) {
        Ok(q) => q,
        Err(ProxGraphError::EmptyInput) => return Err(OverlayError::EmptyQuery),
        Err(e) => return Err(e.into()),
    };
    let terms = query.distinct_terms();
    if terms.is_empty() {
        return Err(OverlayError::NoMatch { suggestion: None });
    }

    let direct = match terms.iter().next() {
        Some(t) if terms.len() == 1 && map.registry.contains(t) => Some(t.to_string()),
        _ => None,
    };
    let trc = match direct {
        Some(t) => t,
        None => {
            let peer = match peer_id {
                Some(id) => map.peer(id)?,
                None => map
                    .peers
                    .values()
                    .find(|p| terms.iter().any(|t| p.graph.contains(t)))
                    .ok_or(OverlayError::NoMatch { suggestion: None })?,
            };
            let trc = match derive_trc(&peer.graph, &query) {
                Ok(t) => t,
                Err(OverlayError::NoAnchor) => {
                    return Err(OverlayError::NoMatch { suggestion: None })
                }
                Err(e) => return Err(e),
            };
            if !map.registry.contains(&trc) {
                let suggestion = distances_from(&peer.graph, &trc)
                    .into_iter()
                    .filter(|(t, _)| map.registry.contains(t))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
                    .map(|(t, _)| t);
                return Err(OverlayError::NoMatch { suggestion });
            }
            trc
        }
    };

    let at = map
        .registry
        .primary_host(&trc)
        .expect("registered trc has a host");
    let cluster = map.cluster(&at)?;
    let query_vec = doc_feature_vector(provider, &query)?.vector;
    let mut documents = Vec::with_capacity(cluster.doc_links.len());
    for link in &cluster.doc_links {
        let doc = map
            .peer(&link.owner_peer)?
            .documents
            .get(&link.doc_id)
            .ok_or_else(|| OverlayError::UnknownDocument(link.doc_id.clone()))?;
        let score = match doc_feature_vector(provider, doc) {
            Ok(fv) => cosine(&query_vec, &fv.vector)?,
            Err(crate::subcluster::SubclusterError::NoFeatures(_)) => -1.0,
            Err(e) => return Err(e.into()),
        };
        documents.push(RankedDocument {
            doc_id: link.doc_id.clone(),
            url: link.url.clone(),
            title: link.title.clone(),
            owner_peer: link.owner_peer.clone(),
            score,
        });
    }
    documents.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    Ok(QueryResult {
        trc,
        related_clusters: cluster.cluster_links.iter().cloned().collect(),
        cluster: at,
        documents,
    })
}
