//! Ingestion pipeline: corpus → proximity graphs → cluster assignment →
//! signposts and subclusters → data dir.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use webmap_core::embedding::EmbeddingProvider;
use webmap_core::overlay::{Assignment, ClusterFile, ClusterRef, Peer, WebMap};
use webmap_core::proxgraph::{compute_pairs, select_terms, Document, TermSelector};
use webmap_core::signpost::{top_keywords_and_sources, ClusterSignpost};
use webmap_core::subcluster::{
    attach_subclusters, doc_feature_vector, find_subclusters, median_pairwise_distance,
    FeatureVector, SubclusterOutcome,
};

use crate::config::EngineConfig;
use crate::corpus::{load_corpus, CorpusRecord};
use crate::error::WebmapError;
use crate::store::{ClusterSignposts, DocSignpost, Store};

/// Bandwidth used when the median pairwise distance is undefined or zero.
pub const FALLBACK_BANDWIDTH: f64 = 1.0;

/// A problem that skipped one file, line or document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestIssue {
    pub peer_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub documents: usize,
    pub clusters_created: usize,
    /// Bidirectional cluster links, counted once per pair.
    pub links_created: usize,
    /// Documents queued for re-clustering.
    pub outliers: usize,
    pub degraded: usize,
    pub isolated: usize,
    pub errors: Vec<IngestIssue>,
    /// One entry per placed document, in ingestion order.
    pub assignments: Vec<Assignment>,
}

/// Builds the overlay from the configured corpora. Per-file and
/// per-document problems are recorded in the report; nothing is written.
pub fn build(config: &EngineConfig) -> Result<(Store, IngestReport), WebmapError> {
    config.validate()?;
    let provider = config.provider()?;
    let selector = config.selector()?;
    let mut report = IngestReport::default();
    let mut map = WebMap::new();
    let mut seen_ids = BTreeSet::new();

    for peer_cfg in &config.peers {
        map.add_peer(Peer::new(peer_cfg.peer_id.clone()))?;
        let load = load_corpus(&config.base_dir, &peer_cfg.corpus);
        let issue = |message: String| IngestIssue {
            peer_id: peer_cfg.peer_id.clone(),
            message,
        };
        report
            .errors
            .extend(load.errors.iter().map(|e| issue(e.to_string())));

        let mut docs = Vec::new();
        for rec in load.records {
            if !seen_ids.insert(rec.id.clone()) {
                report
                    .errors
                    .push(issue(format!("duplicate document id {:?}", rec.id)));
                continue;
            }
            match prepare(&rec, &selector) {
                Ok(doc) => docs.push(doc),
                Err(m) => report.errors.push(issue(m)),
            }
        }

        // The whole local graph is built before any TRC is derived.
        let peer = map.peer_mut(&peer_cfg.peer_id)?;
        let mut placed = Vec::with_capacity(docs.len());
        for doc in docs {
            match compute_pairs(config.proxgraph.approach, &provider, &doc) {
                Ok(pairs) => {
                    peer.graph.update(&pairs, &config.proxgraph);
                    placed.push(doc);
                }
                Err(e) => report
                    .errors
                    .push(issue(format!("document {:?}: {e}", doc.id))),
            }
        }
        for doc in placed {
            let id = doc.id.clone();
            match map.assign_document(&peer_cfg.peer_id, doc, config.overlay.trc_fallback.into()) {
                Ok(a) => {
                    report.documents += 1;
                    report.clusters_created += a.created_clusters.len();
                    report.links_created += a.path_links_created.len();
                    report.degraded += usize::from(a.degraded);
                    report.isolated += usize::from(a.isolated);
                    report.assignments.push(a);
                }
                Err(e) => report.errors.push(issue(format!("document {id:?}: {e}"))),
            }
        }
    }
    map.check_invariants()?;

    let mut store = Store {
        config: config.clone(),
        map,
        signposts: BTreeMap::new(),
    };
    let refs: Vec<ClusterRef> = store.map.clusters().map(|(r, _)| r).collect();
    for at in refs {
        let sp = cluster_signposts(&store.map, &at, &provider, config)?;
        store.signposts.insert(at.clone(), sp);
        let outcome = recluster(&mut store.map, &at, &provider, config)?;
        report.outliers += outcome.reclustering_queue.len();
    }
    Ok((store, report))
}

/// Runs [`build`] and persists the result under the configured data dir.
pub fn ingest(config: &EngineConfig) -> Result<IngestReport, WebmapError> {
    let (store, report) = build(config)?;
    store.save(&config.data_dir())?;
    Ok(report)
}

fn prepare(rec: &CorpusRecord, selector: &TermSelector) -> Result<Document, String> {
    let doc = select_terms(&rec.id, &rec.url, &rec.title, &rec.text, selector)
        .map_err(|e| format!("document {:?}: {e}", rec.id))?;
    if doc.selected_terms.is_empty() {
        return Err(format!("document {:?}: no terms selected", rec.id));
    }
    Ok(doc)
}

fn cluster_docs<'a>(map: &'a WebMap, cf: &ClusterFile) -> Result<Vec<&'a Document>, WebmapError> {
    cf.doc_links
        .iter()
        .map(|l| {
            map.peer(&l.owner_peer)?
                .documents
                .get(&l.doc_id)
                .ok_or_else(|| WebmapError::UnknownDocument(l.doc_id.clone()))
        })
        .collect()
}

/// Keywords, source topics and document links of one cluster.
pub fn cluster_signposts(
    map: &WebMap,
    at: &ClusterRef,
    provider: &EmbeddingProvider,
    config: &EngineConfig,
) -> Result<ClusterSignposts, WebmapError> {
    let docs = cluster_docs(map, map.cluster(at)?)?;
    let computed = ClusterSignpost::compute(docs, provider, &config.signpost)?;
    let docs = computed
        .scores
        .iter()
        .map(|(id, scores)| {
            let (authorities, hubs) = top_keywords_and_sources(scores, config.signpost.k);
            (
                id.clone(),
                DocSignpost {
                    doc_id: id.clone(),
                    authorities,
                    hubs,
                },
            )
        })
        .collect();
    Ok(ClusterSignposts {
        docs,
        links: computed.links,
    })
}

/// Feature vectors of a cluster's documents, sorted by id.
pub fn cluster_features(
    map: &WebMap,
    at: &ClusterRef,
    provider: &EmbeddingProvider,
) -> Result<Vec<FeatureVector>, WebmapError> {
    cluster_docs(map, map.cluster(at)?)?
        .into_iter()
        .map(|d| doc_feature_vector(provider, d).map_err(WebmapError::from))
        .collect()
}

/// Configured bandwidth, or the median pairwise distance of `points`.
pub fn bandwidth(config: &EngineConfig, points: &[FeatureVector]) -> f64 {
    config.meanshift.h.unwrap_or_else(|| {
        median_pairwise_distance(points)
            .filter(|h| *h > 0.0)
            .unwrap_or(FALLBACK_BANDWIDTH)
    })
}

/// Re-runs subcluster detection on one cluster file and stores the records.
pub fn recluster(
    map: &mut WebMap,
    at: &ClusterRef,
    provider: &EmbeddingProvider,
    config: &EngineConfig,
) -> Result<SubclusterOutcome, WebmapError> {
    let points = cluster_features(map, at, provider)?;
    let h = bandwidth(config, &points);
    tracing::info!(trc = %at.trc, peer = %at.peer_id, docs = points.len(), h, "mean-shift bandwidth");
    let outcome = find_subclusters(&points, &config.meanshift.with_bandwidth(h))?;
    attach_subclusters(map.cluster_mut(at)?, outcome.records.clone())?;
    Ok(outcome)
}
