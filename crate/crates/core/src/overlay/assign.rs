use std::collections::BTreeSet;

use serde::Serialize;

use crate::proxgraph::{shortest_path, Document, ProxGraphError};

use super::{
    derive_trc, ClusterRef, DocLink, OverlayError, OverlayRequest, OverlayResponse, WebMap,
};

/// What to do when no document term is in the local graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrcFallback {
    /// Propagate [`OverlayError::NoAnchor`].
    #[default]
    Fail,
    /// Use the document's most frequent term and mark the assignment degraded.
    MostFrequentTerm,
}

/// Outcome of placing one document on the overlay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub doc_id: String,
    pub trc: String,
    /// Cluster file the document link was attached to.
    pub cluster: ClusterRef,
    /// Clusters created for this document, the document's own first.
    pub created_clusters: Vec<String>,
    pub path_links_created: Vec<(String, String)>,
    /// A new cluster could not be connected to any existing one.
    pub isolated: bool,
    /// The TRC came from the most-frequent-term fallback.
    pub degraded: bool,
}

/// Result of connecting a new cluster to the existing overlay.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PathOutcome {
    pub path: Vec<String>,
    pub created: Vec<String>,
    pub links: Vec<(String, String)>,
    pub isolated: bool,
}

impl WebMap {
    /// Derives the TRC of `doc` on `peer_id`'s graph and attaches the document.
    ///
    /// An existing cluster (on the smallest hosting peer id) receives the
    /// link. Otherwise a cluster file is created locally, registered, and
    /// connected to the overlay along the shortest proximity-graph path.
    /// The document is stored on the peer.
    pub fn assign_document(
        &mut self,
        peer_id: &str,
        doc: Document,
        fallback: TrcFallback,
    ) -> Result<Assignment, OverlayError> {
        if self.document(&doc.id).is_some() {
            return Err(OverlayError::DuplicateDocument(doc.id));
        }
        let peer = self.peer(peer_id)?;
        let (trc, degraded) = match derive_trc(&peer.graph, &doc) {
            Ok(t) => (t, false),
            Err(OverlayError::NoAnchor) if fallback == TrcFallback::MostFrequentTerm => {
                let t = doc.most_frequent_term().ok_or(OverlayError::NoAnchor)?;
                (t.to_string(), true)
            }
            Err(e) => return Err(e),
        };
        let link = DocLink::for_document(&doc, peer_id);
        let doc_id = doc.id.clone();
        self.peer_mut(peer_id)?
            .documents
            .insert(doc_id.clone(), doc);

        let hosts = match self.handle(OverlayRequest::Lookup { trc: trc.clone() })? {
            OverlayResponse::Hosts(h) => h,
            OverlayResponse::Done(_) => unreachable!("lookup answers with hosts"),
        };
        if let Some(host) = hosts.into_iter().next() {
            let at = ClusterRef::new(&trc, host);
            self.handle(OverlayRequest::AttachDocument {
                at: at.clone(),
                link,
            })?;
            return Ok(Assignment {
                doc_id,
                trc,
                cluster: at,
                created_clusters: Vec::new(),
                path_links_created: Vec::new(),
                isolated: false,
                degraded,
            });
        }

        let at = ClusterRef::new(&trc, peer_id);
        self.handle(OverlayRequest::CreateCluster { at: at.clone() })?;
        self.handle(OverlayRequest::AttachDocument {
            at: at.clone(),
            link,
        })?;
        self.handle(OverlayRequest::Register {
            trc: trc.clone(),
            peer_id: peer_id.to_string(),
        })?;
        let path = self.create_cluster_path(peer_id, &trc)?;
        let mut created_clusters = vec![trc.clone()];
        created_clusters.extend(path.created);
        Ok(Assignment {
            doc_id,
            trc,
            cluster: at,
            created_clusters,
            path_links_created: path.links,
            isolated: path.isolated,
            degraded,
        })
    }

    /// Connects the freshly created cluster `new_trc` on `peer_id` to the
    /// nearest registered clusters present in the peer's graph, creating
    /// cluster files for intermediate path terms and linking consecutive
    /// path nodes both ways.
    pub fn create_cluster_path(
        &mut self,
        peer_id: &str,
        new_trc: &str,
    ) -> Result<PathOutcome, OverlayError> {
        let graph = &self.peer(peer_id)?.graph;
        if !graph.contains(new_trc) {
            return Ok(PathOutcome {
                isolated: true,
                ..PathOutcome::default()
            });
        }
        let sources: BTreeSet<String> = self
            .registry
            .trcs()
            .filter(|t| *t != new_trc && graph.contains(t))
            .map(str::to_string)
            .collect();
        if sources.is_empty() {
            return Ok(PathOutcome {
                isolated: true,
                ..PathOutcome::default()
            });
        }
        let path = match shortest_path(graph, &sources, new_trc) {
            Ok(p) => p.terms,
            Err(ProxGraphError::NotReachable(_)) => {
                return Ok(PathOutcome {
                    isolated: true,
                    ..PathOutcome::default()
                })
            }
            Err(e) => return Err(e.into()),
        };

        let mut created = Vec::new();
        let mut refs = Vec::with_capacity(path.len());
        for term in &path {
            let r = match self.registry.primary_host(term) {
                Some(r) => r,
                None => {
                    let at = ClusterRef::new(term, peer_id);
                    self.handle(OverlayRequest::CreateCluster { at: at.clone() })?;
                    self.handle(OverlayRequest::Register {
                        trc: term.clone(),
                        peer_id: peer_id.to_string(),
                    })?;
                    created.push(term.clone());
                    at
                }
            };
            refs.push(r);
        }
        let mut links = Vec::new();
        for pair in refs.windows(2) {
            if self.link_clusters(&pair[0], &pair[1])? {
                links.push((pair[0].trc.clone(), pair[1].trc.clone()));
            }
        }
        Ok(PathOutcome {
            path,
            created,
            links,
            isolated: false,
        })
    }
}
