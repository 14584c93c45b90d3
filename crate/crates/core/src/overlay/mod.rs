//! The overlay: cluster files hosted by simulated peers.
//!
//! Each cluster file is named by a TRC and carries two link sets, one to
//! its documents and one to related cluster files. Cluster links are always
//! stored on both ends. Peers talk to each other and to the registry only
//! through [`OverlayRequest`] messages handled by [`WebMap::handle`], which
//! is the seam a networked transport would replace.

mod assign;
mod query;
mod trc;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingError;
use crate::proxgraph::{Document, ProxGraphError, TermProximityGraph};
use crate::subcluster::{SubclusterError, SubclusterRecord};

pub use assign::{Assignment, PathOutcome, TrcFallback};
pub use query::{resolve_query, QueryResult, RankedDocument};
pub use trc::{derive_trc, trc_scores};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverlayError {
    #[error("none of the document's terms is in the proximity graph")]
    NoAnchor,
    #[error("cannot link cluster {0:?} to itself")]
    SelfLink(ClusterRef),
    #[error("unknown peer {0:?}")]
    UnknownPeer(String),
    #[error("peer {0:?} already exists")]
    DuplicatePeer(String),
    #[error("no cluster file {trc:?} on peer {peer_id:?}")]
    UnknownCluster { trc: String, peer_id: String },
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
    #[error("document {0:?} is already ingested")]
    DuplicateDocument(String),
    #[error(
        "no cluster matches the query{}",
        suggestion.as_ref().map(|s| format!("; nearest cluster is `{s}`")).unwrap_or_default()
    )]
    NoMatch { suggestion: Option<String> },
    #[error("empty query")]
    EmptyQuery,
    #[error("overlay invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Graph(#[from] ProxGraphError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Subcluster(#[from] SubclusterError),
}

/// Link from a cluster file to one of its documents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocLink {
    pub doc_id: String,
    pub url: String,
    pub title: String,
    pub owner_peer: String,
}

impl DocLink {
    pub fn for_document(doc: &Document, owner_peer: &str) -> Self {
        Self {
            doc_id: doc.id.clone(),
            url: doc.url.clone(),
            title: doc.title.clone(),
            owner_peer: owner_peer.to_string(),
        }
    }
}

/// Address of a cluster file: its TRC and hosting peer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRef {
    pub trc: String,
    pub peer_id: String,
}

impl ClusterRef {
    pub fn new(trc: impl Into<String>, peer_id: impl Into<String>) -> Self {
        Self {
            trc: trc.into(),
            peer_id: peer_id.into(),
        }
    }
}

/// A node of the overlay.
///
/// On disk: `{"trc", "docs": [...], "links": [...], "subclusters": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterFile {
    pub trc: String,
    #[serde(rename = "docs")]
    pub doc_links: BTreeSet<DocLink>,
    #[serde(rename = "links")]
    pub cluster_links: BTreeSet<ClusterRef>,
    pub subclusters: Vec<SubclusterRecord>,
}

impl ClusterFile {
    pub fn new(trc: impl Into<String>) -> Self {
        Self {
            trc: trc.into(),
            doc_links: BTreeSet::new(),
            cluster_links: BTreeSet::new(),
            subclusters: Vec::new(),
        }
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.doc_links.iter().map(|d| d.doc_id.as_str())
    }
}

/// A simulated web server.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Peer {
    pub peer_id: String,
    pub graph: TermProximityGraph,
    pub documents: BTreeMap<String, Document>,
    pub cluster_files: BTreeMap<String, ClusterFile>,
}

impl Peer {
    pub fn new(peer_id: impl Into<String>) -> Self {
        Self {
            peer_id: peer_id.into(),
            ..Self::default()
        }
    }
}

/// Global TRC → hosting peers directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl Registry {
    pub fn lookup(&self, trc: &str) -> BTreeSet<String> {
        self.entries.get(trc).cloned().unwrap_or_default()
    }

    pub fn register(&mut self, trc: &str, peer_id: &str) {
        self.entries
            .entry(trc.to_string())
            .or_default()
            .insert(peer_id.to_string());
    }

    pub fn unregister(&mut self, trc: &str, peer_id: &str) {
        if let Some(set) = self.entries.get_mut(trc) {
            set.remove(peer_id);
            if set.is_empty() {
                self.entries.remove(trc);
            }
        }
    }

    pub fn contains(&self, trc: &str) -> bool {
        self.entries.contains_key(trc)
    }

    pub fn trcs(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Canonical host: the lexicographically smallest peer id.
    pub fn primary_host(&self, trc: &str) -> Option<ClusterRef> {
        self.entries
            .get(trc)
            .and_then(|s| s.iter().next())
            .map(|p| ClusterRef::new(trc, p.clone()))
    }
}

/// Requests exchanged between peers and the registry.
#[derive(Debug, Clone, PartialEq)]
pub enum OverlayRequest {
    Lookup { trc: String },
    Register { trc: String, peer_id: String },
    Unregister { trc: String, peer_id: String },
    CreateCluster { at: ClusterRef },
    AttachDocument { at: ClusterRef, link: DocLink },
    AddClusterLink { at: ClusterRef, to: ClusterRef },
}

#[derive(Debug, Clone, PartialEq)]
pub enum OverlayResponse {
    Hosts(BTreeSet<String>),
    /// Whether the request changed state.
    Done(bool),
}

/// All peers plus the registry, mutated by one logical writer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WebMap {
    pub peers: BTreeMap<String, Peer>,
    pub registry: Registry,
}

impl WebMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_peer(&mut self, peer: Peer) -> Result<(), OverlayError> {
        if self.peers.contains_key(&peer.peer_id) {
            return Err(OverlayError::DuplicatePeer(peer.peer_id));
        }
        self.peers.insert(peer.peer_id.clone(), peer);
        Ok(())
    }

    pub fn peer(&self, peer_id: &str) -> Result<&Peer, OverlayError> {
        self.peers
            .get(peer_id)
            .ok_or_else(|| OverlayError::UnknownPeer(peer_id.to_string()))
    }

    pub fn peer_mut(&mut self, peer_id: &str) -> Result<&mut Peer, OverlayError> {
        self.peers
            .get_mut(peer_id)
            .ok_or_else(|| OverlayError::UnknownPeer(peer_id.to_string()))
    }

    pub fn cluster(&self, at: &ClusterRef) -> Result<&ClusterFile, OverlayError> {
        self.peer(&at.peer_id)?
            .cluster_files
            .get(&at.trc)
            .ok_or_else(|| OverlayError::UnknownCluster {
                trc: at.trc.clone(),
                peer_id: at.peer_id.clone(),
            })
    }

    pub fn cluster_mut(&mut self, at: &ClusterRef) -> Result<&mut ClusterFile, OverlayError> {
        self.peer_mut(&at.peer_id)?
            .cluster_files
            .get_mut(&at.trc)
            .ok_or_else(|| OverlayError::UnknownCluster {
                trc: at.trc.clone(),
                peer_id: at.peer_id.clone(),
            })
    }

    /// Every cluster file, ordered by (peer, trc).
    pub fn clusters(&self) -> impl Iterator<Item = (ClusterRef, &ClusterFile)> {
        self.peers.values().flat_map(|p| {
            p.cluster_files
                .iter()
                .map(move |(trc, cf)| (ClusterRef::new(trc.clone(), p.peer_id.clone()), cf))
        })
    }

    /// Finds a document on any peer.
    pub fn document(&self, doc_id: &str) -> Option<(&str, &Document)> {
        self.peers
            .values()
            .find_map(|p| p.documents.get(doc_id).map(|d| (p.peer_id.as_str(), d)))
    }

    /// The cluster file holding a document link.
    pub fn cluster_of(&self, doc_id: &str) -> Option<ClusterRef> {
        self.clusters()
            .find(|(_, cf)| cf.doc_ids().any(|d| d == doc_id))
            .map(|(r, _)| r)
    }

    pub fn lookup_cluster(&self, trc: &str) -> BTreeSet<String> {
        self.registry.lookup(trc)
    }

    /// Executes one overlay request.
    pub fn handle(&mut self, req: OverlayRequest) -> Result<OverlayResponse, OverlayError> {
        match req {
            OverlayRequest::Lookup { trc } => {
                Ok(OverlayResponse::Hosts(self.registry.lookup(&trc)))
            }
            OverlayRequest::Register { trc, peer_id } => {
                self.cluster(&ClusterRef::new(&trc, &peer_id))?;
                let fresh = !self.registry.lookup(&trc).contains(&peer_id);
                self.registry.register(&trc, &peer_id);
                Ok(OverlayResponse::Done(fresh))
            }
            OverlayRequest::Unregister { trc, peer_id } => {
                let present = self.registry.lookup(&trc).contains(&peer_id);
                self.registry.unregister(&trc, &peer_id);
                Ok(OverlayResponse::Done(present))
            }
            OverlayRequest::CreateCluster { at } => {
                let peer = self.peer_mut(&at.peer_id)?;
                if peer.cluster_files.contains_key(&at.trc) {
                    return Ok(OverlayResponse::Done(false));
                }
                peer.cluster_files
                    .insert(at.trc.clone(), ClusterFile::new(at.trc.clone()));
                Ok(OverlayResponse::Done(true))
            }
            OverlayRequest::AttachDocument { at, link } => {
                let inserted = self.cluster_mut(&at)?.doc_links.insert(link);
                Ok(OverlayResponse::Done(inserted))
            }
            OverlayRequest::AddClusterLink { at, to } => {
                if at == to {
                    return Err(OverlayError::SelfLink(at));
                }
                let inserted = self.cluster_mut(&at)?.cluster_links.insert(to);
                Ok(OverlayResponse::Done(inserted))
            }
        }
    }

    /// Links two cluster files in both directions. Returns whether either side changed.
    pub fn link_clusters(&mut self, a: &ClusterRef, b: &ClusterRef) -> Result<bool, OverlayError> {
        if a == b {
            return Err(OverlayError::SelfLink(a.clone()));
        }
        // Validate both ends before mutating either.
        self.cluster(a)?;
        self.cluster(b)?;
        let forward = self.handle(OverlayRequest::AddClusterLink {
            at: a.clone(),
            to: b.clone(),
        })?;
        let backward = self.handle(OverlayRequest::AddClusterLink {
            at: b.clone(),
            to: a.clone(),
        })?;
        Ok(forward == OverlayResponse::Done(true) || backward == OverlayResponse::Done(true))
    }

    /// Checks link symmetry, registry consistency and single document membership.
    pub fn check_invariants(&self) -> Result<(), OverlayError> {
        let fail = |m: String| Err(OverlayError::Invariant(m));
        let mut seen_docs: BTreeMap<&str, ClusterRef> = BTreeMap::new();
        for (at, cf) in self.clusters() {
            if cf.trc != at.trc {
                return fail(format!("cluster file {at:?} carries trc {:?}", cf.trc));
            }
            for to in &cf.cluster_links {
                if *to == at {
                    return fail(format!("{at:?} links to itself"));
                }
                match self.cluster(to) {
                    Ok(other) if other.cluster_links.contains(&at) => {}
                    Ok(_) => return fail(format!("{at:?} -> {to:?} has no back link")),
                    Err(_) => return fail(format!("{at:?} links to missing {to:?}")),
                }
            }
            if !self.registry.lookup(&at.trc).contains(&at.peer_id) {
                return fail(format!("{at:?} is not registered"));
            }
            for d in cf.doc_ids() {
                if let Some(prev) = seen_docs.insert(d, at.clone()) {
                    return fail(format!("document {d:?} is in both {prev:?} and {at:?}"));
                }
            }
        }
        for (trc, hosts) in self.registry.entries() {
            for p in hosts {
                if self.cluster(&ClusterRef::new(trc, p.clone())).is_err() {
                    return fail(format!("registry entry {trc:?}@{p:?} has no cluster file"));
                }
            }
        }
        Ok(())
    }
}
