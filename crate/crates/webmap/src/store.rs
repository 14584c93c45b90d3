//! On-disk layout of a populated data dir and its loader.
//!
//! ```text
//! <data_dir>/config.toml                       effective config snapshot
//! <data_dir>/peers/<peer>/graph.json           proximity graph
//! <data_dir>/peers/<peer>/documents.json       documents with selected terms
//! <data_dir>/clusters/<peer>/<trc>.json        cluster files
//! <data_dir>/signposts/<peer>/<trc>/<doc>.json keywords and source topics
//! <data_dir>/signposts/<peer>/<trc>/doclinks.json
//! ```
//!
//! Path segments are percent-encoded. Every JSON file ends in a newline.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use webmap_core::overlay::{ClusterFile, ClusterRef, Peer, WebMap};
use webmap_core::proxgraph::{Document, TermProximityGraph};
use webmap_core::signpost::{trace_topic, DocLink, ScoredTerm};

use crate::config::{EngineConfig, SNAPSHOT_FILE};
use crate::error::WebmapError;

pub const PEERS_DIR: &str = "peers";
pub const CLUSTERS_DIR: &str = "clusters";
pub const SIGNPOSTS_DIR: &str = "signposts";
pub const DOCLINKS_FILE: &str = "doclinks.json";

const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_');

/// Percent-encodes a term, peer or document id for use as a path segment.
pub fn encode_segment(s: &str) -> String {
    utf8_percent_encode(s, SEGMENT).to_string()
}

pub fn decode_segment(s: &str) -> String {
    percent_decode_str(s).decode_utf8_lossy().into_owned()
}

/// Keywords (authorities) and source topics (hubs) of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocSignpost {
    pub doc_id: String,
    pub authorities: Vec<ScoredTerm>,
    pub hubs: Vec<ScoredTerm>,
}

/// Signpost data of one cluster file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterSignposts {
    pub docs: BTreeMap<String, DocSignpost>,
    pub links: Vec<DocLink>,
}

/// Everything a populated data dir holds.
#[derive(Debug, Clone, Default)]
pub struct Store {
    pub config: EngineConfig,
    pub map: WebMap,
    pub signposts: BTreeMap<ClusterRef, ClusterSignposts>,
}

pub fn cluster_path(data_dir: &Path, at: &ClusterRef) -> PathBuf {
    data_dir
        .join(CLUSTERS_DIR)
        .join(encode_segment(&at.peer_id))
        .join(format!("{}.json", encode_segment(&at.trc)))
}

pub fn signpost_dir(data_dir: &Path, at: &ClusterRef) -> PathBuf {
    data_dir
        .join(SIGNPOSTS_DIR)
        .join(encode_segment(&at.peer_id))
        .join(encode_segment(&at.trc))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), WebmapError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(WebmapError::io(dir))?;
    }
    let mut body = serde_json::to_string_pretty(value).expect("store values serialize");
    body.push('\n');
    fs::write(path, body).map_err(WebmapError::io(path))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, WebmapError> {
    let body = fs::read_to_string(path).map_err(WebmapError::io(path))?;
    serde_json::from_str(&body).map_err(|e| WebmapError::Store {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes one cluster's signpost files into `dir`, replacing what was there.
pub fn write_signposts(dir: &Path, signposts: &ClusterSignposts) -> Result<(), WebmapError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(WebmapError::io(dir))?;
    }
    fs::create_dir_all(dir).map_err(WebmapError::io(dir))?;
    for (doc_id, sp) in &signposts.docs {
        write_json(&dir.join(format!("{}.json", encode_segment(doc_id))), sp)?;
    }
    write_json(&dir.join(DOCLINKS_FILE), &signposts.links)
}

impl Store {
    /// Replaces the managed parts of `data_dir` with this store's contents.
    /// A store without documents or clusters leaves only the config snapshot.
    pub fn save(&self, data_dir: &Path) -> Result<(), WebmapError> {
        fs::create_dir_all(data_dir).map_err(WebmapError::io(data_dir))?;
        for sub in [PEERS_DIR, CLUSTERS_DIR, SIGNPOSTS_DIR] {
            let p = data_dir.join(sub);
            if p.exists() {
                fs::remove_dir_all(&p).map_err(WebmapError::io(&p))?;
            }
        }
        let snapshot = data_dir.join(SNAPSHOT_FILE);
        fs::write(&snapshot, snapshot_toml(&self.config)).map_err(WebmapError::io(&snapshot))?;

        for peer in self.map.peers.values() {
            if peer.documents.is_empty() && peer.graph.node_count() == 0 {
                continue;
            }
            let dir = data_dir.join(PEERS_DIR).join(encode_segment(&peer.peer_id));
            write_json(&dir.join("graph.json"), &peer.graph)?;
            let docs: Vec<&Document> = peer.documents.values().collect();
            write_json(&dir.join("documents.json"), &docs)?;
        }
        for (at, cf) in self.map.clusters() {
            write_json(&cluster_path(data_dir, &at), cf)?;
        }
        for (at, sp) in &self.signposts {
            write_signposts(&signpost_dir(data_dir, at), sp)?;
        }
        Ok(())
    }

    /// Loads a data dir written by [`Store::save`] and checks the overlay
    /// invariants.
    pub fn load(data_dir: &Path) -> Result<Self, WebmapError> {
        let snapshot = data_dir.join(SNAPSHOT_FILE);
        if !snapshot.is_file() {
            return Err(WebmapError::EmptyStore(data_dir.to_path_buf()));
        }
        let mut config = EngineConfig::load(&snapshot)?;
        config.base_dir = data_dir.to_path_buf();
        config.data_dir = PathBuf::from(".");

        let mut map = WebMap::new();
        for (peer_id, dir) in subdirs(&data_dir.join(PEERS_DIR))? {
            let mut peer = Peer::new(peer_id);
            peer.graph = read_json::<TermProximityGraph>(&dir.join("graph.json"))?;
            let docs: Vec<Document> = read_json(&dir.join("documents.json"))?;
            peer.documents = docs.into_iter().map(|d| (d.id.clone(), d)).collect();
            map.add_peer(peer)?;
        }
        for (peer_id, dir) in subdirs(&data_dir.join(CLUSTERS_DIR))? {
            if !map.peers.contains_key(&peer_id) {
                map.add_peer(Peer::new(peer_id.clone()))?;
            }
            for file in json_files(&dir)? {
                let cf: ClusterFile = read_json(&file)?;
                let stem = file
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                if decode_segment(&stem) != cf.trc {
                    return Err(WebmapError::Store {
                        path: file,
                        message: format!("file name does not match trc {:?}", cf.trc),
                    });
                }
                map.registry.register(&cf.trc, &peer_id);
                map.peer_mut(&peer_id)?
                    .cluster_files
                    .insert(cf.trc.clone(), cf);
            }
        }
        map.check_invariants().map_err(|e| WebmapError::Store {
            path: data_dir.join(CLUSTERS_DIR),
            message: e.to_string(),
        })?;

        let mut signposts = BTreeMap::new();
        for (peer_id, peer_dir) in subdirs(&data_dir.join(SIGNPOSTS_DIR))? {
            for (trc, dir) in subdirs(&peer_dir)? {
                let mut sp = ClusterSignposts::default();
                for file in json_files(&dir)? {
                    if file.file_name().is_some_and(|n| n == DOCLINKS_FILE) {
                        sp.links = read_json(&file)?;
                    } else {
                        let d: DocSignpost = read_json(&file)?;
                        sp.docs.insert(d.doc_id.clone(), d);
                    }
                }
                signposts.insert(ClusterRef::new(trc, peer_id.clone()), sp);
            }
        }
        Ok(Self {
            config,
            map,
            signposts,
        })
    }

    /// Cluster holding `doc_id` and its signpost data.
    pub fn doc_signpost(
        &self,
        doc_id: &str,
    ) -> Result<(ClusterRef, &ClusterSignposts), WebmapError> {
        let at = self
            .map
            .cluster_of(doc_id)
            .ok_or_else(|| WebmapError::UnknownDocument(doc_id.to_string()))?;
        let sp = self
            .signposts
            .get(&at)
            .ok_or_else(|| WebmapError::UnknownDocument(doc_id.to_string()))?;
        Ok((at, sp))
    }

    /// Follows the strongest document links from `doc_id` inside its cluster.
    pub fn trace(&self, doc_id: &str, depth: usize) -> Result<Trace, WebmapError> {
        let (cluster, sp) = self.doc_signpost(doc_id)?;
        let known: BTreeSet<String> = self
            .map
            .cluster(&cluster)?
            .doc_ids()
            .map(str::to_string)
            .collect();
        let chain = trace_topic(doc_id, &sp.links, &known, depth)?;
        let hops = chain
            .windows(2)
            .map(|w| {
                sp.links
                    .iter()
                    .find(|l| l.from_doc == w[0] && l.to_doc == w[1])
                    .cloned()
                    .expect("chain follows existing links")
            })
            .collect();
        Ok(Trace {
            doc_id: doc_id.to_string(),
            depth,
            cluster,
            chain,
            hops,
        })
    }

    /// Resolves a cluster by TRC, preferring `peer_id` when given and the
    /// canonical host otherwise.
    pub fn cluster_ref(&self, trc: &str, peer_id: Option<&str>) -> Result<ClusterRef, WebmapError> {
        let hosts = self.map.lookup_cluster(trc);
        let host = match peer_id {
            Some(p) => hosts.get(p).cloned(),
            None => hosts.into_iter().next(),
        };
        host.map(|p| ClusterRef::new(trc, p))
            .ok_or_else(|| WebmapError::UnknownCluster(trc.to_string()))
    }
}

/// Result of following a topic back through document links.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub doc_id: String,
    pub depth: usize,
    pub cluster: ClusterRef,
    pub chain: Vec<String>,
    pub hops: Vec<DocLink>,
}

/// Config snapshot with `data_dir = "."` and all other paths made absolute,
/// so the snapshot loads from inside the data dir.
fn snapshot_toml(cfg: &EngineConfig) -> String {
    let mut snap = cfg.clone();
    snap.data_dir = PathBuf::from(".");
    if let Some(p) = &cfg.embedding.vector_file {
        snap.embedding.vector_file = Some(absolute(&cfg.resolve(p)));
    }
    if let Some(p) = &cfg.selector.allowlist_file {
        snap.selector.allowlist_file = Some(absolute(&cfg.resolve(p)));
    }
    snap.to_toml()
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>, WebmapError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out: Vec<(String, PathBuf)> = fs::read_dir(dir)
        .map_err(WebmapError::io(dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .map(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            (decode_segment(&name), p)
        })
        .collect();
    out.sort();
    Ok(out)
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, WebmapError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(WebmapError::io(dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}
