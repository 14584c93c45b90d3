//! Semantic signposts inside a cluster.
//!
//! For every document a directed term association graph is built, and HITS
//! with association-weighted update rules
//!
//! ```text
//! a(x) = Σ_{v→x} h(v) · Assn(v → x)
//! h(x) = Σ_{x→w} a(w) · Assn(x → w)
//! ```
//!
//! ranks its terms: authorities are the document's keywords, hubs its
//! source topics. Document A links to document B when A's keywords cover
//! enough of B's source topics, and following those links traces a topic
//! back towards its origins.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine, EmbeddingError, EmbeddingProvider};
use crate::proxgraph::{averaged_embeddings, Document};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignpostError {
    #[error("unknown document {0:?}")]
    NotFound(String),
    #[error("invalid signpost config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignpostConfig {
    /// Number of top authorities/hubs compared between documents.
    pub k: usize,
    /// Minimum overlap score for a document link.
    pub theta: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Association strengths at or below this are dropped.
    pub d_min: f64,
}

impl Default for SignpostConfig {
    fn default() -> Self {
        Self {
            k: 10,
            theta: 0.3,
            tol: 1e-10,
            max_iter: 1000,
            d_min: 0.05,
        }
    }
}

impl SignpostConfig {
    pub fn validate(&self) -> Result<(), SignpostError> {
        let bad = |m: String| Err(SignpostError::InvalidConfig(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.d_min.is_finite() && self.d_min >= 0.0) {
            return bad(format!("d_min must be non-negative, got {}", self.d_min));
        }
        Ok(())
    }
}

/// Directed, document-specific term association graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermAssociationGraph {
    pub doc_id: String,
    pub nodes: BTreeSet<String>,
    /// `(from, to) → Assn(from → to)`, always positive.
    pub edges: BTreeMap<(String, String), f64>,
    /// The document had fewer than two distinct terms.
    pub insufficient_terms: bool,
}

impl TermAssociationGraph {
    pub fn new(doc_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            ..Self::default()
        }
    }

    /// Adds (or overwrites) a directed edge. Non-positive or self edges are ignored.
    pub fn add_edge(&mut self, from: &str, to: &str, assn: f64) {
        if from == to || !(assn.is_finite() && assn > 0.0) {
            return;
        }
        self.nodes.insert(from.to_string());
        self.nodes.insert(to.to_string());
        self.edges.insert((from.to_string(), to.to_string()), assn);
    }

    pub fn assn(&self, from: &str, to: &str) -> Option<f64> {
        self.edges.get(&(from.to_string(), to.to_string())).copied()
    }
}

/// Builds the association graph of `doc`.
///
/// For terms `a ≠ b` sharing at least one sentence,
/// `Assn(a→b) = max(0, cos(avg_a, avg_b)) · |S(a) ∩ S(b)| / |S(a)|`, where
/// `S(t)` is the set of sentences containing `t`. Edges with
/// `Assn ≤ d_min` are dropped.
pub fn build_term_association_graph(
    doc: &Document,
    provider: &EmbeddingProvider,
    d_min: f64,
) -> Result<TermAssociationGraph, SignpostError> {
    let mut graph = TermAssociationGraph::new(&doc.id);
    let sentences = doc.sentences_by_term();
    if sentences.len() < 2 {
        graph.insufficient_terms = true;
        return Ok(graph);
    }
    let averaged = averaged_embeddings(provider, doc)?;
    for (a, sa) in &sentences {
        for (b, sb) in &sentences {
            if a == b {
                continue;
            }
            let shared = sa.intersection(sb).count();
            if shared == 0 {
                continue;
            }
            let sim = cosine(&averaged[*a], &averaged[*b])?.max(0.0);
            let assn = sim * shared as f64 / sa.len() as f64;
            if assn > d_min {
                graph.add_edge(a, b, assn);
            }
        }
    }
    Ok(graph)
}

/// Authority and hub scores of one document's terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitsScores {
    pub authority: BTreeMap<String, f64>,
    pub hub: BTreeMap<String, f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// HITS with association-weighted update rules.
///
/// Scores start uniform. Each iteration recomputes all authorities from the
/// previous hubs, L2-normalizes them, then recomputes all hubs from the new
/// authorities and normalizes. Iteration stops once no component of either
/// vector moves by `tol` or more, or after `max_iter` rounds.
pub fn weighted_hits(g: &TermAssociationGraph, tol: f64, max_iter: usize) -> HitsScores {
    let terms: Vec<&String> = g.nodes.iter().collect();
    let n = terms.len();
    if g.edges.is_empty() {
        let zeros: BTreeMap<String, f64> = terms.iter().map(|t| ((*t).clone(), 0.0)).collect();
        return HitsScores {
            authority: zeros.clone(),
            hub: zeros,
            iterations: 0,
            converged: true,
        };
    }
    let index: BTreeMap<&str, usize> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let edges: Vec<(usize, usize, f64)> = g
        .edges
        .iter()
        .map(|((from, to), w)| (index[from.as_str()], index[to.as_str()], *w))
        .collect();

    let init = 1.0 / (n as f64).sqrt();
    let mut auth = vec![init; n];
    let mut hub = vec![init; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut next_auth = vec![0.0; n];
        for &(v, x, w) in &edges {
            next_auth[x] += hub[v] * w;
        }
        normalize(&mut next_auth);
        let mut next_hub = vec![0.0; n];
        for &(x, w_node, w) in &edges {
            next_hub[x] += next_auth[w_node] * w;
        }
        normalize(&mut next_hub);
        let delta = auth
            .iter()
            .zip(&next_auth)
            .chain(hub.iter().zip(&next_hub))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        auth = next_auth;
        hub = next_hub;
        iterations += 1;
        if delta < tol {
            converged = true;
            break;
        }
    }
    let collect = |v: &[f64]| -> BTreeMap<String, f64> {
        terms
            .iter()
            .zip(v)
            .map(|(t, s)| ((*t).clone(), *s))
            .collect()
    };
    HitsScores {
        authority: collect(&auth),
        hub: collect(&hub),
        iterations,
        converged,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTerm {
    pub term: String,
    pub score: f64,
}

fn top_k(scores: &BTreeMap<String, f64>, k: usize) -> Vec<ScoredTerm> {
    let mut v: Vec<ScoredTerm> = scores
        .iter()
        .filter(|(_, s)| **s > 0.0)
        .map(|(t, s)| ScoredTerm {
            term: t.clone(),
            score: *s,
        })
        .collect();
    v.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.term.cmp(&b.term))
    });
    v.truncate(k);
    v
}

/// Top-`k` authorities (keywords) and hubs (source topics), descending,
/// ties broken lexicographically. Zero-score terms are left out.
pub fn top_keywords_and_sources(
    scores: &HitsScores,
    k: usize,
) -> (Vec<ScoredTerm>, Vec<ScoredTerm>) {
    (top_k(&scores.authority, k), top_k(&scores.hub, k))
}

/// Directed link between two documents of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocLink {
    #[serde(rename = "from")]
    pub from_doc: String,
    #[serde(rename = "to")]
    pub to_doc: String,
    #[serde(rename = "overlap")]
    pub overlap_score: f64,
}

/// Links A → B when `|topK authorities(A) ∩ topK hubs(B)| / k ≥ theta`.
pub fn induce_document_links(
    per_doc_scores: &BTreeMap<String, HitsScores>,
    k: usize,
    theta: f64,
) -> Vec<DocLink> {
    let tops: BTreeMap<&str, (BTreeSet<String>, BTreeSet<String>)> = per_doc_scores
        .iter()
        .map(|(doc, s)| {
            let (auth, hubs) = top_keywords_and_sources(s, k);
            (
                doc.as_str(),
                (
                    auth.into_iter().map(|t| t.term).collect(),
                    hubs.into_iter().map(|t| t.term).collect(),
                ),
            )
        })
        .collect();
    let mut links = Vec::new();
    for (a, (auth_a, _)) in &tops {
        for (b, (_, hubs_b)) in &tops {
            if a == b {
                continue;
            }
            let overlap = auth_a.intersection(hubs_b).count() as f64 / k as f64;
            if overlap > 0.0 && overlap >= theta {
                links.push(DocLink {
                    from_doc: a.to_string(),
                    to_doc: b.to_string(),
                    overlap_score: overlap,
                });
            }
        }
    }
    links
}

/// Greedy walk along the strongest outgoing document link.
///
/// Stops after `max_depth` hops, at a document without outgoing links, or
/// before revisiting a document. The chain includes `start_doc`.
pub fn trace_topic(
    start_doc: &str,
    doc_links: &[DocLink],
    known_docs: &BTreeSet<String>,
    max_depth: usize,
) -> Result<Vec<String>, SignpostError> {
    if !known_docs.contains(start_doc) {
        return Err(SignpostError::NotFound(start_doc.to_string()));
    }
    let mut chain = vec![start_doc.to_string()];
    let mut visited: BTreeSet<&str> = BTreeSet::from([start_doc]);
    let mut current = start_doc;
    for _ in 0..max_depth {
        let next = doc_links
            .iter()
            .filter(|l| l.from_doc == current)
            .max_by(|a, b| {
                a.overlap_score
                    .total_cmp(&b.overlap_score)
                    .then_with(|| b.to_doc.cmp(&a.to_doc))
            });
        let Some(link) = next else { break };
        if !visited.insert(link.to_doc.as_str()) {
            break;
        }
        chain.push(link.to_doc.clone());
        current = link.to_doc.as_str();
    }
    Ok(chain)
}

/// Per-document signpost of one cluster: scores, keyword/source lists and
/// the induced document links.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSignpost {
    pub scores: BTreeMap<String, HitsScores>,
    pub links: Vec<DocLink>,
}

impl ClusterSignpost {
    pub fn compute<'a, I>(
        docs: I,
        provider: &EmbeddingProvider,
        cfg: &SignpostConfig,
    ) -> Result<Self, SignpostError>
    where
        I: IntoIterator<Item = &'a Document>,
    {
        let mut scores = BTreeMap::new();
        for doc in docs {
            let g = build_term_association_graph(doc, provider, cfg.d_min)?;
            scores.insert(doc.id.clone(), weighted_hits(&g, cfg.tol, cfg.max_iter));
        }
        let links = if scores.len() >= 2 {
            induce_document_links(&scores, cfg.k, cfg.theta)
        } else {
            Vec::new()
        };
        Ok(Self { scores, links })
    }
}
