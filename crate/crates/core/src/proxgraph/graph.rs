use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::{Approach, ProxGraphError, SimilarityPair};

/// Number of past similarity observations an edge keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HistoryCap {
    #[default]
    Unbounded,
    /// Sliding window over the most recent `n` observations (n ≥ 1).
    Recent(usize),
}

impl Serialize for HistoryCap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            HistoryCap::Unbounded => s.serialize_str("unbounded"),
            HistoryCap::Recent(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for HistoryCap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct CapVisitor;
        impl Visitor<'_> for CapVisitor {
            type Value = HistoryCap;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive integer or \"unbounded\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<HistoryCap, E> {
                if v == 0 {
                    return Err(E::custom("history cap must be positive"));
                }
                Ok(HistoryCap::Recent(v as usize))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<HistoryCap, E> {
                if v <= 0 {
                    return Err(E::custom("history cap must be positive"));
                }
                Ok(HistoryCap::Recent(v as usize))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<HistoryCap, E> {
                if v == "unbounded" {
                    Ok(HistoryCap::Unbounded)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(CapVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxGraphConfig {
    /// Creation threshold `s`: a new edge needs similarity strictly above it.
    pub s: f64,
    /// History cap `t`.
    #[serde(default)]
    pub t: HistoryCap,
    pub approach: Approach,
}

impl ProxGraphConfig {
    pub fn new(s: f64, t: HistoryCap, approach: Approach) -> Result<Self, ProxGraphError> {
        let cfg = Self { s, t, approach };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ProxGraphError> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(ProxGraphError::InvalidConfig(format!(
                "s must lie in (0, 1), got {}",
                self.s
            )));
        }
        if self.t == HistoryCap::Recent(0) {
            return Err(ProxGraphError::InvalidConfig("t must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub weight: f64,
    /// Similarity observations, most recent last.
    pub history: Vec<f64>,
}

impl EdgeRecord {
    fn observe(&mut self, similarity: f64, cap: HistoryCap) {
        self.history.push(similarity);
        if let HistoryCap::Recent(n) = cap {
            if self.history.len() > n {
                let excess = self.history.len() - n;
                self.history.drain(..excess);
            }
        }
        self.weight = self.history.iter().sum::<f64>() / self.history.len() as f64;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct UpdateReport {
    pub edges_added: usize,
    pub edges_updated: usize,
    pub pairs_rejected: usize,
}

impl std::ops::AddAssign for UpdateReport {
    fn add_assign(&mut self, rhs: Self) {
        self.edges_added += rhs.edges_added;
        self.edges_updated += rhs.edges_updated;
        self.pairs_rejected += rhs.pairs_rejected;
    }
}

fn canonical<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Undirected weighted term graph of one peer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermProximityGraph {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), EdgeRecord>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
}

impl TermProximityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn contains(&self, term: &str) -> bool {
        self.nodes.contains(term)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge lookup in either orientation.
    pub fn edge(&self, a: &str, b: &str) -> Option<&EdgeRecord> {
        let (x, y) = canonical(a, b);
        self.edges.get(&(x.to_string(), y.to_string()))
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.edge(a, b).map(|e| e.weight)
    }

    /// Edges with the lexicographically smaller term first.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &EdgeRecord)> {
        self.edges
            .iter()
            .map(|((a, b), e)| (a.as_str(), b.as_str(), e))
    }

    pub fn neighbors<'a>(&'a self, term: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.adjacency
            .get(term)
            .into_iter()
            .flatten()
            .map(move |n| (n.as_str(), self.weight(term, n).unwrap_or(0.0)))
    }

    pub fn degree(&self, term: &str) -> usize {
        self.adjacency.get(term).map_or(0, BTreeSet::len)
    }

    fn insert_edge(&mut self, a: &str, b: &str, record: EdgeRecord) {
        let (x, y) = canonical(a, b);
        self.nodes.insert(x.to_string());
        self.nodes.insert(y.to_string());
        self.adjacency
            .entry(x.to_string())
            .or_default()
            .insert(y.to_string());
        self.adjacency
            .entry(y.to_string())
            .or_default()
            .insert(x.to_string());
        self.edges.insert((x.to_string(), y.to_string()), record);
    }

    /// Applies similarity observations.
    ///
    /// An existing edge appends the observation to its history (trimmed to
    /// the cap) and takes the history mean as weight, which may fall below
    /// `s`. A missing edge is created only when the similarity exceeds `s`.
    pub fn update(&mut self, pairs: &[SimilarityPair], cfg: &ProxGraphConfig) -> UpdateReport {
        let mut report = UpdateReport::default();
        for pair in pairs {
            if pair.term_a == pair.term_b || !pair.similarity.is_finite() {
                report.pairs_rejected += 1;
                continue;
            }
            let (x, y) = canonical(&pair.term_a, &pair.term_b);
            let key = (x.to_string(), y.to_string());
            if let Some(edge) = self.edges.get_mut(&key) {
                edge.observe(pair.similarity, cfg.t);
                report.edges_updated += 1;
            } else if pair.similarity > cfg.s {
                self.insert_edge(
                    x,
                    y,
                    EdgeRecord {
                        weight: pair.similarity,
                        history: vec![pair.similarity],
                    },
                );
                report.edges_added += 1;
            } else {
                report.pairs_rejected += 1;
            }
        }
        report
    }

    pub fn to_persisted(&self) -> PersistedGraph {
        PersistedGraph {
            nodes: self.nodes.iter().cloned().collect(),
            edges: self
                .edges
                .iter()
                .map(|((a, b), e)| PersistedEdge {
                    a: a.clone(),
                    b: b.clone(),
                    weight: e.weight,
                    history: e.history.clone(),
                })
                .collect(),
        }
    }

    pub fn from_persisted(p: PersistedGraph) -> Result<Self, ProxGraphError> {
        let mut g = TermProximityGraph::new();
        for n in p.nodes {
            g.nodes.insert(n);
        }
        for e in p.edges {
            if e.a == e.b {
                return Err(ProxGraphError::InvalidGraph(format!(
                    "self-loop on {:?}",
                    e.a
                )));
            }
            if e.history.is_empty() {
                return Err(ProxGraphError::InvalidGraph(format!(
                    "edge {:?}-{:?} has empty history",
                    e.a, e.b
                )));
            }
            g.insert_edge(
                &e.a,
                &e.b,
                EdgeRecord {
                    weight: e.weight,
                    history: e.history,
                },
            );
        }
        Ok(g)
    }

    /// Test/fixture helper: inserts an edge with a single-observation history.
    pub fn with_edge(mut self, a: &str, b: &str, weight: f64) -> Self {
        assert_ne!(a, b, "self-loops are not allowed");
        self.insert_edge(
            a,
            b,
            EdgeRecord {
                weight,
                history: vec![weight],
            },
        );
        self
    }
}

/// On-disk form: `{"nodes":[...], "edges":[{"a","b","weight","history"}]}` with `a <= b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistedGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<PersistedEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistedEdge {
    pub a: String,
    pub b: String,
    pub weight: f64,
    pub history: Vec<f64>,
}

impl Serialize for TermProximityGraph {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_persisted().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TermProximityGraph {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = PersistedGraph::deserialize(d)?;
        TermProximityGraph::from_persisted(p).map_err(de::Error::custom)
    }
}
