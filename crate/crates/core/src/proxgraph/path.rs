use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{ProxGraphError, TermProximityGraph};

/// Smallest edge distance; keeps Dijkstra well-founded for weights at 1.
pub const MIN_EDGE_DISTANCE: f64 = 1e-6;

/// Edge distance derived from a proximity weight: `1 - w`, clamped to `[1e-6, 1]`.
pub fn edge_distance(weight: f64) -> f64 {
    (1.0 - weight).clamp(MIN_EDGE_DISTANCE, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermPath {
    pub terms: Vec<String>,
    pub distance: f64,
}

impl TermPath {
    pub fn hops(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }
}

// Min-heap entry ordered by (distance, hops, term sequence).
#[derive(Debug, PartialEq)]
struct Label {
    distance: f64,
    path: Vec<String>,
}

impl Label {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then_with(|| self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Multi-source Dijkstra over `d = 1 - weight`.
///
/// Ties on distance go to fewer hops, then to the lexicographically
/// smallest term sequence. The returned path starts at a source and ends
/// at `target`.
pub fn shortest_path(
    graph: &TermProximityGraph,
    sources: &BTreeSet<String>,
    target: &str,
) -> Result<TermPath, ProxGraphError> {
    if sources.is_empty() {
        return Err(ProxGraphError::EmptySources);
    }
    if !graph.contains(target) {
        return Err(ProxGraphError::UnknownTerm(target.to_string()));
    }
    if let Some(missing) = sources.iter().find(|s| !graph.contains(s)) {
        return Err(ProxGraphError::UnknownTerm(missing.clone()));
    }
    if sources.contains(target) {
        return Ok(TermPath {
            terms: vec![target.to_string()],
            distance: 0.0,
        });
    }

    let mut settled: BTreeSet<String> = BTreeSet::new();
    let mut best: BTreeMap<String, Label> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    for s in sources {
        heap.push(Label {
            distance: 0.0,
            path: vec![s.clone()],
        });
    }
    while let Some(label) = heap.pop() {
        let node = label.path.last().expect("non-empty path").clone();
        if !settled.insert(node.clone()) {
            continue;
        }
        if node == target {
            return Ok(TermPath {
                terms: label.path,
                distance: label.distance,
            });
        }
        for (next, weight) in graph.neighbors(&node) {
            if settled.contains(next) {
                continue;
            }
            let mut path = label.path.clone();
            path.push(next.to_string());
            let candidate = Label {
                distance: label.distance + edge_distance(weight),
                path,
            };
            let improves = best
                .get(next)
                .is_none_or(|cur| candidate.key_cmp(cur) == Ordering::Less);
            if improves {
                best.insert(
                    next.to_string(),
                    Label {
                        distance: candidate.distance,
                        path: candidate.path.clone(),
                    },
                );
                heap.push(candidate);
            }
        }
    }
    Err(ProxGraphError::NotReachable(target.to_string()))
}

/// Shortest distances from `source` to every reachable node.
pub fn distances_from(graph: &TermProximityGraph, source: &str) -> BTreeMap<String, f64> {
    let mut dist: BTreeMap<String, f64> = BTreeMap::new();
    if !graph.contains(source) {
        return dist;
    }
    #[derive(PartialEq)]
    struct Entry(f64, String);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            other
                .0
                .total_cmp(&self.0)
                .then_with(|| other.1.cmp(&self.1))
        }
    }
    let mut heap = BinaryHeap::from([Entry(0.0, source.to_string())]);
    while let Some(Entry(d, node)) = heap.pop() {
        if dist.contains_key(&node) {
            continue;
        }
        for (next, w) in graph.neighbors(&node) {
            if !dist.contains_key(next) {
                heap.push(Entry(d + edge_distance(w), next.to_string()));
            }
        }
        dist.insert(node, d);
    }
    dist
}
