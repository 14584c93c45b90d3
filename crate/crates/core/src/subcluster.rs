//! Density-based subclusters inside a cluster file.
//!
//! Every document feature vector is shifted towards a local maximum of a
//! kernel density estimate built from cubic B-splines. Points whose modes
//! end up close together form one subcluster; the number of subclusters
//! falls out of the data. Subclusters that are too small or sit in a thin
//! part of the density are flagged as outliers and their documents queued
//! for re-clustering.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{mean_normalized, EmbeddingError, EmbeddingProvider, Vector};
use crate::overlay::ClusterFile;
use crate::proxgraph::{averaged_embeddings, Document};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubclusterError {
    #[error("document {0:?} has no selected terms")]
    NoFeatures(String),
    #[error("kernel argument must be non-negative, got {0}")]
    DomainError(f64),
    #[error("invalid mean-shift config: {0}")]
    InvalidConfig(String),
    #[error("subcluster records do not partition the cluster documents: {0}")]
    PartitionError(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// A document's position in embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub doc_id: String,
    pub vector: Vector,
}

impl FeatureVector {
    pub fn new(doc_id: impl Into<String>, vector: impl Into<Vector>) -> Self {
        Self {
            doc_id: doc_id.into(),
            vector: vector.into(),
        }
    }
}

/// Unit-norm mean of a document's averaged term embeddings.
pub fn doc_feature_vector(
    provider: &EmbeddingProvider,
    doc: &Document,
) -> Result<FeatureVector, SubclusterError> {
    if doc.selected_terms.is_empty() {
        return Err(SubclusterError::NoFeatures(doc.id.clone()));
    }
    let averaged = averaged_embeddings(provider, doc)?;
    let vector = if averaged.len() == 1 {
        averaged.into_values().next().expect("one entry")
    } else {
        mean_normalized(averaged.values())?
    };
    Ok(FeatureVector {
        doc_id: doc.id.clone(),
        vector,
    })
}

/// Cubic B-spline bell: `(3u³ − 6u² + 4)/6` on `[0,1)`, `(2−u)³/6` on `[1,2)`, else 0.
pub fn bspline_kernel(u: f64) -> Result<f64, SubclusterError> {
    if u.is_nan() || u < 0.0 {
        return Err(SubclusterError::DomainError(u));
    }
    Ok(kernel_unchecked(u))
}

fn kernel_unchecked(u: f64) -> f64 {
    if u < 1.0 {
        (3.0 * u * u * u - 6.0 * u * u + 4.0) / 6.0
    } else if u < 2.0 {
        let r = 2.0 - u;
        r * r * r / 6.0
    } else {
        0.0
    }
}

/// Mean-shift weight for a point at scaled distance `u`: `−K'(u)/u`, the
/// negated derivative of the kernel's radial profile. With these weights the
/// weighted mean steps uphill on the B-spline KDE itself and its fixed
/// points are exactly the KDE's stationary points.
pub fn shift_weight(u: f64) -> f64 {
    if u < 1.0 {
        2.0 - 1.5 * u
    } else if u < 2.0 {
        let r = 2.0 - u;
        r * r / (2.0 * u)
    } else {
        0.0
    }
}

/// Kernel density estimate `(1/n) Σ K(‖x − xᵢ‖ / h)`.
pub fn kde(points: &[FeatureVector], x: &Vector, h: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let sum: f64 = points
        .iter()
        .map(|p| kernel_unchecked(x.distance(&p.vector) / h))
        .sum();
    sum / points.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftConfig {
    /// Bandwidth.
    pub h: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Single-linkage radius for merging modes; `h / 2` when unset.
    pub merge_radius: Option<f64>,
    pub min_pts: usize,
    /// Fraction of the densest mode below which a subcluster is an outlier.
    pub tau: f64,
}

impl MeanShiftConfig {
    pub fn with_bandwidth(h: f64) -> Self {
        Self {
            h,
            epsilon: 1e-5,
            max_iter: 500,
            merge_radius: None,
            min_pts: 2,
            tau: 0.05,
        }
    }

    pub fn merge_radius(&self) -> f64 {
        self.merge_radius.unwrap_or(self.h / 2.0)
    }

    pub fn validate(&self) -> Result<(), SubclusterError> {
        let bad = |m: String| Err(SubclusterError::InvalidConfig(m));
        if !(self.h.is_finite() && self.h > 0.0) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        let r = self.merge_radius();
        if !(r.is_finite() && r > 0.0) {
            return bad(format!("merge_radius must be positive, got {r}"));
        }
        if self.min_pts == 0 {
            return bad("min_pts must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau must lie in [0, 1], got {}", self.tau));
        }
        Ok(())
    }
}

/// Median of all pairwise Euclidean distances; `None` when fewer than two
/// points or when the median is zero.
pub fn median_pairwise_distance(points: &[FeatureVector]) -> Option<f64> {
    let mut d: Vec<f64> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d.push(p.vector.distance(&q.vector));
        }
    }
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len().is_multiple_of(2) {
        (d[mid - 1] + d[mid]) / 2.0
    } else {
        d[mid]
    };
    (median > 0.0).then_some(median)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub mode: Vector,
    pub iterations: usize,
    /// No point lay within kernel support of the shadow copy.
    pub isolated: bool,
}

fn shift_point(points: &[FeatureVector], start: &Vector, cfg: &MeanShiftConfig) -> ModeResult {
    let dim = start.dim();
    let mut y = start.clone();
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let mut acc = vec![0.0; dim];
        let mut total = 0.0;
        for p in points {
            let w = shift_weight(y.distance(&p.vector) / cfg.h);
            if w > 0.0 {
                total += w;
                for (a, x) in acc.iter_mut().zip(p.vector.as_slice()) {
                    *a += w * x;
                }
            }
        }
        if total == 0.0 {
            return ModeResult {
                mode: y,
                iterations,
                isolated: true,
            };
        }
        let next = Vector::new(acc.into_iter().map(|a| a / total).collect());
        iterations += 1;
        let step = next.distance(&y);
        y = next;
        if step < cfg.epsilon {
            break;
        }
    }
    ModeResult {
        mode: y,
        iterations,
        isolated: false,
    }
}

/// Shifts a copy of every point to its density mode. Keys are doc ids.
pub fn mean_shift(points: &[FeatureVector], cfg: &MeanShiftConfig) -> BTreeMap<String, ModeResult> {
    points
        .par_iter()
        .map(|p| (p.doc_id.clone(), shift_point(points, &p.vector, cfg)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// One subcluster of a cluster file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubclusterRecord {
    #[serde(rename = "id")]
    pub subcluster_id: String,
    #[serde(rename = "docs")]
    pub doc_ids: BTreeSet<String>,
    /// Not persisted; recomputable from the member documents.
    #[serde(skip)]
    pub mode: Option<Vector>,
    pub mode_density: f64,
    pub outlier: bool,
}

/// Single-linkage grouping of modes within the merge radius.
pub fn merge_modes(
    points: &[FeatureVector],
    modes: &BTreeMap<String, ModeResult>,
    cfg: &MeanShiftConfig,
) -> Vec<SubclusterRecord> {
    let ids: Vec<&String> = modes.keys().collect();
    let vectors: Vec<&Vector> = modes.values().map(|m| &m.mode).collect();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let radius = cfg.merge_radius();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if vectors[i].distance(vectors[j]) <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    // Groups keyed by root; roots are the smallest member index, so the
    // BTreeMap order equals order of each group's smallest doc id.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..ids.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups
        .into_values()
        .enumerate()
        .map(|(n, members)| {
            let dim = vectors[members[0]].dim();
            let mut c = vec![0.0; dim];
            for &m in &members {
                for (a, x) in c.iter_mut().zip(vectors[m].as_slice()) {
                    *a += x;
                }
            }
            let centroid = Vector::new(c.into_iter().map(|a| a / members.len() as f64).collect());
            SubclusterRecord {
                subcluster_id: format!("sc-{n}"),
                doc_ids: members.iter().map(|&m| ids[m].clone()).collect(),
                mode_density: kde(points, &centroid, cfg.h),
                mode: Some(centroid),
                outlier: false,
            }
        })
        .collect()
}

/// Flags small or low-density subclusters; returns the records and the
/// documents queued for re-clustering.
pub fn detect_outliers(
    mut records: Vec<SubclusterRecord>,
    cfg: &MeanShiftConfig,
) -> (Vec<SubclusterRecord>, BTreeSet<String>) {
    let max_density = records
        .iter()
        .map(|r| r.mode_density)
        .fold(0.0_f64, f64::max);
    let mut queue = BTreeSet::new();
    for r in &mut records {
        r.outlier = r.doc_ids.len() < cfg.min_pts || r.mode_density < cfg.tau * max_density;
        if r.outlier {
            queue.extend(r.doc_ids.iter().cloned());
        }
    }
    (records, queue)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubclusterOutcome {
    pub records: Vec<SubclusterRecord>,
    pub reclustering_queue: BTreeSet<String>,
    pub modes: BTreeMap<String, ModeResult>,
}

/// Full batch: mean shift, merge, outlier detection.
pub fn find_subclusters(
    points: &[FeatureVector],
    cfg: &MeanShiftConfig,
) -> Result<SubclusterOutcome, SubclusterError> {
    cfg.validate()?;
    if points.is_empty() {
        return Ok(SubclusterOutcome {
            records: Vec::new(),
            reclustering_queue: BTreeSet::new(),
            modes: BTreeMap::new(),
        });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let modes = mean_shift(&sorted, cfg);
    let records = merge_modes(&sorted, &modes, cfg);
    let (records, reclustering_queue) = detect_outliers(records, cfg);
    Ok(SubclusterOutcome {
        records,
        reclustering_queue,
        modes,
    })
}

/// Replaces the cluster file's subcluster records after checking that they
/// partition its documents exactly.
pub fn attach_subclusters(
    cluster: &mut ClusterFile,
    records: Vec<SubclusterRecord>,
) -> Result<(), SubclusterError> {
    let docs: BTreeSet<&str> = cluster
        .doc_links
        .iter()
        .map(|d| d.doc_id.as_str())
        .collect();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for r in &records {
        for d in &r.doc_ids {
            if !docs.contains(d.as_str()) {
                return Err(SubclusterError::PartitionError(format!(
                    "foreign document {d:?}"
                )));
            }
            if !seen.insert(d.as_str()) {
                return Err(SubclusterError::PartitionError(format!(
                    "document {d:?} appears twice"
                )));
            }
        }
    }
    if let Some(missing) = docs.difference(&seen).next() {
        return Err(SubclusterError::PartitionError(format!(
            "document {missing:?} is missing"
        )));
    }
    cluster.subclusters = records;
    Ok(())
}
