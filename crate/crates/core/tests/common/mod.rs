//! Reference implementations used as test oracles. They share no code with
//! the engine beyond plain data.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense-matrix HITS power iteration: `a ← normalize(Mᵀ h)`, `h ← normalize(M a)`,
/// starting from the uniform vector. `m[i][j]` is the weight of edge i → j.
pub fn dense_hits(m: &[Vec<f64>], tol: f64, max_iter: usize) -> (Vec<f64>, Vec<f64>) {
    let n = m.len();
    let unit = |v: Vec<f64>| {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            v
        } else {
            v.into_iter().map(|x| x / norm).collect()
        }
    };
    let mut a = vec![1.0 / (n as f64).sqrt(); n];
    let mut h = a.clone();
    for _ in 0..max_iter {
        let na = unit(
            (0..n)
                .map(|j| (0..n).map(|i| m[i][j] * h[i]).sum())
                .collect(),
        );
        let nh = unit(
            (0..n)
                .map(|i| (0..n).map(|j| m[i][j] * na[j]).sum())
                .collect(),
        );
        let change = a
            .iter()
            .zip(&na)
            .chain(h.iter().zip(&nh))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0_f64, f64::max);
        a = na;
        h = nh;
        if change < tol {
            break;
        }
    }
    (a, h)
}

/// Random simple digraph on `n` nodes (no self-loops) with the given edge probability.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Enumerates every simple path from any source to `target` and returns the
/// best by (distance summed from the source end, hop count, term sequence).
pub fn brute_force_path(
    adjacency: &[(String, String, f64)],
    sources: &[String],
    target: &str,
) -> Option<(Vec<String>, f64)> {
    let dist = |w: f64| (1.0 - w).clamp(1e-6, 1.0);
    let mut best: Option<(Vec<String>, f64)> = None;
    fn neighbours<'a>(adjacency: &'a [(String, String, f64)], node: &str) -> Vec<(&'a str, f64)> {
        adjacency
            .iter()
            .filter_map(|(a, b, w)| {
                if a == node {
                    Some((b.as_str(), *w))
                } else if b == node {
                    Some((a.as_str(), *w))
                } else {
                    None
                }
            })
            .collect()
    }
    fn better(cand: &(Vec<String>, f64), cur: &Option<(Vec<String>, f64)>) -> bool {
        match cur {
            None => true,
            Some((p, d)) => {
                cand.1 < *d
                    || (cand.1 == *d
                        && (cand.0.len() < p.len() || (cand.0.len() == p.len() && cand.0 < *p)))
            }
        }
    }
    fn dfs(
        adjacency: &[(String, String, f64)],
        path: &mut Vec<String>,
        d: f64,
        target: &str,
        dist: &dyn Fn(f64) -> f64,
        best: &mut Option<(Vec<String>, f64)>,
    ) {
        let last = path.last().unwrap().clone();
        if last == target {
            let cand = (path.clone(), d);
            if better(&cand, best) {
                *best = Some(cand);
            }
            return;
        }
        for (next, w) in neighbours(adjacency, &last) {
            if path.iter().any(|p| p == next) {
                continue;
            }
            path.push(next.to_string());
            dfs(adjacency, path, d + dist(w), target, dist, best);
            path.pop();
        }
    }
    for s in sources {
        let mut path = vec![s.clone()];
        dfs(adjacency, &mut path, 0.0, target, &dist, &mut best);
    }
    best
}

/// Floyd–Warshall all-pairs distances with `d = clamp(1 - w, 1e-6, 1)`.
pub fn all_pairs(nodes: &[String], adjacency: &[(String, String, f64)]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let idx = |t: &str| nodes.iter().position(|x| x == t).unwrap();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (a, b, w) in adjacency {
        let (i, j) = (idx(a), idx(b));
        let e = (1.0 - w).clamp(1e-6, 1.0);
        d[i][j] = d[i][j].min(e);
        d[j][i] = d[j][i].min(e);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// 1-D cubic B-spline KDE evaluated independently of the engine.
pub fn kde_1d(points: &[f64], x: f64, h: f64) -> f64 {
    let k = |u: f64| {
        if u < 1.0 {
            2.0 / 3.0 - u * u + u * u * u / 2.0
        } else if u < 2.0 {
            (2.0 - u).powi(3) / 6.0
        } else {
            0.0
        }
    };
    points.iter().map(|p| k((x - p).abs() / h)).sum::<f64>() / points.len() as f64
}

/// Arg-max of the 1-D KDE on a uniform grid over `[lo, hi]`.
pub fn kde_grid_argmax(points: &[f64], h: f64, lo: f64, hi: f64, step: f64) -> f64 {
    let steps = ((hi - lo) / step).round() as usize;
    (0..=steps)
        .map(|i| lo + i as f64 * step)
        .map(|x| (x, kde_1d(points, x, h)))
        .fold((lo, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
        .0
}

/// Two-dimensional Gaussian blob via Box–Muller.
pub fn gaussian_blob(
    rng: &mut ChaCha8Rng,
    center: (f64, f64),
    sigma: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            (
                center.0 + sigma * r * t.cos(),
                center.1 + sigma * r * t.sin(),
            )
        })
        .collect()
}
