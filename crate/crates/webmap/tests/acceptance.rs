//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without a UI and without a live server.

mod common;
#[path = "../../core/tests/common/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use rand::Rng;
use serde_json::Value;
use webmap_core::overlay::ClusterRef;
use webmap_core::proxgraph::{
    shortest_path, Approach, HistoryCap, ProxGraphConfig, ProxGraphError, SimilarityPair,
    TermProximityGraph,
};
use webmap_core::signpost::{weighted_hits, TermAssociationGraph};
use webmap_core::subcluster::{find_subclusters, kde, mean_shift, FeatureVector, MeanShiftConfig};

type Check = fn();

fn main() -> ExitCode {
    let criteria: [(&str, Check); 7] = [
        ("weighted HITS 3-node example", hits_three_node),
        ("HITS oracle equivalence", hits_oracle),
        ("proximity-graph update rules", update_rules),
        ("overlay construction end-to-end", overlay_end_to_end),
        ("mean-shift clustering", mean_shift_clustering),
        ("shortest path", shortest_paths),
        ("service contract", service_contract),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(()) => println!("PASS  {name} ({ms:.1} ms)"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  {name} ({ms:.1} ms): {msg}");
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol,
        "{what}: {got} vs {want} (tol {tol})"
    );
}

fn assert_faster(elapsed: Duration, limit: Duration, what: &str) {
    assert!(elapsed < limit, "{what} took {elapsed:?}, limit {limit:?}");
}

fn hits_three_node() {
    let mut g = TermAssociationGraph::new("doc");
    g.add_edge("q", "a1", 1.0);
    g.add_edge("q", "a2", 0.5);
    let start = Instant::now();
    let s = weighted_hits(&g, 1e-12, 1000);
    assert_faster(start.elapsed(), Duration::from_millis(1), "3-node HITS");

    let m = vec![vec![0.0, 1.0, 0.5], vec![0.0; 3], vec![0.0; 3]];
    let (auth, hub) = oracles::dense_hits(&m, 1e-14, 10_000);
    assert_close(
        s.authority["a1"] / s.authority["a2"],
        2.0,
        1e-6,
        "authority ratio",
    );
    assert_close(s.authority["a1"], 0.8944, 1e-4, "a(a1)");
    assert_close(s.authority["a2"], 0.4472, 1e-4, "a(a2)");
    assert_close(s.authority["a1"], auth[1], 1e-9, "a(a1) vs power iteration");
    assert_close(s.authority["a2"], auth[2], 1e-9, "a(a2) vs power iteration");
    assert_close(s.hub["q"], hub[0], 1e-9, "h(q) vs power iteration");
}

fn hits_oracle() {
    let term = |i: usize| format!("t{i}");
    for seed in 0..20u64 {
        let mut rng = oracles::rng(seed);
        let n = 2 + (seed as usize % 7);
        let edges = oracles::random_digraph(&mut rng, n, 0.35);
        let mut m = vec![vec![0.0; n]; n];
        let mut g = TermAssociationGraph::new("doc");
        for &(i, j) in &edges {
            m[i][j] = 1.0;
            g.add_edge(&term(i), &term(j), 1.0);
        }
        for i in 0..n {
            g.nodes.insert(term(i));
        }
        let (auth, hub) = oracles::dense_hits(&m, 1e-14, 100_000);
        let s = weighted_hits(&g, 1e-14, 100_000);
        for i in 0..n {
            assert_close(
                s.authority[&term(i)],
                auth[i],
                1e-8,
                &format!("seed {seed} a(t{i})"),
            );
            assert_close(
                s.hub[&term(i)],
                hub[i],
                1e-8,
                &format!("seed {seed} h(t{i})"),
            );
        }
    }

    let mut g = TermAssociationGraph::new("doc");
    for (a, b, w) in [
        ("x", "m", 0.6),
        ("x", "y", 0.9),
        ("m", "y", 0.7),
        ("x", "n", 0.4),
        ("n", "y", 0.5),
    ] {
        g.add_edge(a, b, w);
    }
    let s = weighted_hits(&g, 1e-12, 10_000);
    let max = |v: &BTreeMap<String, f64>| v.values().cloned().fold(f64::MIN, f64::max);
    assert_eq!(s.hub["x"], max(&s.hub), "pure source is not the top hub");
    assert_eq!(
        s.authority["y"],
        max(&s.authority),
        "pure sink is not the top authority"
    );
}

fn update_rules() {
    let cfg = |s: f64, t: HistoryCap| ProxGraphConfig::new(s, t, Approach::Averaged).unwrap();
    let pair = |s: f64| [SimilarityPair::new("a", "b", s)];

    let mut g = TermProximityGraph::new();
    g.update(&pair(0.2), &cfg(0.3, HistoryCap::Unbounded));
    assert!(
        g.edge("a", "b").is_none(),
        "below-threshold first observation created an edge"
    );

    let mut g = TermProximityGraph::new();
    let c = cfg(0.3, HistoryCap::Unbounded);
    g.update(&pair(0.8), &c);
    g.update(&pair(0.6), &c);
    let e = g.edge("a", "b").unwrap();
    assert_eq!(e.history, vec![0.8, 0.6]);
    assert_close(e.weight, 0.7, 1e-15, "[0.8] + 0.6");

    let mut g = TermProximityGraph::new();
    let c = cfg(0.3, HistoryCap::Recent(2));
    for s in [0.9, 0.7, 0.5] {
        g.update(&pair(s), &c);
    }
    let e = g.edge("a", "b").unwrap();
    assert_eq!(e.history, vec![0.7, 0.5]);
    assert_close(e.weight, 0.6, 1e-15, "window t=2, [0.9, 0.7] + 0.5");

    for seed in 0..1000u64 {
        let mut rng = oracles::rng(seed);
        let s = rng.random_range(0.05..0.95);
        let t = match rng.random_range(0..5usize) {
            0 => HistoryCap::Unbounded,
            n => HistoryCap::Recent(n),
        };
        let c = ProxGraphConfig::new(s, t, Approach::Sentence).unwrap();
        let mut g = TermProximityGraph::new();
        // Independent replay: every observation of an existing edge, in order.
        let mut replay: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for _ in 0..rng.random_range(1..40) {
            let (i, j) = (rng.random_range(0..5), rng.random_range(0..5));
            if i == j {
                continue;
            }
            let sim: f64 = rng.random_range(-1.0..1.0);
            let key = (format!("w{}", i.min(j)), format!("w{}", i.max(j)));
            let existed = replay.contains_key(&key);
            g.update(
                &[SimilarityPair::new(format!("w{i}"), format!("w{j}"), sim)],
                &c,
            );
            if existed {
                replay.get_mut(&key).unwrap().push(sim);
            } else if sim > s {
                replay.insert(key.clone(), vec![sim]);
            }
            assert_eq!(
                g.edge(&key.0, &key.1).is_some(),
                replay.contains_key(&key),
                "seed {seed}: edge presence after {sim} with s = {s}"
            );
        }
        assert_eq!(g.edges().count(), replay.len(), "seed {seed}: edge count");
        for (key, obs) in &replay {
            let keep = match t {
                HistoryCap::Unbounded => obs.len(),
                HistoryCap::Recent(n) => n.min(obs.len()),
            };
            let window = &obs[obs.len() - keep..];
            let e = g.edge(&key.0, &key.1).unwrap();
            assert_eq!(e.history, window, "seed {seed}: window of {key:?}");
            let mean = window.iter().sum::<f64>() / window.len() as f64;
            assert_close(
                e.weight,
                mean,
                1e-12,
                &format!("seed {seed}: mean of {key:?}"),
            );
        }
    }
}

fn cluster_files(dir: &Path) -> usize {
    common::snapshot(dir)
        .keys()
        .filter(|p| p.starts_with("clusters"))
        .count()
}

fn overlay_end_to_end() {
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (report, store) = common::ingest_fixture("topics", a.path());
    assert_eq!(
        report.documents, 12,
        "documents placed: {:?}",
        report.errors
    );
    assert!(
        cluster_files(a.path()) >= 3,
        "only {} cluster files",
        cluster_files(a.path())
    );

    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (_, cf) in store.map.clusters() {
        for id in cf.doc_ids() {
            *seen.entry(id.to_string()).or_default() += 1;
        }
    }
    assert_eq!(seen.len(), 12, "documents present in cluster files");
    assert!(
        seen.values().all(|&n| n == 1),
        "document in several clusters: {seen:?}"
    );
    for (at, cf) in store.map.clusters() {
        for other in &cf.cluster_links {
            let back = store.map.cluster(other).expect("link target exists");
            assert!(
                back.cluster_links.contains(&at),
                "{at:?} -> {other:?} is one-way"
            );
        }
    }

    let first = common::snapshot(a.path());
    common::ingest_fixture("topics", a.path());
    assert!(
        first == common::snapshot(a.path()),
        "re-run in place differs"
    );
    common::ingest_fixture("topics", b.path());
    assert!(
        first == common::snapshot(b.path()),
        "re-run in a fresh dir differs"
    );

    let s = tempfile::tempdir().unwrap();
    let (report, store) = common::ingest_fixture("seismology", s.path());
    let d2 = report
        .assignments
        .iter()
        .find(|x| x.doc_id == "d2")
        .expect("d2 placed");
    assert_eq!(
        d2.created_clusters,
        vec!["seismology", "seismic"],
        "clusters created for d2"
    );
    assert_eq!(
        d2.path_links_created,
        vec![
            ("earthquake".to_string(), "seismic".to_string()),
            ("seismic".to_string(), "seismology".to_string())
        ]
    );
    let seismic = store
        .map
        .cluster(&ClusterRef::new("seismic", "p1"))
        .unwrap();
    let linked: BTreeSet<&str> = seismic
        .cluster_links
        .iter()
        .map(|r| r.trc.as_str())
        .collect();
    assert_eq!(linked, BTreeSet::from(["earthquake", "seismology"]));
    for end in ["earthquake", "seismology"] {
        let cf = store.map.cluster(&ClusterRef::new(end, "p1")).unwrap();
        assert!(
            cf.cluster_links.contains(&ClusterRef::new("seismic", "p1")),
            "{end} lacks back link"
        );
    }
    assert_faster(start.elapsed(), Duration::from_secs(10), "end-to-end");
}

fn plane(points: &[(f64, f64)], prefix: &str) -> Vec<FeatureVector> {
    points
        .iter()
        .enumerate()
        .map(|(i, (x, y))| FeatureVector::new(format!("{prefix}{i:03}"), vec![*x, *y]))
        .collect()
}

fn mean_shift_clustering() {
    let start = Instant::now();
    let cfg = MeanShiftConfig::with_bandwidth(1.0);
    let mut rng = oracles::rng(7);
    let mut pts = plane(&oracles::gaussian_blob(&mut rng, (0.0, 0.0), 0.1, 100), "a");
    pts.extend(plane(
        &oracles::gaussian_blob(&mut rng, (5.0, 0.0), 0.1, 100),
        "b",
    ));

    let out = find_subclusters(&pts, &cfg).unwrap();
    assert_eq!(out.records.len(), 2, "clusters on two blobs");
    assert!(out.reclustering_queue.is_empty(), "outliers on two blobs");

    let far = [(20.0, 20.0), (-15.0, 10.0), (2.5, -30.0)];
    pts.extend(plane(&far, "z"));
    let out = find_subclusters(&pts, &cfg).unwrap();
    let expected: BTreeSet<String> = ["z000", "z001", "z002"].map(String::from).into();
    assert_eq!(out.reclustering_queue, expected, "queued outliers");
    assert_eq!(out.records.iter().filter(|r| !r.outlier).count(), 2);

    let modes = mean_shift(&pts, &cfg);
    for p in &pts {
        let before = kde(&pts, &p.vector, cfg.h);
        let after = kde(&pts, &modes[&p.doc_id].mode, cfg.h);
        assert!(
            after >= before - 1e-9,
            "{}: density {before} -> {after}",
            p.doc_id
        );
    }

    let raw = [0.0, 0.1];
    let oracle = oracles::kde_grid_argmax(&raw, 1.0, -1.0, 1.0, 1e-4);
    let line: Vec<FeatureVector> = raw
        .iter()
        .enumerate()
        .map(|(i, x)| FeatureVector::new(format!("p{i}"), vec![*x]))
        .collect();
    for m in mean_shift(&line, &cfg).values() {
        let x = m.mode.as_slice()[0];
        assert_close(x, 0.05, 1e-3, "1-D mode");
        assert_close(x, oracle, 1e-3, "1-D mode vs grid search");
    }
    assert_faster(start.elapsed(), Duration::from_secs(5), "mean shift");
}

fn shortest_paths() {
    let edge = |a: &str, b: &str, w: f64| (a.to_string(), b.to_string(), w);
    let build = |edges: &[(String, String, f64)]| {
        edges
            .iter()
            .fold(TermProximityGraph::new(), |g, (a, b, w)| {
                g.with_edge(a, b, *w)
            })
    };

    let diamond = [
        edge("a", "b", 0.9),
        edge("b", "d", 0.9),
        edge("a", "c", 0.6),
        edge("c", "d", 0.6),
    ];
    let (best, d) = oracles::brute_force_path(&diamond, &["a".to_string()], "d").unwrap();
    assert_eq!(best, vec!["a", "b", "d"]);
    assert_close(d, 0.2, 1e-12, "diamond distance");
    let got = shortest_path(&build(&diamond), &BTreeSet::from(["a".to_string()]), "d").unwrap();
    assert_eq!(got.terms, best, "diamond path");

    for seed in 0..100u64 {
        let mut rng = oracles::rng(seed);
        let n = 2 + (seed as usize % 7);
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.45) {
                    let w = rng.random_range(0..10) as f64 / 10.0;
                    edges.push(edge(&nodes[i], &nodes[j], w));
                }
            }
        }
        let g = build(&edges);
        let present: Vec<&String> = nodes.iter().filter(|t| g.contains(t)).collect();
        if present.len() < 2 {
            continue;
        }
        let target = present[rng.random_range(0..present.len())].clone();
        let mut sources: BTreeSet<String> = present
            .iter()
            .filter(|t| ***t != target && rng.random_bool(0.4))
            .map(|t| t.to_string())
            .collect();
        if sources.is_empty() {
            sources.insert(present.iter().find(|t| ***t != target).unwrap().to_string());
        }
        let src: Vec<String> = sources.iter().cloned().collect();
        match (
            shortest_path(&g, &sources, &target),
            oracles::brute_force_path(&edges, &src, &target),
        ) {
            (Ok(p), Some((path, d))) => {
                assert_eq!(p.terms, path, "seed {seed}");
                assert_eq!(p.distance, d, "seed {seed}");
            }
            (Err(ProxGraphError::NotReachable(_)), None) => {}
            (got, want) => panic!("seed {seed}: got {got:?}, want {want:?}"),
        }
    }
}

fn service_contract() {
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap();
    rt.block_on(async {
        let dir = tempfile::tempdir().unwrap();
        let (_, store) = common::ingest_fixture("topics", dir.path());
        let app = common::app(store.clone());

        let check = |uri: String, want: StatusCode, schema: &'static str| {
            let app = app.clone();
            async move {
                let (status, body) = common::get(&app, &uri).await;
                assert_eq!(status, want, "{uri}: {body}");
                common::assert_schema(schema, &body);
                body
            }
        };
        check("/api/health".into(), StatusCode::OK, "health").await;
        let map = check("/api/map".into(), StatusCode::OK, "map").await;
        assert_eq!(
            map["clusters"].as_array().unwrap().len(),
            store.map.clusters().count()
        );
        for (at, cf) in store.map.clusters() {
            check(
                format!("/api/cluster/{}?peer={}", at.trc, at.peer_id),
                StatusCode::OK,
                "cluster",
            )
            .await;
            for id in cf.doc_ids() {
                check(
                    format!("/api/doc/{id}/signpost"),
                    StatusCode::OK,
                    "signpost",
                )
                .await;
                check(format!("/api/trace/{id}"), StatusCode::OK, "trace").await;
            }
        }
        let found = check("/api/search?q=earthquake".into(), StatusCode::OK, "search").await;
        assert_eq!(found["trc"], "earthquake");
        check(
            "/api/search?q=yeast%20dough".into(),
            StatusCode::NOT_FOUND,
            "error",
        )
        .await;
        check(
            "/api/cluster/nowhere".into(),
            StatusCode::NOT_FOUND,
            "error",
        )
        .await;
        check(
            "/api/doc/nowhere/signpost".into(),
            StatusCode::NOT_FOUND,
            "error",
        )
        .await;
        check("/api/trace/nowhere".into(), StatusCode::NOT_FOUND, "error").await;
        check("/api/search".into(), StatusCode::BAD_REQUEST, "error").await;

        let app = common::app(common::trace_store());
        let (status, body) = common::get(&app, "/api/trace/A").await;
        assert_eq!(status, StatusCode::OK);
        common::assert_schema("trace", &body);
        let chain: Vec<&str> = body["chain"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v: &Value| v.as_str().unwrap())
            .collect();
        assert_eq!(chain, vec!["A", "B", "C"], "trace chain");
    });
}
