//! Shared helpers for the service tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use serde_json::Value;
use tower::ServiceExt;
use webmap::api::{router, ApiState};
use webmap::config::EngineConfig;
use webmap::store::{ClusterSignposts, DocSignpost};
use webmap::{IngestReport, Store};
use webmap_core::overlay::{ClusterFile, ClusterRef, DocLink as ClusterDocLink, Peer, WebMap};
use webmap_core::proxgraph::{select_terms, TermSelector};
use webmap_core::signpost::{DocLink, ScoredTerm};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// Loads a fixture config with its data dir redirected to `data_dir`.
pub fn fixture_config(name: &str, data_dir: &Path) -> EngineConfig {
    let mut cfg = EngineConfig::load(&fixture(name).join("webmap.toml")).unwrap();
    cfg.data_dir = data_dir.to_path_buf();
    cfg
}

/// Ingests a fixture into `data_dir` and loads the result back.
pub fn ingest_fixture(name: &str, data_dir: &Path) -> (IngestReport, Store) {
    let report = webmap::ingest(&fixture_config(name, data_dir)).unwrap();
    (report, Store::load(data_dir).unwrap())
}

/// All files under `dir` keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&p).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    let body: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    jsonschema::validator_for(&body).unwrap()
}

/// Panics with every violation when `value` does not match schema `name`.
pub fn assert_schema(name: &str, value: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v
        .iter_errors(value)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(
        errors.is_empty(),
        "{name} schema violations: {errors:#?}\n{value:#}"
    );
}

pub fn app(store: Store) -> axum::Router {
    router(Arc::new(ApiState::new(store).unwrap()))
}

pub async fn get(app: &axum::Router, uri: &str) -> (StatusCode, Value) {
    let resp = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status();
    let ct = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string())
        .unwrap_or_default();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX)
        .await
        .unwrap();
    assert!(
        ct.starts_with("application/json"),
        "{uri}: content-type {ct:?}"
    );
    let body = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{uri}: {e}"));
    (status, body)
}

/// A one-cluster map whose document links form the chain A → B → C:
/// A→B (0.5), B→C (0.4), plus a weaker A→C (0.2) that the walk must ignore.
pub fn trace_store() -> Store {
    let sel = TermSelector::default();
    let mut map = WebMap::new();
    let mut peer = Peer::new("p1");
    let mut cf = ClusterFile::new("origin");
    for (id, text) in [
        ("A", "Origin story told again."),
        ("B", "Origin myth retold."),
        ("C", "Origin legend."),
    ] {
        let doc = select_terms(id, &format!("https://example.org/{id}"), id, text, &sel).unwrap();
        cf.doc_links
            .insert(ClusterDocLink::for_document(&doc, "p1"));
        peer.documents.insert(id.into(), doc);
    }
    peer.cluster_files.insert("origin".into(), cf);
    map.add_peer(peer).unwrap();
    map.registry.register("origin", "p1");
    let link = |a: &str, b: &str, o: f64| DocLink {
        from_doc: a.into(),
        to_doc: b.into(),
        overlap_score: o,
    };
    let term = |t: &str, s: f64| ScoredTerm {
        term: t.into(),
        score: s,
    };
    let docs = ["A", "B", "C"]
        .iter()
        .map(|id| {
            (
                id.to_string(),
                DocSignpost {
                    doc_id: id.to_string(),
                    authorities: vec![term("origin", 0.9)],
                    hubs: vec![term("story", 0.7)],
                },
            )
        })
        .collect();
    let signposts = BTreeMap::from([(
        ClusterRef::new("origin", "p1"),
        ClusterSignposts {
            docs,
            links: vec![
                link("A", "B", 0.5),
                link("A", "C", 0.2),
                link("B", "C", 0.4),
            ],
        },
    )]);
    Store {
        config: EngineConfig::default(),
        map,
        signposts,
    }
}

/// Greedy strongest-link walk over raw `doclinks.json` entries, written
/// independently of the engine's trace.
pub fn walk_links(links: &[Value], start: &str, depth: usize) -> Vec<String> {
    let mut chain = vec![start.to_string()];
    let mut cur = start.to_string();
    for _ in 0..depth {
        let mut out: Vec<(&str, f64)> = links
            .iter()
            .filter(|l| l["from"] == cur.as_str())
            .map(|l| (l["to"].as_str().unwrap(), l["overlap"].as_f64().unwrap()))
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
        match out.first() {
            Some((to, _)) if !chain.iter().any(|c| c == to) => {
                chain.push(to.to_string());
                cur = to.to_string();
            }
            _ => break,
        }
    }
    chain
}
