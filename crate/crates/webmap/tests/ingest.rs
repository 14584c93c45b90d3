mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use common::*;
use serde_json::Value;
use webmap::config::EngineConfig;
use webmap::Store;
use webmap_core::overlay::ClusterRef;

fn write_config(dir: &Path, body: &str) -> EngineConfig {
    let path = dir.join("webmap.toml");
    fs::write(&path, body).unwrap();
    EngineConfig::load(&path).unwrap()
}

#[test]
fn topics_fixture_builds_a_consistent_map() {
    let tmp = tempfile::tempdir().unwrap();
    let (report, store) = ingest_fixture("topics", tmp.path());
    assert_eq!(report.documents, 12);
    assert!(report.errors.is_empty(), "{:?}", report.errors);

    let clusters: Vec<(ClusterRef, usize)> = store
        .map
        .clusters()
        .map(|(r, cf)| (r, cf.doc_links.len()))
        .collect();
    assert!(clusters.len() >= 3, "{clusters:?}");

    // Every document sits in exactly one cluster file.
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (_, cf) in store.map.clusters() {
        for id in cf.doc_ids() {
            *seen.entry(id.to_string()).or_default() += 1;
        }
    }
    assert_eq!(seen.len(), 12);
    assert!(seen.values().all(|&n| n == 1), "{seen:?}");

    // Cluster links are symmetric.
    for (at, cf) in store.map.clusters() {
        for other in &cf.cluster_links {
            let back = store.map.cluster(other).unwrap();
            assert!(
                back.cluster_links.contains(&at),
                "{at:?} -> {other:?} has no back link"
            );
        }
    }
}

#[test]
fn written_files_match_their_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    ingest_fixture("topics", tmp.path());
    let files = snapshot(tmp.path());
    let mut counts = BTreeMap::new();
    for (rel, bytes) in &files {
        assert_eq!(
            bytes.last(),
            Some(&b'\n'),
            "{} is not newline-terminated",
            rel.display()
        );
        let top = rel
            .components()
            .next()
            .unwrap()
            .as_os_str()
            .to_string_lossy()
            .into_owned();
        let schema = match top.as_str() {
            "clusters" => "cluster_file",
            "signposts" if rel.file_name().unwrap() == "doclinks.json" => "doclinks",
            "signposts" => "doc_signpost",
            _ => continue,
        };
        let value: Value = serde_json::from_slice(bytes).unwrap();
        assert_schema(schema, &value);
        *counts.entry(schema).or_insert(0) += 1;
    }
    assert!(counts["cluster_file"] >= 3);
    assert_eq!(counts["doc_signpost"], 12);
    assert_eq!(counts["doclinks"], counts["cluster_file"]);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ingest_fixture("topics", a.path());
    let first = snapshot(a.path());
    ingest_fixture("topics", a.path());
    assert_eq!(first, snapshot(a.path()), "same data dir");
    ingest_fixture("topics", b.path());
    assert_eq!(first, snapshot(b.path()), "different data dir");
}

#[test]
fn seismology_path_creates_intermediate_cluster() {
    let tmp = tempfile::tempdir().unwrap();
    let (report, store) = ingest_fixture("seismology", tmp.path());
    let d2 = report
        .assignments
        .iter()
        .find(|a| a.doc_id == "d2")
        .unwrap();
    assert_eq!(d2.trc, "seismology");
    assert_eq!(d2.created_clusters, vec!["seismology", "seismic"]);
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
    assert_eq!(seismic.cluster_links.len(), 2);
    // d3 mentions all three terms; the path centre is its TRC.
    assert_eq!(seismic.doc_ids().collect::<Vec<_>>(), vec!["d3"]);
    assert_eq!(report.clusters_created, 3);
    assert_eq!(report.links_created, 2);
}

#[test]
fn saved_store_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture_config("topics", tmp.path());
    let (mut built, _) = webmap::ingest::build(&cfg).unwrap();
    built.save(tmp.path()).unwrap();
    let loaded = Store::load(tmp.path()).unwrap();
    // Subcluster modes are derived data and are not written out.
    for peer in built.map.peers.values_mut() {
        for cf in peer.cluster_files.values_mut() {
            cf.subclusters.iter_mut().for_each(|s| s.mode = None);
        }
    }
    assert_eq!(loaded.map, built.map);
    assert_eq!(loaded.signposts, built.signposts);
    assert_eq!(loaded.config.seed, cfg.seed);
}

#[test]
fn empty_corpus_leaves_only_the_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("empty.jsonl"), "").unwrap();
    let cfg = write_config(
        tmp.path(),
        "seed = 1\ndata_dir = \"data\"\n[[peers]]\npeer_id = \"p1\"\ncorpus = [\"empty.jsonl\"]\n",
    );
    let report = webmap::ingest(&cfg).unwrap();
    assert_eq!(report.documents, 0);
    let files: Vec<_> = snapshot(&tmp.path().join("data")).into_keys().collect();
    assert_eq!(files, vec![Path::new("config.toml").to_path_buf()]);
    let store = Store::load(&tmp.path().join("data")).unwrap();
    assert_eq!(store.map.clusters().count(), 0);
}

#[test]
fn bad_input_is_reported_per_record() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("a.jsonl"),
        concat!(
            "{\"id\": \"ok\", \"text\": \"Volcano eruption lava flow.\"}\n",
            "not json\n",
            "{\"id\": \"blank\", \"text\": \"\"}\n",
            "{\"id\": \"ok\", \"text\": \"Duplicate volcano.\"}\n",
        ),
    )
    .unwrap();
    fs::create_dir(tmp.path().join("dir.jsonl")).unwrap();
    fs::write(
        tmp.path().join("dir.jsonl").join("note.txt"),
        "Title\nVolcano ash cloud.\n",
    )
    .unwrap();
    let cfg = write_config(
        tmp.path(),
        concat!(
            "seed = 1\ndata_dir = \"data\"\n",
            "[[peers]]\npeer_id = \"p1\"\ncorpus = [\"a.jsonl\", \"missing-*.jsonl\", \"dir.jsonl\"]\n",
        ),
    );
    let report = webmap::ingest(&cfg).unwrap();
    assert_eq!(report.documents, 2);
    let messages: Vec<&str> = report.errors.iter().map(|e| e.message.as_str()).collect();
    assert_eq!(messages.len(), 3, "{messages:?}");
    assert!(
        messages.iter().any(|m| m.contains("line 2")),
        "{messages:?}"
    );
    assert!(
        messages.iter().any(|m| m.contains("\"blank\"")),
        "{messages:?}"
    );
    assert!(
        messages.iter().any(|m| m.contains("duplicate")),
        "{messages:?}"
    );
    let store = Store::load(&tmp.path().join("data")).unwrap();
    assert!(store.map.document("note").is_some());
}

#[cfg(unix)]
#[test]
fn unreadable_file_is_recorded() {
    use std::os::unix::fs::PermissionsExt;
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.jsonl");
    let bad = tmp.path().join("locked.jsonl");
    fs::write(&good, "{\"id\": \"g\", \"text\": \"Glacier ice melt.\"}\n").unwrap();
    fs::write(&bad, "{\"id\": \"l\", \"text\": \"Glacier.\"}\n").unwrap();
    fs::set_permissions(&bad, fs::Permissions::from_mode(0o000)).unwrap();
    if fs::read(&bad).is_ok() {
        // Running as root: permissions are not enforced.
        fs::write(&bad, [0xff, 0xfe, 0x00]).unwrap();
    }
    let cfg = write_config(
        tmp.path(),
        "seed = 1\ndata_dir = \"data\"\n[[peers]]\npeer_id = \"p1\"\ncorpus = [\"*.jsonl\"]\n",
    );
    let report = webmap::ingest(&cfg).unwrap();
    assert_eq!(report.documents, 1);
    assert_eq!(report.errors.len(), 1, "{:?}", report.errors);
    assert!(report.errors[0].message.contains("locked.jsonl"));
}
