//! Corpus input: JSONL files of [`CorpusRecord`]s or directories of `.txt`
//! files (file stem is the id, first line the title).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::WebmapError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: String,
    #[serde(default)]
    pub url: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

/// Records read from a set of corpus sources plus the per-source problems.
#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub records: Vec<CorpusRecord>,
    pub errors: Vec<WebmapError>,
}

/// Expands `patterns` (relative to `base`) and reads every match in sorted
/// order. Patterns matching nothing are reported as warnings only.
pub fn load_corpus(base: &Path, patterns: &[String]) -> CorpusLoad {
    let mut out = CorpusLoad::default();
    for pattern in patterns {
        let full = if Path::new(pattern).is_absolute() {
            PathBuf::from(pattern)
        } else {
            base.join(pattern)
        };
        let matches = match glob::glob(&full.to_string_lossy()) {
            Ok(paths) => paths,
            Err(e) => {
                out.errors.push(WebmapError::Corpus {
                    path: full,
                    message: format!("bad glob pattern: {e}"),
                });
                continue;
            }
        };
        let mut paths = Vec::new();
        for m in matches {
            match m {
                Ok(p) => paths.push(p),
                Err(e) => out.errors.push(WebmapError::Corpus {
                    path: e.path().to_path_buf(),
                    message: e.error().to_string(),
                }),
            }
        }
        if paths.is_empty() {
            tracing::warn!(pattern = %full.display(), "corpus pattern matched no files");
        }
        paths.sort();
        for path in paths {
            let label = path.strip_prefix(base).unwrap_or(&path).to_path_buf();
            if path.is_dir() {
                read_text_dir(&path, &label, &mut out);
            } else {
                read_jsonl(&path, &mut out);
            }
        }
    }
    out
}

fn read_jsonl(path: &Path, out: &mut CorpusLoad) {
    let body = match fs::read_to_string(path) {
        Ok(b) => b,
        Err(e) => {
            out.errors.push(WebmapError::Corpus {
                path: path.to_path_buf(),
                message: e.to_string(),
            });
            return;
        }
    };
    for (n, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CorpusRecord>(line) {
            Ok(r) => out.records.push(r),
            Err(e) => out.errors.push(WebmapError::Corpus {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", n + 1),
            }),
        }
    }
}

fn read_text_dir(dir: &Path, label: &Path, out: &mut CorpusLoad) {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) => {
            out.errors.push(WebmapError::Corpus {
                path: dir.to_path_buf(),
                message: e.to_string(),
            });
            return;
        }
    };
    let mut files: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    for file in files {
        match fs::read_to_string(&file) {
            Ok(body) => out.records.push(text_record(&file, label, &body)),
            Err(e) => out.errors.push(WebmapError::Corpus {
                path: file,
                message: e.to_string(),
            }),
        }
    }
}

fn text_record(file: &Path, label: &Path, body: &str) -> CorpusRecord {
    let stem = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let (title, text) = match body.split_once('\n') {
        Some((first, rest)) => (first.trim(), rest),
        None => (body.trim(), ""),
    };
    let name = file
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    CorpusRecord {
        url: format!("file:{}/{}", label.display(), name),
        title: title.to_string(),
        text: text.to_string(),
        id: stem,
    }
}
