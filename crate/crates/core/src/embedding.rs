//! Term vectors and similarity math.
//!
//! Two providers stand in for a language model: a deterministic seeded
//! stub, and a table loaded from a JSONL vector file. Every vector handed
//! out by a provider has unit L2 norm.
//!
//! Vector file lines look like
//!
//! ```text
//! {"term": "dog", "vector": [0.1, 0.2, ...]}
//! {"term": "dog", "context_hash": "<16 hex digits>", "vector": [...]}
//! ```
//!
//! A `context_hash` entry wins over the plain term entry when the hash of
//! the occurrence's sentence matches. The hash is [`context_hash`]:
//! 64-bit FNV-1a over the UTF-8 bytes of the sentence, as 16 lowercase hex
//! digits.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default dimension of stub vectors.
pub const DEFAULT_STUB_DIMENSION: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("no embedding for term {0:?}")]
    MissingEmbedding(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate (zero or non-finite) vector")]
    DegenerateVector,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid provider: {0}")]
    InvalidProvider(String),
    #[error("vector file line {line}: {message}")]
    VectorFile { line: usize, message: String },
}

/// A dense real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(components: Vec<f64>) -> Self {
        Vector(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Returns the unit vector pointing the same way.
    pub fn normalized(&self) -> Result<Vector, EmbeddingError> {
        let norm = self.norm();
        if !norm.is_finite() || norm <= f64::EPSILON {
            return Err(EmbeddingError::DegenerateVector);
        }
        Ok(Vector(self.0.iter().map(|x| x / norm).collect()))
    }

    fn add_scaled(&mut self, other: &Vector, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

/// One occurrence of a selected term, with its sentence as context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub term: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub context_window: String,
}

/// Cosine similarity.
pub fn cosine(u: &Vector, v: &Vector) -> Result<f64, EmbeddingError> {
    if u.dim() != v.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    let (uu, vv) = (u.dot(u), v.dot(v));
    if uu == 0.0 || vv == 0.0 || !uu.is_finite() || !vv.is_finite() {
        return Err(EmbeddingError::DegenerateVector);
    }
    // sqrt(x * x) == x in IEEE arithmetic, so cosine(u, u) is exactly 1.
    Ok((u.dot(v) / (uu * vv).sqrt()).clamp(-1.0, 1.0))
}

/// Component-wise mean of `vectors`, re-normalized to unit length.
pub fn mean_normalized<'a, I>(vectors: I) -> Result<Vector, EmbeddingError>
where
    I: IntoIterator<Item = &'a Vector>,
{
    let mut iter = vectors.into_iter();
    let first = iter.next().ok_or(EmbeddingError::EmptyInput)?;
    let mut acc = first.clone();
    let mut n = 1usize;
    for v in iter {
        if v.dim() != acc.dim() {
            return Err(EmbeddingError::DimensionMismatch {
                expected: acc.dim(),
                got: v.dim(),
            });
        }
        acc.add_scaled(v, 1.0);
        n += 1;
    }
    let mean = Vector(acc.0.into_iter().map(|x| x / n as f64).collect());
    mean.normalized()
}

/// 64-bit FNV-1a over `bytes`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

/// Hash of a sentence as used by `context_hash` entries in vector files.
pub fn context_hash(sentence: &str) -> String {
    format!("{:016x}", fnv1a64(sentence.as_bytes()))
}

/// Seeded hash-to-vector stub.
///
/// An occurrence vector is `normalize(t + context_mix * c)` where `t` is a
/// unit Gaussian vector seeded by the term and `c` one seeded by the
/// sentence. Terms sharing a sentence therefore lean towards each other.
#[derive(Debug, Clone, PartialEq)]
pub struct StubProvider {
    pub seed: u64,
    pub dimension: usize,
    pub context_mix: f64,
}

impl StubProvider {
    pub fn new(seed: u64, dimension: usize) -> Result<Self, EmbeddingError> {
        Self::with_context_mix(seed, dimension, 1.0)
    }

    pub fn with_context_mix(
        seed: u64,
        dimension: usize,
        context_mix: f64,
    ) -> Result<Self, EmbeddingError> {
        if dimension < 2 {
            return Err(EmbeddingError::InvalidProvider(format!(
                "dimension must be at least 2, got {dimension}"
            )));
        }
        if !context_mix.is_finite() || context_mix < 0.0 {
            return Err(EmbeddingError::InvalidProvider(format!(
                "context_mix must be finite and non-negative, got {context_mix}"
            )));
        }
        Ok(Self {
            seed,
            dimension,
            context_mix,
        })
    }

    fn seeded_unit(&self, tag: &[u8], text: &str) -> Vector {
        let mut bytes = Vec::with_capacity(8 + tag.len() + text.len() + 1);
        bytes.extend_from_slice(&self.seed.to_le_bytes());
        bytes.extend_from_slice(tag);
        bytes.push(0);
        bytes.extend_from_slice(text.as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(&bytes));
        loop {
            let raw: Vec<f64> = (0..self.dimension)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            // A Gaussian draw of zero length is practically impossible; redraw if it happens.
            if let Ok(v) = Vector(raw).normalized() {
                return v;
            }
        }
    }

    fn embed(&self, term: &str, context: &str) -> Vector {
        let mut v = self.seeded_unit(b"term", term);
        if self.context_mix > 0.0 {
            let c = self.seeded_unit(b"context", context);
            v.add_scaled(&c, self.context_mix);
        }
        // t and c are independent Gaussian directions, so t + c only vanishes
        // in the measure-zero antipodal case; fall back to the term vector.
        v.normalized()
            .unwrap_or_else(|_| self.seeded_unit(b"term", term))
    }
}

/// Vectors loaded from a JSONL file.
#[derive(Debug, Clone, Default)]
pub struct FileProvider {
    dimension: usize,
    by_term: HashMap<String, Vector>,
    by_context: HashMap<(String, String), Vector>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorLine {
    term: String,
    #[serde(default)]
    context_hash: Option<String>,
    vector: Vec<f64>,
}

impl FileProvider {
    /// Builds a provider from `(term, optional context hash, vector)` entries.
    pub fn from_entries<I>(entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Option<String>, Vec<f64>)>,
    {
        let mut provider = FileProvider::default();
        for (i, (term, ctx, vector)) in entries.into_iter().enumerate() {
            provider
                .insert(term, ctx, vector)
                .map_err(|e| EmbeddingError::VectorFile {
                    line: i + 1,
                    message: e.to_string(),
                })?;
        }
        if provider.dimension == 0 {
            return Err(EmbeddingError::InvalidProvider(
                "vector table is empty".into(),
            ));
        }
        Ok(provider)
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut provider = FileProvider::default();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| EmbeddingError::VectorFile {
                line: line_no,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: VectorLine =
                serde_json::from_str(&line).map_err(|e| EmbeddingError::VectorFile {
                    line: line_no,
                    message: e.to_string(),
                })?;
            provider
                .insert(parsed.term, parsed.context_hash, parsed.vector)
                .map_err(|e| EmbeddingError::VectorFile {
                    line: line_no,
                    message: e.to_string(),
                })?;
        }
        if provider.dimension == 0 {
            return Err(EmbeddingError::InvalidProvider(
                "vector file has no entries".into(),
            ));
        }
        Ok(provider)
    }

    pub fn from_path(path: &Path) -> Result<Self, EmbeddingError> {
        let file = std::fs::File::open(path)
            .map_err(|e| EmbeddingError::InvalidProvider(format!("{}: {e}", path.display())))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    fn insert(
        &mut self,
        term: String,
        ctx: Option<String>,
        vector: Vec<f64>,
    ) -> Result<(), EmbeddingError> {
        if term.is_empty() {
            return Err(EmbeddingError::InvalidProvider("empty term".into()));
        }
        if vector.len() < 2 {
            return Err(EmbeddingError::InvalidProvider(format!(
                "vector for {term:?} has dimension {} (< 2)",
                vector.len()
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::DegenerateVector);
        }
        if self.dimension == 0 {
            self.dimension = vector.len();
        } else if vector.len() != self.dimension {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dimension,
                got: vector.len(),
            });
        }
        let unit = Vector(vector).normalized()?;
        match ctx {
            Some(hash) => {
                self.by_context
                    .insert((term, hash.to_ascii_lowercase()), unit);
            }
            None => {
                self.by_term.insert(term, unit);
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    fn lookup(&self, term: &str, context: &str) -> Result<Vector, EmbeddingError> {
        if !self.by_context.is_empty() {
            let key = (term.to_string(), context_hash(context));
            if let Some(v) = self.by_context.get(&key) {
                return Ok(v.clone());
            }
        }
        self.by_term
            .get(term)
            .cloned()
            .ok_or_else(|| EmbeddingError::MissingEmbedding(term.to_string()))
    }
}

/// Source of occurrence embeddings. Immutable once built.
#[derive(Debug, Clone)]
pub enum EmbeddingProvider {
    Stub(StubProvider),
    File(FileProvider),
}

impl EmbeddingProvider {
    pub fn stub(seed: u64, dimension: usize) -> Result<Self, EmbeddingError> {
        Ok(EmbeddingProvider::Stub(StubProvider::new(seed, dimension)?))
    }

    pub fn dimension(&self) -> usize {
        match self {
            EmbeddingProvider::Stub(s) => s.dimension,
            EmbeddingProvider::File(f) => f.dimension,
        }
    }

    /// Unit-norm embedding of one occurrence.
    pub fn embed_occurrence(&self, occ: &Occurrence) -> Result<Vector, EmbeddingError> {
        if occ.term.is_empty() {
            return Err(EmbeddingError::EmptyInput);
        }
        match self {
            EmbeddingProvider::Stub(s) => Ok(s.embed(&occ.term, &occ.context_window)),
            EmbeddingProvider::File(f) => f.lookup(&occ.term, &occ.context_window),
        }
    }

    /// Averages the occurrence embeddings of one term within one document.
    pub fn averaged_term_embedding(&self, occs: &[Occurrence]) -> Result<Vector, EmbeddingError> {
        let first = occs.first().ok_or(EmbeddingError::EmptyInput)?;
        if occs
            .iter()
            .any(|o| o.term != first.term || o.doc_id != first.doc_id)
        {
            return Err(EmbeddingError::InvalidProvider(
                "occurrences must share term and document".into(),
            ));
        }
        if let [single] = occs {
            return self.embed_occurrence(single);
        }
        let vectors = occs
            .iter()
            .map(|o| self.embed_occurrence(o))
            .collect::<Result<Vec<_>, _>>()?;
        mean_normalized(&vectors)
    }
}

impl From<StubProvider> for EmbeddingProvider {
    fn from(s: StubProvider) -> Self {
        EmbeddingProvider::Stub(s)
    }
}

impl From<FileProvider> for EmbeddingProvider {
    fn from(f: FileProvider) -> Self {
        EmbeddingProvider::File(f)
    }
}
