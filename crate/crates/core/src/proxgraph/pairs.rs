use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbeddingError, EmbeddingProvider, Occurrence, Vector};

use super::Document;

/// A similarity observation for two distinct terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    pub term_a: String,
    pub term_b: String,
    pub similarity: f64,
}

impl SimilarityPair {
    pub fn new(a: impl Into<String>, b: impl Into<String>, similarity: f64) -> Self {
        Self {
            term_a: a.into(),
            term_b: b.into(),
            similarity,
        }
    }
}

/// Which of the two pair-comparison strategies to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Approach {
    /// Average each term's occurrence embeddings, compare every pair of averages.
    #[serde(rename = "A")]
    Averaged,
    /// Compare occurrence embeddings of terms sharing a sentence, mean over sentences.
    #[serde(rename = "B")]
    Sentence,
}

/// Averaged (unit) embedding of every distinct term in `doc`, keyed by term.
pub fn averaged_embeddings(
    provider: &EmbeddingProvider,
    doc: &Document,
) -> Result<BTreeMap<String, Vector>, EmbeddingError> {
    doc.occurrences_by_term()
        .into_iter()
        .map(|(term, occs)| Ok((term.to_string(), provider.averaged_term_embedding(&occs)?)))
        .collect()
}

pub fn pairs_approach_a(
    provider: &EmbeddingProvider,
    doc: &Document,
) -> Result<Vec<SimilarityPair>, EmbeddingError> {
    let averaged = averaged_embeddings(provider, doc)?;
    if averaged.len() < 2 {
        return Ok(Vec::new());
    }
    let entries: Vec<(&String, &Vector)> = averaged.iter().collect();
    let mut out = Vec::with_capacity(entries.len() * (entries.len() - 1) / 2);
    for (i, (a, va)) in entries.iter().enumerate() {
        for (b, vb) in &entries[i + 1..] {
            out.push(SimilarityPair::new(*a, *b, cosine(va, vb)?));
        }
    }
    Ok(out)
}

pub fn pairs_approach_b(
    provider: &EmbeddingProvider,
    doc: &Document,
) -> Result<Vec<SimilarityPair>, EmbeddingError> {
    // sentence -> term -> first occurrence in that sentence
    let mut by_sentence: BTreeMap<usize, BTreeMap<&str, &Occurrence>> = BTreeMap::new();
    for o in &doc.selected_terms {
        by_sentence
            .entry(o.sentence_index)
            .or_default()
            .entry(o.term.as_str())
            .or_insert(o);
    }
    let mut sums: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    for terms in by_sentence.values() {
        let embedded = terms
            .iter()
            .map(|(t, o)| Ok((*t, provider.embed_occurrence(o)?)))
            .collect::<Result<Vec<_>, EmbeddingError>>()?;
        for (i, (a, va)) in embedded.iter().enumerate() {
            for (b, vb) in &embedded[i + 1..] {
                let entry = sums.entry((a, b)).or_insert((0.0, 0));
                entry.0 += cosine(va, vb)?;
                entry.1 += 1;
            }
        }
    }
    Ok(sums
        .into_iter()
        .map(|((a, b), (sum, n))| SimilarityPair::new(a, b, sum / n as f64))
        .collect())
}

pub fn compute_pairs(
    approach: Approach,
    provider: &EmbeddingProvider,
    doc: &Document,
) -> Result<Vec<SimilarityPair>, EmbeddingError> {
    match approach {
        Approach::Averaged => pairs_approach_a(provider, doc),
        Approach::Sentence => pairs_approach_b(provider, doc),
    }
}
