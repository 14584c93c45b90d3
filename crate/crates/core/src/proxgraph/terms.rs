use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::embedding::Occurrence;

use super::ProxGraphError;

/// Small English stopword list used when no list is configured.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "about", "above", "across", "after", "again", "against", "all", "along", "also", "among",
    "and", "any", "are", "around", "because", "been", "before", "being", "below", "between",
    "both", "but", "can", "could", "did", "does", "doing", "down", "during", "each", "every",
    "few", "for", "from", "further", "had", "has", "have", "having", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "into", "its", "itself", "just", "many", "may",
    "might", "more", "most", "much", "must", "not", "now", "off", "once", "only", "other", "our",
    "ours", "out", "over", "own", "same", "she", "should", "some", "such", "than", "that", "the",
    "their", "theirs", "them", "then", "there", "these", "they", "this", "those", "through", "too",
    "under", "until", "very", "was", "were", "what", "when", "where", "which", "while", "who",
    "whom", "whose", "why", "will", "with", "within", "without", "would", "yet", "you", "your",
    "yours",
];

/// How terms are picked out of raw text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermSelector {
    pub min_len: usize,
    pub stopwords: BTreeSet<String>,
    /// When set, only tokens matching an entry (case-insensitively) are selected.
    pub allowlist: Option<BTreeSet<String>>,
}

impl Default for TermSelector {
    fn default() -> Self {
        Self {
            min_len: 3,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            allowlist: None,
        }
    }
}

impl TermSelector {
    pub fn with_stopwords<I, S>(stopwords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            stopwords: stopwords
                .into_iter()
                .map(|s| s.into().to_lowercase())
                .collect(),
            ..Self::default()
        }
    }

    pub fn with_allowlist<I, S>(mut self, terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.allowlist = Some(terms.into_iter().map(Into::into).collect());
        self
    }

    /// Parses an allowlist file body: one term per line, blank lines and `#` comments ignored.
    pub fn parse_allowlist(body: &str) -> BTreeSet<String> {
        body.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect()
    }

    fn pick(&self, token: &str, position: usize) -> Option<String> {
        let lower = token.to_lowercase();
        if let Some(allow) = &self.allowlist {
            return allow
                .iter()
                .find(|entry| entry.to_lowercase() == lower)
                .cloned();
        }
        if token.chars().count() < self.min_len || self.stopwords.contains(&lower) {
            return None;
        }
        let capitalized = token.chars().next().is_some_and(char::is_uppercase);
        if capitalized && position > 0 {
            // proper-noun candidate
            Some(token.to_string())
        } else {
            Some(lower)
        }
    }
}

/// A local text document with its selected term occurrences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub url: String,
    pub title: String,
    pub sentences: Vec<String>,
    pub selected_terms: Vec<Occurrence>,
}

impl Document {
    /// Distinct selected terms, sorted.
    pub fn distinct_terms(&self) -> BTreeSet<&str> {
        self.selected_terms
            .iter()
            .map(|o| o.term.as_str())
            .collect()
    }

    /// Occurrences grouped by term, sorted by term.
    pub fn occurrences_by_term(&self) -> BTreeMap<&str, Vec<Occurrence>> {
        let mut map: BTreeMap<&str, Vec<Occurrence>> = BTreeMap::new();
        for o in &self.selected_terms {
            map.entry(o.term.as_str()).or_default().push(o.clone());
        }
        map
    }

    /// Sentence indices in which each term occurs.
    pub fn sentences_by_term(&self) -> BTreeMap<&str, BTreeSet<usize>> {
        let mut map: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for o in &self.selected_terms {
            map.entry(o.term.as_str())
                .or_default()
                .insert(o.sentence_index);
        }
        map
    }

    /// Most frequent term (ties: lexicographically smallest).
    pub fn most_frequent_term(&self) -> Option<&str> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for o in &self.selected_terms {
            *counts.entry(o.term.as_str()).or_default() += 1;
        }
        counts
            .into_iter()
            .fold(None, |best: Option<(&str, usize)>, (t, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((t, c)),
            })
            .map(|(t, _)| t)
    }
}

/// Splits text into sentences at `.`, `!` or `?` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            if let Some(&(_, next)) = chars.peek() {
                if next.is_whitespace() {
                    let end = i + c.len_utf8();
                    push_trimmed(&mut out, &text[start..end]);
                    start = end;
                }
            }
        }
    }
    push_trimmed(&mut out, &text[start..]);
    out
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

fn tokens(sentence: &str) -> impl Iterator<Item = &str> {
    sentence
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
}

/// Turns raw text into a [`Document`] with selected term occurrences.
pub fn select_terms(
    id: &str,
    url: &str,
    title: &str,
    text: &str,
    selector: &TermSelector,
) -> Result<Document, ProxGraphError> {
    if text.trim().is_empty() {
        return Err(ProxGraphError::EmptyInput);
    }
    let sentences = split_sentences(text);
    let mut selected_terms = Vec::new();
    for (sentence_index, sentence) in sentences.iter().enumerate() {
        for (position, token) in tokens(sentence).enumerate() {
            if let Some(term) = selector.pick(token, position) {
                selected_terms.push(Occurrence {
                    term,
                    doc_id: id.to_string(),
                    sentence_index,
                    context_window: sentence.clone(),
                });
            }
        }
    }
    Ok(Document {
        id: id.to_string(),
        url: url.to_string(),
        title: title.to_string(),
        sentences,
        selected_terms,
    })
}
