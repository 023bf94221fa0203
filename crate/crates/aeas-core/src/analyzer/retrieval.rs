//! Lexical retrieval over chunked artifact text.
//!
//! Documents are split into fixed 400-word windows with a 50-word overlap.
//! Chunks are ranked by summed term-frequency × inverse-document-frequency
//! of the query terms; ties resolve deterministically by document order,
//! then chunk order.

use std::collections::{BTreeMap, BTreeSet};

pub const CHUNK_WORDS: usize = 400;
pub const CHUNK_OVERLAP: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    /// Index of the source document in the input order.
    pub doc_index: usize,
    /// Index of this chunk within its document.
    pub chunk_index: usize,
    /// Human-readable source label (file path or document URL).
    pub label: String,
    pub text: String,
}

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

/// Split labeled documents into overlapping word windows.
pub fn chunk_documents(documents: &[(String, String)]) -> Vec<Chunk> {
    let mut chunks = Vec::new();
    for (doc_index, (label, text)) in documents.iter().enumerate() {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            continue;
        }
        let stride = CHUNK_WORDS - CHUNK_OVERLAP;
        let mut start = 0;
        let mut chunk_index = 0;
        loop {
            let end = (start + CHUNK_WORDS).min(words.len());
            chunks.push(Chunk {
                doc_index,
                chunk_index,
                label: label.clone(),
                text: words[start..end].join(" "),
            });
            if end == words.len() {
                break;
            }
            start += stride;
            chunk_index += 1;
        }
    }
    chunks
}

/// Score one chunk against unique query terms:
/// `Σ tf(term, chunk) · ln(1 + N / (1 + df(term)))`.
fn score_chunk(
    chunk_tokens: &BTreeMap<String, usize>,
    query_terms: &BTreeSet<String>,
    df: &BTreeMap<String, usize>,
    n_chunks: usize,
) -> f64 {
    query_terms
        .iter()
        .map(|term| {
            let tf = *chunk_tokens.get(term).unwrap_or(&0) as f64;
            let d = *df.get(term).unwrap_or(&0) as f64;
            tf * (1.0 + n_chunks as f64 / (1.0 + d)).ln()
        })
        .sum()
}

/// Retrieve the `k` most relevant chunks for a query. Fewer than `k`
/// available chunks returns them all; `k = 0` returns an empty list.
pub fn index_and_retrieve(query: &str, documents: &[(String, String)], k: usize) -> Vec<Chunk> {
    if k == 0 {
        return Vec::new();
    }
    let chunks = chunk_documents(documents);
    if chunks.is_empty() {
        return Vec::new();
    }
    let query_terms: BTreeSet<String> = tokenize(query).into_iter().collect();

    let token_counts: Vec<BTreeMap<String, usize>> = chunks
        .iter()
        .map(|c| {
            let mut counts = BTreeMap::new();
            for token in tokenize(&c.text) {
                *counts.entry(token).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for counts in &token_counts {
        for term in &query_terms {
            if counts.contains_key(term) {
                *df.entry(term.clone()).or_insert(0) += 1;
            }
        }
    }

    let mut scored: Vec<(f64, &Chunk)> = chunks
        .iter()
        .zip(&token_counts)
        .map(|(chunk, counts)| (score_chunk(counts, &query_terms, &df, chunks.len()), chunk))
        .collect();
    scored.sort_by(|(sa, ca), (sb, cb)| {
        sb.partial_cmp(sa)
            .expect("scores are finite")
            .then_with(|| ca.doc_index.cmp(&cb.doc_index))
            .then_with(|| ca.chunk_index.cmp(&cb.chunk_index))
    });
    scored.into_iter().take(k).map(|(_, c)| c.clone()).collect()
}
