//! Okapi BM25 over a code-aware token stream.

use std::collections::HashMap;

use crate::chunker::Chunk;
use crate::ranking::{rank_scores, RankedHit};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

/// Lowercased identifier pieces. Splits on any non-alphanumeric character and
/// on camelCase boundaries (`getUser` -> get, user; `HTTPServer` -> http,
/// server). Digits stay attached to the run they occur in.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let chars: Vec<char> = text.chars().collect();

    let flush = |current: &mut String, tokens: &mut Vec<String>| {
        if !current.is_empty() {
            tokens.push(current.to_lowercase());
            current.clear();
        }
    };

    for (i, &ch) in chars.iter().enumerate() {
        if !ch.is_alphanumeric() {
            flush(&mut current, &mut tokens);
            continue;
        }
        if ch.is_uppercase() && !current.is_empty() {
            let prev = chars[i - 1];
            let next_is_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            if prev.is_lowercase() || prev.is_numeric() || (prev.is_uppercase() && next_is_lower) {
                flush(&mut current, &mut tokens);
            }
        }
        current.push(ch);
    }
    flush(&mut current, &mut tokens);
    tokens
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self {
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Posting {
    doc: u32,
    tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalIndex {
    params: Bm25Params,
    chunk_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: HashMap<String, Vec<Posting>>,
    avg_doc_length: f64,
}

impl LexicalIndex {
    pub fn build(chunks: &[Chunk], params: Bm25Params) -> Self {
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut chunk_ids = Vec::with_capacity(chunks.len());
        let mut doc_lengths = Vec::with_capacity(chunks.len());

        for (doc, chunk) in chunks.iter().enumerate() {
            let tokens = tokenize(&chunk.text);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for token in &tokens {
                *tf.entry(token.clone()).or_default() += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push(Posting {
                    doc: doc as u32,
                    tf: count,
                });
            }
            chunk_ids.push(chunk.id.clone());
            doc_lengths.push(tokens.len() as u32);
        }

        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            total as f64 / doc_lengths.len() as f64
        };

        Self {
            params,
            chunk_ids,
            doc_lengths,
            postings,
            avg_doc_length,
        }
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_length(&self, chunk_id: &str) -> Option<usize> {
        self.chunk_ids
            .iter()
            .position(|id| id == chunk_id)
            .map(|i| self.doc_lengths[i] as usize)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, never negative.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Scores every chunk sharing a token with `text`. Repeated query tokens
    /// contribute once per occurrence. Zero-score chunks are omitted.
    pub fn query(&self, text: &str, top_n: usize) -> Vec<RankedHit> {
        if self.doc_count() == 0 || top_n == 0 {
            return Vec::new();
        }
        let Bm25Params { k1, b } = self.params;

        // distinct terms in first-occurrence order with their multiplicity
        let mut terms: Vec<(String, f64)> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for token in tokenize(text) {
            match seen.get(&token) {
                Some(&i) => terms[i].1 += 1.0,
                None => {
                    seen.insert(token.clone(), terms.len());
                    terms.push((token, 1.0));
                }
            }
        }

        let mut scores = vec![0.0_f64; self.doc_count()];
        let mut touched = vec![false; self.doc_count()];
        for (term, multiplicity) in &terms {
            let Some(postings) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for posting in postings {
                let doc = posting.doc as usize;
                let tf = f64::from(posting.tf);
                let dl = f64::from(self.doc_lengths[doc]);
                let norm = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avg_doc_length));
                scores[doc] += multiplicity * (idf * norm);
                touched[doc] = true;
            }
        }

        let scored = scores
            .into_iter()
            .enumerate()
            .filter(|&(doc, score)| touched[doc] && score > 0.0)
            .map(|(doc, score)| (self.chunk_ids[doc].clone(), score));
        rank_scores(scored, top_n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(id: &str, text: &str) -> Chunk {
        Chunk {
            id: id.into(),
            file_path: "f".into(),
            start_line: 1,
            end_line: 1,
            text: text.into(),
            prev_id: None,
            next_id: None,
        }
    }

    #[test]
    fn tokenizer_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("getUserName(id)"), ["get", "user", "name", "id"]);
        assert_eq!(tokenize("foo_bar foo_bar"), ["foo", "bar", "foo", "bar"]);
        assert_eq!(tokenize("HTTPServer x2 42"), ["http", "server", "x2", "42"]);
        assert_eq!(tokenize("utf8Decoder"), ["utf8", "decoder"]);
        assert_eq!(tokenize("  ::  "), Vec::<String>::new());
    }

    #[test]
    fn empty_index() {
        let index = LexicalIndex::build(&[], Bm25Params::default());
        assert_eq!(index.doc_count(), 0);
        assert_eq!(index.avg_doc_length(), 0.0);
        assert!(index.query("anything", 10).is_empty());
    }

    #[test]
    fn doc_lengths_and_average() {
        let index = LexicalIndex::build(&[chunk("1", "a b"), chunk("2", "a")], Bm25Params::default());
        assert_eq!(index.doc_length("1"), Some(2));
        assert_eq!(index.doc_length("2"), Some(1));
        assert_eq!(index.avg_doc_length(), 1.5);
    }

    #[test]
    fn single_matching_document() {
        let corpus = [
            chunk("d1", "fn add a b"),
            chunk("d2", "fn mul a b"),
            chunk("d3", "import os"),
        ];
        let index = LexicalIndex::build(&corpus, Bm25Params::default());
        let hits = index.query("add", 10);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].chunk_id, "d1");
        assert_eq!(hits[0].rank, 1);
        // df(add) = 1 of 3 docs, |d1| = 4, avgdl = 10/3
        let avg = 10.0 / 3.0;
        let expected = (1.0_f64 + 2.5 / 1.5).ln() * 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * 4.0 / avg));
        assert!((hits[0].score - expected).abs() < 1e-12);
    }

    #[test]
    fn unknown_terms_and_empty_query() {
        let index = LexicalIndex::build(&[chunk("1", "alpha beta")], Bm25Params::default());
        assert!(index.query("gamma", 5).is_empty());
        assert!(index.query("", 5).is_empty());
        assert!(index.query("alpha", 0).is_empty());
    }

    #[test]
    fn deterministic_rebuild() {
        let corpus = [chunk("1", "x y z"), chunk("2", "y z"), chunk("3", "z")];
        let a = LexicalIndex::build(&corpus, Bm25Params::default());
        let b = LexicalIndex::build(&corpus, Bm25Params::default());
        assert_eq!(a, b);
        assert_eq!(a.query("z y", 3), b.query("z y", 3));
    }
}
