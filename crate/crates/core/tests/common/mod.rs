//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use repoctx::chunker::split_lines;
use repoctx::{tokenize, Chunk};

pub const VOCAB: &[&str] = &[
    "add", "user", "getUser", "name", "HTTPServer", "x1", "parse", "value", "count", "self",
    "return", "list", "map", "key", "item", "index", "fooBar", "node", "tree", "data",
];

pub fn chunk(id: &str, text: &str) -> Chunk {
    Chunk {
        id: id.to_owned(),
        file_path: id.split(':').next().unwrap_or(id).to_owned(),
        start_line: 1,
        end_line: 1,
        text: text.to_owned(),
        prev_id: None,
        next_id: None,
    }
}

pub fn random_text<R: Rng>(rng: &mut R, max_tokens: usize) -> String {
    let n = rng.random_range(0..=max_tokens);
    let sep = [" ", "(", ".", ", ", "\n", "_"];
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push_str(sep[rng.random_range(0..sep.len())]);
        }
        out.push_str(VOCAB[rng.random_range(0..VOCAB.len())]);
    }
    out
}

/// Chunk ranges by scanning every start line and keeping those allowed by
/// the stride and the minimum-new-lines rule.
pub fn oracle_ranges(lines: usize, n: usize, m: usize) -> Vec<(usize, usize)> {
    let stride = n - m;
    (1..=lines)
        .filter(|&s| (s - 1) % stride == 0)
        .filter(|&s| s == 1 || s + m <= lines)
        .map(|s| (s, (s + n - 1).min(lines)))
        .collect()
}

/// Checks coverage, exact overlap, link integrity and reconstruction.
pub fn check_chunks(content: &str, chunks: &[Chunk], n: usize, m: usize) -> Result<(), String> {
    let lines = split_lines(content);
    if lines.is_empty() {
        return if chunks.is_empty() {
            Ok(())
        } else {
            Err("chunks for empty content".into())
        };
    }
    let mut covered = vec![false; lines.len()];
    for c in chunks {
        if c.start_line < 1 || c.end_line > lines.len() || c.start_line > c.end_line {
            return Err(format!("bad range {}", c.id));
        }
        if c.end_line - c.start_line + 1 > n {
            return Err(format!("{} longer than {n}", c.id));
        }
        if c.text != lines[c.start_line - 1..c.end_line].join("\n") {
            return Err(format!("{} text mismatch", c.id));
        }
        if c.id != format!("{}:{}-{}", c.file_path, c.start_line, c.end_line) {
            return Err(format!("{} id format", c.id));
        }
        covered[c.start_line - 1..c.end_line].iter_mut().for_each(|v| *v = true);
    }
    if covered.iter().any(|v| !v) {
        return Err("uncovered line".into());
    }
    for pair in chunks.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let overlap = (a.end_line + 1).saturating_sub(b.start_line);
        if overlap != m {
            return Err(format!("overlap {overlap} between {} and {}", a.id, b.id));
        }
        if a.next_id.as_deref() != Some(b.id.as_str()) || b.prev_id.as_deref() != Some(a.id.as_str()) {
            return Err(format!("broken link {} <-> {}", a.id, b.id));
        }
    }
    if chunks[0].prev_id.is_some() || chunks[chunks.len() - 1].next_id.is_some() {
        return Err("dangling end link".into());
    }
    let mut rebuilt: Vec<&str> = Vec::new();
    for (i, c) in chunks.iter().enumerate() {
        let skip = if i == 0 { 0 } else { m };
        rebuilt.extend(c.text.split('\n').skip(skip));
    }
    if rebuilt != lines.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err("reconstruction differs".into());
    }
    Ok(())
}

/// BM25 over `docs` (id, text) recomputing every statistic per query.
pub fn oracle_bm25(docs: &[(String, String)], query: &str, k1: f64, b: f64, top_n: usize) -> Vec<(String, f64)> {
    let tokenized: Vec<Vec<String>> = docs.iter().map(|(_, t)| tokenize(t)).collect();
    let n = docs.len() as f64;
    if docs.is_empty() {
        return Vec::new();
    }
    let avgdl = tokenized.iter().map(Vec::len).sum::<usize>() as f64 / n;

    let q = tokenize(query);
    let mut distinct: Vec<&String> = Vec::new();
    for t in &q {
        if !distinct.contains(&t) {
            distinct.push(t);
        }
    }

    let mut scored = Vec::new();
    for (d, (id, _)) in docs.iter().enumerate() {
        let dl = tokenized[d].len() as f64;
        let mut score = 0.0;
        let mut touched = false;
        for term in &distinct {
            let tf = tokenized[d].iter().filter(|t| t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            touched = true;
            let df = tokenized.iter().filter(|doc| doc.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            let qtf = q.iter().filter(|t| t == term).count() as f64;
            score += qtf * (idf * norm);
        }
        if touched && score > 0.0 {
            scored.push((id.clone(), score));
        }
    }
    sort_truncate(scored, top_n)
}

pub fn sort_truncate(mut scored: Vec<(String, f64)>, top_n: usize) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(top_n);
    scored
}

/// Weighted reciprocal rank fusion; ranks are 1-based list positions of the
/// first occurrence.
pub fn oracle_rrf(lists: &[Vec<String>], weights: &[f64], k: f64, top_n: usize) -> Vec<(String, f64)> {
    let mut ids: Vec<&String> = lists.iter().flatten().collect();
    ids.sort();
    ids.dedup();
    let scored = ids
        .into_iter()
        .map(|id| {
            let score = lists
                .iter()
                .zip(weights)
                .filter_map(|(list, w)| list.iter().position(|x| x == id).map(|p| w / (k + (p + 1) as f64)))
                .sum();
            (id.clone(), score)
        })
        .collect();
    sort_truncate(scored, top_n)
}

fn grams(s: &[char], n: usize) -> Vec<String> {
    if s.len() < n {
        return Vec::new();
    }
    (0..=s.len() - n).map(|i| s[i..i + n].iter().collect()).collect()
}

/// chrF from explicit n-gram lists and pairwise counting.
pub fn oracle_chrf(reference: &str, hypothesis: &str, n_max: usize, beta: f64) -> f64 {
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let h: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    if r.is_empty() && h.is_empty() {
        return 1.0;
    }
    if r.is_empty() || h.is_empty() {
        return 0.0;
    }
    let (mut p, mut rc, mut orders) = (0.0, 0.0, 0.0);
    for n in 1..=n_max {
        let rg = grams(&r, n);
        if rg.is_empty() {
            continue;
        }
        let hg = grams(&h, n);
        let mut rcount: BTreeMap<&str, usize> = BTreeMap::new();
        for g in &rg {
            *rcount.entry(g).or_default() += 1;
        }
        let mut matched = 0usize;
        for g in &hg {
            if let Some(c) = rcount.get_mut(g.as_str()) {
                if *c > 0 {
                    *c -= 1;
                    matched += 1;
                }
            }
        }
        if !hg.is_empty() {
            p += matched as f64 / hg.len() as f64;
        }
        rc += matched as f64 / rg.len() as f64;
        orders += 1.0;
    }
    let (p, rc) = (p / orders, rc / orders);
    if p + rc == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * p * rc / (b2 * p + rc)
}

/// Cosine similarity of unnormalized signed token-count vectors.
pub fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Checks `actual` against the untruncated oracle ranking `full`: same length
/// after truncation to `top_n`, scores within `tol`, and ids equal except for
/// swaps among entries whose scores differ by less than `tol`.
pub fn same_ranking(actual: &[(String, f64)], full: &[(String, f64)], top_n: usize, tol: f64) -> Result<(), String> {
    if actual.len() != full.len().min(top_n) {
        return Err(format!("length {} vs {}", actual.len(), full.len().min(top_n)));
    }
    for (i, (a, e)) in actual.iter().zip(full).enumerate() {
        if (a.1 - e.1).abs() > tol {
            return Err(format!("rank {}: score {} vs {}", i + 1, a.1, e.1));
        }
        if a.0 != e.0 {
            let tied = full.iter().any(|(id, s)| *id == a.0 && (s - a.1).abs() <= tol);
            if !tied {
                return Err(format!("rank {}: {} vs {}", i + 1, a.0, e.0));
            }
        }
    }
    Ok(())
}
