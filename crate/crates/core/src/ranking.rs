use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// One entry of a ranked result list. Ranks are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub chunk_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Descending score, ties broken by ascending chunk id.
pub fn hit_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// Sorts scored ids into a ranked list truncated to `top_n`.
pub fn rank_scores<I>(scores: I, top_n: usize) -> Vec<RankedHit>
where
    I: IntoIterator<Item = (String, f64)>,
{
    let mut scored: Vec<(String, f64)> = scores.into_iter().collect();
    scored.sort_by(|a, b| hit_order((&a.0, a.1), (&b.0, b.1)));
    scored.truncate(top_n);
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (chunk_id, score))| RankedHit {
            chunk_id,
            score,
            rank: i + 1,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_by_id() {
        let hits = rank_scores(
            vec![("b".to_string(), 1.0), ("a".to_string(), 1.0), ("c".to_string(), 2.0)],
            10,
        );
        let ids: Vec<&str> = hits.iter().map(|h| h.chunk_id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(hits.iter().map(|h| h.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn truncates() {
        let hits = rank_scores((0..5).map(|i| (i.to_string(), i as f64)), 2);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].chunk_id, "4");
    }
}
