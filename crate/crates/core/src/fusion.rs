//! Weighted reciprocal rank fusion.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ranking::{rank_scores, RankedHit};

pub const DEFAULT_LEXICAL_WEIGHT: f64 = 0.2;
pub const DEFAULT_SEMANTIC_WEIGHT: f64 = 0.8;
pub const DEFAULT_RRF_K: f64 = 60.0;
pub const DEFAULT_FUSION_TOP_N: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    /// One weight per input list, in input order.
    pub weights: Vec<f64>,
    pub rrf_k: f64,
    pub top_n: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            weights: vec![DEFAULT_LEXICAL_WEIGHT, DEFAULT_SEMANTIC_WEIGHT],
            rrf_k: DEFAULT_RRF_K,
            top_n: DEFAULT_FUSION_TOP_N,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!(
                "fusion weights must be finite and non-negative: {:?}",
                self.weights
            )));
        }
        if !self.weights.iter().any(|&w| w > 0.0) {
            return Err(Error::Config("at least one fusion weight must be positive".into()));
        }
        if !(self.rrf_k.is_finite() && self.rrf_k > 0.0) {
            return Err(Error::Config(format!("rrf_k must be positive, got {}", self.rrf_k)));
        }
        if self.top_n == 0 {
            return Err(Error::Config("fusion top_n must be positive".into()));
        }
        Ok(())
    }
}

/// Score of a chunk is `sum_i weights[i] / (rrf_k + rank_i)` over the lists
/// that contain it.
pub fn rrf_fuse(lists: &[Vec<RankedHit>], config: &FusionConfig) -> Result<Vec<RankedHit>> {
    config.validate()?;
    if lists.len() != config.weights.len() {
        return Err(Error::Config(format!(
            "{} ranked lists but {} fusion weights",
            lists.len(),
            config.weights.len()
        )));
    }

    let mut fused: HashMap<&str, f64> = HashMap::new();
    for (list, &weight) in lists.iter().zip(&config.weights) {
        let mut seen = std::collections::HashSet::new();
        for hit in list {
            // a list contributes once per chunk, at its best rank
            if !seen.insert(hit.chunk_id.as_str()) {
                continue;
            }
            *fused.entry(&hit.chunk_id).or_default() += weight / (config.rrf_k + hit.rank as f64);
        }
    }

    Ok(rank_scores(
        fused.into_iter().map(|(id, score)| (id.to_owned(), score)),
        config.top_n,
    ))
}
