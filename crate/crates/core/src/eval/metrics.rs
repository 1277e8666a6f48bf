use std::collections::{HashMap, HashSet};

use crate::lexical::tokenize;

pub const DEFAULT_CHRF_ORDER: usize = 6;
pub const DEFAULT_CHRF_BETA: f64 = 2.0;

fn char_ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if n == 0 || chars.len() < n {
        return counts;
    }
    for gram in chars.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Character n-gram F-score with whitespace removed.
///
/// Precision and recall are averaged over the orders `1..=n_max` for which
/// the reference has at least one n-gram. An order where the hypothesis has
/// no n-grams contributes zero precision.
pub fn chrf(reference: &str, hypothesis: &str, n_max: usize, beta: f64) -> f64 {
    let reference: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hypothesis: Vec<char> = hypothesis.chars().filter(|c| !c.is_whitespace()).collect();
    match (reference.is_empty(), hypothesis.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }

    let mut precision = Ratio::ZERO;
    let mut recall = Ratio::ZERO;
    let mut orders = 0u128;
    let (mut precision_sum, mut recall_sum) = (0.0, 0.0);
    for n in 1..=n_max {
        let ref_grams = char_ngrams(&reference, n);
        let ref_total: usize = ref_grams.values().sum();
        if ref_total == 0 {
            continue;
        }
        let hyp_grams = char_ngrams(&hypothesis, n);
        let hyp_total: usize = hyp_grams.values().sum();
        let matched: usize = hyp_grams
            .iter()
            .map(|(gram, &count)| count.min(ref_grams.get(gram).copied().unwrap_or(0)))
            .sum();
        if hyp_total > 0 {
            precision = precision.add(matched, hyp_total);
            precision_sum += matched as f64 / hyp_total as f64;
        }
        recall = recall.add(matched, ref_total);
        recall_sum += matched as f64 / ref_total as f64;
        orders += 1;
    }
    if orders == 0 || precision_sum + recall_sum == 0.0 {
        return 0.0;
    }
    f_score(precision, recall, orders, beta).unwrap_or_else(|| {
        let precision = precision_sum / orders as f64;
        let recall = recall_sum / orders as f64;
        let beta2 = beta * beta;
        (1.0 + beta2) * precision * recall / (beta2 * precision + recall)
    })
}

/// Non-negative fraction kept in lowest terms; `den == 0` marks overflow.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: u128,
    den: u128,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    const ZERO: Ratio = Ratio { num: 0, den: 1 };

    fn add(self, num: usize, den: usize) -> Ratio {
        let (n, d) = (num as u128, den as u128);
        let sum = self
            .num
            .checked_mul(d)
            .zip(n.checked_mul(self.den))
            .and_then(|(a, b)| a.checked_add(b))
            .zip(self.den.checked_mul(d));
        match sum {
            Some((num, den)) if self.den != 0 => {
                let g = gcd(num, den).max(1);
                Ratio { num: num / g, den: den / g }
            }
            _ => Ratio { num: 0, den: 0 },
        }
    }
}

/// F-beta of the mean precision `p / orders` and mean recall `r / orders` as
/// a single rounding of an exact fraction. None unless beta squared is a
/// small integer and nothing overflowed.
fn f_score(p: Ratio, r: Ratio, orders: u128, beta: f64) -> Option<f64> {
    let beta2 = beta * beta;
    (beta2.fract() == 0.0 && beta2 < 1e6 && p.den != 0 && r.den != 0)
        .then(|| {
            let b2 = beta2 as u128;
            let num = (1 + b2).checked_mul(p.num)?.checked_mul(r.num)?;
            let den = orders.checked_mul(
                b2.checked_mul(p.num)?
                    .checked_mul(r.den)?
                    .checked_add(r.num.checked_mul(p.den)?)?,
            )?;
            let g = gcd(num, den).max(1);
            Some((num / g) as f64 / (den / g) as f64)
        })
        .flatten()
}

/// Fraction of the middle's distinct tokens that occur anywhere in the
/// context. A middle without tokens counts as fully recalled.
pub fn context_recall(context: &str, middle: &str) -> f64 {
    let wanted: HashSet<String> = tokenize(middle).into_iter().collect();
    if wanted.is_empty() {
        return 1.0;
    }
    let available: HashSet<String> = tokenize(context).into_iter().collect();
    let found = wanted.iter().filter(|t| available.contains(*t)).count();
    found as f64 / wanted.len() as f64
}
