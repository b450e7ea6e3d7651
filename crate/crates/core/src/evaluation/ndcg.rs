use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::relevance::{GoldRankingGroup, RelevanceConvention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub p: usize,
    pub relevance_convention: RelevanceConvention,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { p: 5, relevance_convention: RelevanceConvention::BestIsP }
    }
}

/// `2^rel - 1`
pub fn gain(relevance: u32) -> f64 {
    (relevance as f64).exp2() - 1.0
}

/// `1 / log2(position + 1)` for a 1-based position.
pub fn discount(position: usize) -> f64 {
    1.0 / ((position + 1) as f64).log2()
}

/// DCG over the first `min(p, n)` positions of a relevance list in predicted order.
pub fn dcg_at_p(relevance_in_order: &[u32], p: usize) -> f64 {
    relevance_in_order
        .iter()
        .take(p)
        .enumerate()
        .map(|(i, &rel)| gain(rel) * discount(i + 1))
        .sum()
}

/// DCG of the relevance list sorted into its ideal (descending) order.
pub fn ideal_dcg_at_p(relevance: &[u32], p: usize) -> f64 {
    let mut sorted = relevance.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    dcg_at_p(&sorted, p)
}

/// NDCG of a predicted ordering of the gold group's source codes.
pub fn ndcg_at_p(predicted_order: &[String], gold: &GoldRankingGroup, p: usize) -> Result<f64> {
    if predicted_order.len() != gold.len() {
        return Err(Error::PermutationMismatch(format!(
            "{} predicted vs {} gold candidates",
            predicted_order.len(),
            gold.len()
        )));
    }
    let mut seen = HashSet::new();
    let mut relevance = Vec::with_capacity(predicted_order.len());
    for code in predicted_order {
        if !seen.insert(code.as_str()) {
            return Err(Error::PermutationMismatch(format!("{code:?} appears twice")));
        }
        let rel = gold
            .relevance_of(code)
            .ok_or_else(|| Error::PermutationMismatch(format!("{code:?} is not a gold candidate")))?;
        relevance.push(rel);
    }
    let gold_in_order: Vec<u32> = gold
        .gold_sources()
        .iter()
        .map(|c| gold.relevance_of(c).expect("gold source"))
        .collect();
    let idcg = dcg_at_p(&gold_in_order, p);
    if idcg <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "target {:?} has zero ideal DCG@{p}",
            gold.target_code
        )));
    }
    Ok(dcg_at_p(&relevance, p) / idcg)
}
