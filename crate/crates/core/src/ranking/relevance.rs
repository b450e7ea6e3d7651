use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How graded relevance is derived from a gold rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceConvention {
    /// Best candidate gets `p`, rank `r <= p` gets `p - r + 1`.
    #[default]
    BestIsP,
    /// Best candidate gets `p - 1`, rank `r <= p` gets `p - r`.
    #[serde(rename = "best_is_p_minus_1")]
    BestIsPMinus1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub source_code: String,
    pub performance: f64,
}

impl Candidate {
    pub fn new(source_code: impl Into<String>, performance: f64) -> Self {
        Candidate { source_code: source_code.into(), performance }
    }
}

/// Candidate indices sorted by descending performance, ties by ascending code.
pub fn gold_order(candidates: &[Candidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&candidates[a], &candidates[b]);
        cb.performance
            .total_cmp(&ca.performance)
            .then_with(|| ca.source_code.cmp(&cb.source_code))
    });
    order
}

/// Graded relevance per candidate, aligned with the input order.
pub fn assign_relevance(candidates: &[Candidate], p: usize, convention: RelevanceConvention) -> Vec<u32> {
    let mut relevance = vec![0u32; candidates.len()];
    for (rank0, idx) in gold_order(candidates).into_iter().enumerate() {
        let rank = rank0 + 1;
        if rank <= p {
            relevance[idx] = match convention {
                RelevanceConvention::BestIsP => (p - rank + 1) as u32,
                RelevanceConvention::BestIsPMinus1 => (p - rank) as u32,
            };
        }
    }
    relevance
}

/// Gold ranking for one target language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRankingGroup {
    pub target_code: String,
    /// Sorted by ascending source code.
    pub candidates: Vec<Candidate>,
    pub relevance: Vec<u32>,
}

impl GoldRankingGroup {
    pub fn new(
        target_code: impl Into<String>,
        mut candidates: Vec<Candidate>,
        p: usize,
        convention: RelevanceConvention,
    ) -> Result<Self> {
        let target_code = target_code.into();
        if candidates.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "target {target_code:?} has {} candidate(s); at least 2 required",
                candidates.len()
            )));
        }
        if let Some(c) = candidates.iter().find(|c| !c.performance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite performance for {}/{target_code}",
                c.source_code
            )));
        }
        candidates.sort_by(|a, b| a.source_code.cmp(&b.source_code));
        if let Some(w) = candidates.windows(2).find(|w| w[0].source_code == w[1].source_code) {
            return Err(Error::InvalidInput(format!(
                "duplicate candidate {} for target {target_code:?}",
                w[0].source_code
            )));
        }
        let relevance = assign_relevance(&candidates, p, convention);
        Ok(GoldRankingGroup { target_code, candidates, relevance })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn source_codes(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|c| c.source_code.as_str())
    }

    /// Source codes from best to worst.
    pub fn gold_sources(&self) -> Vec<String> {
        gold_order(&self.candidates)
            .into_iter()
            .map(|i| self.candidates[i].source_code.clone())
            .collect()
    }

    pub fn relevance_of(&self, source_code: &str) -> Option<u32> {
        self.candidates
            .binary_search_by(|c| c.source_code.as_str().cmp(source_code))
            .ok()
            .map(|i| self.relevance[i])
    }

    /// At least two distinct relevance levels, so some pair carries a preference.
    pub fn is_trainable(&self) -> bool {
        self.relevance.iter().any(|&r| r != self.relevance[0])
    }
}
