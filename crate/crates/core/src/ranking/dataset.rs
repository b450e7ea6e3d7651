use std::collections::{BTreeMap, HashMap};

use super::features::PairFeatureTable;
use super::relevance::{Candidate, GoldRankingGroup, RelevanceConvention};
use crate::error::{Error, Result};
use crate::performance::PerformanceRecord;

/// One target's gold ranking plus a feature row per candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingGroup {
    pub gold: GoldRankingGroup,
    /// Aligned with `gold.candidates`.
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    pub feature_names: Vec<String>,
    /// Sorted by target code.
    pub groups: Vec<RankingGroup>,
}

impl RankingDataset {
    pub fn new(feature_names: Vec<String>, mut groups: Vec<RankingGroup>) -> Result<Self> {
        for g in &groups {
            if g.rows.len() != g.gold.len() {
                return Err(Error::InvalidInput(format!(
                    "target {:?}: {} rows for {} candidates",
                    g.gold.target_code,
                    g.rows.len(),
                    g.gold.len()
                )));
            }
            if let Some(r) = g.rows.iter().find(|r| r.len() != feature_names.len()) {
                return Err(Error::InvalidInput(format!(
                    "target {:?}: row width {} but {} feature names",
                    g.gold.target_code,
                    r.len(),
                    feature_names.len()
                )));
            }
        }
        groups.sort_by(|a, b| a.gold.target_code.cmp(&b.gold.target_code));
        if let Some(w) = groups.windows(2).find(|w| w[0].gold.target_code == w[1].gold.target_code) {
            return Err(Error::InvalidInput(format!("duplicate target {:?}", w[0].gold.target_code)));
        }
        Ok(RankingDataset { feature_names, groups })
    }

    /// Joins pair features with a performance table into gold groups.
    ///
    /// Every performance pair needs a feature row. Self pairs (source equals
    /// target) are dropped unless `include_self_pairs`.
    pub fn from_tables(
        features: &PairFeatureTable,
        performance: &[PerformanceRecord],
        p: usize,
        convention: RelevanceConvention,
        include_self_pairs: bool,
    ) -> Result<Self> {
        let index: HashMap<(&str, &str), &Vec<f64>> = features
            .rows
            .iter()
            .map(|r| ((r.target_code.as_str(), r.source_code.as_str()), &r.values))
            .collect();
        let mut by_target: BTreeMap<&str, Vec<&PerformanceRecord>> = BTreeMap::new();
        for rec in performance {
            if rec.source == rec.target && !include_self_pairs {
                continue;
            }
            by_target.entry(rec.target.as_str()).or_default().push(rec);
        }
        let mut groups = Vec::new();
        for (target, recs) in by_target {
            let candidates: Vec<Candidate> =
                recs.iter().map(|r| Candidate::new(r.source.clone(), r.score)).collect();
            let gold = GoldRankingGroup::new(target, candidates, p, convention)?;
            let rows = gold
                .candidates
                .iter()
                .map(|c| {
                    index
                        .get(&(target, c.source_code.as_str()))
                        .map(|v| (*v).clone())
                        .ok_or_else(|| Error::InvalidInput(format!("no feature row for {}/{target}", c.source_code)))
                })
                .collect::<Result<Vec<_>>>()?;
            groups.push(RankingGroup { gold, rows });
        }
        RankingDataset::new(features.feature_names.clone(), groups)
    }

    pub fn n_rows(&self) -> usize {
        self.groups.iter().map(|g| g.rows.len()).sum()
    }

    /// All groups except the one at `held_out`.
    pub fn without(&self, held_out: usize) -> RankingDataset {
        RankingDataset {
            feature_names: self.feature_names.clone(),
            groups: self
                .groups
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != held_out)
                .map(|(_, g)| g.clone())
                .collect(),
        }
    }

    pub fn target_codes(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.gold.target_code.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::features::PairFeatureVector;

    fn table() -> PairFeatureTable {
        let names = vec!["f".to_string()];
        let rows = [("t1", "a", 0.1), ("t1", "b", 0.2), ("t1", "t1", 0.0), ("t2", "a", 0.3), ("t2", "b", 0.4)]
            .iter()
            .map(|&(t, s, v)| PairFeatureVector {
                target_code: t.into(),
                source_code: s.into(),
                feature_names: names.clone(),
                values: vec![v],
            })
            .collect();
        PairFeatureTable { feature_names: names, rows }
    }

    #[test]
    fn joins_tables() {
        let perf = vec![
            PerformanceRecord::new("b", "t2", 0.9),
            PerformanceRecord::new("a", "t2", 0.5),
            PerformanceRecord::new("a", "t1", 0.7),
            PerformanceRecord::new("b", "t1", 0.8),
            PerformanceRecord::new("t1", "t1", 0.99),
        ];
        let ds = RankingDataset::from_tables(&table(), &perf, 5, RelevanceConvention::BestIsP, false).unwrap();
        assert_eq!(ds.target_codes(), vec!["t1", "t2"]);
        assert_eq!(ds.groups[0].rows, vec![vec![0.1], vec![0.2]]);
        assert_eq!(ds.groups[0].gold.relevance, vec![4, 5]);
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.without(0).target_codes(), vec!["t2"]);

        let with_self = RankingDataset::from_tables(&table(), &perf, 5, RelevanceConvention::BestIsP, true).unwrap();
        assert_eq!(with_self.groups[0].gold.len(), 3);
    }

    #[test]
    fn missing_feature_row_is_error() {
        let perf = vec![PerformanceRecord::new("a", "t1", 0.7), PerformanceRecord::new("c", "t1", 0.8)];
        let err = RankingDataset::from_tables(&table(), &perf, 5, RelevanceConvention::BestIsP, false).unwrap_err();
        assert!(err.to_string().contains("c/t1"));
    }
}
