//! Where two rankings of the same transfer pairs disagree most.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::performance::PerformanceRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub source: String,
    pub target: String,
    pub rank_a: usize,
    pub rank_b: usize,
    /// `rank_a - rank_b`
    pub diff: i64,
    pub abs_diff: u64,
}

impl DivergenceRow {
    pub fn pair_code(&self) -> String {
        format!("{}/{}", self.source, self.target)
    }
}

/// 1-based rank of each pair by descending score, ties by pair code.
pub fn ranks_from_scores(records: &[PerformanceRecord], include_self: bool) -> BTreeMap<(String, String), usize> {
    let mut kept: Vec<&PerformanceRecord> =
        records.iter().filter(|r| include_self || r.source != r.target).collect();
    kept.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.target.cmp(&b.target))
    });
    kept.iter()
        .enumerate()
        .map(|(i, r)| ((r.source.clone(), r.target.clone()), i + 1))
        .collect()
}

/// Ranks both score tables over all pairs and lists them by |rank_a - rank_b|
/// descending, ties by pair code.
pub fn rank_divergence(
    a: &[PerformanceRecord],
    b: &[PerformanceRecord],
    include_self: bool,
) -> Result<Vec<DivergenceRow>> {
    let ra = ranks_from_scores(a, include_self);
    let rb = ranks_from_scores(b, include_self);
    let ka: BTreeSet<_> = ra.keys().collect();
    let kb: BTreeSet<_> = rb.keys().collect();
    if ka != kb {
        let fmt = |(s, t): &&(String, String)| format!("{s}/{t}");
        return Err(Error::PairSetMismatch {
            missing_from_a: kb.difference(&ka).map(fmt).collect(),
            missing_from_b: ka.difference(&kb).map(fmt).collect(),
        });
    }
    let mut rows: Vec<DivergenceRow> = ra
        .iter()
        .map(|((s, t), &rank_a)| {
            let rank_b = rb[&(s.clone(), t.clone())];
            let diff = rank_a as i64 - rank_b as i64;
            DivergenceRow { source: s.clone(), target: t.clone(), rank_a, rank_b, diff, abs_diff: diff.unsigned_abs() }
        })
        .collect();
    rows.sort_by(|x, y| {
        y.abs_diff
            .cmp(&x.abs_diff)
            .then_with(|| x.source.cmp(&y.source))
            .then_with(|| x.target.cmp(&y.target))
    });
    Ok(rows)
}

/// Counts `SourceFamily/TargetFamily` among the given rows.
pub fn family_pair_tally(rows: &[DivergenceRow], families: &BTreeMap<String, String>) -> Result<BTreeMap<String, usize>> {
    let mut tally = BTreeMap::new();
    for r in rows {
        let fam = |code: &str| families.get(code).ok_or_else(|| Error::UnmappedLanguage(code.to_string()));
        *tally.entry(format!("{}/{}", fam(&r.source)?, fam(&r.target)?)).or_insert(0) += 1;
    }
    Ok(tally)
}
