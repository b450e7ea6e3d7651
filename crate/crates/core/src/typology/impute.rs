//! Missing-value imputation for binary typology matrices.

use log::warn;
use serde::{Deserialize, Serialize};

use super::forest::RandomForest;
use super::matrix::{CropReport, TypologyMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissForestParams {
    pub seed: u64,
    pub max_iters: usize,
    pub trees_per_forest: usize,
}

impl Default for MissForestParams {
    fn default() -> Self {
        MissForestParams { seed: 42, max_iters: 10, trees_per_forest: 100 }
    }
}

/// Summary written alongside an imputed matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub method: String,
    pub pre_missing_fraction: f64,
    pub post_missing_fraction: f64,
    pub iterations: usize,
    /// Fraction of imputed cells that changed in each iteration.
    pub change_fractions: Vec<f64>,
    pub mode_fallback_features: Vec<String>,
    pub crop: Option<CropReport>,
}

/// Stable 64-bit mix (SplitMix64 finalizer).
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for one tree, derived from (master seed, feature id, iteration, tree index).
pub fn tree_seed(master: u64, feature_id: &str, iteration: usize, tree: usize) -> u64 {
    let mut h = mix(master);
    h = mix(h ^ fnv1a(feature_id.as_bytes()));
    h = mix(h ^ iteration as u64);
    mix(h ^ tree as u64)
}

/// Most frequent observed value of a column; ties go to 1. `None` if nothing observed.
fn column_mode(m: &TypologyMatrix, feature: usize) -> Option<f64> {
    let (mut zeros, mut ones) = (0usize, 0usize);
    for l in 0..m.n_languages() {
        match m.get(l, feature) {
            Some(v) if v >= 0.5 => ones += 1,
            Some(_) => zeros += 1,
            None => {}
        }
    }
    if zeros + ones == 0 {
        None
    } else {
        Some(if ones >= zeros { 1.0 } else { 0.0 })
    }
}

fn check_binary(m: &TypologyMatrix) -> Result<()> {
    for l in 0..m.n_languages() {
        for f in 0..m.n_features() {
            if let Some(v) = m.get(l, f) {
                if v != 0.0 && v != 1.0 {
                    return Err(Error::NonBinaryCell {
                        language: m.language_codes()[l].clone(),
                        feature: m.feature_ids()[f].clone(),
                        value: v.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Iterative random-forest imputation of a binary matrix.
///
/// Missing cells start at their column mode. Each iteration visits features
/// in ascending order of missingness and re-predicts that feature's missing
/// cells from all other columns. Iteration stops once the fraction of changed
/// imputed cells rises (the previous matrix is returned), reaches zero, or
/// `max_iters` runs out. Observed cells are never modified.
pub fn impute_missforest(
    m: &TypologyMatrix,
    params: &MissForestParams,
) -> Result<(TypologyMatrix, ImputationReport)> {
    if m.n_languages() < 2 {
        return Err(Error::InvalidInput("MissForest needs at least 2 languages".into()));
    }
    check_binary(m)?;
    let n_lang = m.n_languages();
    let n_feat = m.n_features();
    let pre_missing_fraction = m.missing_fraction();

    let missing: Vec<(usize, usize)> = (0..n_lang)
        .flat_map(|l| (0..n_feat).map(move |f| (l, f)))
        .filter(|&(l, f)| m.get(l, f).is_none())
        .collect();

    let mut current = m.clone();
    let mut fallback = Vec::new();
    let mut forest_features = Vec::new();
    for f in 0..n_feat {
        let observed = n_lang - m.feature_missing_count(f);
        if observed == n_lang {
            continue;
        }
        let mode = column_mode(m, f).unwrap_or_else(|| {
            warn!("feature {} has no observed values; imputing 0", m.feature_ids()[f]);
            0.0
        });
        for l in 0..n_lang {
            if m.get(l, f).is_none() {
                current.set(l, f, Some(mode));
            }
        }
        if observed < 2 {
            warn!(
                "feature {} observed in {observed} language(s); using column mode",
                m.feature_ids()[f]
            );
            fallback.push(m.feature_ids()[f].clone());
        } else {
            forest_features.push(f);
        }
    }
    forest_features.sort_by_key(|&f| (m.feature_missing_count(f), f));

    let mut report = ImputationReport {
        method: "missforest".into(),
        pre_missing_fraction,
        post_missing_fraction: 0.0,
        iterations: 0,
        change_fractions: Vec::new(),
        mode_fallback_features: fallback,
        crop: None,
    };
    if missing.is_empty() || params.trees_per_forest == 0 {
        report.post_missing_fraction = current.missing_fraction();
        return Ok((current, report));
    }

    let mut previous_change = f64::INFINITY;
    for iteration in 1..=params.max_iters {
        let mut next = current.clone();
        for &f in &forest_features {
            impute_feature(m, &mut next, f, iteration, params);
        }
        let changed = missing
            .iter()
            .filter(|&&(l, f)| next.get(l, f) != current.get(l, f))
            .count();
        let change = changed as f64 / missing.len() as f64;
        report.change_fractions.push(change);
        if change > previous_change {
            break;
        }
        report.iterations = iteration;
        current = next;
        previous_change = change;
        if change == 0.0 {
            break;
        }
    }
    report.post_missing_fraction = current.missing_fraction();
    Ok((current, report))
}

fn impute_feature(
    original: &TypologyMatrix,
    work: &mut TypologyMatrix,
    feature: usize,
    iteration: usize,
    params: &MissForestParams,
) {
    let n_feat = work.n_features();
    let predictors = |w: &TypologyMatrix, l: usize| -> Vec<f64> {
        (0..n_feat)
            .filter(|&g| g != feature)
            .map(|g| w.get(l, g).expect("working matrix is fully defined"))
            .collect()
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut targets = Vec::new();
    for l in 0..work.n_languages() {
        match original.get(l, feature) {
            Some(v) => {
                x.push(predictors(work, l));
                y.push(v as u8);
            }
            None => targets.push(l),
        }
    }
    let feature_id = &work.feature_ids()[feature];
    let seeds: Vec<u64> = (0..params.trees_per_forest)
        .map(|t| tree_seed(params.seed, feature_id, iteration, t))
        .collect();
    let forest = RandomForest::fit(&x, &y, &seeds);
    for l in targets {
        let row = predictors(work, l);
        work.set(l, feature, Some(forest.predict(&row) as f64));
    }
}

/// k-nearest-neighbour imputation by normalized Hamming distance.
///
/// Distances use only features observed in both languages, divided by their
/// count. The imputed value is the neighbours' mean, thresholded at 0.5 with
/// ties going to 1. Only originally observed values vote.
pub fn impute_knn(m: &TypologyMatrix, k: usize) -> Result<(TypologyMatrix, ImputationReport)> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if m.n_languages() < k + 1 {
        return Err(Error::InvalidInput(format!(
            "kNN imputation with k={k} needs at least {} languages, got {}",
            k + 1,
            m.n_languages()
        )));
    }
    check_binary(m)?;
    let n_lang = m.n_languages();
    let n_feat = m.n_features();
    let pre_missing_fraction = m.missing_fraction();

    // distances[i][j]: None when the pair shares no observed feature
    let mut distances = vec![vec![None; n_lang]; n_lang];
    for i in 0..n_lang {
        for j in (i + 1)..n_lang {
            let (mut shared, mut differ) = (0usize, 0usize);
            for f in 0..n_feat {
                if let (Some(a), Some(b)) = (m.get(i, f), m.get(j, f)) {
                    shared += 1;
                    differ += usize::from(a != b);
                }
            }
            if shared > 0 {
                let d = Some(differ as f64 / shared as f64);
                distances[i][j] = d;
                distances[j][i] = d;
            }
        }
    }

    let mut out = m.clone();
    let mut fallback = Vec::new();
    for i in 0..n_lang {
        for f in 0..n_feat {
            if m.get(i, f).is_some() {
                continue;
            }
            let mut candidates: Vec<(f64, usize)> = (0..n_lang)
                .filter(|&j| j != i && m.get(j, f).is_some())
                .filter_map(|j| distances[i][j].map(|d| (d, j)))
                .collect();
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let value = if candidates.is_empty() {
                warn!(
                    "no neighbour for {} / {}; using column mode",
                    m.language_codes()[i],
                    m.feature_ids()[f]
                );
                fallback.push(format!("{}:{}", m.language_codes()[i], m.feature_ids()[f]));
                column_mode(m, f).unwrap_or(0.0)
            } else {
                let chosen = &candidates[..k.min(candidates.len())];
                let mean = chosen.iter().map(|&(_, j)| m.get(j, f).unwrap()).sum::<f64>()
                    / chosen.len() as f64;
                if mean >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            };
            out.set(i, f, Some(value));
        }
    }
    let report = ImputationReport {
        method: "knn".into(),
        pre_missing_fraction,
        post_missing_fraction: out.missing_fraction(),
        iterations: 1,
        change_fractions: Vec::new(),
        mode_fallback_features: fallback,
        crop: None,
    };
    Ok((out, report))
}
