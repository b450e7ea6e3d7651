//! Leave-one-target-out cross-validation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ndcg::{ndcg_at_p, EvalConfig};
use crate::error::{Error, Result};
use crate::ranking::dataset::RankingDataset;
use crate::ranking::features::FeatureConfig;
use crate::ranking::gbdt::{rank_by_score, train, GbdtModel, TrainParams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdKind {
    #[default]
    Population,
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScore {
    pub target: String,
    pub ndcg: f64,
    pub predicted_order: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooReport {
    pub config: Option<FeatureConfig>,
    pub params: TrainParams,
    pub eval: EvalConfig,
    pub std_kind: StdKind,
    pub per_target: Vec<TargetScore>,
    pub mean: f64,
    pub std: f64,
    /// One model per fold, aligned with `per_target`.
    #[serde(skip)]
    pub models: Vec<GbdtModel>,
}

pub fn mean_std(values: &[f64], kind: StdKind) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let denom = match kind {
        StdKind::Population => n as f64,
        StdKind::Sample if n > 1 => (n - 1) as f64,
        StdKind::Sample => return (mean, 0.0),
    };
    (mean, (ss / denom).sqrt())
}

/// Trains one model per held-out target and scores its ranking with NDCG@p.
pub fn loo_cv(
    dataset: &RankingDataset,
    params: &TrainParams,
    eval: &EvalConfig,
    config: Option<FeatureConfig>,
    std_kind: StdKind,
) -> Result<LooReport> {
    if dataset.groups.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "leave-one-out needs at least 2 targets, got {}",
            dataset.groups.len()
        )));
    }
    let folds: Vec<Result<(TargetScore, GbdtModel)>> = (0..dataset.groups.len())
        .into_par_iter()
        .map(|fold| {
            let held = &dataset.groups[fold];
            let target = held.gold.target_code.clone();
            let wrap = |e: Error| Error::Fold { fold, target: target.clone(), source: Box::new(e) };
            let model = train(&dataset.without(fold), params, config).map_err(wrap)?;
            let scores: Vec<f64> = held.rows.iter().map(|r| model.predict_row(r)).collect();
            let order = rank_by_score(held.gold.source_codes(), &scores);
            let ndcg = ndcg_at_p(&order, &held.gold, eval.p).map_err(wrap)?;
            Ok((TargetScore { target: target.clone(), ndcg, predicted_order: order }, model))
        })
        .collect();

    let mut per_target = Vec::with_capacity(folds.len());
    let mut models = Vec::with_capacity(folds.len());
    for f in folds {
        let (score, model) = f?;
        per_target.push(score);
        models.push(model);
    }
    let values: Vec<f64> = per_target.iter().map(|t| t.ndcg).collect();
    let (mean, std) = mean_std(&values, std_kind);
    Ok(LooReport { config, params: *params, eval: *eval, std_kind, per_target, mean, std, models })
}
