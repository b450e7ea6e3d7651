//! Gain-based feature importance averaged over one or more models.

use serde::{Deserialize, Serialize};

use super::gbdt::GbdtModel;
use crate::error::{Error, Result};

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGain {
    pub feature: String,
    pub gain: f64,
}

/// Mean gain per feature across `models`, sorted by descending gain.
///
/// Models must share one feature name list. Ties keep feature order.
pub fn feature_importance(models: &[GbdtModel]) -> Result<Vec<FeatureGain>> {
    let first = models.first().ok_or_else(|| Error::InvalidInput("no models given".into()))?;
    let names = &first.feature_names;
    let mut totals = vec![0.0; names.len()];
    for m in models {
        if &m.feature_names != names {
            return Err(Error::InvalidInput("models disagree on feature names".into()));
        }
        for (t, g) in totals.iter_mut().zip(&m.gain_table) {
            *t += g;
        }
    }
    let n = models.len() as f64;
    let mut out: Vec<FeatureGain> = names
        .iter()
        .zip(totals)
        .map(|(f, t)| FeatureGain { feature: f.clone(), gain: t / n })
        .collect();
    out.sort_by(|a, b| b.gain.total_cmp(&a.gain));
    Ok(out)
}

pub fn top_k(ranked: &[FeatureGain], k: usize) -> &[FeatureGain] {
    &ranked[..k.min(ranked.len())]
}

/// Share of total gain held by `feature`; 0 when no gain was recorded.
pub fn gain_share(ranked: &[FeatureGain], feature: &str) -> f64 {
    let total: f64 = ranked.iter().map(|g| g.gain).sum();
    if total <= 0.0 {
        return 0.0;
    }
    ranked.iter().filter(|g| g.feature == feature).map(|g| g.gain).sum::<f64>() / total
}
