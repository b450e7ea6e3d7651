//! Gradient-boosted regression trees trained with the LambdaRank objective.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::RankingDataset;
use super::features::{FeatureConfig, PairFeatureVector};
use super::lambdarank::compute_group_gradients;
use super::tree::{fit_regression_tree, RegressionTree, TreeNode, TreeParams};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "rankforge-gbdt";
pub const MODEL_VERSION: u32 = 1;

/// Booster hyperparameters. Recorded verbatim in the model file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainParams {
    pub num_rounds: usize,
    pub learning_rate: f64,
    pub sigma: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub lambda_reg: f64,
    /// NDCG truncation used for the ΔNDCG pair weights.
    pub p: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            num_rounds: 100,
            learning_rate: 0.1,
            sigma: 1.0,
            max_leaves: 31,
            min_samples_leaf: 1,
            lambda_reg: 1.0,
            p: 5,
            seed: 42,
        }
    }
}

impl TrainParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_leaves: self.max_leaves,
            min_samples_leaf: self.min_samples_leaf,
            lambda_reg: self.lambda_reg,
            ..TreeParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel {
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub base_score: f64,
    pub feature_names: Vec<String>,
    /// Accumulated split gain per feature, aligned with `feature_names`.
    pub gain_table: Vec<f64>,
    pub config: Option<FeatureConfig>,
    pub params: TrainParams,
    /// Opaque provenance blob carried through serialization.
    pub manifest: Option<serde_json::Value>,
}

/// Boosts `params.num_rounds` trees on the dataset's groups.
pub fn train(dataset: &RankingDataset, params: &TrainParams, config: Option<FeatureConfig>) -> Result<GbdtModel> {
    if !dataset.groups.iter().any(|g| g.gold.is_trainable()) {
        return Err(Error::DegenerateTrainingSet(
            "no group has two distinct relevance levels".into(),
        ));
    }
    let n_features = dataset.feature_names.len();
    let rows: Vec<Vec<f64>> = dataset.groups.iter().flat_map(|g| g.rows.iter().cloned()).collect();
    let mut offsets = Vec::with_capacity(dataset.groups.len());
    let mut start = 0;
    for g in &dataset.groups {
        offsets.push(start);
        start += g.rows.len();
    }

    let base_score = 0.0;
    let tree_params = params.tree_params();
    let mut scores = vec![base_score; rows.len()];
    let mut trees = Vec::with_capacity(params.num_rounds);
    let mut gain_table = vec![0.0; n_features];

    for _ in 0..params.num_rounds {
        let per_group: Vec<(Vec<f64>, Vec<f64>)> = dataset
            .groups
            .par_iter()
            .zip(offsets.par_iter())
            .map(|(g, &off)| {
                let s = &scores[off..off + g.rows.len()];
                compute_group_gradients(s, &g.gold.relevance, params.p, params.sigma)
            })
            .collect();
        let mut grad = Vec::with_capacity(rows.len());
        let mut hess = Vec::with_capacity(rows.len());
        for (g, h) in per_group {
            grad.extend(g);
            hess.extend(h);
        }

        let tree = fit_regression_tree(&rows, &grad, &hess, &tree_params);
        for (score, row) in scores.iter_mut().zip(&rows) {
            *score += params.learning_rate * tree.predict(row);
        }
        tree.accumulate_gain(&mut gain_table);
        trees.push(tree);
    }

    Ok(GbdtModel {
        trees,
        learning_rate: params.learning_rate,
        base_score,
        feature_names: dataset.feature_names.clone(),
        gain_table,
        config,
        params: *params,
        manifest: None,
    })
}

impl GbdtModel {
    pub fn seed(&self) -> u64 {
        self.params.seed
    }

    /// `base + Σ learning_rate · tree(x)`, summed in tree order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut score = self.base_score;
        for tree in &self.trees {
            score += self.learning_rate * tree.predict(row);
        }
        score
    }

    /// Column index in `rows` for each model feature; errors on name-set mismatch.
    fn column_map(&self, row_names: &[String]) -> Result<Vec<usize>> {
        if row_names == self.feature_names.as_slice() {
            return Ok((0..row_names.len()).collect());
        }
        let model: BTreeSet<&String> = self.feature_names.iter().collect();
        let given: BTreeSet<&String> = row_names.iter().collect();
        if model != given || row_names.len() != self.feature_names.len() {
            return Err(Error::FeatureMismatch {
                only_in_model: model.difference(&given).map(|s| s.to_string()).collect(),
                only_in_rows: given.difference(&model).map(|s| s.to_string()).collect(),
            });
        }
        let position: HashMap<&String, usize> = row_names.iter().enumerate().map(|(i, n)| (n, i)).collect();
        Ok(self.feature_names.iter().map(|n| position[n]).collect())
    }

    pub fn predict(&self, rows: &[PairFeatureVector]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rows.len());
        let mut cached: Option<(&[String], Vec<usize>)> = None;
        for row in rows {
            let map = match &cached {
                Some((names, map)) if *names == row.feature_names.as_slice() => map,
                _ => {
                    let map = self.column_map(&row.feature_names)?;
                    &cached.insert((row.feature_names.as_slice(), map)).1
                }
            };
            if row.values.len() != map.len() {
                return Err(Error::InvalidInput(format!(
                    "row {}/{} has {} values for {} names",
                    row.source_code,
                    row.target_code,
                    row.values.len(),
                    map.len()
                )));
            }
            let x: Vec<f64> = map.iter().map(|&c| row.values[c]).collect();
            out.push(self.predict_row(&x));
        }
        Ok(out)
    }

    /// Source codes by descending score, ties by ascending code.
    pub fn rank_sources(&self, target_code: &str, rows: &[PairFeatureVector]) -> Result<Vec<String>> {
        if let Some(r) = rows.iter().find(|r| r.target_code != target_code) {
            return Err(Error::InvalidInput(format!(
                "row {}/{} does not belong to target {target_code:?}",
                r.source_code, r.target_code
            )));
        }
        let scores = self.predict(rows)?;
        Ok(rank_by_score(rows.iter().map(|r| r.source_code.as_str()), &scores))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<GbdtModel> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }
}

/// Orders codes by descending score, ties by ascending code.
pub fn rank_by_score<'a>(codes: impl Iterator<Item = &'a str>, scores: &[f64]) -> Vec<String> {
    let mut pairs: Vec<(&str, f64)> = codes.zip(scores.iter().copied()).collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    pairs.into_iter().map(|(c, _)| c.to_string()).collect()
}

#[derive(Serialize, Deserialize)]
struct TreeArrays {
    feature_index: Vec<Option<usize>>,
    threshold: Vec<Option<f64>>,
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
    leaf_value: Vec<Option<f64>>,
    split_gain: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GainEntry {
    feature: String,
    gain: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: Option<FeatureConfig>,
    params: TrainParams,
    base_score: f64,
    learning_rate: f64,
    feature_names: Vec<String>,
    trees: Vec<TreeArrays>,
    gain_table: Vec<GainEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<serde_json::Value>,
}

impl From<&GbdtModel> for ModelFile {
    fn from(m: &GbdtModel) -> Self {
        let trees = m
            .trees
            .iter()
            .map(|t| {
                let mut a = TreeArrays {
                    feature_index: Vec::new(),
                    threshold: Vec::new(),
                    left: Vec::new(),
                    right: Vec::new(),
                    leaf_value: Vec::new(),
                    split_gain: Vec::new(),
                };
                for node in &t.nodes {
                    match *node {
                        TreeNode::Leaf { value } => {
                            a.feature_index.push(None);
                            a.threshold.push(None);
                            a.left.push(None);
                            a.right.push(None);
                            a.leaf_value.push(Some(value));
                            a.split_gain.push(None);
                        }
                        TreeNode::Split { feature, threshold, gain, left, right } => {
                            a.feature_index.push(Some(feature));
                            a.threshold.push(Some(threshold));
                            a.left.push(Some(left));
                            a.right.push(Some(right));
                            a.leaf_value.push(None);
                            a.split_gain.push(Some(gain));
                        }
                    }
                }
                a
            })
            .collect();
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: m.config,
            params: m.params,
            base_score: m.base_score,
            learning_rate: m.learning_rate,
            feature_names: m.feature_names.clone(),
            trees,
            gain_table: m
                .feature_names
                .iter()
                .zip(&m.gain_table)
                .map(|(f, &gain)| GainEntry { feature: f.clone(), gain })
                .collect(),
            manifest: m.manifest.clone(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<GbdtModel> {
        let bad = |msg: String| Error::InvalidInput(format!("model file: {msg}"));
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(bad(format!("unsupported format {} v{}", self.format, self.version)));
        }
        let n_features = self.feature_names.len();
        let mut trees = Vec::with_capacity(self.trees.len());
        for (t, a) in self.trees.into_iter().enumerate() {
            let n = a.feature_index.len();
            if [a.threshold.len(), a.left.len(), a.right.len(), a.leaf_value.len(), a.split_gain.len()]
                .iter()
                .any(|&l| l != n)
                || n == 0
            {
                return Err(bad(format!("tree {t} has ragged or empty arrays")));
            }
            let mut nodes = Vec::with_capacity(n);
            for i in 0..n {
                let node = match (a.feature_index[i], a.threshold[i], a.left[i], a.right[i], a.leaf_value[i], a.split_gain[i]) {
                    (None, None, None, None, Some(value), None) => TreeNode::Leaf { value },
                    (Some(feature), Some(threshold), Some(left), Some(right), None, Some(gain)) => {
                        if feature >= n_features {
                            return Err(bad(format!("tree {t} node {i} uses feature {feature} of {n_features}")));
                        }
                        if left <= i || right <= i || left >= n || right >= n {
                            return Err(bad(format!("tree {t} node {i} has invalid children")));
                        }
                        TreeNode::Split { feature, threshold, gain, left, right }
                    }
                    _ => return Err(bad(format!("tree {t} node {i} is neither leaf nor split"))),
                };
                nodes.push(node);
            }
            trees.push(RegressionTree { nodes });
        }
        if self.gain_table.len() != n_features
            || self.gain_table.iter().zip(&self.feature_names).any(|(e, n)| &e.feature != n)
        {
            return Err(bad("gain table does not match feature names".into()));
        }
        Ok(GbdtModel {
            trees,
            learning_rate: self.learning_rate,
            base_score: self.base_score,
            feature_names: self.feature_names,
            gain_table: self.gain_table.into_iter().map(|e| e.gain).collect(),
            config: self.config,
            params: self.params,
            manifest: self.manifest,
        })
    }
}
