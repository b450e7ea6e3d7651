//! Effective configuration: CLI flags over TOML file over defaults.

use std::path::Path;

use rankforge::corpus::{DEFAULT_SOURCE_CAP, DEFAULT_TARGET_CAP};
use rankforge::dataset_features::{DatasetFeatureOptions, OverlapFormula, TtrDistance};
use rankforge::evaluation::{EvalConfig, StdKind};
use rankforge::ranking::{FeatureConfig, RelevanceConvention, Representation, SyntacticSource, TrainParams, DEFAULT_TOP_K};
use rankforge::typology::{MissForestParams, DEFAULT_CROP_THRESHOLD};
use serde::{Deserialize, Serialize};

use crate::cli::Common;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeMethod {
    Missforest,
    Knn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImputeSettings {
    pub method: ImputeMethod,
    pub k: usize,
    pub max_iters: usize,
    pub trees_per_forest: usize,
    pub crop: bool,
    pub feature_threshold: f64,
    pub language_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub eval: EvalConfig,
    pub top_k: usize,
    pub target_cap: usize,
    pub source_cap: usize,
    pub full_corpus_stats: bool,
    pub include_self_pairs: bool,
    pub std_kind: StdKind,
    pub features: FeatureConfig,
    pub dataset: DatasetFeatureOptions,
    pub train: TrainParams,
    pub impute: ImputeSettings,
}

impl Default for Settings {
    fn default() -> Self {
        let mf = MissForestParams::default();
        Settings {
            seed: 42,
            eval: EvalConfig::default(),
            top_k: DEFAULT_TOP_K,
            target_cap: DEFAULT_TARGET_CAP,
            source_cap: DEFAULT_SOURCE_CAP,
            full_corpus_stats: false,
            include_self_pairs: false,
            std_kind: StdKind::Population,
            features: FeatureConfig::default(),
            dataset: DatasetFeatureOptions::default(),
            train: TrainParams::default(),
            impute: ImputeSettings {
                method: ImputeMethod::Missforest,
                k: 5,
                max_iters: mf.max_iters,
                trees_per_forest: mf.trees_per_forest,
                crop: false,
                feature_threshold: DEFAULT_CROP_THRESHOLD,
                language_threshold: DEFAULT_CROP_THRESHOLD,
            },
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    num_rounds: Option<usize>,
    learning_rate: Option<f64>,
    sigma: Option<f64>,
    max_leaves: Option<usize>,
    min_samples_leaf: Option<usize>,
    lambda_reg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImputeFile {
    method: Option<ImputeMethod>,
    k: Option<usize>,
    max_iters: Option<usize>,
    trees_per_forest: Option<usize>,
    crop: Option<bool>,
    feature_threshold: Option<f64>,
    language_threshold: Option<f64>,
}

/// TOML config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    p: Option<usize>,
    relevance: Option<RelevanceConvention>,
    top_k: Option<usize>,
    target_cap: Option<usize>,
    source_cap: Option<usize>,
    full_corpus_stats: Option<bool>,
    include_self_pairs: Option<bool>,
    std: Option<StdKind>,
    syntactic_source: Option<SyntacticSource>,
    representation: Option<Representation>,
    dataset_features: Option<bool>,
    casefold: Option<bool>,
    overlap: Option<OverlapFormula>,
    ttr_distance: Option<TtrDistance>,
    #[serde(default)]
    train: TrainFile,
    #[serde(default)]
    impute: ImputeFile,
}

fn set<T>(slot: &mut T, layers: [Option<T>; 2]) {
    // layers are ordered lowest to highest precedence
    for v in layers.into_iter().flatten() {
        *slot = v;
    }
}

impl Settings {
    pub fn resolve(common: &Common) -> CliResult<Settings> {
        let file = match &common.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let mut s = Settings::default();
        set(&mut s.seed, [file.seed, common.seed]);
        set(&mut s.eval.p, [file.p, common.p]);
        set(&mut s.eval.relevance_convention, [file.relevance, common.relevance.map(Into::into)]);
        set(&mut s.top_k, [file.top_k, common.top_k]);
        set(&mut s.target_cap, [file.target_cap, common.target_cap]);
        set(&mut s.source_cap, [file.source_cap, common.source_cap]);
        set(&mut s.full_corpus_stats, [file.full_corpus_stats, common.full_corpus_stats]);
        set(&mut s.include_self_pairs, [file.include_self_pairs, common.include_self_pairs]);
        set(
            &mut s.std_kind,
            [file.std, common.sample_std.map(|b| if b { StdKind::Sample } else { StdKind::Population })],
        );
        set(&mut s.features.syntactic_source, [file.syntactic_source, common.syntactic_source.map(Into::into)]);
        set(&mut s.features.representation, [file.representation, common.representation.map(Into::into)]);
        set(&mut s.features.include_dataset, [file.dataset_features, common.dataset_features.map(|o| o.is_on())]);
        set(&mut s.dataset.casefold, [file.casefold, common.casefold]);
        set(&mut s.dataset.overlap, [file.overlap, common.overlap.map(Into::into)]);
        set(&mut s.dataset.ttr_distance, [file.ttr_distance, common.ttr_distance.map(Into::into)]);

        let t = &mut s.train;
        set(&mut t.num_rounds, [file.train.num_rounds, common.rounds]);
        set(&mut t.learning_rate, [file.train.learning_rate, common.learning_rate]);
        set(&mut t.sigma, [file.train.sigma, common.sigma]);
        set(&mut t.max_leaves, [file.train.max_leaves, common.max_leaves]);
        set(&mut t.min_samples_leaf, [file.train.min_samples_leaf, common.min_samples_leaf]);
        set(&mut t.lambda_reg, [file.train.lambda_reg, common.lambda_reg]);
        t.seed = s.seed;
        t.p = s.eval.p;

        let i = &mut s.impute;
        set(&mut i.method, [file.impute.method, common.impute_method.map(Into::into)]);
        set(&mut i.k, [file.impute.k, common.k]);
        set(&mut i.max_iters, [file.impute.max_iters, common.max_iters]);
        set(&mut i.trees_per_forest, [file.impute.trees_per_forest, common.trees]);
        set(&mut i.crop, [file.impute.crop, common.crop]);
        set(&mut i.feature_threshold, [file.impute.feature_threshold, common.feature_threshold]);
        set(&mut i.language_threshold, [file.impute.language_threshold, common.language_threshold]);

        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Input(m.to_string()));
        if self.eval.p == 0 {
            return bad("p must be at least 1");
        }
        if self.top_k == 0 {
            return bad("top-k must be at least 1");
        }
        if self.target_cap == 0 || self.source_cap == 0 {
            return bad("corpus caps must be at least 1");
        }
        let t = &self.train;
        if !(t.learning_rate.is_finite() && t.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(t.sigma.is_finite() && t.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(t.lambda_reg.is_finite() && t.lambda_reg >= 0.0) {
            return bad("lambda must be non-negative");
        }
        if t.max_leaves == 0 || t.min_samples_leaf == 0 {
            return bad("max-leaves and min-samples-leaf must be at least 1");
        }
        let i = &self.impute;
        for th in [i.feature_threshold, i.language_threshold] {
            if !(0.0..=1.0).contains(&th) {
                return bad("crop thresholds must lie in [0, 1]");
            }
        }
        if i.k == 0 || i.trees_per_forest == 0 || i.max_iters == 0 {
            return bad("k, trees and max-iters must be at least 1");
        }
        Ok(())
    }

    pub fn missforest(&self) -> MissForestParams {
        MissForestParams {
            seed: self.seed,
            max_iters: self.impute.max_iters,
            trees_per_forest: self.impute.trees_per_forest,
        }
    }
}

fn load_file(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|source| CliError::Config { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn resolve(args: &[&str], toml: Option<&str>) -> Settings {
        let dir = tempfile::tempdir().unwrap();
        let mut argv = vec!["rankforge"];
        let cfg = dir.path().join("c.toml");
        let cfg_str = cfg.to_string_lossy().into_owned();
        if let Some(t) = toml {
            std::fs::write(&cfg, t).unwrap();
            argv.extend(["--config", &cfg_str]);
        }
        argv.extend(args);
        argv.extend(["importance", "--model", "m.json"]);
        let cli = crate::cli::Cli::try_parse_from(argv).unwrap();
        Settings::resolve(&cli.common).unwrap()
    }

    #[test]
    fn defaults() {
        let s = resolve(&[], None);
        assert_eq!(s, Settings::default());
        assert_eq!(s.train.num_rounds, 100);
        assert_eq!(s.eval.p, 5);
    }

    #[test]
    fn cli_beats_file_beats_default() {
        let toml = "seed = 7\np = 3\nrepresentation = \"full\"\n[train]\nnum_rounds = 20\n";
        let s = resolve(&[], Some(toml));
        assert_eq!((s.seed, s.eval.p, s.train.num_rounds), (7, 3, 20));
        assert_eq!(s.features.representation, Representation::Full);
        assert_eq!(s.train.seed, 7);

        let s = resolve(&["--seed", "9", "--rounds", "5", "--representation", "distance"], Some(toml));
        assert_eq!((s.seed, s.eval.p, s.train.num_rounds), (9, 3, 5));
        assert_eq!(s.features.representation, Representation::Distance);
    }

    #[test]
    fn bool_flags_override_both_ways() {
        let s = resolve(&["--casefold"], Some("casefold = false\n"));
        assert!(s.dataset.casefold);
        let s = resolve(&["--casefold=false"], Some("casefold = true\n"));
        assert!(!s.dataset.casefold);
    }

    #[test]
    fn relevance_names() {
        let s = resolve(&[], Some("relevance = \"best_is_p_minus_1\"\n"));
        assert_eq!(s.eval.relevance_convention, RelevanceConvention::BestIsPMinus1);
        let s = resolve(&["--relevance", "best-is-p"], Some("relevance = \"best_is_p_minus_1\"\n"));
        assert_eq!(s.eval.relevance_convention, RelevanceConvention::BestIsP);
        let s = resolve(&["--relevance", "best-is-p-minus-1", "--sample-std"], None);
        assert_eq!(s.eval.relevance_convention, RelevanceConvention::BestIsPMinus1);
        assert_eq!(s.std_kind, StdKind::Sample);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "sede = 1\n").unwrap();
        assert!(load_file(&cfg).is_err());
    }
}
