//! Dataset-dependent pair features: word overlap and type-token ratios.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{token_count, vocabulary, TokenizedCorpus};

pub const DATASET_FEATURE_NAMES: [&str; 4] =
    ["word_overlap", "transfer_ttr", "task_ttr", "distance_ttr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OverlapFormula {
    /// |Vs ∩ Vt| / (|Vs| + |Vt|); at most 0.5.
    #[default]
    SharedOverSum,
    /// |Vs ∩ Vt| / |Vs ∪ Vt|.
    Jaccard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TtrDistance {
    /// |ttr_s - ttr_t|
    #[default]
    Absolute,
    /// (1 - ttr_s / ttr_t)^2
    SquaredRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DatasetFeatureOptions {
    pub casefold: bool,
    pub overlap: OverlapFormula,
    pub ttr_distance: TtrDistance,
}

/// Vocabulary and token count of one corpus, precomputed for pairing.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub language_code: String,
    pub vocabulary: BTreeSet<String>,
    pub token_count: usize,
}

impl CorpusStats {
    pub fn from_corpus(corpus: &TokenizedCorpus, casefold: bool) -> Self {
        CorpusStats {
            language_code: corpus.language_code().to_string(),
            vocabulary: vocabulary(corpus, casefold),
            token_count: token_count(corpus),
        }
    }

    pub fn ttr(&self) -> f64 {
        self.vocabulary.len() as f64 / self.token_count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetFeatureBlock {
    pub word_overlap: f64,
    pub transfer_ttr: f64,
    pub task_ttr: f64,
    pub distance_ttr: f64,
}

impl DatasetFeatureBlock {
    pub fn values(&self) -> [f64; 4] {
        [self.word_overlap, self.transfer_ttr, self.task_ttr, self.distance_ttr]
    }
}

pub fn overlap_of_sets(
    source: &BTreeSet<String>,
    target: &BTreeSet<String>,
    formula: OverlapFormula,
) -> f64 {
    let shared = source.intersection(target).count() as f64;
    let denom = match formula {
        OverlapFormula::SharedOverSum => (source.len() + target.len()) as f64,
        OverlapFormula::Jaccard => source.len() as f64 + target.len() as f64 - shared,
    };
    if denom == 0.0 {
        0.0
    } else {
        shared / denom
    }
}

/// Word overlap between two corpora under the default formula and exact strings.
pub fn word_overlap(source: &TokenizedCorpus, target: &TokenizedCorpus) -> f64 {
    overlap_of_sets(
        &vocabulary(source, false),
        &vocabulary(target, false),
        OverlapFormula::SharedOverSum,
    )
}

pub fn ttr(corpus: &TokenizedCorpus) -> f64 {
    vocabulary(corpus, false).len() as f64 / token_count(corpus) as f64
}

pub fn ttr_distance(transfer_ttr: f64, task_ttr: f64) -> f64 {
    ttr_distance_with(transfer_ttr, task_ttr, TtrDistance::Absolute)
}

pub fn ttr_distance_with(transfer_ttr: f64, task_ttr: f64, kind: TtrDistance) -> f64 {
    match kind {
        TtrDistance::Absolute => (transfer_ttr - task_ttr).abs(),
        TtrDistance::SquaredRatio => (1.0 - transfer_ttr / task_ttr).powi(2),
    }
}

pub fn dataset_feature_block(source: &TokenizedCorpus, target: &TokenizedCorpus) -> DatasetFeatureBlock {
    let opts = DatasetFeatureOptions::default();
    block_from_stats(
        &CorpusStats::from_corpus(source, opts.casefold),
        &CorpusStats::from_corpus(target, opts.casefold),
        &opts,
    )
}

pub fn block_from_stats(
    source: &CorpusStats,
    target: &CorpusStats,
    opts: &DatasetFeatureOptions,
) -> DatasetFeatureBlock {
    let transfer_ttr = source.ttr();
    let task_ttr = target.ttr();
    DatasetFeatureBlock {
        word_overlap: overlap_of_sets(&source.vocabulary, &target.vocabulary, opts.overlap),
        transfer_ttr,
        task_ttr,
        distance_ttr: ttr_distance_with(transfer_ttr, task_ttr, opts.ttr_distance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(tokens: &[&str]) -> TokenizedCorpus {
        TokenizedCorpus::new("x", vec![tokens.iter().map(|t| t.to_string()).collect()], "").unwrap()
    }

    #[test]
    fn overlap_examples() {
        let a = corpus(&["a", "b", "c"]);
        let b = corpus(&["b", "c", "d"]);
        assert!((word_overlap(&a, &b) - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(word_overlap(&a, &a), 0.5);
        assert_eq!(word_overlap(&a, &corpus(&["x", "y"])), 0.0);

        let va = vocabulary(&a, false);
        let vb = vocabulary(&b, false);
        assert_eq!(overlap_of_sets(&va, &vb, OverlapFormula::Jaccard), 0.5);
    }

    #[test]
    fn ttr_examples() {
        let c = corpus(&["the", "cat", "sat", "on", "the", "mat"]);
        assert!((ttr(&c) - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(ttr(&corpus(&["a", "b", "c"])), 1.0);
        assert_eq!(ttr(&corpus(&["a"; 7])), 1.0 / 7.0);
    }

    #[test]
    fn ttr_distance_examples() {
        assert!((ttr_distance(0.8, 0.5) - 0.3).abs() < 1e-12);
        assert!((ttr_distance(0.5, 0.8) - 0.3).abs() < 1e-12);
        assert_eq!(ttr_distance(0.4, 0.4), 0.0);
        assert!((ttr_distance_with(0.25, 0.5, TtrDistance::SquaredRatio) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn block_examples() {
        let c = corpus(&["a", "b", "a"]);
        let same = dataset_feature_block(&c, &c);
        assert_eq!(same.word_overlap, 0.5);
        assert_eq!(same.distance_ttr, 0.0);

        let src = corpus(&["a", "b"]);
        let tgt = corpus(&["c", "c"]);
        let block = dataset_feature_block(&src, &tgt);
        assert_eq!(block.values(), [0.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn casefold_option_changes_vocabulary() {
        let s = CorpusStats::from_corpus(&corpus(&["The", "cat"]), true);
        let t = CorpusStats::from_corpus(&corpus(&["the", "dog"]), true);
        let opts = DatasetFeatureOptions { casefold: true, ..Default::default() };
        assert_eq!(block_from_stats(&s, &t, &opts).word_overlap, 0.25);
    }

    proptest! {
        #[test]
        fn overlap_symmetric_and_bounded(
            a in proptest::collection::vec("[a-e]{1,2}", 1..20),
            b in proptest::collection::vec("[a-e]{1,2}", 1..20),
        ) {
            let ca = TokenizedCorpus::new("a", vec![a], "").unwrap();
            let cb = TokenizedCorpus::new("b", vec![b], "").unwrap();
            let ab = word_overlap(&ca, &cb);
            prop_assert_eq!(ab, word_overlap(&cb, &ca));
            prop_assert!((0.0..=0.5).contains(&ab));
            let t = ttr(&ca);
            prop_assert!(t > 0.0 && t <= 1.0);
        }

        #[test]
        fn ttr_distance_symmetric(x in 0.001f64..=1.0, y in 0.001f64..=1.0) {
            prop_assert_eq!(ttr_distance(x, y), ttr_distance(y, x));
            prop_assert!(ttr_distance(x, y) >= 0.0);
            prop_assert_eq!(ttr_distance(x, y) == 0.0, x == y);
        }
    }
}
