pub mod dataset;
pub mod features;
pub mod gbdt;
pub mod importance;
pub mod lambdarank;
pub mod relevance;
pub mod tree;

pub use dataset::{RankingDataset, RankingGroup};
pub use features::{
    FeatureConfig, FeatureStores, PairFeatureTable, PairFeatureVector, Representation, SyntacticSource,
};
pub use gbdt::{rank_by_score, train, GbdtModel, TrainParams};
pub use importance::{feature_importance, top_k, FeatureGain, DEFAULT_TOP_K};
pub use lambdarank::compute_group_gradients;
pub use relevance::{assign_relevance, Candidate, GoldRankingGroup, RelevanceConvention};
pub use tree::{fit_regression_tree, RegressionTree, TreeNode, TreeParams};
