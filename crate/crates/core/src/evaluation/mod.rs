pub mod divergence;
pub mod loo;
pub mod ndcg;

pub use divergence::{family_pair_tally, rank_divergence, ranks_from_scores, DivergenceRow};
pub use loo::{loo_cv, LooReport, StdKind, TargetScore};
pub use ndcg::{dcg_at_p, ndcg_at_p, EvalConfig};
