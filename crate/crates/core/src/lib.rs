//! Transfer-language ranking from typological, genealogical, geographic and
//! dataset features with a LambdaRank gradient-boosted ranker.

pub mod corpus;
pub mod dataset_features;
pub mod error;
pub mod evaluation;
pub mod performance;
pub mod ranking;
pub mod typology;

pub use error::{Error, Result};
