//! Second-order gradient-boosted regression trees for interval load
//! forecasting.
//!
//! Squared-error loss, exact greedy splits over sorted feature values, and
//! the closed-form leaf weight and split gain that follow from a second-order
//! expansion of the regularized objective. Training is deterministic: no row
//! or column sampling.

mod features;
pub mod format;
mod loss;
mod model;
mod predictor;
mod tree;

pub use features::{featurize, featurize_series, FeatureVector, Sample};
pub use loss::{compute_gradients, squared_loss, GradientPair};
pub use model::{BoostConfig, BoostedModel, RoundStats};
pub use predictor::{normalized_samples, MinMax, TrafficPredictor};
pub use tree::{
    best_split, fit_tree, leaf_weight, split_gain, RegressionTree, SplitCandidate, TreeNode,
    TreeParams,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GbtError {
    #[error("insufficient history: need at least {needed} intervals, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("feature vector has length {got}, model window is {expected}")]
    FeatureLength { expected: usize, got: usize },
    #[error("non-finite value in training data")]
    NonFinite,
    #[error("invalid boosting config: {0}")]
    InvalidConfig(String),
    #[error("model text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
