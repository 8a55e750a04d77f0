use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Sample};
use super::loss::{compute_gradients, squared_loss};
use super::tree::{fit_tree, RegressionTree, TreeParams};
use super::GbtError;
use crate::par::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Number of past intervals per feature vector.
    pub window: usize,
    pub execution: Execution,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            rounds: 50,
            max_depth: 4,
            learning_rate: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            window: 5,
            execution: Execution::default(),
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<(), GbtError> {
        let bad = |m: &str| Err(GbtError::InvalidConfig(m.into()));
        if self.rounds < 1 {
            return bad("rounds must be >= 1");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be >= 0");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be >= 0");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        Ok(())
    }
}

/// Training-set figures after each accepted round (index 0 is the base score
/// alone).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub objective: f64,
    pub mse: f64,
}

/// An additive ensemble: `base_score + learning_rate · Σ tree(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub trees: Vec<RegressionTree>,
    pub base_score: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub window: usize,
}

impl BoostedModel {
    pub fn constant(base_score: f64, window: usize) -> Self {
        BoostedModel {
            trees: Vec::new(),
            base_score,
            gamma: 0.0,
            lambda: 1.0,
            learning_rate: 1.0,
            max_depth: 1,
            window,
        }
    }

    pub fn fit(samples: &[Sample], cfg: &BoostConfig) -> Result<Self, GbtError> {
        Self::fit_with_trace(samples, cfg).map(|(m, _)| m)
    }

    /// Train and return per-round training statistics.
    ///
    /// A round whose tree would raise the regularized objective is discarded
    /// and training stops, so the objective never increases.
    pub fn fit_with_trace(
        samples: &[Sample],
        cfg: &BoostConfig,
    ) -> Result<(Self, Vec<RoundStats>), GbtError> {
        cfg.validate()?;
        if samples.is_empty() {
            return Err(GbtError::InsufficientHistory { needed: 1, got: 0 });
        }
        for s in samples {
            if s.features.len() != cfg.window {
                return Err(GbtError::FeatureLength {
                    expected: cfg.window,
                    got: s.features.len(),
                });
            }
            if !s.target.is_finite() {
                return Err(GbtError::NonFinite);
            }
        }

        let x: Vec<FeatureVector> = samples.iter().map(|s| s.features.clone()).collect();
        let y: Vec<f64> = samples.iter().map(|s| s.target).collect();
        let n = y.len() as f64;
        let base = y.iter().sum::<f64>() / n;

        let mut model = BoostedModel {
            trees: Vec::new(),
            base_score: base,
            gamma: cfg.gamma,
            lambda: cfg.lambda,
            learning_rate: cfg.learning_rate,
            max_depth: cfg.max_depth,
            window: cfg.window,
        };
        let params = TreeParams {
            max_depth: cfg.max_depth,
            lambda: cfg.lambda,
            gamma: cfg.gamma,
        };

        let mut pred = vec![base; y.len()];
        let mut loss: f64 = y.iter().zip(&pred).map(|(&t, &p)| squared_loss(t, p)).sum();
        let mut penalty = 0.0;
        let mut trace = vec![RoundStats {
            objective: loss,
            mse: loss / n,
        }];

        for _ in 0..cfg.rounds {
            let grads = compute_gradients(&y, &pred);
            let tree = fit_tree(&x, &grads, &params, cfg.execution);
            let next: Vec<f64> = pred
                .iter()
                .zip(&x)
                .map(|(p, f)| p + cfg.learning_rate * tree.predict(f.values()))
                .collect();
            let next_loss: f64 = y.iter().zip(&next).map(|(&t, &p)| squared_loss(t, p)).sum();
            let next_penalty = penalty + tree.penalty(cfg.gamma, cfg.lambda);
            if next_loss + next_penalty > loss + penalty {
                break;
            }
            let converged = next == pred;
            model.trees.push(tree);
            pred = next;
            loss = next_loss;
            penalty = next_penalty;
            trace.push(RoundStats {
                objective: loss + penalty,
                mse: loss / n,
            });
            if converged {
                break;
            }
        }
        Ok((model, trace))
    }

    pub fn predict(&self, f: &[f64]) -> Result<f64, GbtError> {
        if f.len() != self.window {
            return Err(GbtError::FeatureLength {
                expected: self.window,
                got: f.len(),
            });
        }
        Ok(self.predict_unchecked(f))
    }

    fn predict_unchecked(&self, f: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(f)).sum();
        self.base_score + self.learning_rate * sum
    }

    /// Training objective: Σ(y − ŷ)² + Σ_trees(γK + ½λ‖w‖²).
    pub fn objective(&self, samples: &[Sample]) -> f64 {
        let loss: f64 = samples
            .iter()
            .map(|s| squared_loss(s.target, self.predict_unchecked(s.features.values())))
            .sum();
        let pen: f64 = self.trees.iter().map(|t| t.penalty(self.gamma, self.lambda)).sum();
        loss + pen
    }
}
