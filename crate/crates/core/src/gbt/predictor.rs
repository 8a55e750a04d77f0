use serde::{Deserialize, Serialize};

use super::features::{featurize_series, Sample};
use super::model::{BoostConfig, BoostedModel};
use super::GbtError;
use crate::analyzer::{Channel, TrafficRecord};

/// Min-max scaling onto [0, 1]. A zero-width range maps everything to 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn fit(values: &[f64]) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min.is_finite() && max.is_finite() {
            MinMax { min, max }
        } else {
            MinMax { min: 0.0, max: 0.0 }
        }
    }

    fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn normalize(&self, v: f64) -> f64 {
        if self.span() > 0.0 {
            (v - self.min) / self.span()
        } else {
            0.0
        }
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        self.min + v * self.span()
    }
}

/// A boosted model over normalized per-interval load of one channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficPredictor {
    pub model: BoostedModel,
    pub scale: MinMax,
    pub channel: Channel,
}

impl TrafficPredictor {
    pub fn train_series(series: &[f64], cfg: &BoostConfig, channel: Channel) -> Result<Self, GbtError> {
        cfg.validate()?;
        if series.iter().any(|v| !v.is_finite()) {
            return Err(GbtError::NonFinite);
        }
        let scale = MinMax::fit(series);
        let norm: Vec<f64> = series.iter().map(|&v| scale.normalize(v)).collect();
        let samples = featurize_series(&norm, cfg.window)?;
        Ok(TrafficPredictor {
            model: BoostedModel::fit(&samples, cfg)?,
            scale,
            channel,
        })
    }

    pub fn train(history: &[TrafficRecord], cfg: &BoostConfig, channel: Channel) -> Result<Self, GbtError> {
        let series: Vec<f64> = history.iter().map(|r| r.load(channel)).collect();
        Self::train_series(&series, cfg, channel)
    }

    pub fn window(&self) -> usize {
        self.model.window
    }

    /// Forecast the load following `recent` (raw units), using its last
    /// `window` values.
    pub fn predict_next_series(&self, recent: &[f64]) -> Result<f64, GbtError> {
        let w = self.window();
        if recent.len() < w {
            return Err(GbtError::InsufficientHistory {
                needed: w,
                got: recent.len(),
            });
        }
        let x: Vec<f64> = recent[recent.len() - w..]
            .iter()
            .map(|&v| self.scale.normalize(v))
            .collect();
        let y = self.model.predict(&x)?;
        Ok(self.scale.denormalize(y).max(0.0))
    }

    pub fn predict_next(&self, recent: &[TrafficRecord]) -> Result<f64, GbtError> {
        let series: Vec<f64> = recent.iter().map(|r| r.load(self.channel)).collect();
        self.predict_next_series(&series)
    }
}

/// Samples over a series normalized with `scale`.
pub fn normalized_samples(series: &[f64], scale: &MinMax, window: usize) -> Result<Vec<Sample>, GbtError> {
    let norm: Vec<f64> = series.iter().map(|&v| scale.normalize(v)).collect();
    featurize_series(&norm, window)
}
