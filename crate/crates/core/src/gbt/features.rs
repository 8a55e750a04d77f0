use serde::{Deserialize, Serialize};

use super::GbtError;
use crate::analyzer::{Channel, TrafficRecord};

/// A window of consecutive per-interval loads, oldest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, GbtError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GbtError::NonFinite);
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: FeatureVector,
    pub target: f64,
}

/// Sliding-window samples over a scalar series: features are `series[i..i+window]`
/// and the target is `series[i+window]`.
pub fn featurize_series(series: &[f64], window: usize) -> Result<Vec<Sample>, GbtError> {
    if window == 0 {
        return Err(GbtError::InvalidConfig("window must be >= 1".into()));
    }
    if series.len() <= window {
        return Err(GbtError::InsufficientHistory {
            needed: window + 1,
            got: series.len(),
        });
    }
    series
        .windows(window + 1)
        .map(|w| {
            Ok(Sample {
                features: FeatureVector::new(w[..window].to_vec())?,
                target: w[window],
            })
        })
        .collect()
}

/// Samples built from the `channel` load of each record.
pub fn featurize(
    history: &[TrafficRecord],
    window: usize,
    channel: Channel,
) -> Result<Vec<Sample>, GbtError> {
    let series: Vec<f64> = history.iter().map(|r| r.load(channel)).collect();
    featurize_series(&series, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sample_when_history_is_window_plus_one() {
        let s = featurize_series(&[1.0; 6], 5).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn targets_enumerate_offsets() {
        let s = featurize_series(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 3).unwrap();
        let t: Vec<f64> = s.iter().map(|x| x.target).collect();
        assert_eq!(t, vec![4.0, 5.0, 6.0, 7.0]);
        assert_eq!(s[1].features.values(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn constant_history() {
        for s in featurize_series(&[9.0; 12], 4).unwrap() {
            assert!(s.features.values().iter().all(|&v| v == 9.0));
            assert_eq!(s.target, 9.0);
        }
    }

    #[test]
    fn short_history_errors() {
        assert_eq!(
            featurize_series(&[1.0; 5], 5),
            Err(GbtError::InsufficientHistory { needed: 6, got: 5 })
        );
    }

    #[test]
    fn records_use_channel() {
        let recs: Vec<TrafficRecord> = (0..4)
            .map(|i| TrafficRecord::scalar(i, Channel::Cpu, 10.0 * i as f64))
            .collect();
        let s = featurize(&recs, 2, Channel::Cpu).unwrap();
        assert_eq!(s[0].features.values(), &[0.0, 10.0]);
        assert_eq!(s[1].target, 30.0);
        let bw = featurize(&recs, 2, Channel::Bandwidth).unwrap();
        assert_eq!(bw[1].target, 0.0);
    }
}
