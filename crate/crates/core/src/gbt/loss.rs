use serde::{Deserialize, Serialize};

/// First and second derivative of the loss at the current prediction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientPair {
    pub g: f64,
    pub h: f64,
}

impl std::ops::Add for GradientPair {
    type Output = GradientPair;
    fn add(self, o: GradientPair) -> GradientPair {
        GradientPair {
            g: self.g + o.g,
            h: self.h + o.h,
        }
    }
}

impl std::ops::Sub for GradientPair {
    type Output = GradientPair;
    fn sub(self, o: GradientPair) -> GradientPair {
        GradientPair {
            g: self.g - o.g,
            h: self.h - o.h,
        }
    }
}

impl GradientPair {
    pub const ZERO: GradientPair = GradientPair { g: 0.0, h: 0.0 };
}

/// (y − ŷ)²
pub fn squared_loss(target: f64, prediction: f64) -> f64 {
    let r = target - prediction;
    r * r
}

/// g = 2(ŷ − y), h = 2 for every sample.
///
/// # Panics
/// If the slices differ in length.
pub fn compute_gradients(targets: &[f64], predictions: &[f64]) -> Vec<GradientPair> {
    assert_eq!(targets.len(), predictions.len(), "targets/predictions length");
    targets
        .iter()
        .zip(predictions)
        .map(|(&y, &p)| GradientPair {
            g: 2.0 * (p - y),
            h: 2.0,
        })
        .collect()
}
