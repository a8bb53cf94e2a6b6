use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

/// One point of the hyperparameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_layers: usize,
    pub first_layer_size: usize,
    pub dropout_rate: f64,
    pub with_batch_norm: bool,
    pub layer_ratio: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: 1,
            first_layer_size: 128,
            dropout_rate: 0.0,
            with_batch_norm: true,
            layer_ratio: 1.0,
            learning_rate: 0.001,
            batch_size: 64,
        }
    }
}

impl MlpConfig {
    /// Hidden widths `round(first × ratio^(ℓ-1))`.
    pub fn layer_sizes(&self) -> Vec<usize> {
        (0..self.hidden_layers)
            .map(|l| (self.first_layer_size as f64 * self.layer_ratio.powi(l as i32)).round() as usize)
            .collect()
    }

    /// Structural checks; does not require membership of the search grid.
    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_string()));
        if self.hidden_layers == 0 {
            return bad("at least one hidden layer is required");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout rate must lie in [0, 1)");
        }
        if !(self.layer_ratio > 0.0 && self.layer_ratio.is_finite()) {
            return bad("layer ratio must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        for (l, &width) in self.layer_sizes().iter().enumerate() {
            if width < 2 {
                return Err(NnError::DegenerateLayer { layer: l + 1, width });
            }
        }
        Ok(())
    }
}

/// Value sets sampled by the random search. The default is the standard
/// grid; tests shrink it to keep runs short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub hidden_layers: Vec<usize>,
    pub first_layer_size: Vec<usize>,
    pub dropout_rate: Vec<f64>,
    pub with_batch_norm: Vec<bool>,
    pub layer_ratio: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub batch_size: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            hidden_layers: vec![1, 2, 3, 4],
            first_layer_size: vec![1024, 768, 512, 256, 128],
            dropout_rate: vec![0.0, 0.4, 0.7],
            with_batch_norm: vec![true, false],
            layer_ratio: vec![0.5, 1.0],
            learning_rate: vec![0.00005, 0.0001, 0.0002, 0.0004, 0.0008, 0.001],
            batch_size: vec![64, 128, 256, 512],
        }
    }
}

impl SearchSpace {
    /// A space with a single point.
    pub fn fixed(config: &MlpConfig) -> Self {
        SearchSpace {
            hidden_layers: vec![config.hidden_layers],
            first_layer_size: vec![config.first_layer_size],
            dropout_rate: vec![config.dropout_rate],
            with_batch_norm: vec![config.with_batch_norm],
            layer_ratio: vec![config.layer_ratio],
            learning_rate: vec![config.learning_rate],
            batch_size: vec![config.batch_size],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.hidden_layers.is_empty()
            || self.first_layer_size.is_empty()
            || self.dropout_rate.is_empty()
            || self.with_batch_norm.is_empty()
            || self.layer_ratio.is_empty()
            || self.learning_rate.is_empty()
            || self.batch_size.is_empty()
    }

    /// Draw each field uniformly and independently, in declaration order.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> MlpConfig {
        assert!(!self.is_empty(), "search space has an empty field");
        MlpConfig {
            hidden_layers: *self.hidden_layers.choose(rng).unwrap(),
            first_layer_size: *self.first_layer_size.choose(rng).unwrap(),
            dropout_rate: *self.dropout_rate.choose(rng).unwrap(),
            with_batch_norm: *self.with_batch_norm.choose(rng).unwrap(),
            layer_ratio: *self.layer_ratio.choose(rng).unwrap(),
            learning_rate: *self.learning_rate.choose(rng).unwrap(),
            batch_size: *self.batch_size.choose(rng).unwrap(),
        }
    }

    pub fn contains(&self, c: &MlpConfig) -> bool {
        self.hidden_layers.contains(&c.hidden_layers)
            && self.first_layer_size.contains(&c.first_layer_size)
            && self.dropout_rate.contains(&c.dropout_rate)
            && self.with_batch_norm.contains(&c.with_batch_norm)
            && self.layer_ratio.contains(&c.layer_ratio)
            && self.learning_rate.contains(&c.learning_rate)
            && self.batch_size.contains(&c.batch_size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn geometric_widths() {
        let c = MlpConfig {
            hidden_layers: 4,
            first_layer_size: 128,
            layer_ratio: 0.5,
            ..MlpConfig::default()
        };
        assert_eq!(c.layer_sizes(), vec![128, 64, 32, 16]);
        let flat = MlpConfig { layer_ratio: 1.0, ..c.clone() };
        assert_eq!(flat.layer_sizes(), vec![128; 4]);
    }

    #[test]
    fn degenerate_width() {
        let c = MlpConfig {
            hidden_layers: 3,
            first_layer_size: 4,
            layer_ratio: 0.25,
            ..MlpConfig::default()
        };
        assert!(matches!(c.validate(), Err(NnError::DegenerateLayer { layer: 2, width: 1 })));
    }

    proptest! {
        #[test]
        fn samples_stay_in_grid(seed in any::<u64>()) {
            let space = SearchSpace::default();
            let c = space.sample(&mut seeded(seed));
            prop_assert!(space.contains(&c));
            prop_assert!(c.validate().is_ok());
        }
    }
}
