use serde::{Deserialize, Serialize};

use crate::layer::relation_width;
use crate::numeric::{Activation, OptimizerConfig, DEFAULT_LEAKY_SLOPE};
use crate::{Error, Result};

/// Activation applied to the last layer of every filter network, before the
/// neighbour sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOutput {
    #[default]
    Identity,
    LeakyRelu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub k: usize,
    #[serde(default = "one")]
    pub stride_fraction: f64,
    /// Hidden widths of the filter network.
    #[serde(default)]
    pub hidden: Vec<usize>,
    /// `D′`, the number of output channels.
    pub out_features: usize,
    /// Optional assertion of the incoming feature width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSpec {
    #[serde(default)]
    pub hidden: Vec<usize>,
}

fn one() -> f64 {
    1.0
}
fn default_slope() -> f64 {
    DEFAULT_LEAKY_SLOPE
}
fn default_accumulate() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub spatial_dims: usize,
    #[serde(default)]
    pub input_features: usize,
    pub num_classes: usize,
    pub layers: Vec<LayerSpec>,
    pub head: HeadSpec,
    #[serde(default = "default_slope")]
    pub leaky_slope: f64,
    #[serde(default)]
    pub filter_output: FilterOutput,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Clouds per optimizer step; 1 means a step after every cloud.
    #[serde(default = "default_accumulate")]
    pub accumulate: usize,
}

impl ModelConfig {
    /// One K=8 layer with eight output channels, then the global head.
    pub fn toy() -> Self {
        ModelConfig {
            spatial_dims: 2,
            input_features: 0,
            num_classes: 2,
            layers: vec![LayerSpec { k: 8, stride_fraction: 1.0, hidden: vec![16], out_features: 8, in_features: None }],
            head: HeadSpec { hidden: vec![16] },
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            filter_output: FilterOutput::Identity,
            optimizer: OptimizerConfig::default(),
            epochs: 30,
            seed: 0,
            accumulate: 1,
        }
    }

    /// Three stride-0.5 layers (16/32/64 channels) and a wide head for
    /// ten-class 3D input.
    pub fn modelnet_reference() -> Self {
        let layer = |out| LayerSpec { k: 16, stride_fraction: 0.5, hidden: vec![32, 32], out_features: out, in_features: None };
        ModelConfig {
            spatial_dims: 3,
            input_features: 0,
            num_classes: 10,
            layers: vec![layer(16), layer(32), layer(64)],
            head: HeadSpec { hidden: vec![128, 128] },
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            filter_output: FilterOutput::Identity,
            optimizer: OptimizerConfig::default(),
            epochs: 20,
            seed: 0,
            accumulate: 1,
        }
    }

    pub fn hidden_activation(&self) -> Activation {
        Activation::leaky(self.leaky_slope)
    }

    pub fn filter_output_activation(&self) -> Activation {
        match self.filter_output {
            FilterOutput::Identity => Activation::Identity,
            FilterOutput::LeakyRelu => Activation::leaky(self.leaky_slope),
        }
    }

    /// Filter widths of layer `i` (`layers.len()` is the head).
    pub fn filter_widths(&self, i: usize) -> Vec<usize> {
        let features = if i == 0 { self.input_features } else { self.layers[i - 1].out_features };
        let mut w = vec![relation_width(self.spatial_dims, features)];
        if i < self.layers.len() {
            w.extend(&self.layers[i].hidden);
            w.push(self.layers[i].out_features);
        } else {
            w.extend(&self.head.hidden);
            w.push(self.num_classes);
        }
        w
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.spatial_dims) {
            return Err(Error::config(None, format!("spatial_dims {} must be 2 or 3", self.spatial_dims)));
        }
        if self.num_classes < 2 {
            return Err(Error::config(None, "need at least two classes"));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::config(None, format!("leaky_slope {} outside (0, 1)", self.leaky_slope)));
        }
        if self.accumulate == 0 {
            return Err(Error::config(None, "accumulate must be at least 1"));
        }
        let o = &self.optimizer;
        if !(o.lr >= 0.0 && o.lr.is_finite()) || !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || !(o.eps > 0.0) {
            return Err(Error::config(None, format!("invalid optimizer settings {o:?}")));
        }
        let mut features = self.input_features;
        for (i, l) in self.layers.iter().enumerate() {
            if let Some(declared) = l.in_features {
                if declared != features {
                    return Err(Error::config(Some(i), format!("declares {declared} input features but receives {features}")));
                }
            }
            if l.k == 0 {
                return Err(Error::config(Some(i), "K must be at least 1"));
            }
            if !(l.stride_fraction > 0.0 && l.stride_fraction <= 1.0) {
                return Err(Error::config(Some(i), format!("stride_fraction {} outside (0, 1]", l.stride_fraction)));
            }
            if l.out_features == 0 || l.hidden.contains(&0) {
                return Err(Error::config(Some(i), "zero width in filter network"));
            }
            features = l.out_features;
        }
        if self.head.hidden.contains(&0) {
            return Err(Error::config(Some(self.layers.len()), "zero width in head network"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ModelConfig = toml::from_str(text).map_err(|e| Error::config(None, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stable 64-bit fingerprint of the serialized config.
    pub fn fingerprint(&self) -> u64 {
        crate::rng::derive_seed(0, &self.to_toml())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        ModelConfig::toy().validate().unwrap();
        ModelConfig::modelnet_reference().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ModelConfig::modelnet_reference();
        let text = cfg.to_toml();
        assert_eq!(ModelConfig::from_toml(&text).unwrap(), cfg);
        assert_eq!(ModelConfig::from_toml(&text).unwrap().to_toml(), text);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = ModelConfig::toy().to_toml() + "\nbogus = 3\n";
        assert!(ModelConfig::from_toml(&text).is_err());
    }

    #[test]
    fn width_chain_violation_names_layer() {
        let mut cfg = ModelConfig::modelnet_reference();
        cfg.layers[2].in_features = Some(16);
        match cfg.validate() {
            Err(Error::Config { layer: Some(2), .. }) => {}
            other => panic!("{other:?}"),
        }
        cfg.layers[2].in_features = Some(32);
        cfg.validate().unwrap();
    }

    #[test]
    fn widths_chain_with_coordinates() {
        let cfg = ModelConfig::modelnet_reference();
        assert_eq!(cfg.filter_widths(0), vec![4, 32, 32, 16]);
        assert_eq!(cfg.filter_widths(1), vec![3 + 1 + 16, 32, 32, 32]);
        assert_eq!(cfg.filter_widths(3), vec![3 + 1 + 64, 128, 128, 10]);
    }
}
