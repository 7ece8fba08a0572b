use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bufcalc::{BufferPlan, StackSpec};
use crate::data::DEFAULT_BIN_MS;
use crate::error::{Error, Result};
use crate::fxp::{FixedPointFormat, NumberFormat};

/// Largest supported product of pooling strides.
pub const MAX_INTERPOLATION_FACTOR: usize = 8;

fn default_step_ms() -> f64 {
    DEFAULT_BIN_MS
}

fn default_stride() -> usize {
    1
}

/// Full description of a conv/pool → LIF → readout network.
///
/// Parsed from TOML; see `configs/` for complete examples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub input_channels: usize,
    #[serde(default = "default_step_ms")]
    pub step_ms: f64,
    /// Training window length; carried as metadata only.
    #[serde(default)]
    pub seq_len_train: usize,
    #[serde(default)]
    pub weight_format: NumberFormat,
    #[serde(default)]
    pub buffer_format: NumberFormat,
    #[serde(default)]
    pub conv_activation: Activation,
    pub conv: Vec<ConvSpec>,
    pub pool: Vec<PoolSpec>,
    pub lif: Vec<LifSpec>,
    #[serde(default)]
    pub lif_params: LifConfig,
    #[serde(default)]
    pub readout: ReadoutSpec,
    #[serde(default)]
    pub stream: StreamSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifSpec {
    pub units: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    None,
    Relu,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reset {
    #[default]
    Subtract,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifConfig {
    /// Membrane decay per keypoint step, in `[0, 1)`.
    pub beta: f64,
    pub threshold: f64,
    #[serde(default)]
    pub reset: Reset,
}

impl Default for LifConfig {
    fn default() -> Self {
        Self {
            beta: 0.9,
            threshold: 1.0,
            reset: Reset::Subtract,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Leaky integrator over the last LIF layer's spikes.
    #[default]
    Integrator,
    /// Leaky integrator over the last LIF layer's membrane potentials.
    Membrane,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutSpec {
    pub units: usize,
    /// Output decay per keypoint step, in `[0, 1]`.
    pub beta: f64,
    #[serde(default)]
    pub mode: ReadoutMode,
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        Self {
            units: 2,
            beta: 0.9,
            mode: ReadoutMode::Integrator,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmupPolicy {
    /// No velocity output until the first keypoint.
    #[default]
    Silent,
    /// Warmup events carry a zero velocity.
    HoldZero,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    #[serde(default)]
    pub warmup: WarmupPolicy,
}

impl NetworkConfig {
    /// Doubling-kernel stack with 2/2 average pooling after every conv.
    pub fn doubling(
        input_channels: usize,
        conv_channels: &[usize],
        first_kernel: usize,
        lif_units: &[usize],
    ) -> Self {
        Self {
            input_channels,
            step_ms: DEFAULT_BIN_MS,
            seq_len_train: 0,
            weight_format: NumberFormat::Float,
            buffer_format: NumberFormat::Float,
            conv_activation: Activation::None,
            conv: conv_channels
                .iter()
                .enumerate()
                .map(|(i, &c)| ConvSpec {
                    out_channels: c,
                    kernel: first_kernel << i,
                    stride: 1,
                })
                .collect(),
            pool: vec![
                PoolSpec {
                    kernel: 2,
                    stride: 2
                };
                conv_channels.len()
            ],
            lif: lif_units.iter().map(|&units| LifSpec { units }).collect(),
            lif_params: LifConfig::default(),
            readout: ReadoutSpec::default(),
            stream: StreamSpec::default(),
        }
    }

    /// Two-layer realtime stack with kernels 9 and 18.
    pub fn rtnet(input_channels: usize) -> Self {
        Self::doubling(input_channels, &[40, 40], 9, &[64])
    }

    /// Quantized variant of [`NetworkConfig::rtnet`]: Q1.7 weights, Q1.4 buffers.
    pub fn srtnet(input_channels: usize) -> Self {
        Self {
            weight_format: NumberFormat::Fixed(FixedPointFormat::Q1_7),
            buffer_format: NumberFormat::Fixed(FixedPointFormat::Q1_4),
            ..Self::rtnet(input_channels)
        }
    }

    /// Three-layer stack with kernels 31, 62 and 124.
    pub fn bmnet(input_channels: usize) -> Self {
        Self::doubling(input_channels, &[64, 64, 64], 31, &[128, 128])
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn stack(&self) -> StackSpec {
        StackSpec {
            conv_kernels: self.conv.iter().map(|c| c.kernel).collect(),
            conv_strides: self.conv.iter().map(|c| c.stride).collect(),
            pool_kernels: self.pool.iter().map(|p| p.kernel).collect(),
            pool_strides: self.pool.iter().map(|p| p.stride).collect(),
            step_ms: self.step_ms,
        }
    }

    pub fn plan(&self) -> Result<BufferPlan> {
        BufferPlan::new(&self.stack())
    }

    /// Input channel count of conv layer `l`.
    pub fn conv_in_channels(&self, l: usize) -> usize {
        if l == 0 {
            self.input_channels
        } else {
            self.conv[l - 1].out_channels
        }
    }

    /// Fan-in of LIF layer `l`.
    pub fn lif_fan_in(&self, l: usize) -> usize {
        if l == 0 {
            self.conv.last().map_or(0, |c| c.out_channels)
        } else {
            self.lif[l - 1].units
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.input_channels == 0 {
            return bad("input_channels must be >= 1".into());
        }
        if self.conv.is_empty() {
            return bad("at least one conv layer is required".into());
        }
        if self.pool.len() != self.conv.len() {
            return bad(format!(
                "{} conv layers but {} pool layers; each conv needs one pool",
                self.conv.len(),
                self.pool.len()
            ));
        }
        for (i, c) in self.conv.iter().enumerate() {
            if c.out_channels == 0 || c.kernel == 0 || c.stride == 0 {
                return bad(format!(
                    "conv layer {i}: channels, kernel and stride must be >= 1"
                ));
            }
        }
        for w in self.conv.windows(2) {
            if w[1].kernel != 2 * w[0].kernel {
                return bad(format!(
                    "conv kernels must double layer to layer, got {} then {}",
                    w[0].kernel, w[1].kernel
                ));
            }
        }
        let plan = self.plan()?;
        if plan.interpolation_factor > MAX_INTERPOLATION_FACTOR {
            return bad(format!(
                "interpolation factor {} exceeds {MAX_INTERPOLATION_FACTOR}",
                plan.interpolation_factor
            ));
        }
        if self.lif.is_empty() || self.lif.iter().any(|l| l.units == 0) {
            return bad("at least one LIF layer with >= 1 unit is required".into());
        }
        let p = &self.lif_params;
        if !(0.0..1.0).contains(&p.beta) {
            return bad(format!("lif beta must be in [0, 1), got {}", p.beta));
        }
        if !(p.threshold > 0.0 && p.threshold.is_finite()) {
            return bad(format!("lif threshold must be > 0, got {}", p.threshold));
        }
        if self.readout.units != 2 {
            return bad(format!(
                "readout must have 2 units, got {}",
                self.readout.units
            ));
        }
        if !(0.0..=1.0).contains(&self.readout.beta) {
            return bad(format!(
                "readout beta must be in [0, 1], got {}",
                self.readout.beta
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RTNET_TOML: &str = r#"
input_channels = 96
step_ms = 4.0
weight_format = "1-1-7"
buffer_format = "1-1-4"

[[conv]]
out_channels = 40
kernel = 9

[[pool]]
kernel = 2
stride = 2

[[conv]]
out_channels = 40
kernel = 18

[[pool]]
kernel = 2
stride = 2

[[lif]]
units = 64

[lif_params]
beta = 0.9
threshold = 1.0
reset = "zero"

[readout]
units = 2
beta = 0.5
mode = "membrane"
"#;

    #[test]
    fn parse_toml() {
        let cfg = NetworkConfig::from_toml_str(RTNET_TOML).unwrap();
        assert_eq!(cfg.conv.len(), 2);
        assert_eq!(cfg.conv[1].kernel, 18);
        assert_eq!(
            cfg.weight_format,
            NumberFormat::Fixed(FixedPointFormat::Q1_7)
        );
        assert_eq!(cfg.lif_params.reset, Reset::Zero);
        assert_eq!(cfg.readout.mode, ReadoutMode::Membrane);
        assert_eq!(cfg.stream.warmup, WarmupPolicy::Silent);
        assert_eq!(cfg.plan().unwrap().receptive_field, 46);
        let again = NetworkConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = NetworkConfig::rtnet(96);
        c.conv[1].kernel = 17;
        assert!(c.validate().is_err());

        let mut c = NetworkConfig::rtnet(96);
        c.pool.pop();
        assert!(c.validate().is_err());

        let mut c = NetworkConfig::rtnet(96);
        c.lif_params.beta = 1.0;
        assert!(c.validate().is_err());

        let mut c = NetworkConfig::rtnet(96);
        c.lif_params.threshold = 0.0;
        assert!(c.validate().is_err());

        let mut c = NetworkConfig::bmnet(96);
        c.pool[0] = PoolSpec {
            kernel: 4,
            stride: 4,
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));

        let mut c = NetworkConfig::rtnet(96);
        c.readout.units = 3;
        assert!(c.validate().is_err());

        let bad = RTNET_TOML.replace("input_channels = 96", "input_channels = 96\nbogus = 1");
        assert!(NetworkConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn presets_validate() {
        NetworkConfig::rtnet(96).validate().unwrap();
        NetworkConfig::srtnet(192).validate().unwrap();
        NetworkConfig::bmnet(192).validate().unwrap();
    }
}
