use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bufcalc::BufferPlan;
use crate::error::{Error, Result};
use crate::fxp::{FixedPointFormat, NumberFormat, SaturationCounter};
use crate::model::config::{Activation, NetworkConfig};
use crate::model::layers::{Boundary, ConvLayer, LifLayer, LifParams, LifState, Readout};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    ConvWeight,
    ConvBias,
    LifInput,
    LifRecurrent,
    LifBias,
    ReadoutWeight,
}

impl ParamKind {
    /// Synaptic weights, as opposed to biases.
    pub fn is_connection(self) -> bool {
        !matches!(self, ParamKind::ConvBias | ParamKind::LifBias)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    pub len: usize,
    /// Inputs feeding each output of this parameter; used for initialization.
    pub fan_in: usize,
}

/// Every parameter of `config`, in the order used by weight files.
pub fn parameter_specs(config: &NetworkConfig) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    let mut push = |name: String, kind, len, fan_in| {
        specs.push(ParamSpec {
            name,
            kind,
            len,
            fan_in,
        })
    };
    for (l, c) in config.conv.iter().enumerate() {
        let fan_in = config.conv_in_channels(l) * c.kernel;
        push(
            format!("conv{l}.weight"),
            ParamKind::ConvWeight,
            c.out_channels * fan_in,
            fan_in,
        );
        push(
            format!("conv{l}.bias"),
            ParamKind::ConvBias,
            c.out_channels,
            fan_in,
        );
    }
    for (l, lif) in config.lif.iter().enumerate() {
        let fan_in = config.lif_fan_in(l);
        push(
            format!("lif{l}.w_in"),
            ParamKind::LifInput,
            lif.units * fan_in,
            fan_in,
        );
        push(
            format!("lif{l}.w_rec"),
            ParamKind::LifRecurrent,
            lif.units * lif.units,
            lif.units,
        );
        push(
            format!("lif{l}.bias"),
            ParamKind::LifBias,
            lif.units,
            fan_in,
        );
    }
    let last = config.lif.last().map_or(0, |l| l.units);
    push(
        "readout.weight".into(),
        ParamKind::ReadoutWeight,
        2 * last,
        last,
    );
    specs
}

/// Recurrent LIF stack and readout state carried from keypoint to keypoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CoreState<T> {
    pub lif: Vec<LifState<T>>,
    pub readout: [T; 2],
}

/// Validated network with its parameters. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel<T> {
    config: NetworkConfig,
    plan: BufferPlan,
    conv: Vec<ConvLayer<T>>,
    lif: Vec<LifLayer<T>>,
    readout: Readout<T>,
    lif_params: LifParams<T>,
}

impl<T: Scalar> NetworkModel<T> {
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let plan = config.plan()?;
        let conv = config
            .conv
            .iter()
            .enumerate()
            .map(|(l, c)| {
                ConvLayer::zeros(
                    config.conv_in_channels(l),
                    c.out_channels,
                    c.kernel,
                    c.stride,
                )
            })
            .collect();
        let lif = config
            .lif
            .iter()
            .enumerate()
            .map(|(l, s)| LifLayer::zeros(s.units, config.lif_fan_in(l)))
            .collect();
        let last = config.lif.last().expect("validated").units;
        let readout = Readout::zeros(last, T::of(config.readout.beta), config.readout.mode);
        let lif_params = LifParams {
            beta: T::of(config.lif_params.beta),
            threshold: T::of(config.lif_params.threshold),
            reset: config.lif_params.reset,
        };
        Ok(Self {
            config,
            plan,
            conv,
            lif,
            readout,
            lif_params,
        })
    }

    /// Build from parameter vectors given in [`parameter_specs`] order.
    pub fn from_parameters(config: NetworkConfig, values: Vec<Vec<T>>) -> Result<Self> {
        let mut model = Self::zeros(config)?;
        let specs = parameter_specs(&model.config);
        if values.len() != specs.len() {
            return Err(Error::Shape {
                what: "parameter count".into(),
                expected: specs.len(),
                actual: values.len(),
            });
        }
        for ((spec, slot), v) in specs.iter().zip(model.slots_mut()).zip(values) {
            if v.len() != spec.len {
                return Err(Error::Shape {
                    what: spec.name.clone(),
                    expected: spec.len,
                    actual: v.len(),
                });
            }
            *slot = v;
        }
        model.check_representable()?;
        Ok(model)
    }

    /// Uniform weights in `±gain / sqrt(fan_in)`, snapped to the weight
    /// format when it is fixed-point.
    pub fn random(config: NetworkConfig, seed: u64, gain: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fmt = config.weight_format.fixed();
        let values = parameter_specs(&config)
            .iter()
            .map(|spec| {
                let bound = gain / (spec.fan_in.max(1) as f64).sqrt();
                (0..spec.len)
                    .map(|_| {
                        let x = if bound > 0.0 {
                            rng.random_range(-bound..bound)
                        } else {
                            0.0
                        };
                        T::of(fmt.map_or(x, |f| f.snap(x).0))
                    })
                    .collect()
            })
            .collect();
        Self::from_parameters(config, values)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn plan(&self) -> &BufferPlan {
        &self.plan
    }

    pub fn conv_layers(&self) -> &[ConvLayer<T>] {
        &self.conv
    }

    pub fn lif_layers(&self) -> &[LifLayer<T>] {
        &self.lif
    }

    pub fn readout(&self) -> &Readout<T> {
        &self.readout
    }

    pub fn lif_params(&self) -> &LifParams<T> {
        &self.lif_params
    }

    pub fn input_channels(&self) -> usize {
        self.config.input_channels
    }

    fn slots(&self) -> Vec<&Vec<T>> {
        let mut out = Vec::new();
        for c in &self.conv {
            out.push(&c.weight);
            out.push(&c.bias);
        }
        for l in &self.lif {
            out.push(&l.w_in);
            out.push(&l.w_rec);
            out.push(&l.bias);
        }
        out.push(&self.readout.weight);
        out
    }

    fn slots_mut(&mut self) -> Vec<&mut Vec<T>> {
        let mut out = Vec::new();
        for c in &mut self.conv {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        for l in &mut self.lif {
            out.push(&mut l.w_in);
            out.push(&mut l.w_rec);
            out.push(&mut l.bias);
        }
        out.push(&mut self.readout.weight);
        out
    }

    pub fn parameters(&self) -> Vec<(ParamSpec, &[T])> {
        parameter_specs(&self.config)
            .into_iter()
            .zip(self.slots())
            .map(|(s, v)| (s, v.as_slice()))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.slots().iter().map(|v| v.len()).sum()
    }

    /// Replace one named parameter.
    pub fn set_parameter(&mut self, name: &str, values: Vec<T>) -> Result<()> {
        let specs = parameter_specs(&self.config);
        let (i, spec) = specs
            .iter()
            .enumerate()
            .find(|(_, s)| s.name == name)
            .ok_or_else(|| Error::InvalidConfig(format!("no parameter named {name:?}")))?;
        if values.len() != spec.len {
            return Err(Error::Shape {
                what: name.into(),
                expected: spec.len,
                actual: values.len(),
            });
        }
        if let Some(fmt) = self.config.weight_format.fixed() {
            check_values(name, &values, fmt)?;
        }
        *self.slots_mut().swap_remove(i) = values;
        Ok(())
    }

    /// Copy of the model with `f` applied to every parameter value.
    pub fn map_parameters(&self, mut f: impl FnMut(&ParamSpec, T) -> T) -> Result<Self> {
        let mut out = self.clone();
        let specs = parameter_specs(&self.config);
        for (spec, slot) in specs.iter().zip(out.slots_mut()) {
            for v in slot.iter_mut() {
                *v = f(spec, *v);
            }
        }
        out.check_representable()?;
        Ok(out)
    }

    /// Snap every parameter to `fmt` and declare it as the weight format.
    pub fn quantize_weights(&self, fmt: FixedPointFormat) -> (Self, SaturationCounter) {
        let mut sat = SaturationCounter::default();
        let mut out = self.clone();
        out.config.weight_format = NumberFormat::Fixed(fmt);
        for slot in out.slots_mut() {
            for v in slot.iter_mut() {
                let (q, clipped) = fmt.snap(v.as_f64());
                if clipped {
                    sat.record();
                }
                *v = T::of(q);
            }
        }
        (out, sat)
    }

    /// Same model with a different buffer format.
    pub fn with_buffer_format(&self, format: NumberFormat) -> Self {
        let mut out = self.clone();
        out.config.buffer_format = format;
        out
    }

    pub fn cast<U: Scalar>(&self) -> NetworkModel<U> {
        let values = self
            .slots()
            .into_iter()
            .map(|v| v.iter().map(|x| U::of(x.as_f64())).collect())
            .collect();
        NetworkModel::from_parameters(self.config.clone(), values)
            .expect("casting preserves shapes and grid values")
    }

    fn check_representable(&self) -> Result<()> {
        if let Some(fmt) = self.config.weight_format.fixed() {
            for (spec, values) in self.parameters() {
                check_values(&spec.name, values, fmt)?;
            }
        }
        Ok(())
    }

    pub(crate) fn conv_boundary(&self) -> Boundary {
        Boundary {
            relu: self.config.conv_activation == Activation::Relu,
            format: self.config.buffer_format.fixed(),
        }
    }

    pub(crate) fn pool_boundary(&self) -> Boundary {
        Boundary {
            relu: false,
            format: self.config.buffer_format.fixed(),
        }
    }

    pub fn core_state(&self) -> CoreState<T> {
        CoreState {
            lif: self.lif.iter().map(|l| LifState::zeros(l.units)).collect(),
            readout: [T::zero(); 2],
        }
    }

    /// One keypoint through the LIF stack and readout.
    pub fn keypoint_step(&self, state: &mut CoreState<T>, features: &[T]) -> [T; 2] {
        let mut input: Vec<T> = features.to_vec();
        for (layer, st) in self.lif.iter().zip(state.lif.iter_mut()) {
            layer.step(st, &input, &self.lif_params);
            input = st
                .last_spikes
                .iter()
                .map(|&s| if s { T::one() } else { T::zero() })
                .collect();
        }
        let last = state.lif.last().expect("at least one LIF layer");
        self.readout.step(&mut state.readout, last)
    }
}

fn check_values<T: Scalar>(name: &str, values: &[T], fmt: FixedPointFormat) -> Result<()> {
    match values
        .iter()
        .position(|v| !fmt.is_representable(v.as_f64()))
    {
        None => Ok(()),
        Some(i) => Err(Error::InvalidConfig(format!(
            "{name}[{i}] = {} is not representable in {fmt}",
            values[i]
        ))),
    }
}
