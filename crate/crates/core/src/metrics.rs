//! Accuracy and resource metrics.
//!
//! Operation counting follows one documented convention (see
//! [`OpConvention`]): a multiply-accumulate (MAC) is counted for every
//! product of a nonzero weight with a nonzero real-valued operand; an
//! accumulate (AC) for every nonzero weight gated by a spike. Biases are
//! free. Pooling adds are ACs and its division one MAC per nonzero output.

use serde::Serialize;

use crate::data::{SpikeStream, Trajectory};
use crate::error::{Error, Result};
use crate::fxp::NumberFormat;
use crate::model::{ForwardTrace, NetworkModel, OfflineOutput, ReadoutMode};
use crate::scalar::Scalar;

pub const DEFAULT_LAMBDA_W: f64 = 1.71e-6;
pub const DEFAULT_LAMBDA_S: f64 = 2.87e-3;

/// Coefficient of determination averaged over the two velocity dimensions.
///
/// Both trajectories must cover the same timestamps.
pub fn r2_score<T: Scalar>(pred: &Trajectory<T>, target: &Trajectory<T>) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch(format!(
            "prediction has {} samples, target {}",
            pred.len(),
            target.len()
        )));
    }
    if !pred.is_empty()
        && ((pred.start_ms - target.start_ms).abs() > 1e-9
            || (pred.step_ms - target.step_ms).abs() > 1e-9)
    {
        return Err(Error::LengthMismatch(format!(
            "timestamps differ: prediction starts at {} ms every {} ms, target at {} ms every {} ms",
            pred.start_ms, pred.step_ms, target.start_ms, target.step_ms
        )));
    }
    r2_samples(&pred.samples, &target.samples)
}

/// R² over matched samples.
pub fn r2_samples<T: Scalar>(pred: &[[T; 2]], target: &[[T; 2]]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch(format!(
            "prediction has {} samples, target {}",
            pred.len(),
            target.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::Empty("target trajectory"));
    }
    let n = target.len() as f64;
    let mut total = 0.0;
    for dim in 0..2 {
        let mean = target.iter().map(|s| s[dim].as_f64()).sum::<f64>() / n;
        let sst: f64 = target
            .iter()
            .map(|s| (s[dim].as_f64() - mean).powi(2))
            .sum();
        if sst == 0.0 {
            return Err(Error::ZeroVariance { dim });
        }
        let sse: f64 = pred
            .iter()
            .zip(target)
            .map(|(p, t)| (p[dim].as_f64() - t[dim].as_f64()).powi(2))
            .sum();
        total += 1.0 - sse / sst;
    }
    Ok(total / 2.0)
}

/// R² after matching samples by timestamp.
pub fn r2_aligned<T: Scalar>(pred: &Trajectory<T>, target: &Trajectory<T>) -> Result<f64> {
    let (p, t) = pred.align(target)?;
    r2_samples(&p, &t)
}

/// Counting switches. The defaults are what every report uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OpConvention {
    /// Count the pooling division as one MAC per nonzero output.
    pub pool_division_as_mac: bool,
    /// Count `beta * v` as a MAC whenever the state is nonzero.
    pub count_leak: bool,
}

impl Default for OpConvention {
    fn default() -> Self {
        Self {
            pool_division_as_mac: true,
            count_leak: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerOps {
    pub layer: String,
    pub macs: u64,
    pub acs: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpCounts {
    pub layers: Vec<LayerOps>,
    pub input_steps: usize,
    pub keypoints: usize,
}

impl OpCounts {
    pub fn macs(&self) -> u64 {
        self.layers.iter().map(|l| l.macs).sum()
    }

    pub fn acs(&self) -> u64 {
        self.layers.iter().map(|l| l.acs).sum()
    }

    pub fn macs_per_keypoint(&self) -> f64 {
        per(self.macs(), self.keypoints)
    }

    pub fn acs_per_keypoint(&self) -> f64 {
        per(self.acs(), self.keypoints)
    }

    pub fn macs_per_input_step(&self) -> f64 {
        per(self.macs(), self.input_steps)
    }

    pub fn acs_per_input_step(&self) -> f64 {
        per(self.acs(), self.input_steps)
    }

    pub fn layer(&self, name: &str) -> Option<&LayerOps> {
        self.layers.iter().find(|l| l.layer == name)
    }
}

fn per(total: u64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total as f64 / n as f64
    }
}

fn nonzero<T: Scalar>(x: T) -> bool {
    x != T::zero()
}

/// Nonzero entries in each column of a row-major `[rows][cols]` matrix.
fn column_nnz<T: Scalar>(w: &[T], cols: usize) -> Vec<u64> {
    let mut nnz = vec![0u64; cols];
    for row in w.chunks_exact(cols.max(1)) {
        for (n, &x) in nnz.iter_mut().zip(row) {
            *n += nonzero(x) as u64;
        }
    }
    nnz
}

/// Count operations of an offline run from its trace.
pub fn count_ops_traced<T: Scalar>(
    model: &NetworkModel<T>,
    output: &OfflineOutput<T>,
    trace: &ForwardTrace<T>,
    input_steps: usize,
    conv: OpConvention,
) -> OpCounts {
    let cfg = model.config();
    let mut layers = Vec::new();

    for (l, layer) in model.conv_layers().iter().enumerate() {
        let x = &trace.conv_inputs[l];
        let c_in = layer.in_channels;
        // Nonzero weights per (input channel, tap), summed over outputs.
        let mut nnz = vec![0u64; c_in * layer.kernel];
        for o in 0..layer.out_channels {
            for i in 0..c_in {
                for k in 0..layer.kernel {
                    nnz[k * c_in + i] += nonzero(layer.weight[layer.weight_index(o, i, k)]) as u64;
                }
            }
        }
        let outputs = trace.conv_outputs[l].len();
        let mut macs = 0u64;
        for t in 0..outputs {
            for (j, &v) in x.window(t, layer.kernel).iter().enumerate() {
                if nonzero(v) {
                    macs += nnz[j];
                }
            }
        }
        layers.push(LayerOps {
            layer: format!("conv{l}"),
            macs,
            acs: 0,
        });

        let pool = cfg.pool[l];
        let y = &trace.conv_outputs[l];
        let (mut macs, mut acs) = (0u64, 0u64);
        for p in 0..trace.pool_outputs[l].len() {
            let w = y.window(p * pool.stride, pool.kernel);
            for ch in 0..layer.out_channels {
                let active = (0..pool.kernel)
                    .filter(|&k| nonzero(w[k * layer.out_channels + ch]))
                    .count() as u64;
                if active > 0 {
                    acs += active - 1;
                    macs += conv.pool_division_as_mac as u64;
                }
            }
        }
        layers.push(LayerOps {
            layer: format!("pool{l}"),
            macs,
            acs,
        });
    }

    let beta = model.lif_params().beta;
    for (l, (layer, lt)) in model.lif_layers().iter().zip(&trace.lif).enumerate() {
        let in_nnz = column_nnz(&layer.w_in, layer.fan_in);
        let rec_nnz = column_nnz(&layer.w_rec, layer.units);
        let (mut macs, mut acs) = (0u64, 0u64);
        for t in 0..lt.inputs.len() {
            let driven: u64 = lt.inputs[t]
                .iter()
                .zip(&in_nnz)
                .filter(|(&x, _)| nonzero(x))
                .map(|(_, &n)| n)
                .sum();
            if l == 0 {
                macs += driven;
            } else {
                acs += driven;
            }
            if t > 0 {
                acs += lt.spikes[t - 1]
                    .iter()
                    .zip(&rec_nnz)
                    .filter(|(&s, _)| s)
                    .map(|(_, &n)| n)
                    .sum::<u64>();
                if conv.count_leak && nonzero(beta) {
                    macs += lt.membranes[t - 1].iter().filter(|&&v| nonzero(v)).count() as u64;
                }
            }
        }
        layers.push(LayerOps {
            layer: format!("lif{l}"),
            macs,
            acs,
        });
    }

    let readout = model.readout();
    let last = trace.lif.last().expect("at least one LIF layer");
    let out_nnz = column_nnz(&readout.weight, readout.units);
    let (mut macs, mut acs) = (0u64, 0u64);
    for t in 0..last.spikes.len() {
        match readout.mode {
            ReadoutMode::Integrator => {
                acs += last.spikes[t]
                    .iter()
                    .zip(&out_nnz)
                    .filter(|(&s, _)| s)
                    .map(|(_, &n)| n)
                    .sum::<u64>();
            }
            ReadoutMode::Membrane => {
                macs += last.membranes[t]
                    .iter()
                    .zip(&out_nnz)
                    .filter(|(&v, _)| nonzero(v))
                    .map(|(_, &n)| n)
                    .sum::<u64>();
            }
        }
        let scales = nonzero(readout.beta) && readout.beta != T::one();
        if conv.count_leak && scales && t > 0 {
            macs += output.keypoints[t - 1]
                .iter()
                .filter(|&&u| nonzero(u))
                .count() as u64;
        }
    }
    layers.push(LayerOps {
        layer: "readout".into(),
        macs,
        acs,
    });

    OpCounts {
        layers,
        input_steps,
        keypoints: output.keypoints.len(),
    }
}

/// Run the model offline and count its operations.
pub fn count_ops<T: Scalar>(model: &NetworkModel<T>, spikes: &SpikeStream) -> Result<OpCounts> {
    let (out, trace) = model.forward_traced(spikes)?;
    Ok(count_ops_traced(
        model,
        &out,
        &trace,
        spikes.len(),
        OpConvention::default(),
    ))
}

/// Storage cost split into parameters and streaming buffers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Footprint {
    pub parameter_bytes: u64,
    pub parameter_nonzero_bytes: u64,
    pub buffer_bytes: u64,
}

impl Footprint {
    pub fn total_bytes(&self) -> u64 {
        self.parameter_bytes + self.buffer_bytes
    }

    pub fn nonzero_bytes(&self) -> u64 {
        self.parameter_nonzero_bytes + self.buffer_bytes
    }
}

fn bytes(bits: u64) -> u64 {
    bits.div_ceil(8)
}

/// Parameters at the weight format width; ring buffers with the raw input at
/// 8 bits and every other buffer at the buffer format width.
pub fn footprint<T: Scalar>(model: &NetworkModel<T>) -> Footprint {
    let cfg = model.config();
    let weight_bits = cfg.weight_format.bits();
    let (mut all, mut nz) = (0u64, 0u64);
    for (_, values) in model.parameters() {
        all += values.len() as u64;
        nz += values.iter().filter(|&&v| nonzero(v)).count() as u64;
    }
    let plan = model.plan();
    let buffer_bits = cfg.buffer_format.bits();
    let mut buf_bits = 0u64;
    for l in 0..plan.num_conv_layers() {
        let conv_in = (plan.b_keypoints[2 * l] * cfg.conv_in_channels(l)) as u64;
        let pool_in = (plan.b_keypoints[2 * l + 1] * cfg.conv[l].out_channels) as u64;
        buf_bits += conv_in * if l == 0 { 8 } else { buffer_bits } + pool_in * buffer_bits;
    }
    Footprint {
        parameter_bytes: bytes(all * weight_bits),
        parameter_nonzero_bytes: bytes(nz * weight_bits),
        buffer_bytes: bytes(buf_bits),
    }
}

/// Fraction of exactly-zero connection weights (biases excluded).
pub fn connection_sparsity<T: Scalar>(model: &NetworkModel<T>) -> f64 {
    let (mut all, mut zero) = (0usize, 0usize);
    for (spec, values) in model.parameters() {
        if spec.kind.is_connection() {
            all += values.len();
            zero += values.iter().filter(|&&v| !nonzero(v)).count();
        }
    }
    if all == 0 {
        0.0
    } else {
        zero as f64 / all as f64
    }
}

/// Fraction of LIF spike opportunities (units x keypoints) left silent.
pub fn activation_sparsity<T>(trace: &ForwardTrace<T>) -> f64 {
    let opportunities: usize = trace.lif.iter().flat_map(|l| &l.spikes).map(Vec::len).sum();
    if opportunities == 0 {
        return 1.0;
    }
    1.0 - trace.total_spikes() as f64 / opportunities as f64
}

/// `(connection, activation)` sparsity.
pub fn sparsity<T: Scalar>(model: &NetworkModel<T>, spikes: &SpikeStream) -> Result<(f64, f64)> {
    let (_, trace) = model.forward_traced(spikes)?;
    Ok((connection_sparsity(model), activation_sparsity(&trace)))
}

/// `lambda_w * sum(|w|)` over all parameters.
pub fn weight_reg_term<T: Scalar>(model: &NetworkModel<T>, lambda_w: f64) -> f64 {
    let sum: f64 = model
        .parameters()
        .iter()
        .flat_map(|(_, v)| v.iter())
        .map(|w| w.abs().as_f64())
        .sum();
    lambda_w * sum
}

/// `lambda_s * total_spikes`.
pub fn spike_reg_term(total_spikes: u64, lambda_s: f64) -> f64 {
    lambda_s * total_spikes as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceReport {
    pub footprint_bytes: u64,
    pub footprint_nonzero_bytes: u64,
    /// Mean over keypoints; one inference step produces one keypoint.
    pub macs_per_inference_step: f64,
    pub acs_per_inference_step: f64,
    pub macs_per_input_step: f64,
    pub acs_per_input_step: f64,
    pub connection_sparsity: f64,
    pub activation_sparsity: f64,
    pub weight_reg: f64,
    pub spike_reg: f64,
    pub ops: OpCounts,
    pub footprint: Footprint,
}

pub fn resource_report<T: Scalar>(
    model: &NetworkModel<T>,
    spikes: &SpikeStream,
) -> Result<ResourceReport> {
    let (out, trace) = model.forward_traced(spikes)?;
    let ops = count_ops_traced(model, &out, &trace, spikes.len(), OpConvention::default());
    let fp = footprint(model);
    Ok(ResourceReport {
        footprint_bytes: fp.total_bytes(),
        footprint_nonzero_bytes: fp.nonzero_bytes(),
        macs_per_inference_step: ops.macs_per_keypoint(),
        acs_per_inference_step: ops.acs_per_keypoint(),
        macs_per_input_step: ops.macs_per_input_step(),
        acs_per_input_step: ops.acs_per_input_step(),
        connection_sparsity: connection_sparsity(model),
        activation_sparsity: activation_sparsity(&trace),
        weight_reg: weight_reg_term(model, DEFAULT_LAMBDA_W),
        spike_reg: spike_reg_term(trace.total_spikes() as u64, DEFAULT_LAMBDA_S),
        ops,
        footprint: fp,
    })
}

/// Mean with sample standard deviation and standard error, for per-file
/// aggregation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub sem: f64,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Summary {
        n,
        mean,
        std,
        sem: std / (n as f64).sqrt(),
    })
}

/// Weight format label used in reports.
pub fn format_label(f: NumberFormat) -> String {
    match f {
        NumberFormat::Float => "float32".into(),
        NumberFormat::Fixed(q) => q.to_string(),
    }
}
