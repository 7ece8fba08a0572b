#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use spikedecode::fxp::FixedPointFormat;
use spikedecode::model::{Activation, PoolSpec, ReadoutMode, Reset};
use spikedecode::{NetworkConfig, NumberFormat, SpikeStream};

/// Random streamable stack: doubling kernels, pooling with kernel == stride
/// and a total pooling factor of at most 8.
pub fn random_config(rng: &mut impl Rng, quantized: bool) -> NetworkConfig {
    let layers = rng.random_range(1..=3);
    let first_kernel = rng.random_range(1..=6);
    let in_channels = rng.random_range(1..=4);
    let conv_channels: Vec<usize> = (0..layers).map(|_| rng.random_range(1..=4)).collect();
    let lif_units: Vec<usize> = (0..rng.random_range(1..=2))
        .map(|_| rng.random_range(1..=6))
        .collect();
    let mut cfg = NetworkConfig::doubling(in_channels, &conv_channels, first_kernel, &lif_units);

    let mut budget = 8;
    for pool in cfg.pool.iter_mut() {
        let s = rng.random_range(1..=budget.min(3));
        budget /= s;
        *pool = PoolSpec {
            kernel: s,
            stride: s,
        };
    }
    cfg.conv_activation = if rng.random_bool(0.5) {
        Activation::Relu
    } else {
        Activation::None
    };
    cfg.lif_params.beta = rng.random_range(0.0..0.95);
    cfg.lif_params.threshold = rng.random_range(0.25..1.5);
    cfg.lif_params.reset = if rng.random_bool(0.5) {
        Reset::Subtract
    } else {
        Reset::Zero
    };
    cfg.readout.beta = rng.random_range(0.0..=1.0);
    cfg.readout.mode = if rng.random_bool(0.5) {
        ReadoutMode::Integrator
    } else {
        ReadoutMode::Membrane
    };
    if quantized {
        let weights = [
            FixedPointFormat::Q1_7,
            FixedPointFormat::Q1_4,
            fmt(2, 5),
            fmt(0, 7),
        ];
        let buffers = [FixedPointFormat::Q1_4, fmt(3, 4), fmt(2, 6), fmt(1, 7)];
        cfg.weight_format = NumberFormat::Fixed(*weights.choose(rng).unwrap());
        cfg.buffer_format = NumberFormat::Fixed(*buffers.choose(rng).unwrap());
    }
    cfg.validate().expect("generated config is valid");
    cfg
}

pub fn fmt(i: u32, f: u32) -> FixedPointFormat {
    FixedPointFormat::new(i, f).unwrap()
}

pub fn random_spikes(
    rng: &mut impl Rng,
    channels: usize,
    len: usize,
    max_count: u8,
) -> SpikeStream {
    let data = (0..channels * len)
        .map(|_| rng.random_range(0..=max_count))
        .collect();
    SpikeStream::from_time_major(channels, data, 4.0).unwrap()
}
