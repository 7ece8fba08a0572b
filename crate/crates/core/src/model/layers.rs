//! Layer primitives. Every arithmetic kernel here is shared by the offline
//! and streaming paths so both see the same summation order.

use crate::data::Series;
use crate::error::{Error, Result};
use crate::fxp::{FixedPointFormat, SaturationCounter};
use crate::model::config::{ReadoutMode, Reset};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Padding {
    #[default]
    Valid,
    /// Symmetric zero padding so the output has `ceil(T / stride)` columns.
    Same,
}

/// Temporal convolution (cross-correlation, no kernel flip).
///
/// Weights are laid out `[out][in][tap]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer<T> {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvLayer<T> {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            weight: vec![T::zero(); out_channels * in_channels * kernel],
            bias: vec![T::zero(); out_channels],
        }
    }

    pub fn weight_index(&self, out: usize, input: usize, tap: usize) -> usize {
        (out * self.in_channels + input) * self.kernel + tap
    }

    /// Multiplies needed for one output column.
    pub fn multiplies_per_column(&self) -> u64 {
        (self.out_channels * self.in_channels * self.kernel) as u64
    }

    pub fn output_len(&self, input_len: usize, padding: Padding) -> Option<usize> {
        match padding {
            Padding::Valid => {
                (input_len >= self.kernel).then(|| (input_len - self.kernel) / self.stride + 1)
            }
            Padding::Same => Some(input_len.div_ceil(self.stride)),
        }
    }

    /// One output column from `kernel` contiguous time-major input columns.
    pub fn apply_window(&self, window: &[T], out: &mut [T]) {
        debug_assert_eq!(window.len(), self.kernel * self.in_channels);
        debug_assert_eq!(out.len(), self.out_channels);
        for (o, y) in out.iter_mut().enumerate() {
            let mut acc = self.bias[o];
            for tap in 0..self.kernel {
                let column = &window[tap * self.in_channels..(tap + 1) * self.in_channels];
                for (c, &x) in column.iter().enumerate() {
                    acc = acc + self.weight[self.weight_index(o, c, tap)] * x;
                }
            }
            *y = acc;
        }
    }

    pub fn forward(&self, input: &Series<T>, padding: Padding) -> Result<Series<T>> {
        if input.channels() != self.in_channels {
            return Err(Error::ChannelMismatch {
                expected: self.in_channels,
                actual: input.channels(),
            });
        }
        match padding {
            Padding::Valid => {
                let len = self
                    .output_len(input.len(), padding)
                    .ok_or(Error::SequenceTooShort {
                        len: input.len(),
                        needed: self.kernel,
                    })?;
                let mut out = Series::with_capacity(self.out_channels, len);
                let mut column = vec![T::zero(); self.out_channels];
                for i in 0..len {
                    self.apply_window(input.window(i * self.stride, self.kernel), &mut column);
                    out.push_column(&column);
                }
                Ok(out)
            }
            Padding::Same => {
                let target = input.len().div_ceil(self.stride);
                let needed = if target == 0 {
                    0
                } else {
                    (target - 1) * self.stride + self.kernel
                };
                let pad = needed.saturating_sub(input.len());
                let left = pad / 2;
                let right = pad - left;
                let mut padded = Series::filled(self.in_channels, left, T::zero());
                for column in input.columns() {
                    padded.push_column(column);
                }
                for _ in 0..right {
                    padded.push_column(&vec![T::zero(); self.in_channels]);
                }
                if target == 0 {
                    return Ok(Series::with_capacity(self.out_channels, 0));
                }
                self.forward(&padded, Padding::Valid)
            }
        }
    }
}

pub fn conv1d_forward<T: Scalar>(
    input: &Series<T>,
    layer: &ConvLayer<T>,
    padding: Padding,
) -> Result<Series<T>> {
    layer.forward(input, padding)
}

/// Average of `kernel` contiguous time-major columns, per channel.
pub fn pool_window<T: Scalar>(window: &[T], channels: usize, kernel: usize, out: &mut [T]) {
    let k = T::of_usize(kernel);
    for (c, y) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for tap in 0..kernel {
            acc = acc + window[tap * channels + c];
        }
        *y = acc / k;
    }
}

/// Average pooling, valid mode.
pub fn pool_forward<T: Scalar>(
    input: &Series<T>,
    kernel: usize,
    stride: usize,
) -> Result<Series<T>> {
    if kernel == 0 || stride == 0 {
        return Err(Error::InvalidStack(
            "pool kernel and stride must be >= 1".into(),
        ));
    }
    if input.len() < kernel {
        return Err(Error::SequenceTooShort {
            len: input.len(),
            needed: kernel,
        });
    }
    let len = (input.len() - kernel) / stride + 1;
    let channels = input.channels();
    let mut out = Series::with_capacity(channels, len);
    let mut column = vec![T::zero(); channels];
    for i in 0..len {
        pool_window(
            input.window(i * stride, kernel),
            channels,
            kernel,
            &mut column,
        );
        out.push_column(&column);
    }
    Ok(out)
}

/// Post-processing applied to every value written into a layer buffer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Boundary {
    pub relu: bool,
    pub format: Option<FixedPointFormat>,
}

impl Boundary {
    pub fn apply<T: Scalar>(&self, x: T, saturations: &mut SaturationCounter) -> T {
        let x = if self.relu { x.max(T::zero()) } else { x };
        match self.format {
            None => x,
            Some(fmt) => {
                let (v, clipped) = fmt.snap(x.as_f64());
                if clipped {
                    saturations.record();
                }
                T::of(v)
            }
        }
    }

    pub fn apply_all<T: Scalar>(&self, xs: &mut [T], saturations: &mut SaturationCounter) {
        for x in xs {
            *x = self.apply(*x, saturations);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifParams<T> {
    pub beta: T,
    pub threshold: T,
    pub reset: Reset,
}

/// Recurrent leaky integrate-and-fire layer.
///
/// `w_in` is `[unit][input]`, `w_rec` is `[unit][unit]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LifLayer<T> {
    pub units: usize,
    pub fan_in: usize,
    pub w_in: Vec<T>,
    pub w_rec: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifState<T> {
    pub membrane: Vec<T>,
    pub last_spikes: Vec<bool>,
}

impl<T: Scalar> LifState<T> {
    pub fn zeros(units: usize) -> Self {
        Self {
            membrane: vec![T::zero(); units],
            last_spikes: vec![false; units],
        }
    }

    pub fn spike_count(&self) -> usize {
        self.last_spikes.iter().filter(|&&s| s).count()
    }
}

impl<T: Scalar> LifLayer<T> {
    pub fn zeros(units: usize, fan_in: usize) -> Self {
        Self {
            units,
            fan_in,
            w_in: vec![T::zero(); units * fan_in],
            w_rec: vec![T::zero(); units * units],
            bias: vec![T::zero(); units],
        }
    }

    /// Advance one step: `v = beta*v + W_in x + W_rec s_prev + b`, spike on
    /// `v >= threshold`, then reset the spiking units.
    pub fn step(&self, state: &mut LifState<T>, input: &[T], params: &LifParams<T>) {
        debug_assert_eq!(input.len(), self.fan_in);
        let mut next = vec![T::zero(); self.units];
        for (u, v) in next.iter_mut().enumerate() {
            let mut acc = params.beta * state.membrane[u];
            let row = &self.w_in[u * self.fan_in..(u + 1) * self.fan_in];
            for (&w, &x) in row.iter().zip(input) {
                acc = acc + w * x;
            }
            let rec = &self.w_rec[u * self.units..(u + 1) * self.units];
            for (&w, &s) in rec.iter().zip(&state.last_spikes) {
                if s {
                    acc = acc + w;
                }
            }
            *v = acc + self.bias[u];
        }
        for (u, v) in next.into_iter().enumerate() {
            let spike = v >= params.threshold;
            state.last_spikes[u] = spike;
            state.membrane[u] = match (spike, params.reset) {
                (false, _) => v,
                (true, Reset::Subtract) => v - params.threshold,
                (true, Reset::Zero) => T::zero(),
            };
        }
    }
}

pub fn lif_step<T: Scalar>(
    state: &mut LifState<T>,
    input: &[T],
    params: &LifParams<T>,
    layer: &LifLayer<T>,
) -> Vec<bool> {
    layer.step(state, input, params);
    state.last_spikes.clone()
}

/// Non-spiking leaky integrator producing the 2-D velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct Readout<T> {
    pub units: usize,
    /// `[dim][unit]`, two rows.
    pub weight: Vec<T>,
    pub beta: T,
    pub mode: ReadoutMode,
}

impl<T: Scalar> Readout<T> {
    pub fn zeros(units: usize, beta: T, mode: ReadoutMode) -> Self {
        Self {
            units,
            weight: vec![T::zero(); 2 * units],
            beta,
            mode,
        }
    }

    /// `u = beta*u + W x`, where `x` is the spike vector or the membrane
    /// vector depending on the mode.
    pub fn step(&self, state: &mut [T; 2], last: &LifState<T>) -> [T; 2] {
        for (d, u) in state.iter_mut().enumerate() {
            let row = &self.weight[d * self.units..(d + 1) * self.units];
            let mut acc = self.beta * *u;
            match self.mode {
                ReadoutMode::Integrator => {
                    for (&w, &s) in row.iter().zip(&last.last_spikes) {
                        if s {
                            acc = acc + w;
                        }
                    }
                }
                ReadoutMode::Membrane => {
                    for (&w, &v) in row.iter().zip(&last.membrane) {
                        acc = acc + w * v;
                    }
                }
            }
            *u = acc;
        }
        *state
    }
}

pub fn readout_step<T: Scalar>(
    state: &mut [T; 2],
    last: &LifState<T>,
    readout: &Readout<T>,
) -> [T; 2] {
    readout.step(state, last)
}

/// Samples from the keypoint before `current` (exclusive) up to `current`
/// (inclusive). With no previous keypoint the segment holds `current`.
pub fn interpolate_segment<T: Scalar>(
    previous: Option<[T; 2]>,
    current: [T; 2],
    factor: usize,
    out: &mut Vec<[T; 2]>,
) {
    match previous {
        None => out.extend(std::iter::repeat_n(current, factor)),
        Some(prev) => {
            let r = T::of_usize(factor);
            for m in 1..factor {
                let frac = T::of_usize(m) / r;
                out.push([
                    prev[0] + (current[0] - prev[0]) * frac,
                    prev[1] + (current[1] - prev[1]) * frac,
                ]);
            }
            out.push(current);
        }
    }
}

/// Keypoint `i` lands on index `(i+1)*factor - 1`; indices in between are
/// linear, indices before the first keypoint hold its value.
pub fn interpolate_linear<T: Scalar>(keypoints: &[[T; 2]], factor: usize) -> Vec<[T; 2]> {
    let mut out = Vec::with_capacity(keypoints.len() * factor);
    let mut previous = None;
    for &kp in keypoints {
        interpolate_segment(previous, kp, factor, &mut out);
        previous = Some(kp);
    }
    out
}
