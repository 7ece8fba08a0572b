//! Time-major sample containers shared by the offline and streaming paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default bin width in milliseconds.
pub const DEFAULT_BIN_MS: f64 = 4.0;

/// Multichannel signal stored time-major: column `t` is `data[t*channels..(t+1)*channels]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<T> {
    channels: usize,
    data: Vec<T>,
}

impl<T: Copy> Series<T> {
    pub fn new(channels: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::Empty("series needs at least one channel"));
        }
        if !data.len().is_multiple_of(channels) {
            return Err(Error::LengthMismatch(format!(
                "{} values do not form whole columns of {channels} channels",
                data.len()
            )));
        }
        Ok(Self { channels, data })
    }

    pub fn with_capacity(channels: usize, len: usize) -> Self {
        Self {
            channels,
            data: Vec::with_capacity(channels * len),
        }
    }

    pub fn filled(channels: usize, len: usize, value: T) -> Self {
        Self {
            channels,
            data: vec![value; channels * len],
        }
    }

    /// Build from channel-major rows (`rows[c][t]`).
    pub fn from_channel_rows(rows: &[Vec<T>]) -> Result<Self> {
        let channels = rows.len();
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::LengthMismatch("ragged channel rows".into()));
        }
        let mut data = Vec::with_capacity(channels * len);
        for t in 0..len {
            data.extend(rows.iter().map(|r| r[t]));
        }
        Self::new(channels, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn column(&self, t: usize) -> &[T] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    /// `len` consecutive columns starting at `start`, contiguous.
    pub fn window(&self, start: usize, len: usize) -> &[T] {
        &self.data[start * self.channels..(start + len) * self.channels]
    }

    pub fn push_column(&mut self, column: &[T]) {
        debug_assert_eq!(column.len(), self.channels);
        self.data.extend_from_slice(column);
    }

    pub fn get(&self, t: usize, channel: usize) -> T {
        self.data[t * self.channels + channel]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.channels)
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Series<U> {
        Series {
            channels: self.channels,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> Series<T> {
        Series {
            channels: self.channels,
            data: self.window(start, len).to_vec(),
        }
    }
}

/// Binned spike counts, `channels` wide, one column per time bin.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeStream {
    bin_ms: f64,
    counts: Series<u8>,
}

impl SpikeStream {
    pub fn new(counts: Series<u8>, bin_ms: f64) -> Result<Self> {
        if !(bin_ms > 0.0 && bin_ms.is_finite()) {
            return Err(Error::Format(format!(
                "bin width must be positive, got {bin_ms}"
            )));
        }
        Ok(Self { bin_ms, counts })
    }

    pub fn from_time_major(channels: usize, data: Vec<u8>, bin_ms: f64) -> Result<Self> {
        Self::new(Series::new(channels, data)?, bin_ms)
    }

    pub fn channels(&self) -> usize {
        self.counts.channels()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_ms(&self) -> f64 {
        self.bin_ms
    }

    pub fn counts(&self) -> &Series<u8> {
        &self.counts
    }

    pub fn bin(&self, t: usize) -> &[u8] {
        self.counts.column(t)
    }

    pub fn total_spikes(&self) -> u64 {
        self.counts.as_slice().iter().map(|&c| c as u64).sum()
    }

    /// Bins `start..start+len` as a new stream.
    pub fn slice(&self, start: usize, len: usize) -> SpikeStream {
        SpikeStream {
            bin_ms: self.bin_ms,
            counts: self.counts.slice(start, len),
        }
    }

    pub fn to_scalar<T: Scalar>(&self) -> Series<T> {
        self.counts.map(|c| T::of(c as f64))
    }
}

/// Matched sample pairs from two trajectories, as returned by [`Trajectory::align`].
pub type AlignedPairs<T> = (Vec<[T; 2]>, Vec<[T; 2]>);

/// Uniformly sampled 2-D velocity trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub start_ms: f64,
    pub step_ms: f64,
    pub samples: Vec<[T; 2]>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(start_ms: f64, step_ms: f64, samples: Vec<[T; 2]>) -> Self {
        Self {
            start_ms,
            step_ms,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_ms(&self, index: usize) -> f64 {
        self.start_ms + index as f64 * self.step_ms
    }

    pub fn dimension(&self, dim: usize) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(move |s| s[dim])
    }

    /// Samples of `self` and `other` that fall on the same timestamps.
    ///
    /// Both trajectories must share a step; timestamps are matched on the
    /// nearest whole step offset.
    pub fn align(&self, other: &Trajectory<T>) -> Result<AlignedPairs<T>> {
        if (self.step_ms - other.step_ms).abs() > 1e-9 * self.step_ms.abs().max(1.0) {
            return Err(Error::LengthMismatch(format!(
                "trajectory steps differ: {} ms vs {} ms",
                self.step_ms, other.step_ms
            )));
        }
        let offset = ((self.start_ms - other.start_ms) / self.step_ms).round() as i64;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, s) in self.samples.iter().enumerate() {
            let j = i as i64 + offset;
            if j >= 0 && (j as usize) < other.samples.len() {
                a.push(*s);
                b.push(other.samples[j as usize]);
            }
        }
        Ok((a, b))
    }

    pub fn cast<U: Scalar>(&self) -> Trajectory<U> {
        Trajectory {
            start_ms: self.start_ms,
            step_ms: self.step_ms,
            samples: self
                .samples
                .iter()
                .map(|s| [U::of(s[0].as_f64()), U::of(s[1].as_f64())])
                .collect(),
        }
    }
}
