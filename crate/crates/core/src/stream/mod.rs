//! Incremental runtime: consumes one spike bin at a time and emits
//! keypoints and interpolated velocities as soon as their inputs exist.
//!
//! The first keypoint is computed from full per-keypoint buffers once the
//! receptive field has arrived. After that every layer only processes its
//! new-data window, so no column is ever computed twice. All arithmetic
//! goes through the same kernels as offline inference, making the two paths
//! agree bit for bit.

mod ring;

use std::time::{Duration, Instant};

use serde::Serialize;

pub use ring::Ring;

use crate::bufcalc::BufferPlan;
use crate::data::{SpikeStream, Trajectory};
use crate::error::{Error, Result};
use crate::fxp::SaturationCounter;
use crate::model::layers::{interpolate_segment, pool_window};
use crate::model::{CoreState, NetworkModel, WarmupPolicy};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Warmup,
    Keypoint,
    VelocitySample,
}

/// `time_index` is the input bin for warmup and keypoint events and the
/// trajectory sample index for velocity samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamEvent<T> {
    pub kind: EventKind,
    pub time_index: usize,
    pub t_ms: f64,
    pub payload: Option<[T; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OpCounters {
    /// Dense conv multiplies since the stream started.
    pub conv_multiplies: u64,
    /// Conv multiplies spent on each emitted keypoint.
    pub conv_multiplies_per_keypoint: Vec<u64>,
}

/// Per-stream mutable state. The model is borrowed read-only, so any number
/// of streams can share one model across threads.
#[derive(Clone, Debug)]
pub struct StreamState<'m, T> {
    model: &'m NetworkModel<T>,
    conv_in: Vec<Ring<T>>,
    pool_in: Vec<Ring<T>>,
    core: CoreState<T>,
    previous_keypoint: Option<[T; 2]>,
    pending: usize,
    samples_ingested: usize,
    keypoints_emitted: usize,
    saturations: SaturationCounter,
    counters: OpCounters,
}

impl<'m, T: Scalar> StreamState<'m, T> {
    pub fn new(model: &'m NetworkModel<T>) -> Result<Self> {
        let plan = model.plan();
        plan.stack.check_streamable()?;
        let cfg = model.config();
        let conv_in = (0..plan.num_conv_layers())
            .map(|l| Ring::new(plan.b_keypoints[2 * l], cfg.conv_in_channels(l)))
            .collect();
        let pool_in = (0..plan.num_conv_layers())
            .map(|l| Ring::new(plan.b_keypoints[2 * l + 1], cfg.conv[l].out_channels))
            .collect();
        Ok(Self {
            model,
            conv_in,
            pool_in,
            core: model.core_state(),
            previous_keypoint: None,
            pending: 0,
            samples_ingested: 0,
            keypoints_emitted: 0,
            saturations: SaturationCounter::default(),
            counters: OpCounters::default(),
        })
    }

    pub fn plan(&self) -> &'m BufferPlan {
        self.model.plan()
    }

    pub fn samples_ingested(&self) -> usize {
        self.samples_ingested
    }

    pub fn keypoints_emitted(&self) -> usize {
        self.keypoints_emitted
    }

    pub fn saturations(&self) -> u64 {
        self.saturations.count()
    }

    pub fn counters(&self) -> &OpCounters {
        &self.counters
    }

    /// Ring capacities, interleaved conv input / pool input per layer.
    pub fn buffer_capacities(&self) -> Vec<usize> {
        self.rings().map(Ring::capacity).collect()
    }

    pub fn buffer_lens(&self) -> Vec<usize> {
        self.rings().map(Ring::len).collect()
    }

    fn rings(&self) -> impl Iterator<Item = &Ring<T>> {
        self.conv_in
            .iter()
            .zip(&self.pool_in)
            .flat_map(|(a, b)| [a, b])
    }

    pub fn push_bin(&mut self, bin: &[u8]) -> Result<Vec<StreamEvent<T>>> {
        let channels = self.model.input_channels();
        if bin.len() != channels {
            return Err(Error::ChannelMismatch {
                expected: channels,
                actual: bin.len(),
            });
        }
        let column: Vec<T> = bin.iter().map(|&c| T::of(c as f64)).collect();
        self.conv_in[0].push(&column);
        self.samples_ingested += 1;
        let bin_index = self.samples_ingested - 1;
        let plan = self.plan();

        if self.keypoints_emitted == 0 {
            if self.samples_ingested < plan.receptive_field {
                let payload = match self.model.config().stream.warmup {
                    WarmupPolicy::Silent => None,
                    WarmupPolicy::HoldZero => Some([T::zero(); 2]),
                };
                return Ok(vec![StreamEvent {
                    kind: EventKind::Warmup,
                    time_index: bin_index,
                    t_ms: bin_index as f64 * plan.stack.step_ms,
                    payload,
                }]);
            }
            return Ok(self.emit_keypoint(bin_index, true));
        }

        self.pending += 1;
        if self.pending < plan.b_new_data_update[0] {
            return Ok(Vec::new());
        }
        self.pending = 0;
        Ok(self.emit_keypoint(bin_index, false))
    }

    pub fn push_stream(&mut self, spikes: &SpikeStream) -> Result<Vec<StreamEvent<T>>> {
        let mut events = Vec::new();
        for t in 0..spikes.len() {
            events.extend(self.push_bin(spikes.bin(t))?);
        }
        Ok(events)
    }

    /// Run every layer on its newest columns and emit the resulting keypoint.
    /// `initial` uses the full per-keypoint buffers, otherwise only the
    /// new-data windows.
    fn emit_keypoint(&mut self, bin_index: usize, initial: bool) -> Vec<StreamEvent<T>> {
        let model = self.model;
        let plan = model.plan();
        let conv_boundary = model.conv_boundary();
        let pool_boundary = model.pool_boundary();
        let sizes = if initial {
            &plan.b_keypoints
        } else {
            &plan.b_new_data
        };
        let n = plan.num_conv_layers();
        let mut multiplies = 0u64;
        let mut features = Vec::new();

        for l in 0..n {
            let conv = &model.conv_layers()[l];
            let c_in = conv.in_channels;
            let c_out = conv.out_channels;

            let window = self.conv_in[l].window(sizes[2 * l]);
            let outputs = sizes[2 * l] - conv.kernel + 1;
            let mut conv_out = vec![T::zero(); outputs * c_out];
            for (t, column) in conv_out.chunks_exact_mut(c_out).enumerate() {
                conv.apply_window(&window[t * c_in..(t + conv.kernel) * c_in], column);
                conv_boundary.apply_all(column, &mut self.saturations);
            }
            multiplies += outputs as u64 * conv.multiplies_per_column();
            for column in conv_out.chunks_exact(c_out) {
                self.pool_in[l].push(column);
            }

            let pool = model.config().pool[l];
            let window = self.pool_in[l].window(sizes[2 * l + 1]);
            let pooled = sizes[2 * l + 1] / pool.stride;
            let mut pool_out = vec![T::zero(); pooled * c_out];
            for (i, column) in pool_out.chunks_exact_mut(c_out).enumerate() {
                let start = i * pool.stride * c_out;
                pool_window(
                    &window[start..start + pool.kernel * c_out],
                    c_out,
                    pool.kernel,
                    column,
                );
                pool_boundary.apply_all(column, &mut self.saturations);
            }
            if l + 1 < n {
                for column in pool_out.chunks_exact(c_out) {
                    self.conv_in[l + 1].push(column);
                }
            } else {
                debug_assert_eq!(pooled, 1, "the last layer yields one keypoint column");
                features = pool_out;
            }
        }

        self.counters.conv_multiplies += multiplies;
        self.counters.conv_multiplies_per_keypoint.push(multiplies);

        let keypoint = model.keypoint_step(&mut self.core, &features);
        let k = self.keypoints_emitted;
        self.keypoints_emitted += 1;

        let r = plan.interpolation_factor;
        let mut samples = Vec::with_capacity(r);
        interpolate_segment(self.previous_keypoint, keypoint, r, &mut samples);
        self.previous_keypoint = Some(keypoint);

        let mut events = Vec::with_capacity(r + 1);
        events.push(StreamEvent {
            kind: EventKind::Keypoint,
            time_index: bin_index,
            t_ms: plan.keypoint_time_ms(k),
            payload: Some(keypoint),
        });
        let start = plan.trajectory_start_ms();
        for (m, s) in samples.into_iter().enumerate() {
            let j = k * r + m;
            events.push(StreamEvent {
                kind: EventKind::VelocitySample,
                time_index: j,
                t_ms: start + j as f64 * plan.stack.step_ms,
                payload: Some(s),
            });
        }
        events
    }
}

pub fn stream_init<T: Scalar>(model: &NetworkModel<T>) -> Result<StreamState<'_, T>> {
    StreamState::new(model)
}

/// Wall-clock cost of individual `push_bin` calls, in microseconds.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimingStats {
    pub pushes: usize,
    pub mean_us: f64,
    pub p50_us: f64,
    pub p90_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
}

impl TimingStats {
    pub fn from_durations(durations: &[Duration]) -> Self {
        if durations.is_empty() {
            return Self::default();
        }
        let mut us: Vec<f64> = durations.iter().map(|d| d.as_secs_f64() * 1e6).collect();
        us.sort_by(f64::total_cmp);
        let pct = |p: f64| us[((us.len() - 1) as f64 * p).round() as usize];
        Self {
            pushes: us.len(),
            mean_us: us.iter().sum::<f64>() / us.len() as f64,
            p50_us: pct(0.5),
            p90_us: pct(0.9),
            p99_us: pct(0.99),
            max_us: *us.last().expect("non-empty"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StreamRun<T> {
    pub keypoints: Vec<[T; 2]>,
    pub trajectory: Trajectory<T>,
    pub events: Vec<StreamEvent<T>>,
    pub timing: TimingStats,
    pub counters: OpCounters,
    pub saturations: u64,
}

pub fn run_stream<T: Scalar>(
    model: &NetworkModel<T>,
    spikes: &SpikeStream,
) -> Result<StreamRun<T>> {
    let mut state = StreamState::new(model)?;
    let mut events = Vec::new();
    let mut durations = Vec::with_capacity(spikes.len());
    for t in 0..spikes.len() {
        let started = Instant::now();
        let out = state.push_bin(spikes.bin(t))?;
        durations.push(started.elapsed());
        events.extend(out);
    }
    let plan = model.plan();
    let pick = |kind| {
        events
            .iter()
            .filter(move |e: &&StreamEvent<T>| e.kind == kind)
            .filter_map(|e| e.payload)
            .collect::<Vec<_>>()
    };
    let keypoints = pick(EventKind::Keypoint);
    let samples = pick(EventKind::VelocitySample);
    Ok(StreamRun {
        keypoints,
        trajectory: Trajectory::new(plan.trajectory_start_ms(), plan.stack.step_ms, samples),
        timing: TimingStats::from_durations(&durations),
        saturations: state.saturations(),
        counters: state.counters.clone(),
        events,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub compared_keypoints: usize,
    pub compared_samples: usize,
    pub max_abs_diff: f64,
    /// `max_abs_diff` over the largest offline magnitude.
    pub max_rel_diff: f64,
    pub bit_exact: bool,
}

impl EquivalenceReport {
    pub fn is_empty(&self) -> bool {
        self.compared_keypoints == 0
    }
}

/// Compare streaming and offline outputs on the samples both produce.
pub fn equivalence_report<T: Scalar>(
    model: &NetworkModel<T>,
    spikes: &SpikeStream,
) -> Result<EquivalenceReport> {
    let streamed = run_stream(model, spikes)?;
    if spikes.len() < model.plan().receptive_field {
        return Ok(EquivalenceReport {
            compared_keypoints: 0,
            compared_samples: 0,
            max_abs_diff: 0.0,
            max_rel_diff: 0.0,
            bit_exact: true,
        });
    }
    let offline = model.forward(spikes)?;
    if streamed.keypoints.len() != offline.keypoints.len() {
        return Err(Error::LengthMismatch(format!(
            "streaming emitted {} keypoints, offline {}",
            streamed.keypoints.len(),
            offline.keypoints.len()
        )));
    }
    let pairs = streamed.keypoints.iter().zip(&offline.keypoints).chain(
        streamed
            .trajectory
            .samples
            .iter()
            .zip(&offline.trajectory.samples),
    );
    let mut max_abs = 0.0f64;
    let mut scale = 0.0f64;
    let mut bit_exact = true;
    for (a, b) in pairs {
        for d in 0..2 {
            bit_exact &= a[d] == b[d];
            max_abs = max_abs.max((a[d] - b[d]).abs().as_f64());
            scale = scale.max(b[d].abs().as_f64());
        }
    }
    Ok(EquivalenceReport {
        compared_keypoints: offline.keypoints.len(),
        compared_samples: offline.trajectory.len().min(streamed.trajectory.len()),
        max_abs_diff: max_abs,
        max_rel_diff: if scale > 0.0 {
            max_abs / scale
        } else {
            max_abs
        },
        bit_exact,
    })
}
