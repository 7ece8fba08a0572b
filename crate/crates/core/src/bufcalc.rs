//! Buffer-size calculus for alternating conv/pool stacks.
//!
//! Layer `i` of a stack with `n` conv layers is conv layer `i/2` for even
//! `i` and the pooling layer after it for odd `i`, so every per-layer list
//! here has `2n` entries. Sizes count time columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum tolerated output delay for realtime use, inclusive.
pub const MAX_LATENCY_MS: f64 = 100.0;
/// Minimum keypoint rate for realtime use, inclusive.
pub const MIN_EXECUTION_RATE_HZ: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackSpec {
    pub conv_kernels: Vec<usize>,
    pub conv_strides: Vec<usize>,
    pub pool_kernels: Vec<usize>,
    pub pool_strides: Vec<usize>,
    pub step_ms: f64,
}

impl StackSpec {
    pub fn new(
        conv_kernels: Vec<usize>,
        conv_strides: Vec<usize>,
        pool_kernels: Vec<usize>,
        pool_strides: Vec<usize>,
        step_ms: f64,
    ) -> Result<Self> {
        let spec = Self {
            conv_kernels,
            conv_strides,
            pool_kernels,
            pool_strides,
            step_ms,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Kernels `k, 2k, 4k, …` with stride-1 convs and 2/2 pooling.
    pub fn doubling(first_kernel: usize, num_layers: usize, step_ms: f64) -> Result<Self> {
        let kernels = (0..num_layers).map(|i| first_kernel << i).collect();
        Self::new(
            kernels,
            vec![1; num_layers],
            vec![2; num_layers],
            vec![2; num_layers],
            step_ms,
        )
    }

    pub fn num_conv_layers(&self) -> usize {
        self.conv_kernels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.conv_kernels.len();
        if n == 0 {
            return Err(Error::InvalidStack("need at least one conv layer".into()));
        }
        if [&self.conv_strides, &self.pool_kernels, &self.pool_strides]
            .iter()
            .any(|l| l.len() != n)
        {
            return Err(Error::InvalidStack(
                "kernel and stride lists must have equal lengths".into(),
            ));
        }
        let all = self
            .conv_kernels
            .iter()
            .chain(&self.conv_strides)
            .chain(&self.pool_kernels)
            .chain(&self.pool_strides);
        if all.into_iter().any(|&v| v == 0) {
            return Err(Error::InvalidStack(
                "kernels and strides must be >= 1".into(),
            ));
        }
        if !(self.step_ms > 0.0 && self.step_ms.is_finite()) {
            return Err(Error::InvalidStack(format!(
                "step must be positive, got {} ms",
                self.step_ms
            )));
        }
        Ok(())
    }

    /// The buffer lists describe stride-1 convolutions followed by
    /// non-overlapping pooling (kernel equal to stride). Reject anything else.
    pub fn check_streamable(&self) -> Result<()> {
        self.validate()?;
        for (l, &s) in self.conv_strides.iter().enumerate() {
            if s != 1 {
                return Err(Error::InvalidStack(format!(
                    "conv layer {l} has stride {s}; streaming buffers need stride 1"
                )));
            }
        }
        for (l, (&k, &s)) in self.pool_kernels.iter().zip(&self.pool_strides).enumerate() {
            if k != s {
                return Err(Error::InvalidStack(format!(
                    "pool layer {l} has kernel {k} and stride {s}; streaming buffers need kernel == stride"
                )));
            }
        }
        Ok(())
    }

    /// `(kernel, stride)` of every layer in input-to-output order.
    pub fn layers(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_conv_layers()).flat_map(move |l| {
            [
                (self.conv_kernels[l], self.conv_strides[l]),
                (self.pool_kernels[l], self.pool_strides[l]),
            ]
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceptiveField {
    pub receptive_field: usize,
    /// Receptive field after each layer.
    pub r_list: Vec<usize>,
    /// Cumulative stride after each layer.
    pub b_update_list: Vec<usize>,
}

/// Walks the stack from input to output, growing the receptive field by
/// `(kernel - 1) * cumulative_stride` per layer.
pub fn receptive_field_and_updates(spec: &StackSpec) -> ReceptiveField {
    let mut r = 1;
    let mut b_update = 1;
    let mut r_list = Vec::with_capacity(2 * spec.num_conv_layers());
    let mut b_update_list = Vec::with_capacity(2 * spec.num_conv_layers());
    for (kernel, stride) in spec.layers() {
        r += (kernel - 1) * b_update;
        b_update *= stride;
        r_list.push(r);
        b_update_list.push(b_update);
    }
    ReceptiveField {
        receptive_field: r,
        r_list,
        b_update_list,
    }
}

/// Per-layer input length needed for exactly one keypoint, starting from
/// the receptive field and shrinking through each conv and pool.
pub fn bsize_keypoints(
    receptive_field: usize,
    conv_kernels: &[usize],
    pool_strides: &[usize],
) -> Result<Vec<usize>> {
    if conv_kernels.len() != pool_strides.len() {
        return Err(Error::LengthMismatch(format!(
            "{} conv kernels but {} pool strides",
            conv_kernels.len(),
            pool_strides.len()
        )));
    }
    let mut c = receptive_field;
    let mut out = Vec::with_capacity(2 * conv_kernels.len());
    for i in 0..2 * conv_kernels.len() {
        if i % 2 == 0 {
            out.push(c);
        } else {
            let (k, s) = (conv_kernels[i / 2], pool_strides[i / 2]);
            if c < k {
                return Err(Error::InvalidStack(format!(
                    "layer {i}: buffer of {c} is shorter than conv kernel {k}"
                )));
            }
            c = c - k + 1;
            out.push(c);
            if s == 0 || !c.is_multiple_of(s) {
                return Err(Error::InvalidStack(format!(
                    "layer {i}: buffer of {c} is not divisible by pool stride {s}"
                )));
            }
            c /= s;
        }
    }
    Ok(out)
}

/// Fresh columns each layer must receive per new keypoint, by reversing the
/// cumulative-stride list. Exact only when the per-layer strides read the
/// same forwards and backwards (for example uniform 2/2 pooling); see
/// [`new_data_update_exact`] for the general form.
pub fn bsize_new_data_update(b_update_list: &[usize]) -> Result<Vec<usize>> {
    let last = *b_update_list
        .last()
        .ok_or(Error::Empty("update list must not be empty"))?;
    let mut b = b_update_list.to_vec();
    b.push(last);
    b.reverse();
    b.pop();
    Ok(b)
}

/// Fresh columns each layer must receive per new keypoint: the total stride
/// divided by the cumulative stride in front of the layer.
pub fn new_data_update_exact(b_update_list: &[usize]) -> Result<Vec<usize>> {
    let total = *b_update_list
        .last()
        .ok_or(Error::Empty("update list must not be empty"))?;
    Ok(std::iter::once(1)
        .chain(b_update_list.iter().copied())
        .take(b_update_list.len())
        .map(|before| total / before)
        .collect())
}

/// Fresh columns plus kernel context needed to compute the new outputs.
pub fn bsize_new_data(b_new_data_update: &[usize], conv_kernels: &[usize]) -> Result<Vec<usize>> {
    if b_new_data_update.len() != 2 * conv_kernels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} update sizes for {} conv kernels",
            b_new_data_update.len(),
            conv_kernels.len()
        )));
    }
    Ok(b_new_data_update
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            if i % 2 == 0 {
                u - 1 + conv_kernels[i / 2]
            } else {
                u
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub steps: usize,
    pub ms: f64,
}

/// Half the first buffer (rounded down) plus one step.
pub fn latency(first_buffer: usize, step_ms: f64) -> Latency {
    let steps = first_buffer / 2 + 1;
    Latency {
        steps,
        ms: steps as f64 * step_ms,
    }
}

pub fn execution_rate(interpolation_factor: usize, step_ms: f64) -> f64 {
    1000.0 / (interpolation_factor as f64 * step_ms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufferPlan {
    pub stack: StackSpec,
    pub receptive_field: usize,
    pub r_list: Vec<usize>,
    pub b_update_list: Vec<usize>,
    pub b_keypoints: Vec<usize>,
    pub b_new_data: Vec<usize>,
    pub b_new_data_update: Vec<usize>,
    pub interpolation_factor: usize,
    pub latency_steps: usize,
    pub latency_ms: f64,
    pub execution_rate_hz: f64,
}

impl BufferPlan {
    pub fn new(stack: &StackSpec) -> Result<Self> {
        stack.check_streamable()?;
        let rf = receptive_field_and_updates(stack);
        let b_keypoints =
            bsize_keypoints(rf.receptive_field, &stack.conv_kernels, &stack.pool_strides)?;
        let b_new_data_update = new_data_update_exact(&rf.b_update_list)?;
        let b_new_data = bsize_new_data(&b_new_data_update, &stack.conv_kernels)?;
        let interpolation_factor = *rf.b_update_list.last().expect("non-empty stack");
        let lat = latency(b_keypoints[0], stack.step_ms);
        Ok(Self {
            stack: stack.clone(),
            receptive_field: rf.receptive_field,
            r_list: rf.r_list,
            b_update_list: rf.b_update_list,
            b_keypoints,
            b_new_data,
            b_new_data_update,
            interpolation_factor,
            latency_steps: lat.steps,
            latency_ms: lat.ms,
            execution_rate_hz: execution_rate(interpolation_factor, stack.step_ms),
        })
    }

    pub fn num_conv_layers(&self) -> usize {
        self.stack.num_conv_layers()
    }

    /// Keypoints produced by `input_len` bins: one at the receptive field,
    /// then one per interpolation factor.
    pub fn keypoints_for(&self, input_len: usize) -> usize {
        if input_len < self.receptive_field {
            0
        } else {
            1 + (input_len - self.receptive_field) / self.interpolation_factor
        }
    }

    /// Timestamp of the first trajectory sample. Sample `(i+1)*r - 1`
    /// carries keypoint `i`, stamped with the end of its last input bin
    /// minus the latency.
    pub fn trajectory_start_ms(&self) -> f64 {
        let offset = self.receptive_field as f64 + 1.0
            - self.interpolation_factor as f64
            - self.latency_steps as f64;
        offset * self.stack.step_ms
    }

    pub fn keypoint_time_ms(&self, keypoint: usize) -> f64 {
        let bins = self.receptive_field + keypoint * self.interpolation_factor;
        (bins as f64 - self.latency_steps as f64) * self.stack.step_ms
    }

    pub fn realtime(&self) -> RealtimeVerdict {
        realtime_check(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealtimeVerdict {
    pub capable: bool,
    pub reasons: Vec<String>,
}

pub fn realtime_check(plan: &BufferPlan) -> RealtimeVerdict {
    check_latency_and_rate(plan.latency_ms, plan.execution_rate_hz)
}

pub fn check_latency_and_rate(latency_ms: f64, execution_rate_hz: f64) -> RealtimeVerdict {
    let mut reasons = Vec::new();
    if latency_ms > MAX_LATENCY_MS {
        reasons.push(format!(
            "latency {latency_ms} ms exceeds {MAX_LATENCY_MS} ms"
        ));
    }
    if execution_rate_hz < MIN_EXECUTION_RATE_HZ {
        reasons.push(format!(
            "execution rate {execution_rate_hz} Hz is below {MIN_EXECUTION_RATE_HZ} Hz"
        ));
    }
    RealtimeVerdict {
        capable: reasons.is_empty(),
        reasons,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub first_kernel: usize,
    pub kernels: Vec<usize>,
    pub receptive_field: usize,
    pub latency_steps: usize,
    pub latency_ms: f64,
    pub execution_rate_hz: f64,
    pub realtime: bool,
}

/// Receptive field and latency of doubling-kernel stacks for each first kernel.
pub fn latency_vs_kernel_sweep(
    first_kernels: &[usize],
    num_layers: usize,
    step_ms: f64,
) -> Result<Vec<SweepRow>> {
    first_kernels
        .iter()
        .map(|&k| {
            let plan = BufferPlan::new(&StackSpec::doubling(k, num_layers, step_ms)?)?;
            Ok(SweepRow {
                first_kernel: k,
                kernels: plan.stack.conv_kernels.clone(),
                receptive_field: plan.receptive_field,
                latency_steps: plan.latency_steps,
                latency_ms: plan.latency_ms,
                execution_rate_hz: plan.execution_rate_hz,
                realtime: plan.realtime().capable,
            })
        })
        .collect()
}

/// Largest first kernel of a doubling stack that is still realtime capable.
pub fn largest_realtime_kernel(num_layers: usize, step_ms: f64) -> Result<Option<usize>> {
    let mut best = None;
    for k in 1.. {
        let plan = BufferPlan::new(&StackSpec::doubling(k, num_layers, step_ms)?)?;
        if !plan.realtime().capable {
            break;
        }
        best = Some(k);
    }
    Ok(best)
}
