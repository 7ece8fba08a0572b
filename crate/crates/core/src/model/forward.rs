//! Whole-sequence inference.

use crate::data::{Series, SpikeStream, Trajectory};
use crate::error::{Error, Result};
use crate::fxp::SaturationCounter;
use crate::model::layers::{interpolate_linear, pool_window};
use crate::model::network::NetworkModel;
use crate::scalar::Scalar;

/// Per-keypoint activity of one LIF layer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LifTrace<T> {
    pub inputs: Vec<Vec<T>>,
    /// Membrane after the step, including any reset.
    pub membranes: Vec<Vec<T>>,
    pub spikes: Vec<Vec<bool>>,
}

impl<T> LifTrace<T> {
    pub fn total_spikes(&self) -> usize {
        self.spikes.iter().flatten().filter(|&&s| s).count()
    }
}

/// Every intermediate activation of an offline run.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace<T> {
    pub conv_inputs: Vec<Series<T>>,
    pub conv_outputs: Vec<Series<T>>,
    pub pool_outputs: Vec<Series<T>>,
    pub lif: Vec<LifTrace<T>>,
}

impl<T> ForwardTrace<T> {
    pub fn total_spikes(&self) -> usize {
        self.lif.iter().map(LifTrace::total_spikes).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineOutput<T> {
    pub keypoints: Vec<[T; 2]>,
    pub trajectory: Trajectory<T>,
    /// Values clipped at buffer quantization points.
    pub saturations: u64,
    /// Dense conv multiplies performed.
    pub conv_multiplies: u64,
}

impl<T: Scalar> NetworkModel<T> {
    pub fn forward(&self, spikes: &SpikeStream) -> Result<OfflineOutput<T>> {
        self.run_offline(spikes, false).map(|(out, _)| out)
    }

    pub fn forward_traced(
        &self,
        spikes: &SpikeStream,
    ) -> Result<(OfflineOutput<T>, ForwardTrace<T>)> {
        self.run_offline(spikes, true)
            .map(|(out, trace)| (out, trace.expect("trace requested")))
    }

    fn run_offline(
        &self,
        spikes: &SpikeStream,
        keep_trace: bool,
    ) -> Result<(OfflineOutput<T>, Option<ForwardTrace<T>>)> {
        if spikes.channels() != self.input_channels() {
            return Err(Error::ChannelMismatch {
                expected: self.input_channels(),
                actual: spikes.channels(),
            });
        }
        let plan = self.plan();
        if spikes.len() < plan.receptive_field {
            return Err(Error::SequenceTooShort {
                len: spikes.len(),
                needed: plan.receptive_field,
            });
        }

        let mut sat = SaturationCounter::default();
        let mut multiplies = 0u64;
        let mut trace = ForwardTrace {
            conv_inputs: Vec::new(),
            conv_outputs: Vec::new(),
            pool_outputs: Vec::new(),
            lif: Vec::new(),
        };
        let conv_boundary = self.conv_boundary();
        let pool_boundary = self.pool_boundary();

        let mut x: Series<T> = spikes.to_scalar();
        for (l, conv) in self.conv_layers().iter().enumerate() {
            let pool = self.config().pool[l];
            let conv_len = x.len() - conv.kernel + 1;
            let mut y = Series::with_capacity(conv.out_channels, conv_len);
            let mut column = vec![T::zero(); conv.out_channels];
            for i in 0..conv_len {
                conv.apply_window(x.window(i, conv.kernel), &mut column);
                conv_boundary.apply_all(&mut column, &mut sat);
                y.push_column(&column);
            }
            multiplies += conv_len as u64 * conv.multiplies_per_column();

            let pool_len = (conv_len - pool.kernel) / pool.stride + 1;
            let mut p = Series::with_capacity(conv.out_channels, pool_len);
            for i in 0..pool_len {
                pool_window(
                    y.window(i * pool.stride, pool.kernel),
                    conv.out_channels,
                    pool.kernel,
                    &mut column,
                );
                pool_boundary.apply_all(&mut column, &mut sat);
                p.push_column(&column);
            }
            if keep_trace {
                trace.conv_inputs.push(x);
                trace.conv_outputs.push(y);
                trace.pool_outputs.push(p.clone());
            }
            x = p;
        }
        debug_assert_eq!(x.len(), plan.keypoints_for(spikes.len()));

        let mut state = self.core_state();
        if keep_trace {
            trace.lif = vec![LifTrace::default(); self.lif_layers().len()];
        }
        let mut keypoints = Vec::with_capacity(x.len());
        for features in x.columns() {
            let kp = self.keypoint_step(&mut state, features);
            if keep_trace {
                let mut input = features.to_vec();
                for (lt, st) in trace.lif.iter_mut().zip(&state.lif) {
                    lt.inputs.push(input);
                    lt.membranes.push(st.membrane.clone());
                    lt.spikes.push(st.last_spikes.clone());
                    input = st
                        .last_spikes
                        .iter()
                        .map(|&s| if s { T::one() } else { T::zero() })
                        .collect();
                }
            }
            keypoints.push(kp);
        }

        let trajectory = Trajectory::new(
            plan.trajectory_start_ms(),
            plan.stack.step_ms,
            interpolate_linear(&keypoints, plan.interpolation_factor),
        );
        let out = OfflineOutput {
            keypoints,
            trajectory,
            saturations: sat.count(),
            conv_multiplies: multiplies,
        };
        Ok((out, keep_trace.then_some(trace)))
    }
}

pub fn offline_forward<T: Scalar>(
    model: &NetworkModel<T>,
    spikes: &SpikeStream,
) -> Result<OfflineOutput<T>> {
    model.forward(spikes)
}
