//! The hybrid decoder: temporal conv/pool front end, recurrent LIF core,
//! leaky-integrator readout and linear keypoint interpolation.

pub mod config;
pub mod forward;
pub mod layers;
pub mod network;
pub mod weights;

pub use config::{
    Activation, ConvSpec, LifConfig, LifSpec, NetworkConfig, PoolSpec, ReadoutMode, ReadoutSpec,
    Reset, StreamSpec, WarmupPolicy,
};
pub use forward::{offline_forward, ForwardTrace, LifTrace, OfflineOutput};
pub use layers::{
    conv1d_forward, interpolate_linear, interpolate_segment, lif_step, pool_forward, readout_step,
    ConvLayer, LifLayer, LifParams, LifState, Padding, Readout,
};
pub use network::{parameter_specs, CoreState, NetworkModel, ParamKind, ParamSpec};
pub use weights::{RecordData, WeightFile, WeightRecord};
