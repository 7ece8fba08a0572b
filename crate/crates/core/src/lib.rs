//! Inference and analysis toolkit for hybrid spiking decoders that turn
//! binned cortical spike counts into 2-D velocities.
//!
//! The engine is generic over the floating-point [`Scalar`] (`f32` or
//! `f64`); fixed-point weights and buffers are simulated exactly on the
//! float grid. Aliases for the common instantiations live at the crate root.

pub mod bufcalc;
pub mod data;
pub mod error;
pub mod fxp;
pub mod io;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod stream;
pub mod synth;

pub use bufcalc::{BufferPlan, RealtimeVerdict, StackSpec};
pub use data::{Series, SpikeStream, Trajectory};
pub use error::{Error, Result};
pub use fxp::{FixedPointFormat, FxpValue, NumberFormat};
pub use model::{NetworkConfig, NetworkModel};
pub use scalar::Scalar;

pub type NetworkModelF32 = NetworkModel<f32>;
pub type NetworkModelF64 = NetworkModel<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
