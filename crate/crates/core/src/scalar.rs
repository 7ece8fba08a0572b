use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type of the inference engine: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any float scalar")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to any float scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
