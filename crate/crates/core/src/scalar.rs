//! Scalar abstraction for the floating-point kernels.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point element type of heat maps, radiographs and the metric
/// numerics. Implemented by `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + std::iter::Sum + std::fmt::Debug + Send + Sync + 'static
{
    /// Lossless conversion from `f64` table data and geometry values.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + std::iter::Sum
        + std::fmt::Debug
        + Send
        + Sync
        + 'static
{
}
