//! Scalar abstraction for the numerical core.

use std::fmt;

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive};

/// Floating-point scalars the toolkit runs on.
///
/// The whole core is generic over this trait; `f64` is the intended
/// production type, `f32` works for quick low-precision experiments with a
/// suitably loosened [`crate::ToleranceConfig`].
pub trait Scalar: Float + FromPrimitive + RealField + fmt::Display + Send + Sync + 'static {
    /// Converts an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constants convert into every supported scalar")
    }

    /// Converts into `f64` for reports and error messages.
    fn lossy_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
