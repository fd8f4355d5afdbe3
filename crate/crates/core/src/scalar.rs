//! Floating-point scalar abstraction shared by the scoring kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts a literal constant into this scalar type.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    /// Ratio of two counts, `num / den`.
    fn ratio(num: usize, den: usize) -> Self {
        Self::from_usize(num).expect("count fits") / Self::from_usize(den).expect("count fits")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
