use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type used by the dense-network engine and the models.
///
/// Implemented for `f32` and `f64`. Experiments run in `f64`; `f32` is there
/// for memory-bound inference and for checking that nothing silently assumes
/// double precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// `max(x, 0)` that keeps NaN instead of hiding it.
    fn relu(self) -> Self {
        if self.is_nan() || self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Bit pattern used to detect exactly-equal rows.
    fn bits(self) -> u64;
}

impl Scalar for f64 {
    fn bits(self) -> u64 {
        // fold -0.0 into 0.0 so equal values hash equally
        if self == 0.0 {
            0
        } else {
            self.to_bits()
        }
    }
}

impl Scalar for f32 {
    fn bits(self) -> u64 {
        if self == 0.0 {
            0
        } else {
            u64::from(self.to_bits())
        }
    }
}
