//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the library computes with: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log2(x)` clamped at zero, i.e. `[log2 x]+`.
#[inline]
pub fn log2_plus<T: Real>(x: T) -> T {
    if x > T::one() {
        x.log2()
    } else {
        T::zero()
    }
}

/// Kahan-compensated sum; used where long accumulations must not depend on
/// term count more than necessary.
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(terms: I) -> T {
    let mut sum = T::zero();
    let mut carry = T::zero();
    for x in terms {
        let y = x - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}
