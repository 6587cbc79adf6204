//! Scalar abstraction shared by every signal-processing routine.
//!
//! Signal arrays are generic over [`Real`], implemented for `f32` and `f64`.
//! Configuration values, ground-truth records and statistics stay in `f64`;
//! random draws are always made in `f64` and narrowed afterwards so the
//! random stream is identical regardless of the sample type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, NumCast};
use rustfft::FftNum;

/// Floating-point sample type: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FftNum + ryu::Float + Sum + Display + Debug + Default
{
    /// Narrow (or pass through) an `f64` constant.
    #[inline]
    fn cast(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("finite f64 is representable")
    }

    /// Widen to `f64` for accumulation.
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().expect("float widens to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic mean accumulated in `f64`. Returns 0 for an empty slice.
pub fn mean<T: Real>(xs: &[T]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|x| x.widen()).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divisor `n`) accumulated in `f64`.
pub fn std_dev<T: Real>(xs: &[T]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs
        .iter()
        .map(|x| {
            let d = x.widen() - m;
            d * d
        })
        .sum();
    (ss / xs.len() as f64).sqrt()
}
