//! Scalar abstraction shared by every numerical module.
//!
//! All geometry, assembly and functional calculus is written against [`Real`],
//! which bundles nalgebra's `RealField` with the `num-traits` primitive
//! conversions. `f64` is the working precision of the harness; `f32` compiles
//! and runs, but most tolerances in this crate are double-precision tolerances.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use std::fmt::{Debug, LowerExp};

pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + LowerExp + Debug + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
