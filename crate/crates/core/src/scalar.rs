//! Floating point abstraction used by the success-rate estimators, planners
//! and statistics. Everything numeric is written against [`Real`] so the
//! same code runs on `f32` and `f64`; the crate root re-exports `f64`
//! aliases for the common case.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}
