//! Scalar abstraction for the real-valued parts of the crate.
//!
//! Counting quantities (QoA, waiting times) are integers throughout. Only the
//! Markov-chain analytics and the experiment statistics work over reals, and
//! they are written against [`Real`] so they can run in `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    /// Lossy conversion from a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count out of range")
    }
}

impl Real for f32 {}
impl Real for f64 {}
