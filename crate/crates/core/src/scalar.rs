//! Scalar abstraction shared by every numerical routine.
//!
//! Walk evolution, balayage and the réduite only need field arithmetic, so
//! they are generic over [`Scalar`] and run unchanged on `f32`, `f64` and
//! exact rationals. Routines that need `exp`, `ln` or `sqrt` ask for
//! [`Real`] instead.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Field element usable as a weight, density or caloric value.
pub trait Scalar:
    Copy + Num + NumAssign + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// Lossy conversion used for reporting; exact for floats.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Conversion from a small integer count (degrees, dimensions).
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("value representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Copy + Num + NumAssign + Signed + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Floating point scalar (f32 or f64).
pub trait Real: Scalar + Float + FloatConst {}

impl<T> Real for T where T: Scalar + Float + FloatConst {}

/// Kahan–Babuška compensated accumulator. With exact arithmetic the
/// compensation term stays identically zero.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<S> {
    sum: S,
    carry: S,
}

impl<S: Scalar> Default for CompensatedSum<S> {
    fn default() -> Self {
        Self { sum: S::zero(), carry: S::zero() }
    }
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn add(&mut self, value: S) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> S {
        self.sum + self.carry
    }
}

impl<S: Scalar> FromIterator<S> for CompensatedSum<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut acc = Self::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}
