use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Floating-point scalar the whole numeric core is generic over.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + ScalarOperand
    + FftNum
    + Sum
    + Debug
    + Display
    + Default
    + 'static
{
    /// Lossy conversion from f64 literals and intermediate math.
    fn from_f64c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 -> scalar conversion")
    }
    fn to_f64c(self) -> f64 {
        self.to_f64().expect("scalar -> f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
