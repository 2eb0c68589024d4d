//! Real scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use ndarray::ScalarOperand;
use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssignOps};

/// Floating-point field the basis, operators and states are built over.
///
/// Implemented for `f32` and `f64`. Reports and file formats always carry
/// `f64`, so the only requirement beyond arithmetic is a lossless widening.
pub trait Real:
    Float + FloatConst + NumAssignOps + ScalarOperand + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts a literal; panics only on a value the type cannot represent.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("index representable in scalar type")
    }

    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `v`, floored at a few hundred ulps so single precision stays usable.
    #[inline]
    fn tolerance(v: f64) -> Self {
        Self::lit(v).max(Self::epsilon() * Self::lit(256.0))
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex numbers over a [`Real`] field.
pub type Cx<T> = Complex<T>;

/// `(-i)^k` built from the exact quarter-turn table, never from `exp`.
#[inline]
pub fn minus_i_pow<T: Real>(k: usize) -> Cx<T> {
    let (o, z) = (T::one(), T::zero());
    match k % 4 {
        0 => Cx::new(o, z),
        1 => Cx::new(z, -o),
        2 => Cx::new(-o, z),
        _ => Cx::new(z, o),
    }
}

/// Imaginary unit.
#[inline]
pub fn i_unit<T: Real>() -> Cx<T> {
    Cx::new(T::zero(), T::one())
}

#[inline]
pub fn cx<T: Real>(re: T) -> Cx<T> {
    Cx::new(re, T::zero())
}
