//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All solvers are written against [`Real`] so they can be instantiated for
//! `f32` or `f64`. Complex quantities are `num_complex::Complex<T>`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar usable by the power-flow and approximation code.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Field<Magnitude = Self>
    + 'static
{
    /// Converts an `f64` literal. Values are always representable (possibly
    /// rounded) in every supported type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn czero<T: Real>() -> Cx<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> Cx<T> {
    Complex::new(T::one(), T::zero())
}

/// Element type accepted by the dense LU factorization: a real scalar or a
/// complex number over one.
pub trait Field:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + 'static
{
    type Magnitude: Real;

    fn zero_elem() -> Self;
    fn one_elem() -> Self;
    /// Modulus used for pivot selection.
    fn magnitude(self) -> Self::Magnitude;
}

macro_rules! impl_field_real {
    ($t:ty) => {
        impl Field for $t {
            type Magnitude = $t;
            #[inline]
            fn zero_elem() -> Self {
                0.0
            }
            #[inline]
            fn one_elem() -> Self {
                1.0
            }
            #[inline]
            fn magnitude(self) -> Self {
                self.abs()
            }
        }
    };
}

impl_field_real!(f32);
impl_field_real!(f64);

impl<T: Real> Field for Complex<T> {
    type Magnitude = T;
    #[inline]
    fn zero_elem() -> Self {
        czero()
    }
    #[inline]
    fn one_elem() -> Self {
        cone()
    }
    #[inline]
    fn magnitude(self) -> T {
        self.norm()
    }
}
