// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::{Complex, RealField};

/// Real floating-point scalar: `f32` or `f64`.
///
/// All tolerances in the crate are specified as `f64` and converted on use, so
/// `f32` instantiations work but cannot meet the tight default tolerances.
pub trait Real: RealField + Copy {
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn to_f64(self) -> f64 {
        nalgebra::try_convert::<Self, f64>(self).unwrap_or(f64::NAN)
    }
}

impl<T: RealField + Copy> Real for T {}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cr<T: Real>(re: f64) -> C<T> {
    Complex::new(T::lit(re), T::zero())
}

#[inline]
pub(crate) fn ci<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}
