//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the solvers can run on (`f32` or `f64`).
///
/// Tolerances are per-type because the absolute slack threshold that makes
/// sense for `f64` is far below `f32` machine precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for constraint slacks and equality checks.
    fn feasibility_tol() -> Self;

    /// Relative termination tolerance for scalar root finding.
    fn root_rtol() -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn feasibility_tol() -> Self {
        1e-9
    }

    #[inline]
    fn root_rtol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    #[inline]
    fn feasibility_tol() -> Self {
        1e-3
    }

    #[inline]
    fn root_rtol() -> Self {
        1e-6
    }
}
