//! Floating-point scalar abstraction shared by the whole engine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the simulator is generic over: `f32` or `f64`.
///
/// The tolerance hooks let the same invariant checks run at either
/// precision; the `f64` values are the ones the documented contracts use.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Budget for structural checks on states (hermiticity, unit trace).
    fn state_tol() -> Self;
    /// Equality tolerance for operator identities (unitarity, idempotence).
    fn eq_tol() -> Self;
    /// Probability below which a measurement branch is treated as empty.
    fn branch_eps() -> Self;

    /// Lossless-enough conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Real for f64 {
    fn state_tol() -> Self {
        1e-12
    }
    fn eq_tol() -> Self {
        1e-10
    }
    fn branch_eps() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn state_tol() -> Self {
        1e-5
    }
    fn eq_tol() -> Self {
        1e-4
    }
    fn branch_eps() -> Self {
        1e-6
    }
}
