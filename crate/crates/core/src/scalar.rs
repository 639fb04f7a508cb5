//! Scalar abstractions shared by the numeric parts of the crate.

use num_traits::{Float, FromPrimitive, Num};

/// Floating point scalar usable for confidences and hypervolumes: f32 or f64.
pub trait Real: Float + FromPrimitive + Send + Sync + std::fmt::Debug {}

impl Real for f32 {}
impl Real for f64 {}

/// Field-like scalar that can represent count ratios exactly or approximately.
///
/// Implemented by the float types and by exact rationals, so that ratio-of-counts
/// formulas can be evaluated without rounding when needed.
pub trait Ratio: Num + FromPrimitive + Clone + PartialOrd + std::fmt::Debug {}

impl Ratio for f32 {}
impl Ratio for f64 {}
impl Ratio for num_rational::Rational64 {}
