//! Maximal perimeter of convex sets with respect to probability measures.
//!
//! The crate estimates the μ-perimeter `μ⁺(∂Q) = liminf μ((Q+εB)∖Q)/ε` of
//! convex bodies by Monte Carlo, builds random Gaussian-facet polytopes whose
//! expected perimeter is large, and evaluates lower and upper bounds on
//! `Γ(μ) = sup_Q μ⁺(∂Q)`.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `f64`
//! aliases below are what most callers want.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bodies;
pub mod error;
pub mod experiments;
pub mod measures;
pub mod nazarov;
pub mod perimeter;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod upper_bounds;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Halfspace = bodies::Halfspace<f64>;
pub type Polytope = bodies::Polytope<f64>;
pub type NamedBody = bodies::NamedBody<f64>;
pub type Body = bodies::Body<f64>;
pub type MeasureSpec = measures::MeasureSpec<f64>;
pub type RadialStats = measures::RadialStats<f64>;
pub type PerimeterEstimate = perimeter::PerimeterEstimate<f64>;
pub type NazarovParams = nazarov::NazarovParams<f64>;
pub type BoundReport = upper_bounds::BoundReport<f64>;

pub type Polytope32 = bodies::Polytope<f32>;
pub type MeasureSpec32 = measures::MeasureSpec<f32>;
pub type PerimeterEstimate32 = perimeter::PerimeterEstimate<f32>;
