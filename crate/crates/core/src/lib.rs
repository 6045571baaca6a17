//! Potential theory of rational maps of the Riemann sphere.
//!
//! The algebraic core ([`poly`], [`maps`], [`escape`]) is generic over the
//! scalar; the samplers, tracing and verdict pipeline work in `f64`.

// `!(x > 0.0)` is deliberate: NaN takes the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops read closer to the linear algebra they implement
#![allow(clippy::needless_range_loop)]

pub mod equilibrium;
pub mod error;
pub mod escape;
pub mod harmonic;
pub mod io;
pub mod lemniscate;
pub mod maps;
pub mod measure;
pub mod poly;
pub mod rng;
pub mod roots;
pub mod scalar;
pub mod verdict;

pub use error::{Error, Result};
pub use num_complex::{Complex32, Complex64};

pub type Map = maps::RationalMap<f64>;
pub type Lift = maps::HomogeneousLift<f64>;
pub type Point = maps::ProjectivePoint<f64>;
pub type Evaluator = escape::EscapeRateEvaluator<f64>;

pub type Map32 = maps::RationalMap<f32>;
pub type Lift32 = maps::HomogeneousLift<f32>;
pub type Point32 = maps::ProjectivePoint<f32>;
pub type Evaluator32 = escape::EscapeRateEvaluator<f32>;
