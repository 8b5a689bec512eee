//! Probabilistic bisimulation for labelled transition systems with
//! probabilistic branching.
//!
//! The crate decides bisimilarity and simulation on the fly, lifts
//! relations to distributions through maximum flow, computes behavioural
//! pseudometrics, and builds distinguishing and characteristic formulae.
//!
//! All algorithms are generic over [`Scalar`]. Exact answers need
//! [`Rational`]; `f64` and `f32` run the same code with a tolerance.
//!
//! ```
//! use pbisim::{bisim::bisim, parse::parse_plts};
//!
//! let p = parse_plts("s a -> 1/2 u, 1/2 v\nt a -> 1/2 v, 1/2 u\n").unwrap();
//! let (same, _) = bisim(&p, p.state("s").unwrap(), p.state("t").unwrap());
//! assert!(same);
//! ```

pub mod bisim;
pub mod dist;
pub mod error;
pub mod flow;
pub mod lifting;
pub mod logic;
pub mod metric;
pub mod model;
pub mod mucalc;
pub mod parse;
pub mod relation;
pub mod scalar;
mod syntax;

pub use error::{Error, Result};
pub use model::{ActionId, StateId};
pub use scalar::{Rational, Scalar};

/// Exact distributions.
pub type RatDist = dist::Dist<Rational>;
/// Exact models.
pub type RatPlts = model::Plts<Rational>;
/// Exact pseudometrics.
pub type RatMetric = metric::PseudoMetric<Rational>;
/// Double-precision distributions.
pub type F64Dist = dist::Dist<f64>;
/// Double-precision models.
pub type F64Plts = model::Plts<f64>;
/// Double-precision pseudometrics.
pub type F64Metric = metric::PseudoMetric<f64>;
/// Single-precision distributions.
pub type F32Dist = dist::Dist<f32>;
/// Single-precision models.
pub type F32Plts = model::Plts<f32>;
