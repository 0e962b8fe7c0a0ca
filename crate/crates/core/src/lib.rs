//! Random walks on percolation clusters and random conductance lattices.
//!
//! Heat kernels are computed exactly by evolving transition densities, so the
//! balayage and réduite constructions, the parabolic Harnack constant, the
//! local limit errors and the Green's function profile are all measured
//! without sampling noise. The numerical core is generic over [`Scalar`]:
//! the same code runs on `f32`, `f64` and exact rationals.

pub mod balayage;
pub mod error;
pub mod experiment;
pub mod harnack;
pub mod kernel;
pub mod lattice;
pub mod limits;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use lattice::{AntKind, BondConfig, WeightedGraph};
pub use scalar::{Real, Scalar};

/// Exact rational scalar used by the identity checks.
pub type Rational = num_rational::Ratio<i128>;

/// Double precision cluster graph, the default for measurements.
pub type Graph = WeightedGraph<f64>;
/// Single precision cluster graph.
pub type Graph32 = WeightedGraph<f32>;
/// Cluster graph with exact rational weights.
pub type ExactGraph = WeightedGraph<Rational>;
