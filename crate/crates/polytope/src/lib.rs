//! Exact downward-closed convex polytopes in `[0,1]^n`.
//!
//! The value sets of multi-objective stochastic games are downward closures of
//! convex hulls of finitely many points. This crate stores them canonically
//! (irredundant, sorted generators) so that structural equality is set
//! equality, and provides the three combinators the value iterations need:
//! convex union, intersection and weighted Minkowski combination.
//!
//! All arithmetic is over arbitrary-precision rationals; there is no
//! floating-point mode.

mod dd;
mod family;
mod frontier;
pub mod linalg;
pub mod lp;
mod poly;
pub mod rational;
mod region;

pub use family::PolytopeSet;
pub use frontier::eval as frontier_height;
pub use poly::{DwcPolytope, HalfSpace, Point};
pub use rational::{format_rational, parse_rational, rat, Rational};
pub use region::{covered_by_union_2d, Region};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolytopeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("coordinate {0} outside [0,1]")]
    OutOfRange(String),
    #[error("empty input")]
    Empty,
    #[error("invalid weights: {0}")]
    BadWeights(String),
    #[error("parse error: {0}")]
    Parse(String),
}
