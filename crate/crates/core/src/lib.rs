//! Multi-objective turn-based stochastic games with reachability and safety
//! queries: exact value iteration under both quantifier orders, determinacy
//! checks, strategy iteration, qualitative solving and a construction corpus.

pub mod corpus;
pub mod determinacy;
pub mod io;
pub mod model;
pub mod oracle;
pub mod qualitative;
pub mod si;
pub mod vi;

pub use dwc_polytope as polytope;
pub use model::{
    Classification, Connective, Diagnostic, Game, GameBuilder, Kind, MdStrategy, Objective, Owner, QueryTemplate,
    State, StateId, ThresholdQuery,
};

use dwc_polytope::PolytopeError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("unsupported query: {0}")]
    QueryClass(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("enumeration guard exceeded: {count} candidates > bound {bound}")]
    Guard { count: u128, bound: u128 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

pub type Result<T> = std::result::Result<T, Error>;
