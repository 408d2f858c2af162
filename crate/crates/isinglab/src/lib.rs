//! Finite-volume Ising toolkit.
//!
//! Exact Gibbs states by enumeration, correlation-inequality audits, wall and
//! interface free energies, Metropolis sampling, Peierls and multiscale
//! contours, dyadic coarse-graining, and random-field concentration audits.

pub mod coarse;
pub mod contour;
pub mod exact;
pub mod lattice;
pub mod model;
pub mod rfield;
pub mod sampler;
pub mod stats;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Param(String),
    #[error("state error: {0}")]
    State(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("structural error: {0}")]
    Structural(String),
}

pub type Result<T> = std::result::Result<T, Error>;
