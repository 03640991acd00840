//! Multitype Markov branching processes with Poisson and Polya immigration.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the numerical and
//! stochastic core: offspring laws and generating functions, the mean matrix
//! and its Perron decomposition, immigration samplers, the event-driven
//! simulator, Laplace-transform evaluators, limit laws and the two-type
//! transient mean. IO, configuration and statistics live in the `branchim`
//! crate.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod arrivals;
pub mod error;
pub mod limits;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod presets;
pub mod quad;
pub mod rng;
pub mod simulator;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod transforms;
pub mod transient;

pub use error::{Error, Result};
pub use model::{BranchingModel, OffspringLaw};

/// Crate version, echoed into result provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
