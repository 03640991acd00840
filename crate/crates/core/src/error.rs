use alloc::string::String;

/// Errors raised by the core numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("type index {index} out of range for {k} types")]
    TypeIndex { index: usize, k: usize },

    #[error("argument outside the unit cube: {0}")]
    OutsideUnitCube(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mean matrix is not regular: {0}")]
    NotRegular(String),

    #[error("dominant eigenvalue is not simple (second modulus {second} vs {first})")]
    NotSimple { first: f64, second: f64 },

    #[error("degenerate branching: Q = {0} (deterministic reproduction)")]
    DegenerateBranching(f64),

    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("singular resolvent: xi = {xi} must exceed rho = {rho}")]
    SingularResolvent { xi: f64, rho: f64 },

    #[error("capacity exceeded: {what} reached {count} (cap {cap})")]
    Capacity {
        what: &'static str,
        count: u64,
        cap: u64,
    },

    #[error("ODE integration failed at t = {t}: {reason}")]
    OdeFailure { t: f64, reason: &'static str },

    #[error("quadrature did not converge on [{a}, {b}]: estimated error {error}")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("no limit theorem covers this configuration: {0}")]
    NoMatchingHypothesis(String),
}

pub type Result<T> = core::result::Result<T, Error>;
