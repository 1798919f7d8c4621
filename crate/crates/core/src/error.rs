use thiserror::Error;

/// Errors raised by the numerical modules and the scenario runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("anisotropy is singular at p = 0 ({0})")]
    Singular(&'static str),

    #[error("refinement did not reach tolerance {tolerance:e} (achieved {achieved:e})")]
    Tolerance { tolerance: f64, achieved: f64 },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("the sampled function has no finite node")]
    AllInfinite,

    #[error("barrier construction failed: {check} violated at x = {x:?} (value {value:e}, bound {bound:e})")]
    Construction { check: &'static str, x: [f64; 2], value: f64, bound: f64 },

    #[error("parameter verification failed at x = {x:?}: W* = {value:e} < {bound:e}")]
    Parameters { x: [f64; 2], value: f64, bound: f64 },

    #[error("infeasible at grid resolution: {0}")]
    Infeasible(String),

    #[error("certificate failure at node {node}: {reason}")]
    Certificate { node: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("line search failed after {iterations} iterations (gradient norm {gradient_norm:e})")]
    LineSearch { iterations: usize, gradient_norm: f64 },

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("non-finite value at node {node} after step {step}")]
    NonFinite { node: usize, step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
