pub mod anisotropy;
pub mod conjugate;
pub mod error;
pub mod evolution;
pub mod facet;
pub mod grid;
pub mod linalg;
mod quadrature;
pub mod resolvent;
pub mod scenario;
pub mod speed;

pub use error::{Error, Result};
