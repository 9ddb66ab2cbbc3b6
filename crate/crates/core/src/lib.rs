//! Numerical verification of elliptic weight functions of the cotangent
//! bundle of the full flag variety: restriction matrices, R-matrix
//! recursions, the `z ↔ μ` mirror identity and the interpolation function.

pub mod error;
pub mod mirror;
pub mod permutation;
pub mod qtheta;
pub mod restriction;
pub mod rmatrix;
pub mod sampling;
pub mod verify;
pub mod weight;

pub use error::{Error, Result};
pub use permutation::Permutation;
pub use qtheta::{LogValue, ThetaContext};
pub use restriction::RestrictionMatrix;
pub use weight::{ChernPoint, ParameterPoint};
