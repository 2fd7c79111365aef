//! Truncated-matrix toolkit for weighted composition–differentiation
//! operators `C_{ψ₀,φ₀} + D_{ψ,φ,n}` on the Hardy space and the weighted
//! Bergman spaces of the unit disk.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod operator;
pub mod series;
pub mod space;
pub mod spectral;
pub mod verify;

pub use error::{OpError, Result};
pub use operator::{build_matrix, OperatorMatrix, OperatorSpec};
pub use series::TruncatedSeries;
