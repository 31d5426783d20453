//! Periodic numerical homogenisation with guaranteed upper bounds.
//!
//! Two discretisations of the scalar cell problem are provided side by side:
//! Fourier-Galerkin on regular grids ([`ffth`]), with exact integration on a
//! double grid or with pointwise numerical integration, and conforming
//! periodic finite elements of order 1 and 2 ([`fem`]). Both share the
//! solver kernels in [`linalg`]; [`analysis`] turns runs into energetic
//! error, memory and operation-count comparisons.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod grid;
pub mod fem;
pub mod ffth;
pub mod linalg;
pub mod materials;

pub use error::{HomogError, Result};
