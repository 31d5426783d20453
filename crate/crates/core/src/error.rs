use std::path::PathBuf;

use crate::linalg::IterationTrace;

pub type Result<T, E = HomogError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum HomogError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("Fourier coefficients are not Hermitian-symmetric (max deviation {deviation:e})")]
    SymmetryViolation { deviation: f64 },

    #[error("geometry `{0}` has no exact Fourier coefficients in this setting")]
    UnsupportedGeometry(String),

    #[error("element crosses a material interface at {axis_name} = {plane}")]
    NonConformingMesh { axis_name: String, plane: f64 },

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        trace: Box<IterationTrace>,
    },

    #[error("operator is not positive definite along a search direction (p.Ap = {curvature:e} at iteration {iteration})")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("incomplete Cholesky breakdown: pivot {pivot:e} at row {row}")]
    FactorBreakdown { row: usize, pivot: f64 },

    #[error("curve fit failed: {0}")]
    FitFailed(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible schedule: {0}")]
    Infeasible(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HomogError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HomogError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: &[usize], actual: &[usize]) -> Self {
        HomogError::ShapeMismatch {
            expected: expected.to_vec(),
            actual: actual.to_vec(),
        }
    }
}
