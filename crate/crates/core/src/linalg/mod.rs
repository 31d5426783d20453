//! Solver kernels shared by the Fourier and finite-element pipelines.

mod cg;
mod csr;
mod ic0;
mod lanczos;

pub use cg::{cg, cg_bound, CgOptions, CgOutcome, IterationRecord, IterationTrace};
pub use csr::CsrMatrix;
pub use ic0::{ic0_factor, ic0_factor_shifted, IcPreconditioner};
pub use lanczos::{lanczos_extremes, random_start, LanczosEstimate};

/// A symmetric operator together with the inner product it is self-adjoint in.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        crate::grid::dot(x, y)
    }

    /// Orthogonal projection onto the subspace the operator is declared on.
    fn restrict(&self, _x: &mut [f64]) {}
}

pub trait Preconditioner {
    /// Solves `M z = r`.
    fn solve(&self, r: &[f64], z: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }
}

/// `L⁻¹ A L⁻ᵀ` for an incomplete factor `L`; spectrally equivalent to `M⁻¹A`.
pub struct SplitPreconditioned<'a> {
    pub matrix: &'a CsrMatrix,
    pub factor: &'a IcPreconditioner,
}

impl LinearOperator for SplitPreconditioned<'_> {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = x.to_vec();
        self.factor.solve_upper(&mut t);
        self.matrix.matvec_into(&t, y);
        self.factor.solve_lower(y);
    }
}
