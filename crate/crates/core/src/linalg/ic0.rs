use super::{CsrMatrix, Preconditioner};
use crate::error::{HomogError, Result};

/// Zero-fill incomplete Cholesky factor `L̃` with `M = L̃ L̃ᵀ ≈ A`.
///
/// `L̃` is stored row-wise with the sparsity pattern of the lower triangle
/// of `A`; the diagonal entry is last in each row.
#[derive(Debug, Clone)]
pub struct IcPreconditioner {
    lower: CsrMatrix,
    shift: f64,
}

impl IcPreconditioner {
    pub fn factor(&self) -> &CsrMatrix {
        &self.lower
    }

    /// Relative diagonal shift `α` used to avoid breakdown (`A + α diag(A)`).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn nnz(&self) -> usize {
        self.lower.nnz()
    }

    /// In place `y <- L̃⁻¹ y`.
    pub fn solve_lower(&self, y: &mut [f64]) {
        let n = self.lower.nrows();
        for i in 0..n {
            let (cols, vals) = self.lower.row(i);
            let last = cols.len() - 1;
            let mut s = y[i];
            for p in 0..last {
                s -= vals[p] * y[cols[p]];
            }
            y[i] = s / vals[last];
        }
    }

    /// In place `y <- L̃⁻ᵀ y`.
    pub fn solve_upper(&self, y: &mut [f64]) {
        let n = self.lower.nrows();
        for i in (0..n).rev() {
            let (cols, vals) = self.lower.row(i);
            let last = cols.len() - 1;
            y[i] /= vals[last];
            let yi = y[i];
            for p in 0..last {
                y[cols[p]] -= vals[p] * yi;
            }
        }
    }
}

impl Preconditioner for IcPreconditioner {
    fn solve(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_lower(z);
        self.solve_upper(z);
    }
}

/// IC(0) of a symmetric matrix with positive diagonal.
pub fn ic0_factor(a: &CsrMatrix) -> Result<IcPreconditioner> {
    factor_with_shift(a, 0.0)
}

/// IC(0), retrying with `A + α diag(A)` for `α = 1e-3, 2e-3, 4e-3, ...`
/// until no pivot breaks down. The shift used is recorded on the result.
pub fn ic0_factor_shifted(a: &CsrMatrix) -> Result<IcPreconditioner> {
    match factor_with_shift(a, 0.0) {
        Ok(f) => Ok(f),
        Err(HomogError::FactorBreakdown { .. }) => {
            let mut alpha = 1e-3;
            loop {
                match factor_with_shift(a, alpha) {
                    Err(HomogError::FactorBreakdown { .. }) if alpha < 1.0 => alpha *= 2.0,
                    other => return other,
                }
            }
        }
        Err(e) => Err(e),
    }
}

fn factor_with_shift(a: &CsrMatrix, shift: f64) -> Result<IcPreconditioner> {
    let n = a.nrows();
    let mut row_ptr = vec![0usize; n + 1];
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut has_diag = false;
        for (&j, &v) in cols.iter().zip(vals) {
            if j < i {
                col_idx.push(j);
                values.push(v);
            } else if j == i {
                has_diag = true;
                col_idx.push(j);
                values.push(v * (1.0 + shift));
            }
        }
        if !has_diag {
            return Err(HomogError::FactorBreakdown { row: i, pivot: 0.0 });
        }
        row_ptr[i + 1] = col_idx.len();
    }

    // row-oriented left-looking elimination restricted to the pattern
    for i in 0..n {
        let (start, end) = (row_ptr[i], row_ptr[i + 1]);
        for p in start..end {
            let k = col_idx[p];
            // Σ_j L_ij L_kj over the common pattern, j < k
            let (ks, ke) = (row_ptr[k], row_ptr[k + 1]);
            let (mut pi, mut pk) = (start, ks);
            let mut s = 0.0;
            while pi < p && pk < ke {
                let (ci, ck) = (col_idx[pi], col_idx[pk]);
                if ci >= k || ck >= k {
                    break;
                }
                match ci.cmp(&ck) {
                    std::cmp::Ordering::Less => pi += 1,
                    std::cmp::Ordering::Greater => pk += 1,
                    std::cmp::Ordering::Equal => {
                        s += values[pi] * values[pk];
                        pi += 1;
                        pk += 1;
                    }
                }
            }
            if k < i {
                values[p] = (values[p] - s) / values[ke - 1];
            } else {
                let pivot = values[p] - s;
                if pivot <= 0.0 || !pivot.is_finite() {
                    return Err(HomogError::FactorBreakdown { row: i, pivot });
                }
                values[p] = pivot.sqrt();
            }
        }
    }
    Ok(IcPreconditioner {
        lower: CsrMatrix::from_parts(n, row_ptr, col_idx, values),
        shift,
    })
}
