use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{LinearOperator, Preconditioner};
use crate::error::{HomogError, Result};

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    /// Stop once `‖b - A x‖ <= rtol ‖b‖`.
    pub rtol: f64,
    /// Iteration cap; `None` means `10 * dim`.
    pub max_iter: Option<usize>,
    /// Constant added to the traced quadratic `⟨Ax, x⟩ - 2⟨b, x⟩`.
    /// With `a(E, E)` here the trace carries homogenised values.
    pub energy_offset: f64,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rtol: 1e-10,
            max_iter: None,
            energy_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    /// `offset + ⟨A x_k, x_k⟩ - 2⟨b, x_k⟩`.
    pub energy: f64,
    pub elapsed_s: f64,
    pub matvecs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.residual)
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub trace: IterationTrace,
}

/// Hestenes-Stiefel conjugate gradients, optionally preconditioned.
///
/// The traced energy is updated from the recurrence residual:
/// `⟨Ax, x⟩ - 2⟨b, x⟩ = -⟨b, x⟩ - ⟨r, x⟩`, so no extra operator
/// application is needed per iteration.
pub fn cg(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: Option<&dyn Preconditioner>,
    opts: &CgOptions,
) -> Result<CgOutcome> {
    let n = op.dim();
    if b.len() != n {
        return Err(HomogError::InvalidArgument(format!(
            "right-hand side has length {}, operator dimension is {n}",
            b.len()
        )));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let start = Instant::now();
    let mut matvecs = 0usize;

    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => {
            return Err(HomogError::InvalidArgument(format!(
                "initial guess has length {}, operator dimension is {n}",
                x0.len()
            )))
        }
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    let mut ap = vec![0.0; n];
    if x.iter().any(|&v| v != 0.0) {
        op.apply(&x, &mut ap);
        matvecs += 1;
        for (ri, api) in r.iter_mut().zip(&ap) {
            *ri -= api;
        }
    }
    let b_norm = op.inner(b, b).sqrt();
    let energy = |x: &[f64], r: &[f64]| opts.energy_offset - op.inner(b, x) - op.inner(r, x);

    let mut trace = IterationTrace::default();
    let mut res_norm = op.inner(&r, &r).sqrt();
    let rel = |res: f64| if b_norm > 0.0 { res / b_norm } else { res };
    trace.records.push(IterationRecord {
        iteration: 0,
        residual: rel(res_norm),
        energy: energy(&x, &r),
        elapsed_s: start.elapsed().as_secs_f64(),
        matvecs,
    });
    if b_norm == 0.0 && res_norm == 0.0 || rel(res_norm) <= opts.rtol {
        return Ok(CgOutcome { x, trace });
    }

    let mut z = vec![0.0; n];
    let precondition = |r: &[f64], z: &mut [f64]| match precond {
        Some(m) => m.solve(r, z),
        None => z.copy_from_slice(r),
    };
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = op.inner(&r, &z);

    for k in 1..=max_iter {
        op.apply(&p, &mut ap);
        matvecs += 1;
        let pap = op.inner(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(HomogError::Indefinite {
                iteration: k,
                curvature: pap,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res_norm = op.inner(&r, &r).sqrt();
        trace.records.push(IterationRecord {
            iteration: k,
            residual: rel(res_norm),
            energy: energy(&x, &r),
            elapsed_s: start.elapsed().as_secs_f64(),
            matvecs,
        });
        if rel(res_norm) <= opts.rtol {
            return Ok(CgOutcome { x, trace });
        }
        precondition(&r, &mut z);
        let rz_new = op.inner(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(HomogError::NonConvergence {
        iterations: max_iter,
        residual: rel(res_norm),
        trace: Box::new(trace),
    })
}

/// `4 ((√κ - 1)/(√κ + 1))^{2k} ‖x - x_0‖²_A`, the classical CG error envelope.
pub fn cg_bound(kappa: f64, k: usize, e0_energy: f64) -> f64 {
    let s = kappa.max(1.0).sqrt();
    let q = (s - 1.0) / (s + 1.0);
    4.0 * q.powi(2 * k as i32) * e0_energy
}
