use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LinearOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    /// Set when the budget was too small for the extreme Ritz values to settle.
    pub low_confidence: bool,
}

impl LanczosEstimate {
    /// Ritz values interlace the spectrum, so this is a lower estimate of κ.
    pub fn kappa(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Reproducible uniform start vector in `[-1, 1]^n`.
pub fn random_start(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

const SETTLE_WINDOW: usize = 10;
const SETTLE_RTOL: f64 = 1e-3;

/// Extreme Ritz values after at most `iters` Lanczos steps with full
/// reorthogonalisation, started from `start` projected onto the operator's
/// subspace.
pub fn lanczos_extremes(op: &dyn LinearOperator, start: &[f64], iters: usize) -> LanczosEstimate {
    let n = op.dim();
    let mut q = start.to_vec();
    op.restrict(&mut q);
    let norm = op.inner(&q, &q).sqrt();
    assert!(norm > 0.0, "Lanczos start vector vanishes on the operator subspace");
    q.iter_mut().for_each(|v| *v /= norm);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut exhausted = false;

    for j in 0..iters.min(n) {
        op.apply(&basis[j], &mut w);
        let alpha = op.inner(&basis[j], &w);
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = op.inner(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        op.restrict(&mut w);
        let (lo, hi) = tridiagonal_extremes(&alphas, &betas);
        history.push((lo, hi));
        let beta = op.inner(&w, &w).sqrt();
        let scale = alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            // invariant subspace: the Ritz values are exact eigenvalues
            exhausted = true;
            break;
        }
        if j + 1 == iters.min(n) {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|v| v / beta).collect());
    }

    let (lambda_min, lambda_max) = *history.last().expect("at least one Lanczos step");
    let iterations = history.len();
    let low_confidence = if exhausted || iterations == n {
        false
    } else if iterations <= SETTLE_WINDOW {
        true
    } else {
        let (lo_prev, hi_prev) = history[iterations - 1 - SETTLE_WINDOW];
        (lambda_min - lo_prev).abs() > SETTLE_RTOL * lambda_min.abs()
            || (lambda_max - hi_prev).abs() > SETTLE_RTOL * lambda_max.abs()
    };
    LanczosEstimate {
        lambda_min,
        lambda_max,
        iterations,
        low_confidence,
    }
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
fn sturm_count(alphas: &[f64], betas: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..alphas.len() {
        let b2 = if i == 0 { 0.0 } else { betas[i - 1] * betas[i - 1] };
        q = alphas[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = f64::EPSILON * (alphas[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let m = alphas.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..m {
        let r = if i > 0 { betas[i - 1].abs() } else { 0.0 } + if i + 1 < m { betas[i].abs() } else { 0.0 };
        lo = lo.min(alphas[i] - r);
        hi = hi.max(alphas[i] + r);
    }
    let bisect = |target: usize| {
        // smallest x with sturm_count(x) >= target + 1 approximated from both sides
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if sturm_count(alphas, betas, mid) > target {
                b = mid;
            } else {
                a = mid;
            }
        }
        0.5 * (a + b)
    };
    (bisect(0), bisect(m - 1))
}
