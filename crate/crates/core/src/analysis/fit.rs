//! Extrapolation of homogenised values with the model `C N^{-2s} + Ã`.

use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};

const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Extrapolated homogenised value `Ã`.
    pub limit: f64,
    /// Convergence rate `s` (the error decays like `N^{-2s}`).
    pub rate: f64,
    pub constant: f64,
    /// Euclidean norm of the final residuals.
    pub residual_norm: f64,
    pub grids: Vec<f64>,
    pub iterations: usize,
    /// Set when the input values are not strictly decreasing in `N`.
    pub warning: Option<String>,
}

impl FitResult {
    pub fn model(&self, n: f64) -> f64 {
        self.constant * n.powf(-2.0 * self.rate) + self.limit
    }
}

fn residuals(points: &[(f64, f64)], theta: &[f64; 3]) -> Vec<f64> {
    let [a, s, c] = *theta;
    points.iter().map(|&(n, y)| c * n.powf(-2.0 * s) + a - y).collect()
}

fn jacobian(points: &[(f64, f64)], theta: &[f64; 3]) -> Vec<[f64; 3]> {
    let [_, s, c] = *theta;
    points
        .iter()
        .map(|&(n, _)| {
            let t = n.powf(-2.0 * s);
            [1.0, -2.0 * n.ln() * c * t, t]
        })
        .collect()
}

/// Starting values: `s` and `C` from a log-log line through successive
/// differences, `Ã` from the finest point minus the modelled error.
fn initial_guess(points: &[(f64, f64)]) -> [f64; 3] {
    let m = points.len();
    let xs: Vec<f64> = (0..m - 1).map(|i| points[i].0.ln()).collect();
    let ys: Vec<f64> = (0..m - 1)
        .map(|i| (points[i].1 - points[i + 1].1).abs().max(f64::MIN_POSITIVE).ln())
        .collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { -1.0 };
    let s = (-slope / 2.0).max(0.05);
    let ratio = (0..m - 1).map(|i| points[i + 1].0 / points[i].0).sum::<f64>() / (m - 1) as f64;
    let shrink = 1.0 - ratio.powf(-2.0 * s);
    let sign = if points[0].1 >= points[m - 1].1 { 1.0 } else { -1.0 };
    // log D_i ≈ log(C (1 - r^{-2s})) - 2s log N_i
    let c = sign * (my - slope * mx).exp() / shrink.max(1e-3);
    let (n_last, y_last) = points[m - 1];
    let a = y_last - c * n_last.powf(-2.0 * s);
    [a, s, c]
}

fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let dm = det(&m);
    if dm == 0.0 || !dm.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let mut mi = m;
        for row in 0..3 {
            mi[row][i] = r[row];
        }
        *o = det(&mi) / dm;
    }
    Some(out)
}

/// Levenberg-Marquardt fit of `(Ã, s, C)` to `(N, A_N)` pairs.
pub fn fit_reference(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(HomogError::FitFailed(format!(
            "need at least 4 discretisations, got {}",
            points.len()
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.iter().any(|&(n, y)| !(n > 0.0) || !y.is_finite()) {
        return Err(HomogError::FitFailed("grid sizes must be positive and values finite".into()));
    }
    let warning = if pts.windows(2).all(|w| w[1].1 < w[0].1) {
        None
    } else {
        Some("values are not strictly decreasing in N; the fit may be unreliable".to_string())
    };

    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.1.abs())).max(1e-300);
    let cost = |th: &[f64; 3]| residuals(&pts, th).iter().map(|r| r * r).sum::<f64>();
    let mut theta = initial_guess(&pts);
    let mut lambda = 1e-3;
    let mut current = cost(&theta);
    let mut iterations = 0;
    for it in 0..MAX_ITER {
        iterations = it + 1;
        let r = residuals(&pts, &theta);
        let j = jacobian(&pts, &theta);
        let mut jtj = [[0.0; 3]; 3];
        let mut g = [0.0; 3];
        for (row, ri) in j.iter().zip(&r) {
            for a in 0..3 {
                g[a] += row[a] * ri;
                for b in 0..3 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= GRAD_TOL * scale {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut damped = jtj;
            for a in 0..3 {
                damped[a][a] += lambda * jtj[a][a].max(1e-300);
            }
            let Some(step) = solve3(damped, [-g[0], -g[1], -g[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [theta[0] + step[0], theta[1] + step[1], theta[2] + step[2]];
            let c = cost(&trial);
            if c.is_finite() && c <= current {
                let small = step.iter().zip(&theta).all(|(s, t)| s.abs() <= 1e-15 * t.abs().max(1e-300));
                theta = trial;
                current = c;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = !small;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let [limit, rate, constant] = theta;
    if !(rate > 0.0) || !limit.is_finite() {
        return Err(HomogError::FitFailed(format!("fit did not produce a positive rate (s = {rate})")));
    }
    Ok(FitResult {
        limit,
        rate,
        constant,
        residual_norm: current.sqrt(),
        grids: pts.iter().map(|p| p.0).collect(),
        iterations,
        warning,
    })
}
