//! Bessel function of the first kind, order one.

use std::f64::consts::PI;

const ASYMPTOTIC_FROM: f64 = 25.0;

/// `J₁(x)` to near machine precision: Miller's backward recurrence below
/// `x = 25`, Hankel's asymptotic expansion above.
pub fn bessel_j1(x: f64) -> f64 {
    if x < 0.0 {
        return -bessel_j1(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x < 1e-4 {
        let x2 = x * x;
        return 0.5 * x * (1.0 - x2 / 8.0 + x2 * x2 / 192.0);
    }
    if x >= ASYMPTOTIC_FROM {
        return hankel_j1(x);
    }
    miller_j1(x)
}

fn miller_j1(x: f64) -> f64 {
    let start = 2 * ((x as usize + 40) / 2 + 1);
    let two_over_x = 2.0 / x;
    let (mut j_next, mut j_cur) = (0.0f64, 1e-30f64);
    let mut j1 = 0.0;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        // j_cur holds J_k, produce J_{k-1}
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            j1 *= 1e-250;
            norm *= 1e-250;
        }
        let order = k - 1;
        if order == 1 {
            j1 = j_cur;
        }
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * j_cur;
        }
    }
    norm += j_cur; // J_0
    j1 / norm
}

fn hankel_j1(x: f64) -> f64 {
    let mu = 4.0;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0; // a_k(1) / x^k
    let mut k = 0usize;
    loop {
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        k += 1;
        let odd = (2 * k - 1) as f64;
        let next = a * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() < 1e-17 * p.abs().max(1e-300) || next.abs() >= a.abs() || k > 60 {
            break;
        }
        a = next;
    }
    let chi = x - 0.75 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Fourier coefficient `∫ χ_disk(x) e^{-2πi k·x} dx` of a centred disk of
/// radius `r`, as a function of `|k|`.
pub fn disk_coefficient(r: f64, k_norm: f64) -> f64 {
    if k_norm == 0.0 {
        PI * r * r
    } else {
        r * bessel_j1(2.0 * PI * r * k_norm) / k_norm
    }
}

/// Same for a centred ball in three dimensions.
pub fn ball_coefficient(r: f64, k_norm: f64) -> f64 {
    if k_norm == 0.0 {
        return 4.0 / 3.0 * PI * r * r * r;
    }
    let q = 2.0 * PI * k_norm;
    let t = q * r;
    if t < 0.5 {
        // (sin t - t cos t) / t³ = Σ_{n≥1} (-1)^{n+1} 2n t^{2n-2} / (2n+1)!,
        // avoiding the cancellation of the closed form
        let t2 = t * t;
        let mut term: f64 = 1.0 / 3.0;
        let mut sum = term;
        let mut n = 1.0;
        while term.abs() > 1e-18 {
            term *= -t2 * (n + 1.0) / (n * (2.0 * n + 2.0) * (2.0 * n + 3.0));
            sum += term;
            n += 1.0;
        }
        return 4.0 * PI * r * r * r * sum;
    }
    4.0 * PI * (t.sin() - t * t.cos()) / (q * q * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    // J₁(x) = (1/π) ∫_0^π cos(θ - x sin θ) dθ; the integrand extends to a
    // smooth 2π-periodic function so the trapezoidal rule converges spectrally
    fn j1_integral(x: f64) -> f64 {
        let n = 4096 + 8 * x as usize;
        let h = 2.0 * PI / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let t = i as f64 * h;
            s += (t - x * t.sin()).cos();
        }
        s * h / (2.0 * PI)
    }

    #[test]
    fn matches_integral_representation() {
        for &x in &[1e-5, 0.1, 0.5, 1.0, 2.5, 3.8317, 7.0, 12.3, 24.9, 25.1, 40.0, 100.0, 517.3] {
            let got = bessel_j1(x);
            let want = j1_integral(x);
            assert!((got - want).abs() < 2e-15 * (1.0 + x.sqrt()), "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn known_values() {
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        // first positive zero
        assert!(bessel_j1(3.831_705_970_207_512).abs() < 1e-15);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert!((bessel_j1(-2.0) + bessel_j1(2.0)).abs() < 1e-16);
    }

    #[test]
    fn ball_branches_agree() {
        let r: f64 = 0.25;
        let vol = 4.0 / 3.0 * PI * r.powi(3);
        assert!((ball_coefficient(r, 1e-9) - vol).abs() < 1e-16);
        // both branches agree across the switch at t = 1/2
        let k = |t: f64| t / (2.0 * PI * r);
        let below = ball_coefficient(r, k(0.5 * (1.0 - 1e-15)));
        let above = ball_coefficient(r, k(0.5 * (1.0 + 1e-15)));
        assert!((below - above).abs() < 1e-14 * vol, "{below} {above}");
        // against a radial quadrature: ∫_0^r 4π s² sin(qs)/(qs) ds
        for t in [0.01, 0.3, 0.7, 3.0] {
            let q = t / r;
            let m = 2000;
            let h = r / m as f64;
            let f = |s: f64| if s == 0.0 { 0.0 } else { 4.0 * PI * s * s * (q * s).sin() / (q * s) };
            // composite Simpson
            let mut acc = f(0.0) + f(r);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            let want = acc * h / 3.0;
            assert!((ball_coefficient(r, k(t)) - want).abs() < 1e-13, "t={t}");
        }
    }
}
