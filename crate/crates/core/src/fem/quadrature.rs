//! Gauss rules on the unit interval and collapsed (Duffy) rules on simplices.

/// `n`-point Gauss-Legendre rule on `[0, 1]`; weights sum to one.
/// Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "a quadrature rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature on a `d`-simplex in barycentric coordinates; weights sum to
/// one, i.e. integrals come out divided by the simplex volume.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Rule exact for polynomials of total degree `degree` on a `d`-simplex,
/// obtained by collapsing a tensor Gauss rule onto the simplex.
pub fn simplex_rule(d: usize, degree: usize) -> SimplexRule {
    // the collapse adds up to d - 1 to the degree in the first variable
    let m = (degree + d).div_ceil(2) + 1;
    let (x, w) = gauss_legendre(m);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    match d {
        2 => {
            for i in 0..m {
                for j in 0..m {
                    let (u, v) = (x[i], x[j]);
                    let (p1, p2) = (u, (1.0 - u) * v);
                    points.push(vec![1.0 - p1 - p2, p1, p2]);
                    weights.push(fact * w[i] * w[j] * (1.0 - u));
                }
            }
        }
        3 => {
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let (u, v, t) = (x[i], x[j], x[k]);
                        let p1 = u;
                        let p2 = (1.0 - u) * v;
                        let p3 = (1.0 - u) * (1.0 - v) * t;
                        points.push(vec![1.0 - p1 - p2 - p3, p1, p2, p3]);
                        weights.push(fact * w[i] * w[j] * w[k] * (1.0 - u).powi(2) * (1.0 - v));
                    }
                }
            }
        }
        _ => panic!("simplex rules are provided for d = 2, 3"),
    }
    SimplexRule { points, weights }
}
