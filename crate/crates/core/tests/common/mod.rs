//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library's transforms, quadrature, mesh or
//! basis code: Fourier operators are dense sums over the DFT definition,
//! shape coefficients come from Gauss-Legendre quadrature, and finite
//! element systems are assembled from a Vandermonde nodal basis with a
//! Grundmann-Möller simplex rule.

#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use homog::fem::{assemble, build_mesh, FemSpace};
use homog::ffth::{FfthOperator, Variant};
use homog::grid::GridShape;
use homog::linalg::LinearOperator;
use homog::materials::{Geometry, MaterialSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const S3: f64 = 1.732_050_807_568_877_2;

/// Base anisotropy written out from its closed form.
pub fn base_matrix(d: usize) -> Vec<f64> {
    match d {
        2 => vec![7.0 / 4.0, S3 / 4.0, S3 / 4.0, 5.0 / 4.0],
        3 => vec![
            31.0 / 16.0,
            5.0 * S3 / 16.0,
            3.0 / 8.0,
            5.0 * S3 / 16.0,
            21.0 / 16.0,
            S3 / 8.0,
            3.0 / 8.0,
            S3 / 8.0,
            11.0 / 4.0,
        ],
        _ => unreachable!(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Square,
    Pyramid,
}

fn profile(shape: Shape, t: f64) -> f64 {
    match shape {
        Shape::Square => {
            if t.abs() <= 0.3 {
                1.0
            } else {
                0.0
            }
        }
        Shape::Pyramid => 1.0 - 2.0 * t.abs(),
    }
}

pub fn shape_value(shape: Shape, x: &[f64]) -> f64 {
    x.iter().map(|&t| profile(shape, t)).product()
}

pub fn material(d: usize, rho: f64, shape: Shape, x: &[f64]) -> Vec<f64> {
    let mut a = base_matrix(d);
    let f = shape_value(shape, x);
    for i in 0..d {
        a[i * d + i] += rho * f;
    }
    a
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[a, b]`,
/// by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w));
    }
    out
}

/// `∫_{-1/2}^{1/2} g(t) e^{-2πikt} dt` of the one-dimensional profile by
/// piecewise Gauss-Legendre quadrature split at its kinks and jumps.
pub fn profile_coefficient(shape: Shape, k: i64) -> (f64, f64) {
    let breaks = [-0.5, -0.3, 0.0, 0.3, 0.5];
    let mut re = 0.0;
    let mut im = 0.0;
    for w in breaks.windows(2) {
        for (t, wt) in gauss_legendre(30, w[0], w[1]) {
            let g = profile(shape, t);
            let ph = -2.0 * PI * k as f64 * t;
            re += wt * g * ph.cos();
            im += wt * g * ph.sin();
        }
    }
    (re, im)
}

fn signed(j: usize, n: usize) -> i64 {
    if j <= (n - 1) / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Signed multi-indices of a row-major grid (last axis fastest).
pub fn grid_indices(dims: &[usize]) -> Vec<Vec<i64>> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut flat| {
            let mut k = vec![0; dims.len()];
            for a in (0..dims.len()).rev() {
                k[a] = signed(flat % dims[a], dims[a]);
                flat /= dims[a];
            }
            k
        })
        .collect()
}

/// Material on the double grid of `n`: the Fourier series of `A`
/// truncated to the double grid's index set, evaluated at its points.
pub fn exact_material_double(d: usize, rho: f64, shape: Shape, n: usize) -> Vec<Vec<f64>> {
    let m = 2 * n - 1;
    let dims = vec![m; d];
    let idx = grid_indices(&dims);
    let half = (m as i64 - 1) / 2;
    let coef: HashMap<i64, (f64, f64)> = (-half..=half).map(|k| (k, profile_coefficient(shape, k))).collect();
    let base = base_matrix(d);
    idx.iter()
        .map(|x| {
            let mut f = 0.0;
            for k in &idx {
                // product of complex per-axis coefficients
                let (mut re, mut im) = (1.0, 0.0);
                for &ka in k {
                    let (cr, ci) = coef[&ka];
                    let (nr, ni) = (re * cr - im * ci, re * ci + im * cr);
                    re = nr;
                    im = ni;
                }
                let ph: f64 = 2.0 * PI * k.iter().zip(x).map(|(&ka, &xa)| (ka * xa) as f64).sum::<f64>() / m as f64;
                f += re * ph.cos() - im * ph.sin();
            }
            let mut a = base.clone();
            for i in 0..d {
                a[i * d + i] += rho * f;
            }
            a
        })
        .collect()
}

/// Material sampled at the points of grid `n`.
pub fn sampled_material(d: usize, rho: f64, shape: Shape, n: usize) -> Vec<Vec<f64>> {
    grid_indices(&vec![n; d])
        .iter()
        .map(|k| {
            let x: Vec<f64> = k.iter().map(|&ka| ka as f64 / n as f64).collect();
            material(d, rho, shape, &x)
        })
        .collect()
}

/// `G (A v)` by dense DFT sums on the grid `dims`, projecting onto the
/// frequencies with `|k_α| < n / 2`. `v` is component-major.
pub fn dense_fourier_apply(dims: &[usize], n: usize, a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let d = dims.len();
    let idx = grid_indices(dims);
    let g = idx.len();
    let mut y = vec![0.0; d * g];
    for p in 0..g {
        for r in 0..d {
            y[r * g + p] = (0..d).map(|c| a[p][r * d + c] * v[c * g + p]).sum();
        }
    }
    let phase = |k: &[i64], x: &[i64]| {
        2.0 * PI * k.iter().zip(x).zip(dims).map(|((&ka, &xa), &m)| (ka * xa) as f64 / m as f64).sum::<f64>()
    };
    // forward DFT of each component, normalised
    let mut hat = vec![(0.0, 0.0); d * g];
    for (ki, k) in idx.iter().enumerate() {
        for c in 0..d {
            let (mut re, mut im) = (0.0, 0.0);
            for (xi, x) in idx.iter().enumerate() {
                let ph = phase(k, x);
                re += y[c * g + xi] * ph.cos();
                im -= y[c * g + xi] * ph.sin();
            }
            hat[c * g + ki] = (re / g as f64, im / g as f64);
        }
    }
    let mut proj = vec![(0.0, 0.0); d * g];
    for (ki, k) in idx.iter().enumerate() {
        let kk: i64 = k.iter().map(|x| x * x).sum();
        if kk == 0 || k.iter().any(|&ka| 2 * ka.abs() >= n as i64) {
            continue;
        }
        for r in 0..d {
            let (mut re, mut im) = (0.0, 0.0);
            for c in 0..d {
                let w = (k[r] * k[c]) as f64 / kk as f64;
                re += w * hat[c * g + ki].0;
                im += w * hat[c * g + ki].1;
            }
            proj[r * g + ki] = (re, im);
        }
    }
    let mut out = vec![0.0; d * g];
    for (xi, x) in idx.iter().enumerate() {
        for c in 0..d {
            let mut s = 0.0;
            for (ki, k) in idx.iter().enumerate() {
                let ph = phase(k, x);
                let (re, im) = proj[c * g + ki];
                s += re * ph.cos() - im * ph.sin();
            }
            out[c * g + xi] = s;
        }
    }
    out
}

/// Grundmann-Möller rule of index `s` (exact to degree `2s + 1`) on the
/// `n`-simplex, as barycentric points with weights normalised to sum 1.
pub fn grundmann_moller(n: usize, s: usize) -> Vec<(Vec<f64>, f64)> {
    let deg = 2 * s + 1;
    let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
    let mut out = Vec::new();
    for i in 0..=s {
        let denom = (deg + n - 2 * i) as f64;
        let w = (-1f64).powi(i as i32) * 2f64.powi(-(2 * s as i32)) * denom.powi(deg as i32) / (fact(i) * fact(deg + n - i));
        for beta in compositions(s - i, n + 1) {
            let point: Vec<f64> = beta.iter().map(|&b| (2 * b + 1) as f64 / denom).collect();
            out.push((point, w));
        }
    }
    let total: f64 = out.iter().map(|p| p.1).sum();
    out.iter_mut().for_each(|p| p.1 /= total);
    out
}

/// All `parts`-tuples of nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out
}

/// Monomial exponents of total degree `<= p` in `d` variables.
fn monomials(d: usize, p: usize) -> Vec<Vec<usize>> {
    (0..=p).flat_map(|deg| compositions(deg, d)).collect()
}

/// Dense periodic FEM system for `E = e_1` with DOFs keyed by integer
/// coordinates in units of `1 / (pN)`.
pub struct DenseFem {
    pub keys: Vec<Vec<usize>>,
    pub matrix: DMatrix<f64>,
    pub rhs: Vec<f64>,
    pub a_ee: f64,
}

pub fn dense_fem(d: usize, n: usize, p: usize, mat: &dyn Fn(&[f64]) -> Vec<f64>) -> DenseFem {
    let m = p * n;
    let mut key_id: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut keys = Vec::new();
    let mut id_of = |key: Vec<usize>| -> usize {
        let key: Vec<usize> = key.iter().map(|&k| k % m).collect();
        *key_id.entry(key.clone()).or_insert_with(|| {
            keys.push(key);
            keys.len() - 1
        })
    };
    let monos = monomials(d, p);
    let rule = grundmann_moller(d, 3);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs_entries: Vec<(usize, f64)> = Vec::new();
    let mut a_ee = 0.0;
    let cubes = n.pow(d as u32);
    for c in 0..cubes {
        let mut corner = vec![0usize; d];
        let mut rem = c;
        for a in (0..d).rev() {
            corner[a] = rem % n;
            rem /= n;
        }
        for perm in permutations(d) {
            // lattice vertices, unwrapped
            let mut verts = vec![corner.clone()];
            for &axis in &perm {
                let mut v = verts.last().unwrap().clone();
                v[axis] += 1;
                verts.push(v);
            }
            let xs: Vec<Vec<f64>> = verts.iter().map(|v| v.iter().map(|&i| -0.5 + i as f64 / n as f64).collect()).collect();
            // nodes: vertices, then edge midpoints for p = 2
            let mut node_keys: Vec<Vec<usize>> = verts.iter().map(|v| v.iter().map(|&i| p * i).collect()).collect();
            let mut node_x: Vec<Vec<f64>> = xs.clone();
            if p == 2 {
                for i in 0..=d {
                    for j in i + 1..=d {
                        node_keys.push(verts[i].iter().zip(&verts[j]).map(|(a, b)| a + b).collect());
                        node_x.push(xs[i].iter().zip(&xs[j]).map(|(a, b)| 0.5 * (a + b)).collect());
                    }
                }
            }
            let nloc = node_x.len();
            let eval = |x: &[f64]| -> Vec<f64> {
                monos.iter().map(|e| e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product()).collect()
            };
            let grad = |x: &[f64]| -> Vec<Vec<f64>> {
                monos
                    .iter()
                    .map(|e| {
                        (0..d)
                            .map(|a| {
                                if e[a] == 0 {
                                    return 0.0;
                                }
                                let mut v = e[a] as f64;
                                for (b, (&k, &xb)) in e.iter().zip(x).enumerate() {
                                    let pow = if a == b { k - 1 } else { k };
                                    v *= xb.powi(pow as i32);
                                }
                                v
                            })
                            .collect()
                    })
                    .collect()
            };
            let vand = DMatrix::from_fn(nloc, nloc, |i, j| eval(&node_x[i])[j]);
            let coef = vand.try_inverse().expect("unisolvent nodes");
            let ids: Vec<usize> = node_keys.into_iter().map(&mut id_of).collect();
            let mut jac = DMatrix::zeros(d, d);
            for a in 0..d {
                for b in 0..d {
                    jac[(a, b)] = xs[b + 1][a] - xs[0][a];
                }
            }
            let vol = jac.determinant().abs() / (1..=d).map(|v| v as f64).product::<f64>();
            let mut ke = DMatrix::<f64>::zeros(nloc, nloc);
            let mut be = vec![0.0; nloc];
            for (bary, w) in &rule {
                let x: Vec<f64> = (0..d).map(|a| (0..=d).map(|v| bary[v] * xs[v][a]).sum()).collect();
                let amat = mat(&x);
                let gm = grad(&x);
                // basis gradient i: sum_j coef[j][i] * grad monomial j
                let gb: Vec<Vec<f64>> = (0..nloc)
                    .map(|i| (0..d).map(|a| (0..nloc).map(|j| coef[(j, i)] * gm[j][a]).sum()).collect())
                    .collect();
                for i in 0..nloc {
                    let agi: Vec<f64> = (0..d).map(|r| (0..d).map(|c| amat[r * d + c] * gb[i][c]).sum()).collect();
                    be[i] -= w * vol * agi[0];
                    for j in 0..nloc {
                        ke[(i, j)] += w * vol * (0..d).map(|r| agi[r] * gb[j][r]).sum::<f64>();
                    }
                }
                a_ee += w * vol * amat[0];
            }
            for i in 0..nloc {
                rhs_entries.push((ids[i], be[i]));
                for j in 0..nloc {
                    triplets.push((ids[i], ids[j], ke[(i, j)]));
                }
            }
        }
    }
    let size = keys.len();
    let mut matrix = DMatrix::zeros(size, size);
    for (i, j, v) in triplets {
        matrix[(i, j)] += v;
    }
    let mut rhs = vec![0.0; size];
    for (i, v) in rhs_entries {
        rhs[i] += v;
    }
    DenseFem { keys, matrix, rhs, a_ee }
}

/// Integer key of a library DOF from its coordinates.
pub fn key_of_point(x: &[f64], m: usize) -> Vec<usize> {
    x.iter().map(|&t| (((t + 0.5) * m as f64).round() as usize) % m).collect()
}

/// Eigenvalues of a dense symmetric matrix.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Solves the periodic system with the DOF `fixed` held at zero.
pub fn dense_solve_fixed(matrix: &DMatrix<f64>, rhs: &[f64], fixed: usize) -> Vec<f64> {
    let n = matrix.nrows();
    let keep: Vec<usize> = (0..n).filter(|&i| i != fixed).collect();
    let a = DMatrix::from_fn(n - 1, n - 1, |i, j| matrix[(keep[i], keep[j])]);
    let b = DVector::from_iterator(n - 1, keep.iter().map(|&i| rhs[i]));
    let x = a.cholesky().expect("reduced system is SPD").solve(&b);
    let mut u = vec![0.0; n];
    for (i, &k) in keep.iter().enumerate() {
        u[k] = x[i];
    }
    u
}

pub fn harmonic_mean(values: &[f64]) -> f64 {
    values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Plain conjugate gradients recording every iterate.
pub fn cg_iterates(apply: &dyn Fn(&[f64]) -> Vec<f64>, b: &[f64], iters: usize) -> Vec<Vec<f64>> {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut out = vec![x.clone()];
    for _ in 0..iters {
        if rr.sqrt() <= 1e-15 * dot(b, b).sqrt() {
            break;
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        out.push(x.clone());
        let rr_new = dot(&r, &r);
        for i in 0..n {
            p[i] = r[i] + rr_new / rr * p[i];
        }
        rr = rr_new;
    }
    out
}

/// `y(x)` at `x` by log-log interpolation of the series `(x_i, y_i)`,
/// `None` outside its range.
pub fn loglog_interp(series: &[(f64, f64)], x: f64) -> Option<f64> {
    let mut s = series.to_vec();
    s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in s.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x >= x0 && x <= x1 && y0 > 0.0 && y1 > 0.0 {
            let t = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
            return Some((y0.ln() + t * (y1.ln() - y0.ln())).exp());
        }
    }
    None
}

pub fn geometry(shape: Shape) -> Geometry {
    match shape {
        Shape::Square => Geometry::Square,
        Shape::Pyramid => Geometry::Pyramid,
    }
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Largest deviation of the library operator from the dense oracle on
/// random fields, relative to the largest output entry.
pub fn fourier_oracle_deviation(variant: Variant, d: usize, rho: f64, shape: Shape, n: usize) -> f64 {
    let spec = MaterialSpec::new(d, rho, geometry(shape)).unwrap();
    let op = FfthOperator::new(&spec, &GridShape::cube(d, n).unwrap(), variant).unwrap();
    let (dims, a) = match variant {
        Variant::Ga => (vec![2 * n - 1; d], exact_material_double(d, rho, shape, n)),
        Variant::GaNi => (vec![n; d], sampled_material(d, rho, shape, n)),
    };
    let mut worst: f64 = 0.0;
    for seed in 0..3 {
        let v = random_vec(op.dim(), seed);
        let mut lib = vec![0.0; v.len()];
        op.apply(&v, &mut lib);
        let dense = dense_fourier_apply(&dims, n, &a, &v);
        worst = worst.max(max_abs_diff(&lib, &dense) / max_abs(&dense));
    }
    worst
}

/// Largest entry deviation of the library's full FEM system from the
/// dense oracle: `(matrix, rhs, a_ee)`, relative to the largest entry.
pub fn fem_oracle_deviation(d: usize, n: usize, p: usize, rho: f64, shape: Shape) -> (f64, f64, f64) {
    let spec = MaterialSpec::new(d, rho, geometry(shape)).unwrap();
    let space = FemSpace::new(build_mesh(d, n).unwrap(), p).unwrap();
    let sys = assemble(&space, &spec).unwrap();
    let oracle = dense_fem(d, n, p, &|x: &[f64]| material(d, rho, shape, x));
    let m = p * n;
    let ids: HashMap<Vec<usize>, usize> = oracle.keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    assert_eq!(ids.len(), space.num_dofs_full());
    let map: Vec<usize> = (0..space.num_dofs_full()).map(|i| ids[&key_of_point(&space.dof_point(i), m)]).collect();
    let dense = sys.matrix.to_dense();
    let scale = oracle.matrix.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut dm: f64 = 0.0;
    for i in 0..map.len() {
        for j in 0..map.len() {
            dm = dm.max((dense[i][j] - oracle.matrix[(map[i], map[j])]).abs());
        }
    }
    let rhs_scale = max_abs(&oracle.rhs).max(1.0);
    let dr = (0..map.len()).map(|i| (sys.rhs[i] - oracle.rhs[map[i]]).abs()).fold(0.0, f64::max);
    (dm / scale, dr / rhs_scale, (sys.a_ee - oracle.a_ee).abs() / oracle.a_ee)
}

/// Two-phase-plus laminate varying along the first axis only, with its
/// harmonic mean.
pub fn laminate(res: usize) -> (homog::materials::VoxelImage, f64) {
    use std::collections::BTreeMap;
    let layer_phase: Vec<u8> = (0..res).map(|i| [0u8, 1, 2, 1, 0, 2, 2][i % 7]).collect();
    let cond: BTreeMap<u8, f64> = [(0u8, 1.0), (1, 4.0), (2, 10.0)].into_iter().collect();
    // x-fastest payload: the first axis index varies fastest
    let phases: Vec<u8> = (0..res * res).map(|i| layer_phase[i % res]).collect();
    let values: Vec<f64> = layer_phase.iter().map(|p| cond[p]).collect();
    let img = homog::materials::VoxelImage::new(&[res, res], phases, cond).unwrap();
    (img, harmonic_mean(&values))
}
