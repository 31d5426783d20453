//! Coefficient fields `A(x) = M_(d) + ρ I f(x)` on the centred periodic cell
//! `Y = [-1/2, 1/2)^d`, and voxel images with `A(x) = a(x) I`.

mod special;
pub mod voxel;

use std::collections::HashMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{HomogError, Result};
use crate::grid::{DftPlan, FreqIndex, GridShape, TensorGridField};

pub use special::{ball_coefficient, bessel_j1, disk_coefficient};
pub use voxel::{synthetic_voxels, VoxelHeader, VoxelImage};

/// Half-width of the square inclusion.
pub const SQUARE_HALF_WIDTH: f64 = 0.3;

/// Geometric tolerance when classifying vertices against interfaces.
const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// `f = 1` where `|x_i| < 0.3` for every axis, `0` elsewhere.
    Square,
    /// `f = ∏ (1 - 2|x_i|)`.
    Pyramid,
    /// Indicator of the centred disk (d = 2) or ball (d = 3).
    Circle { radius: f64 },
    /// Piecewise-constant isotropic conductivity.
    Voxel(VoxelImage),
}

impl Geometry {
    pub fn name(&self) -> &'static str {
        match self {
            Geometry::Square => "square",
            Geometry::Pyramid => "pyramid",
            Geometry::Circle { .. } => "circle",
            Geometry::Voxel(_) => "voxel",
        }
    }
}

/// `M_(2)`, eigenvalues {1, 2}.
pub fn anisotropy_2d() -> [f64; 4] {
    let s3 = 3f64.sqrt();
    [7.0 / 4.0, s3 / 4.0, s3 / 4.0, 5.0 / 4.0]
}

/// `M_(3)`, eigenvalues {1, 2, 3}.
pub fn anisotropy_3d() -> [f64; 9] {
    let s3 = 3f64.sqrt();
    [
        31.0 / 16.0,
        5.0 * s3 / 16.0,
        3.0 / 8.0,
        5.0 * s3 / 16.0,
        21.0 / 16.0,
        s3 / 8.0,
        3.0 / 8.0,
        s3 / 8.0,
        11.0 / 4.0,
    ]
}

#[derive(Clone, PartialEq)]
pub struct MaterialSpec {
    d: usize,
    base: Vec<f64>,
    contrast: f64,
    geometry: Geometry,
}

impl fmt::Debug for MaterialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaterialSpec")
            .field("d", &self.d)
            .field("contrast", &self.contrast)
            .field("geometry", &self.geometry.name())
            .finish()
    }
}

impl MaterialSpec {
    /// The built-in anisotropic base matrix plus `ρ I f(x)`.
    pub fn new(d: usize, contrast: f64, geometry: Geometry) -> Result<Self> {
        let base = match d {
            2 => anisotropy_2d().to_vec(),
            3 => anisotropy_3d().to_vec(),
            _ => return Err(HomogError::InvalidArgument(format!("dimension must be 2 or 3, got {d}"))),
        };
        let eig = symmetric_eigenvalues(&base, d);
        let expected: Vec<f64> = (1..=d).map(|i| i as f64).collect();
        assert!(
            eig.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-12),
            "built-in anisotropy has eigenvalues {eig:?}"
        );
        Self::with_base(d, base, contrast, geometry)
    }

    /// Any symmetric positive definite base matrix (row-major `d x d`).
    pub fn with_base(d: usize, base: Vec<f64>, contrast: f64, geometry: Geometry) -> Result<Self> {
        if !(2..=3).contains(&d) || base.len() != d * d {
            return Err(HomogError::InvalidArgument(format!(
                "base matrix must be {d}x{d} with d in {{2, 3}}"
            )));
        }
        if !(contrast >= 0.0 && contrast.is_finite()) {
            return Err(HomogError::InvalidArgument(format!("contrast must be >= 0, got {contrast}")));
        }
        for a in 0..d {
            for b in 0..d {
                if (base[a * d + b] - base[b * d + a]).abs() > 1e-14 {
                    return Err(HomogError::InvalidArgument("base matrix must be symmetric".into()));
                }
            }
        }
        if symmetric_eigenvalues(&base, d)[0] <= 0.0 {
            return Err(HomogError::InvalidArgument("base matrix must be positive definite".into()));
        }
        match &geometry {
            Geometry::Circle { radius } if !(*radius > 0.0 && *radius < 0.5) => {
                return Err(HomogError::InvalidArgument(format!(
                    "circle radius must lie in (0, 1/2), got {radius}"
                )))
            }
            Geometry::Voxel(img) if img.dim() != d => {
                return Err(HomogError::InvalidArgument(format!(
                    "voxel image is {}-d, material is {d}-d",
                    img.dim()
                )))
            }
            _ => {}
        }
        Ok(MaterialSpec {
            d,
            base,
            contrast,
            geometry,
        })
    }

    /// Isotropic `A(x) = a(x) I` from a voxel image.
    pub fn voxel(image: VoxelImage) -> Result<Self> {
        let d = image.dim();
        let mut identity = vec![0.0; d * d];
        for i in 0..d {
            identity[i * d + i] = 1.0;
        }
        // base and contrast are not used for voxel materials
        Self::with_base(d, identity, 1.0, Geometry::Voxel(image))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn contrast(&self) -> f64 {
        self.contrast
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// The constant part of `A`; zero for voxel materials.
    pub fn base(&self) -> Vec<f64> {
        match self.geometry {
            Geometry::Voxel(_) => vec![0.0; self.d * self.d],
            _ => self.base.clone(),
        }
    }

    /// Multiplier of `I f(x)`; one for voxel materials where `f = a`.
    pub fn scale(&self) -> f64 {
        match self.geometry {
            Geometry::Voxel(_) => 1.0,
            _ => self.contrast,
        }
    }

    /// Pointwise value of the scalar shape function `f`; interface points
    /// take the inclusion value.
    pub fn shape_value(&self, x: &[f64]) -> f64 {
        match &self.geometry {
            Geometry::Square => {
                if x.iter().all(|xi| wrap(*xi).abs() <= SQUARE_HALF_WIDTH) {
                    1.0
                } else {
                    0.0
                }
            }
            Geometry::Pyramid => x.iter().map(|xi| 1.0 - 2.0 * wrap(*xi).abs()).product(),
            Geometry::Circle { radius } => {
                let r2: f64 = x.iter().map(|xi| wrap(*xi).powi(2)).sum();
                if r2 <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Geometry::Voxel(img) => img.value_at(x),
        }
    }

    /// `A(x)` as a row-major `d x d` matrix.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.matrix_with_shape(self.shape_value(x))
    }

    pub(crate) fn matrix_with_shape(&self, f: f64) -> Vec<f64> {
        let mut m = self.base();
        let s = self.scale() * f;
        for i in 0..self.d {
            m[i * self.d + i] += s;
        }
        m
    }

    /// Ellipticity and continuity constants `(c_A, C_A)`.
    pub fn ellipticity_bounds(&self) -> (f64, f64) {
        match &self.geometry {
            Geometry::Voxel(img) => img.value_range(),
            _ => {
                let eig = symmetric_eigenvalues(&self.base, self.d);
                (eig[0], eig[self.d - 1] + self.contrast)
            }
        }
    }

    /// `∫ A_11 (x) dx`, the homogenised value of the zero fluctuation.
    pub fn mean_a11(&self) -> f64 {
        self.base()[0] + self.scale() * shape_fourier_coeff(self, &FreqIndex::zero(self.d)).re
    }
}

/// Maps a coordinate to its periodic image in `[-1/2, 1/2)`.
fn wrap(x: f64) -> f64 {
    if (-0.5..0.5).contains(&x) {
        x
    } else {
        x - (x + 0.5).floor()
    }
}

/// Exact Fourier coefficient `∫_Y f(x) e^{-2πi k·x} dx` of the shape function.
pub fn shape_fourier_coeff(spec: &MaterialSpec, k: &FreqIndex) -> Complex64 {
    match &spec.geometry {
        Geometry::Square => Complex64::new(k.0.iter().map(|&ka| square_factor(ka)).product(), 0.0),
        Geometry::Pyramid => Complex64::new(k.0.iter().map(|&ka| pyramid_factor(ka)).product(), 0.0),
        Geometry::Circle { radius } => Complex64::new(radial_coefficient(spec.d, *radius, k.norm_sq()), 0.0),
        Geometry::Voxel(img) => img.fourier_coeff(k),
    }
}

fn square_factor(k: i64) -> f64 {
    if k == 0 {
        2.0 * SQUARE_HALF_WIDTH
    } else {
        let kf = k as f64;
        (2.0 * std::f64::consts::PI * kf * SQUARE_HALF_WIDTH).sin() / (std::f64::consts::PI * kf)
    }
}

fn pyramid_factor(k: i64) -> f64 {
    if k == 0 {
        0.5
    } else if k % 2 == 0 {
        0.0
    } else {
        let kf = k as f64;
        2.0 / (std::f64::consts::PI * std::f64::consts::PI * kf * kf)
    }
}

fn radial_coefficient(d: usize, radius: f64, k_norm_sq: i64) -> f64 {
    let kn = (k_norm_sq as f64).sqrt();
    if d == 2 {
        disk_coefficient(radius, kn)
    } else {
        ball_coefficient(radius, kn)
    }
}

/// Shape-function coefficients on the whole index set of `shape`.
fn shape_coefficients(spec: &MaterialSpec, shape: &GridShape) -> Vec<Complex64> {
    let n = shape.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    match &spec.geometry {
        Geometry::Square | Geometry::Pyramid => {
            let factor = |k: i64| match spec.geometry {
                Geometry::Square => square_factor(k),
                _ => pyramid_factor(k),
            };
            let axes: Vec<Vec<f64>> = (0..shape.dim())
                .map(|a| (0..shape.dims()[a]).map(|j| factor(shape.signed(a, j))).collect())
                .collect();
            let mut slots = vec![0usize; shape.dim()];
            for v in out.iter_mut() {
                *v = Complex64::new(slots.iter().enumerate().map(|(a, &j)| axes[a][j]).product(), 0.0);
                for a in (0..shape.dim()).rev() {
                    slots[a] += 1;
                    if slots[a] < shape.dims()[a] {
                        break;
                    }
                    slots[a] = 0;
                }
            }
        }
        Geometry::Circle { radius } => {
            let mut cache: HashMap<i64, f64> = HashMap::new();
            shape.for_each_index(|flat, k| {
                let k2: i64 = k.iter().map(|x| x * x).sum();
                let v = *cache.entry(k2).or_insert_with(|| radial_coefficient(spec.d, *radius, k2));
                out[flat] = Complex64::new(v, 0.0);
            });
        }
        Geometry::Voxel(img) => img.fourier_coeffs_on(shape, &mut out),
    }
    out
}

/// `A(x^k)` at every grid point: the material of numerical integration.
pub fn sample_on_grid(spec: &MaterialSpec, shape: &GridShape) -> Result<TensorGridField> {
    if shape.dim() != spec.d {
        return Err(HomogError::InvalidArgument(format!(
            "{}-d grid for a {}-d material",
            shape.dim(),
            spec.d
        )));
    }
    if let Geometry::Voxel(img) = &spec.geometry {
        if img.resolution() != shape.dims() {
            return Err(HomogError::InvalidArgument(format!(
                "voxel resolution {:?} does not match grid {:?}",
                img.resolution(),
                shape.dims()
            )));
        }
        if !shape.is_odd() {
            return Err(HomogError::InvalidArgument(
                "voxel sampling needs an odd resolution so voxel centres are grid points".into(),
            ));
        }
    }
    Ok(TensorGridField::from_fn(shape, |_, x| spec.evaluate(x)))
}

/// Block diagonal of the exactly integrated material on the double grid
/// `2N - 1`: the Fourier series of `A` truncated to that index set,
/// evaluated at the double-grid points.
pub fn exact_double_grid_field(spec: &MaterialSpec, n: &GridShape) -> Result<TensorGridField> {
    n.require_odd()?;
    exact_grid_field(spec, &n.doubled())
}

/// Truncated Fourier series of `A` evaluated on `shape` (any odd grid).
pub fn exact_grid_field(spec: &MaterialSpec, shape: &GridShape) -> Result<TensorGridField> {
    if shape.dim() != spec.d {
        return Err(HomogError::InvalidArgument(format!(
            "{}-d grid for a {}-d material",
            shape.dim(),
            spec.d
        )));
    }
    shape.require_odd()?;
    let d = spec.d;
    let mut buf = shape_coefficients(spec, shape);
    DftPlan::new(shape).inverse_scalar(&mut buf);
    let f_values: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let base = spec.base();
    let scale = spec.scale();
    let npts = shape.len();
    let mut values = vec![0.0; d * d * npts];
    for a in 0..d {
        for b in 0..d {
            let block = &mut values[(a * d + b) * npts..(a * d + b + 1) * npts];
            if a == b {
                for (v, f) in block.iter_mut().zip(&f_values) {
                    *v = base[a * d + b] + scale * f;
                }
            } else {
                block.iter_mut().for_each(|v| *v = base[a * d + b]);
            }
        }
    }
    TensorGridField::from_values(shape, values)
}

/// How the coefficient varies over one finite element.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementMaterial {
    /// One constant matrix on the whole element.
    Constant(Vec<f64>),
    /// `base + ρ I ∏(1 - 2 s_i x_i)`: the pyramid restricted to one orthant.
    Multilinear { base: Vec<f64>, contrast: f64, signs: Vec<f64> },
}

impl ElementMaterial {
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ElementMaterial::Constant(m) => m.clone(),
            ElementMaterial::Multilinear { base, contrast, signs } => {
                let d = signs.len();
                let f: f64 = x.iter().zip(signs).map(|(xi, s)| 1.0 - 2.0 * s * xi).product();
                let mut m = base.clone();
                for i in 0..d {
                    m[i * d + i] += contrast * f;
                }
                m
            }
        }
    }

    /// Polynomial degree in `x`.
    pub fn degree(&self) -> usize {
        match self {
            ElementMaterial::Constant(_) => 0,
            ElementMaterial::Multilinear { signs, .. } => signs.len(),
        }
    }
}

/// Material description on a simplex given by its vertex coordinates
/// (unwrapped, inside the cell).
pub fn element_material(spec: &MaterialSpec, vertices: &[Vec<f64>]) -> Result<ElementMaterial> {
    let d = spec.d;
    let centroid: Vec<f64> = (0..d)
        .map(|a| vertices.iter().map(|v| v[a]).sum::<f64>() / vertices.len() as f64)
        .collect();
    let crosses = |axis: usize, plane: f64| {
        let lo = vertices.iter().map(|v| v[axis]).fold(f64::INFINITY, f64::min);
        let hi = vertices.iter().map(|v| v[axis]).fold(f64::NEG_INFINITY, f64::max);
        lo < plane - GEOM_TOL && hi > plane + GEOM_TOL
    };
    let axis_name = |a: usize| format!("x{}", a + 1);
    match &spec.geometry {
        Geometry::Square => {
            for a in 0..d {
                for plane in [-SQUARE_HALF_WIDTH, SQUARE_HALF_WIDTH] {
                    if crosses(a, plane) {
                        return Err(HomogError::NonConformingMesh {
                            axis_name: axis_name(a),
                            plane,
                        });
                    }
                }
            }
            Ok(ElementMaterial::Constant(spec.evaluate(&centroid)))
        }
        Geometry::Pyramid => {
            for a in 0..d {
                if crosses(a, 0.0) {
                    return Err(HomogError::NonConformingMesh {
                        axis_name: axis_name(a),
                        plane: 0.0,
                    });
                }
            }
            let signs = centroid.iter().map(|c| if *c < 0.0 { -1.0 } else { 1.0 }).collect();
            Ok(ElementMaterial::Multilinear {
                base: spec.base.clone(),
                contrast: spec.contrast,
                signs,
            })
        }
        Geometry::Circle { radius } => {
            let inside = point_simplex_distance(&vec![0.0; d], vertices) <= *radius + GEOM_TOL;
            Ok(ElementMaterial::Constant(spec.matrix_with_shape(if inside { 1.0 } else { 0.0 })))
        }
        Geometry::Voxel(img) => {
            let cell = img.cell_of(&centroid);
            let res = img.resolution();
            for a in 0..d {
                let lo = -0.5 + cell[a] as f64 / res[a] as f64;
                let hi = -0.5 + (cell[a] + 1) as f64 / res[a] as f64;
                for plane in [lo, hi] {
                    if crosses(a, plane) {
                        return Err(HomogError::NonConformingMesh {
                            axis_name: axis_name(a),
                            plane,
                        });
                    }
                }
            }
            Ok(ElementMaterial::Constant(spec.matrix_with_shape(img.value_at(&centroid))))
        }
    }
}

/// Euclidean distance from `p` to the closed simplex spanned by `vertices`.
///
/// The closest point lies in the relative interior of some face, so every
/// face is tried: project onto its affine hull and keep projections with
/// nonnegative barycentric coordinates.
pub fn point_simplex_distance(p: &[f64], vertices: &[Vec<f64>]) -> f64 {
    let m = vertices.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let face: Vec<&Vec<f64>> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| &vertices[i]).collect();
        if let Some(dist) = distance_to_face(p, &face) {
            best = best.min(dist);
        }
    }
    best
}

fn distance_to_face(p: &[f64], face: &[&Vec<f64>]) -> Option<f64> {
    let v0 = face[0];
    let k = face.len() - 1;
    let dist = |q: &[f64]| q.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if k == 0 {
        return Some(dist(v0));
    }
    let edges: Vec<Vec<f64>> = face[1..].iter().map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect()).collect();
    let rhs: Vec<f64> = edges
        .iter()
        .map(|e| e.iter().zip(p.iter().zip(v0)).map(|(ei, (pi, vi))| ei * (pi - vi)).sum())
        .collect();
    let gram: Vec<Vec<f64>> = edges
        .iter()
        .map(|ei| edges.iter().map(|ej| ei.iter().zip(ej).map(|(a, b)| a * b).sum()).collect())
        .collect();
    let t = solve_small(gram, rhs)?;
    if t.iter().any(|&ti| ti < -1e-14) || t.iter().sum::<f64>() > 1.0 + 1e-14 {
        return None;
    }
    let q: Vec<f64> = (0..p.len())
        .map(|a| v0[a] + edges.iter().zip(&t).map(|(e, ti)| ti * e[a]).sum::<f64>())
        .collect();
    Some(dist(&q))
}

/// Gaussian elimination with partial pivoting for tiny dense systems.
fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Ascending eigenvalues of a small symmetric matrix (cyclic Jacobi).
pub fn symmetric_eigenvalues(m: &[f64], d: usize) -> Vec<f64> {
    let mut a: Vec<Vec<f64>> = (0..d).map(|i| m[i * d..(i + 1) * d].to_vec()).collect();
    for _ in 0..100 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}
