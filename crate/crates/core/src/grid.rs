//! Regular periodic grids on the centred unit cell `[-1/2, 1/2)^d`.
//!
//! Grid values and Fourier coefficients share one storage order: row-major
//! over the axes (last axis fastest) with each axis in natural FFT order,
//! i.e. storage slot `j` on an axis of `N` points holds the signed index
//! `k = j` for `j <= (N-1)/2` and `k = j - N` otherwise. Grid point `k`
//! sits at `x = k / N`. Vector fields are stored component-major.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{HomogError, Result};

/// Number of grid points per axis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GridShape {
    dims: Vec<usize>,
}

impl fmt::Debug for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridShape{:?}", self.dims)
    }
}

impl GridShape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if !(2..=3).contains(&dims.len()) {
            return Err(HomogError::InvalidArgument(format!(
                "grid dimension must be 2 or 3, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(HomogError::InvalidArgument(format!(
                "grid sizes must be positive, got {dims:?}"
            )));
        }
        Ok(GridShape {
            dims: dims.to_vec(),
        })
    }

    /// The isotropic grid `(n, ..., n)` in `d` dimensions.
    pub fn cube(d: usize, n: usize) -> Result<Self> {
        Self::new(&vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `|N|_Π`, the number of grid points.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_odd(&self) -> bool {
        self.dims.iter().all(|n| n % 2 == 1)
    }

    pub fn require_odd(&self) -> Result<()> {
        if self.is_odd() {
            Ok(())
        } else {
            Err(HomogError::InvalidArgument(format!(
                "Fourier-Galerkin grids must have an odd number of points per axis, got {:?}",
                self.dims
            )))
        }
    }

    /// The double grid `2N - 1` on which products of two `N`-grid
    /// trigonometric polynomials are integrated exactly.
    pub fn doubled(&self) -> GridShape {
        GridShape {
            dims: self.dims.iter().map(|n| 2 * n - 1).collect(),
        }
    }

    /// Signed frequency / point index held in storage slot `j` of `axis`.
    #[inline]
    pub fn signed(&self, axis: usize, j: usize) -> i64 {
        let n = self.dims[axis];
        if j <= (n - 1) / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Storage slot of signed index `k` on `axis`, if `|k| < N/2`.
    #[inline]
    pub fn slot(&self, axis: usize, k: i64) -> Option<usize> {
        let n = self.dims[axis] as i64;
        if 2 * k.abs() < n {
            Some(k.rem_euclid(n) as usize)
        } else {
            None
        }
    }

    /// Membership in the reduced index set `|k_α| < N_α / 2`.
    pub fn contains(&self, k: &FreqIndex) -> bool {
        k.0.len() == self.dim() && k.0.iter().enumerate().all(|(a, &ka)| 2 * ka.abs() < self.dims[a] as i64)
    }

    /// Flat storage offset of a frequency index.
    pub fn flat_of(&self, k: &FreqIndex) -> Option<usize> {
        if k.0.len() != self.dim() {
            return None;
        }
        let mut flat = 0usize;
        for (a, &ka) in k.0.iter().enumerate() {
            flat = flat * self.dims[a] + self.slot(a, ka)?;
        }
        Some(flat)
    }

    /// Signed multi-index of a flat storage offset.
    pub fn index_of(&self, mut flat: usize) -> FreqIndex {
        let d = self.dim();
        let mut k = vec![0i64; d];
        for a in (0..d).rev() {
            let n = self.dims[a];
            k[a] = self.signed(a, flat % n);
            flat /= n;
        }
        FreqIndex(k)
    }

    /// Coordinates `x^k = k / N` of the grid point at a flat offset.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.index_of(flat)
            .0
            .iter()
            .zip(&self.dims)
            .map(|(&k, &n)| k as f64 / n as f64)
            .collect()
    }

    /// Calls `f(flat, k)` for every grid point in storage order.
    pub fn for_each_index(&self, mut f: impl FnMut(usize, &[i64])) {
        let d = self.dim();
        let mut slots = vec![0usize; d];
        let mut k: Vec<i64> = vec![0; d];
        for flat in 0..self.len() {
            for a in 0..d {
                k[a] = self.signed(a, slots[a]);
            }
            f(flat, &k);
            for a in (0..d).rev() {
                slots[a] += 1;
                if slots[a] < self.dims[a] {
                    break;
                }
                slots[a] = 0;
            }
        }
    }

    pub(crate) fn check_same(&self, other: &GridShape) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(HomogError::shape(&self.dims, &other.dims))
        }
    }
}

/// A frequency (or grid point) multi-index with signed entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreqIndex(pub Vec<i64>);

impl FreqIndex {
    pub fn new(k: &[i64]) -> Self {
        FreqIndex(k.to_vec())
    }

    pub fn zero(d: usize) -> Self {
        FreqIndex(vec![0; d])
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|k| k * k).sum()
    }

    pub fn neg(&self) -> Self {
        FreqIndex(self.0.iter().map(|k| -k).collect())
    }
}

/// Real `d`-vector field sampled on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    shape: GridShape,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(shape: &GridShape) -> Self {
        GridField {
            values: vec![0.0; shape.dim() * shape.len()],
            shape: shape.clone(),
        }
    }

    pub fn from_values(shape: &GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.dim() * shape.len() {
            return Err(HomogError::InvalidArgument(format!(
                "expected {} values for {:?}, got {}",
                shape.dim() * shape.len(),
                shape,
                values.len()
            )));
        }
        Ok(GridField {
            shape: shape.clone(),
            values,
        })
    }

    /// The constant field `E` on every grid point.
    pub fn constant(shape: &GridShape, vector: &[f64]) -> Result<Self> {
        if vector.len() != shape.dim() {
            return Err(HomogError::InvalidArgument(format!(
                "constant vector has {} components on a {}-d grid",
                vector.len(),
                shape.dim()
            )));
        }
        let n = shape.len();
        let mut values = Vec::with_capacity(shape.dim() * n);
        for &c in vector {
            values.extend(std::iter::repeat_n(c, n));
        }
        Ok(GridField {
            shape: shape.clone(),
            values,
        })
    }

    /// Samples `f(x)` (returning the `d` components) at every grid point.
    pub fn from_fn(shape: &GridShape, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let d = shape.dim();
        let n = shape.len();
        let mut values = vec![0.0; d * n];
        for flat in 0..n {
            let v = f(&shape.point(flat));
            for (c, vc) in v.iter().take(d).enumerate() {
                values[c * n + flat] = *vc;
            }
        }
        GridField {
            shape: shape.clone(),
            values,
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.shape.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn mean(&self, c: usize) -> f64 {
        let comp = self.component(c);
        comp.iter().sum::<f64>() / comp.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Zero-mean per component up to `1e-12 max|values|`.
    pub fn is_zero_mean(&self) -> bool {
        let tol = 1e-12 * self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.shape.dim()).all(|c| self.mean(c).abs() <= tol)
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &GridField) -> Result<()> {
        self.shape.check_same(&other.shape)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }
}

/// Complex Fourier coefficients of a vector field, indexed like [`GridField`].
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    shape: GridShape,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(shape: &GridShape) -> Self {
        FourierField {
            coeffs: vec![Complex64::new(0.0, 0.0); shape.dim() * shape.len()],
            shape: shape.clone(),
        }
    }

    pub fn from_coeffs(shape: &GridShape, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != shape.dim() * shape.len() {
            return Err(HomogError::InvalidArgument(format!(
                "expected {} coefficients for {:?}, got {}",
                shape.dim() * shape.len(),
                shape,
                coeffs.len()
            )));
        }
        Ok(FourierField {
            shape: shape.clone(),
            coeffs,
        })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of component `c` at frequency `k`; zero outside the grid's index set.
    pub fn get(&self, c: usize, k: &FreqIndex) -> Complex64 {
        match self.shape.flat_of(k) {
            Some(flat) => self.coeffs[c * self.shape.len() + flat],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, c: usize, k: &FreqIndex, value: Complex64) -> Result<()> {
        let flat = self.shape.flat_of(k).ok_or_else(|| {
            HomogError::InvalidArgument(format!("frequency {:?} outside {:?}", k.0, self.shape))
        })?;
        let n = self.shape.len();
        self.coeffs[c * n + flat] = value;
        Ok(())
    }

    /// Largest `|c(-k) - conj c(k)|` over all components and frequencies.
    /// Frequencies whose mirror image is outside the index set (Nyquist
    /// slots of even grids) must vanish.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.shape.len();
        let mut worst = 0.0f64;
        for c in 0..self.shape.dim() {
            let block = &self.coeffs[c * n..(c + 1) * n];
            self.shape.for_each_index(|flat, k| {
                let mirror = FreqIndex(k.iter().map(|x| -x).collect());
                let dev = match self.shape.flat_of(&mirror) {
                    Some(m) => (block[m] - block[flat].conj()).norm(),
                    None => block[flat].norm(),
                };
                worst = worst.max(dev);
            });
        }
        worst
    }

    /// Re-expands the represented trigonometric polynomial on another grid:
    /// coefficients present in both index sets are copied, the rest are zero.
    /// Exact when the target index set contains the source's support.
    pub fn resample(&self, target: &GridShape) -> Result<FourierField> {
        if target.dim() != self.shape.dim() {
            return Err(HomogError::shape(self.shape.dims(), target.dims()));
        }
        let d = target.dim();
        let (ns, nt) = (self.shape.len(), target.len());
        let mut out = FourierField::zeros(target);
        self.shape.for_each_index(|flat, k| {
            let mut t = 0usize;
            for (a, &ka) in k.iter().enumerate() {
                match target.slot(a, ka) {
                    Some(s) => t = t * target.dims()[a] + s,
                    None => return,
                }
            }
            if !self.shape.contains(&FreqIndex(k.to_vec())) {
                return;
            }
            for c in 0..d {
                out.coeffs[c * nt + t] = self.coeffs[c * ns + flat];
            }
        });
        Ok(out)
    }
}

/// Symmetric `d x d` matrix per grid point; blocks `(α, β)` stored
/// consecutively, each block in grid storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGridField {
    shape: GridShape,
    values: Vec<f64>,
}

impl TensorGridField {
    pub fn from_fn(shape: &GridShape, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Self {
        let d = shape.dim();
        let n = shape.len();
        let mut values = vec![0.0; d * d * n];
        for flat in 0..n {
            let m = f(flat, &shape.point(flat));
            for ab in 0..d * d {
                values[ab * n + flat] = m[ab];
            }
        }
        TensorGridField {
            shape: shape.clone(),
            values,
        }
    }

    /// Builds the field from row-major `d x d` matrices; rejects asymmetric input.
    pub fn from_values(shape: &GridShape, values: Vec<f64>) -> Result<Self> {
        let d = shape.dim();
        let n = shape.len();
        if values.len() != d * d * n {
            return Err(HomogError::InvalidArgument(format!(
                "expected {} tensor entries, got {}",
                d * d * n,
                values.len()
            )));
        }
        for a in 0..d {
            for b in a + 1..d {
                let (ab, ba) = (&values[(a * d + b) * n..][..n], &values[(b * d + a) * n..][..n]);
                for (x, y) in ab.iter().zip(ba) {
                    if (x - y).abs() > 1e-12 * (x.abs() + y.abs()).max(1.0) {
                        return Err(HomogError::InvalidArgument(
                            "tensor field is not symmetric".into(),
                        ));
                    }
                }
            }
        }
        Ok(TensorGridField {
            shape: shape.clone(),
            values,
        })
    }

    pub fn constant(shape: &GridShape, matrix: &[f64]) -> Self {
        Self::from_fn(shape, |_, _| matrix.to_vec())
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `(a, b)` across the whole grid.
    pub fn entry(&self, a: usize, b: usize) -> &[f64] {
        let d = self.shape.dim();
        let n = self.shape.len();
        &self.values[(a * d + b) * n..(a * d + b + 1) * n]
    }

    /// Row-major matrix at one grid point.
    pub fn at(&self, flat: usize) -> Vec<f64> {
        let d = self.shape.dim();
        let n = self.shape.len();
        (0..d * d).map(|ab| self.values[ab * n + flat]).collect()
    }
}

/// Cached per-axis FFT plans for one grid shape. Plans are immutable and
/// `Send + Sync`, so one plan may be shared by concurrent transforms.
#[derive(Clone)]
pub struct DftPlan {
    shape: GridShape,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftPlan").field("shape", &self.shape).finish()
    }
}

impl DftPlan {
    pub fn new(shape: &GridShape) -> Self {
        let mut planner = FftPlanner::new();
        let forward = shape.dims().iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.dims().iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        DftPlan {
            shape: shape.clone(),
            forward,
            inverse,
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        let dims = self.shape.dims();
        let total = self.shape.len();
        debug_assert_eq!(data.len(), total);
        let mut lines = vec![Complex64::new(0.0, 0.0); total];
        let mut scratch = Vec::new();
        for (axis, plan) in plans.iter().enumerate() {
            let n = dims[axis];
            if n == 1 {
                continue;
            }
            let inner: usize = dims[axis + 1..].iter().product();
            let outer = total / (n * inner);
            if inner == 1 {
                let len = plan.get_inplace_scratch_len();
                scratch.resize(len, Complex64::new(0.0, 0.0));
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            // gather every line along `axis` into contiguous storage
            let mut line = 0;
            for o in 0..outer {
                let base = o * n * inner;
                for i in 0..inner {
                    let dst = &mut lines[line * n..(line + 1) * n];
                    for (j, v) in dst.iter_mut().enumerate() {
                        *v = data[base + j * inner + i];
                    }
                    line += 1;
                }
            }
            let len = plan.get_inplace_scratch_len();
            scratch.resize(len, Complex64::new(0.0, 0.0));
            plan.process_with_scratch(&mut lines, &mut scratch);
            let mut line = 0;
            for o in 0..outer {
                let base = o * n * inner;
                for i in 0..inner {
                    let src = &lines[line * n..(line + 1) * n];
                    for (j, v) in src.iter().enumerate() {
                        data[base + j * inner + i] = *v;
                    }
                    line += 1;
                }
            }
        }
    }

    /// Forward DFT of one scalar component, normalised by `1/|N|_Π`.
    pub fn forward_scalar(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / self.shape.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Unnormalised inverse DFT of one scalar component (entries `ω^{mk}`).
    pub fn inverse_scalar(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    pub fn forward(&self, field: &GridField) -> Result<FourierField> {
        self.shape.check_same(field.shape())?;
        let n = self.shape.len();
        let mut coeffs: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for block in coeffs.chunks_mut(n) {
            self.forward_scalar(block);
        }
        FourierField::from_coeffs(&self.shape, coeffs)
    }

    /// Inverse DFT that keeps the real part without checking Hermitian symmetry.
    pub fn inverse_real(&self, field: &FourierField) -> Result<GridField> {
        self.shape.check_same(field.shape())?;
        let n = self.shape.len();
        let mut buf = field.coeffs().to_vec();
        for block in buf.chunks_mut(n) {
            self.inverse_scalar(block);
        }
        GridField::from_values(&self.shape, buf.into_iter().map(|c| c.re).collect())
    }

    pub fn inverse(&self, field: &FourierField) -> Result<GridField> {
        check_hermitian(field)?;
        self.inverse_real(field)
    }
}

const HERMITIAN_TOL: f64 = 1e-12;

fn check_hermitian(field: &FourierField) -> Result<()> {
    let scale = field.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let deviation = field.hermitian_deviation();
    if deviation > HERMITIAN_TOL * scale.max(1e-300) && deviation > 0.0 {
        return Err(HomogError::SymmetryViolation { deviation });
    }
    Ok(())
}

/// `coeffs(k) = |N|_Π^{-1} Σ_m ω^{-km} f(x^m)` for every component.
pub fn dft_forward(f: &GridField) -> Result<FourierField> {
    DftPlan::new(f.shape()).forward(f)
}

/// Inverse of [`dft_forward`]; the coefficients must be Hermitian so the
/// result is a real field.
pub fn dft_inverse(f: &FourierField) -> Result<GridField> {
    DftPlan::new(f.shape()).inverse(f)
}

/// `a . b = Σ_k a^k_α b^k_α / |N|_Π`, the `L²` product of the represented polynomials.
pub fn grid_inner(a: &GridField, b: &GridField) -> Result<f64> {
    a.shape().check_same(b.shape())?;
    Ok(dot(a.values(), b.values()) / a.shape().len() as f64)
}

/// Pointwise matrix-vector product `(A v)(x) = A(x) v(x)`.
pub fn tensor_apply(a: &TensorGridField, v: &GridField) -> Result<GridField> {
    a.shape().check_same(v.shape())?;
    let mut out = GridField::zeros(v.shape());
    tensor_apply_into(a, v.values(), out.values_mut());
    Ok(out)
}

pub(crate) fn tensor_apply_into(a: &TensorGridField, v: &[f64], out: &mut [f64]) {
    let d = a.shape().dim();
    let n = a.shape().len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for alpha in 0..d {
        let dst = &mut out[alpha * n..(alpha + 1) * n];
        for beta in 0..d {
            let coef = &a.values()[(alpha * d + beta) * n..(alpha * d + beta + 1) * n];
            let src = &v[beta * n..(beta + 1) * n];
            for ((o, c), s) in dst.iter_mut().zip(coef).zip(src) {
                *o += c * s;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
