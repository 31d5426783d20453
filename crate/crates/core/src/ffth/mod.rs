//! Fourier-Galerkin solvers for the cell problem `G A e = -G A E`.
//!
//! Ga works on the double grid `2N - 1` with the exactly integrated
//! material; GaNi works on the grid `N` with point samples. Both share the
//! projection `Ĝ(k) = k⊗k / k·k` on the active index set `ℤ^d_N \ {0}`.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;

use crate::error::{HomogError, Result};
use crate::grid::{dot, tensor_apply_into, DftPlan, GridField, GridShape, TensorGridField};
use crate::linalg::{cg, CgOptions, IterationTrace, LinearOperator};
use crate::materials::{exact_double_grid_field, exact_grid_field, sample_on_grid, MaterialSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Exact integration on the double grid.
    Ga,
    /// Numerical integration by point samples on the grid itself.
    GaNi,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Ga => "FFTH-Ga",
            Variant::GaNi => "FFTH-GaNi",
        }
    }
}

/// Discrete projection onto zero-mean gradient fields with frequencies in
/// `ℤ^d_N`, acting on fields stored on a (possibly larger) odd grid.
#[derive(Debug, Clone)]
pub struct Projection {
    grid: GridShape,
    active: GridShape,
    plan: DftPlan,
    /// Frequency vector per storage slot, `None` where `Ĝ` vanishes.
    freq: Vec<Option<[f64; 3]>>,
}

impl Projection {
    /// Projection acting on the grid `N` itself.
    pub fn single(n: &GridShape) -> Result<Self> {
        Self::new(n, n)
    }

    /// Projection acting on the double grid `2N - 1`.
    pub fn double(n: &GridShape) -> Result<Self> {
        Self::new(n, &n.doubled())
    }

    pub fn new(active: &GridShape, grid: &GridShape) -> Result<Self> {
        active.require_odd()?;
        grid.require_odd()?;
        if active.dim() != grid.dim() || active.dims().iter().zip(grid.dims()).any(|(a, g)| a > g) {
            return Err(HomogError::InvalidArgument(format!(
                "active set {active:?} does not fit into grid {grid:?}"
            )));
        }
        let mut freq = vec![None; grid.len()];
        grid.for_each_index(|flat, k| {
            let inside = k.iter().enumerate().all(|(a, &ka)| 2 * ka.abs() < active.dims()[a] as i64);
            if inside && k.iter().any(|&ka| ka != 0) {
                let mut f = [0.0; 3];
                for (a, &ka) in k.iter().enumerate() {
                    f[a] = ka as f64;
                }
                freq[flat] = Some(f);
            }
        });
        Ok(Projection {
            grid: grid.clone(),
            active: active.clone(),
            plan: DftPlan::new(grid),
            freq,
        })
    }

    pub fn grid(&self) -> &GridShape {
        &self.grid
    }

    pub fn active(&self) -> &GridShape {
        &self.active
    }

    /// In-place projection of a component-major vector field.
    pub fn apply_in_place(&self, values: &mut [f64]) {
        let d = self.grid.dim();
        let n = self.grid.len();
        debug_assert_eq!(values.len(), d * n);
        let mut hat: Vec<Vec<Complex64>> = (0..d)
            .map(|c| {
                let mut buf: Vec<Complex64> = values[c * n..(c + 1) * n].iter().map(|&v| Complex64::new(v, 0.0)).collect();
                self.plan.forward_scalar(&mut buf);
                buf
            })
            .collect();
        for flat in 0..n {
            match &self.freq[flat] {
                None => hat.iter_mut().for_each(|h| h[flat] = Complex64::new(0.0, 0.0)),
                Some(k) => {
                    let mut kv = Complex64::new(0.0, 0.0);
                    let mut kk = 0.0;
                    for c in 0..d {
                        kv += hat[c][flat] * k[c];
                        kk += k[c] * k[c];
                    }
                    let s = kv / kk;
                    for c in 0..d {
                        hat[c][flat] = s * k[c];
                    }
                }
            }
        }
        for (c, mut buf) in hat.into_iter().enumerate() {
            self.plan.inverse_scalar(&mut buf);
            for (v, h) in values[c * n..(c + 1) * n].iter_mut().zip(buf) {
                *v = h.re;
            }
        }
    }
}

/// `𝐆 v` for a field on the projection's grid.
pub fn project(p: &Projection, v: &GridField) -> Result<GridField> {
    p.grid().check_same(v.shape())?;
    let mut out = v.clone();
    p.apply_in_place(out.values_mut());
    Ok(out)
}

/// The operator `𝐆𝐀` of one Fourier-Galerkin variant.
#[derive(Debug)]
pub struct FfthOperator {
    variant: Variant,
    n: GridShape,
    material: TensorGridField,
    projection: Projection,
    matvecs: AtomicUsize,
    transforms: AtomicUsize,
}

impl FfthOperator {
    pub fn new(spec: &MaterialSpec, n: &GridShape, variant: Variant) -> Result<Self> {
        n.require_odd()?;
        let (material, projection) = match variant {
            Variant::Ga => (exact_double_grid_field(spec, n)?, Projection::double(n)?),
            Variant::GaNi => (sample_on_grid(spec, n)?, Projection::single(n)?),
        };
        Ok(Self::from_parts(variant, n, material, projection))
    }

    /// Operator with an explicit material field on the working grid.
    pub fn from_parts(variant: Variant, n: &GridShape, material: TensorGridField, projection: Projection) -> Self {
        FfthOperator {
            variant,
            n: n.clone(),
            material,
            projection,
            matvecs: AtomicUsize::new(0),
            transforms: AtomicUsize::new(0),
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// The discretisation grid `N`.
    pub fn n(&self) -> &GridShape {
        &self.n
    }

    /// The grid the unknowns live on: `2N - 1` for Ga, `N` for GaNi.
    pub fn grid(&self) -> &GridShape {
        self.projection.grid()
    }

    pub fn material(&self) -> &TensorGridField {
        &self.material
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// Operator applications so far.
    pub fn matvec_count(&self) -> usize {
        self.matvecs.load(Ordering::Relaxed)
    }

    /// Scalar FFTs so far (forward and inverse counted separately).
    pub fn fft_count(&self) -> usize {
        self.transforms.load(Ordering::Relaxed)
    }

    /// `-𝐆𝐀𝐄` for `E = e_1`.
    pub fn rhs(&self) -> Vec<f64> {
        let mut e = GridField::zeros(self.grid()).into_values();
        let n = self.grid().len();
        e[..n].iter_mut().for_each(|v| *v = 1.0);
        let mut out = vec![0.0; e.len()];
        self.apply(&e, &mut out);
        out.iter_mut().for_each(|v| *v = -*v);
        out
    }

    /// `a(E + e, E + e)` with this operator's material and `E = e_1`.
    pub fn energy(&self, e: &[f64]) -> f64 {
        let n = self.grid().len();
        let mut total = e.to_vec();
        total[..n].iter_mut().for_each(|v| *v += 1.0);
        let mut ae = vec![0.0; total.len()];
        tensor_apply_into(&self.material, &total, &mut ae);
        dot(&ae, &total) / n as f64
    }

    /// `a(E, E)`.
    pub fn energy_of_macroscopic(&self) -> f64 {
        self.material.entry(0, 0).iter().sum::<f64>() / self.grid().len() as f64
    }
}

impl LinearOperator for FfthOperator {
    fn dim(&self) -> usize {
        self.grid().dim() * self.grid().len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        tensor_apply_into(&self.material, x, y);
        self.projection.apply_in_place(y);
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        self.transforms.fetch_add(2 * self.grid().dim(), Ordering::Relaxed);
    }

    fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, y) / self.grid().len() as f64
    }

    fn restrict(&self, x: &mut [f64]) {
        self.projection.apply_in_place(x);
    }
}

/// `𝐆𝐀e` for the Ga operator.
pub fn apply_ga(op: &FfthOperator, e: &GridField) -> Result<GridField> {
    apply_variant(op, e, Variant::Ga)
}

/// `𝐆𝐀̃e` for the GaNi operator.
pub fn apply_gani(op: &FfthOperator, e: &GridField) -> Result<GridField> {
    apply_variant(op, e, Variant::GaNi)
}

fn apply_variant(op: &FfthOperator, e: &GridField, want: Variant) -> Result<GridField> {
    if op.variant() != want {
        return Err(HomogError::InvalidArgument(format!(
            "expected a {} operator, got {}",
            want.name(),
            op.variant().name()
        )));
    }
    op.grid().check_same(e.shape())?;
    let mut out = vec![0.0; e.values().len()];
    op.apply(e.values(), &mut out);
    GridField::from_values(op.grid(), out)
}

#[derive(Debug)]
pub struct FfthSolution {
    pub operator: FfthOperator,
    /// Fluctuation field on the operator's grid.
    pub field: GridField,
    pub trace: IterationTrace,
    /// `A_H,N` for Ga, the approximation `Ã_H,N` for GaNi.
    pub value: f64,
}

/// Solves the cell problem with `E = e_1` from a zero initial guess.
pub fn solve_ffth(spec: &MaterialSpec, n: &GridShape, variant: Variant, opts: &CgOptions) -> Result<FfthSolution> {
    let operator = FfthOperator::new(spec, n, variant)?;
    solve_with(operator, opts)
}

/// CG on a prepared operator; the trace records homogenised values.
pub fn solve_with(operator: FfthOperator, opts: &CgOptions) -> Result<FfthSolution> {
    let b = operator.rhs();
    let mut cg_opts = *opts;
    cg_opts.energy_offset = operator.energy_of_macroscopic();
    let outcome = cg(&operator, &b, None, None, &cg_opts)?;
    let value = operator.energy(&outcome.x);
    let field = GridField::from_values(operator.grid(), outcome.x)?;
    Ok(FfthSolution {
        operator,
        field,
        trace: outcome.trace,
        value,
    })
}

/// `A_H,N = a(E + e, E + e)` with exact integration; `e` is a field on the
/// double grid of `n` whose Fourier support lies in `ℤ^d_N`.
pub fn homogenized_value_ga(spec: &MaterialSpec, n: &GridShape, e: &GridField) -> Result<f64> {
    n.doubled().check_same(e.shape())?;
    let material = exact_double_grid_field(spec, n)?;
    Ok(exact_energy(&material, e.values()))
}

fn exact_energy(material: &TensorGridField, e: &[f64]) -> f64 {
    let n = material.shape().len();
    let mut total = e.to_vec();
    total[..n].iter_mut().for_each(|v| *v += 1.0);
    let mut ae = vec![0.0; total.len()];
    tensor_apply_into(material, &total, &mut ae);
    dot(&ae, &total) / n as f64
}

/// Re-expands a trigonometric polynomial given by its values on grid `N`
/// to the grid `target` by zero-padding its Fourier coefficients.
pub fn zero_pad(e: &GridField, target: &GridShape) -> Result<GridField> {
    let hat = DftPlan::new(e.shape()).forward(e)?;
    DftPlan::new(target).inverse_real(&hat.resample(target)?)
}

/// `Ā_H,N`: the GaNi minimiser evaluated in the exactly integrated energy.
/// An upper bound on the homogenised coefficient.
pub fn gani_posteriori_bound(spec: &MaterialSpec, e_tilde: &GridField) -> Result<f64> {
    let n = e_tilde.shape().clone();
    let padded = zero_pad(e_tilde, &n.doubled())?;
    homogenized_value_ga(spec, &n, &padded)
}

/// Same as [`gani_posteriori_bound`] with an analytic field evaluated on
/// an arbitrary odd grid; used to cross-check the double-grid evaluation.
pub fn exact_energy_on(spec: &MaterialSpec, grid: &GridShape, e: &GridField) -> Result<f64> {
    grid.check_same(e.shape())?;
    Ok(exact_energy(&exact_grid_field(spec, grid)?, e.values()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemSizes {
    /// `d N^d`, the reduced size reported in tables.
    pub reduced: u64,
    /// `d (2N - 1)^d`, the double-grid system actually iterated by Ga.
    pub double_grid: u64,
    /// `N^d - 1`, independent degrees of freedom of `𝔼_N`.
    pub independent: u64,
}

pub fn system_size(d: usize, n: usize) -> SystemSizes {
    let (d64, n64) = (d as u64, n as u64);
    SystemSizes {
        reduced: d64 * n64.pow(d as u32),
        double_grid: d64 * (2 * n64 - 1).pow(d as u32),
        independent: n64.pow(d as u32) - 1,
    }
}
