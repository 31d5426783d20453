//! C interface to `homog`.
//!
//! Every function returns a [`HomogStatus`]. On failure a message is kept
//! per thread and can be read with [`homog_last_error`]. Materials and
//! results are opaque handles owned by the caller and released with their
//! `_free` function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use homog::analysis::{fem_system_size, memory_ffth, memory_fem, CsrStats};
use homog::fem::{solve_fem, FemOptions};
use homog::ffth::{gani_posteriori_bound, solve_ffth, system_size, Variant};
use homog::grid::GridShape;
use homog::linalg::{CgOptions, IterationTrace};
use homog::materials::{Geometry, MaterialSpec, VoxelImage};
use homog::HomogError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Geometry or mesh not supported for the requested discretisation.
    Unsupported = 3,
    NonConvergence = 4,
    /// Indefinite operator or preconditioner breakdown.
    SolverFailure = 5,
    Io = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogGeometry {
    Square = 0,
    Pyramid = 1,
    /// Disk (d = 2) or ball (d = 3); needs a radius in (0, 1/2).
    Circle = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogMethod {
    FfthGa = 0,
    /// Reports the plain value and the a-posteriori upper bound.
    FfthGani = 1,
    FemP1 = 2,
    FemP2 = 3,
}

/// Solver settings; pass NULL to `homog_solve` for the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HomogSolveOptions {
    /// Relative residual tolerance (default 1e-10).
    pub rtol: f64,
    /// Iteration cap, 0 for `10 * unknowns`.
    pub max_iter: usize,
    /// IC(0) preconditioning; FEM only.
    pub precondition: bool,
}

/// Opaque material description.
pub struct HomogMaterial {
    spec: MaterialSpec,
}

/// Opaque solve result.
pub struct HomogResult {
    value: f64,
    upper_bound: f64,
    iterations: usize,
    size: u64,
    memory: u64,
    energies: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HomogStatus, String);

impl From<HomogError> for Failure {
    fn from(e: HomogError) -> Self {
        let status = match &e {
            HomogError::InvalidArgument(_) | HomogError::ShapeMismatch { .. } | HomogError::Config(_) => {
                HomogStatus::InvalidArgument
            }
            HomogError::UnsupportedGeometry(_) | HomogError::NonConformingMesh { .. } => HomogStatus::Unsupported,
            HomogError::NonConvergence { .. } => HomogStatus::NonConvergence,
            HomogError::Io { .. } => HomogStatus::Io,
            _ => HomogStatus::SolverFailure,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HomogStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HomogStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            HomogStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(HomogStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn homog_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a
/// successful one. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn homog_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Analytic inclusion material `A(x) = M_d + contrast * f(x) I` on a
/// `d`-dimensional cell. `geometry` is a [`HomogGeometry`] value; `radius`
/// is read for circles only.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_material_new(
    d: usize,
    contrast: f64,
    geometry: i32,
    radius: f64,
    out: *mut *mut HomogMaterial,
) -> HomogStatus {
    guard(|| {
        let geometry = match geometry {
            g if g == HomogGeometry::Square as i32 => Geometry::Square,
            g if g == HomogGeometry::Pyramid as i32 => Geometry::Pyramid,
            g if g == HomogGeometry::Circle as i32 => Geometry::Circle { radius },
            g => return Err(Failure(HomogStatus::InvalidArgument, format!("unknown geometry {g}"))),
        };
        let spec = MaterialSpec::new(d, contrast, geometry)?;
        write(out, Box::into_raw(Box::new(HomogMaterial { spec })), "out")
    })
}

/// Isotropic voxel material. `phases` holds `prod(resolution)` phase ids
/// with the first axis varying fastest; phase `phase_ids[i]` has
/// conductivity `conductivities[i]`.
///
/// # Safety
/// `resolution` must point to `d` values, `phases` to the voxel count,
/// `phase_ids` and `conductivities` to `n_phases` values each.
#[no_mangle]
pub unsafe extern "C" fn homog_material_new_voxel(
    d: usize,
    resolution: *const usize,
    phases: *const u8,
    phase_ids: *const u8,
    conductivities: *const f64,
    n_phases: usize,
    out: *mut *mut HomogMaterial,
) -> HomogStatus {
    guard(|| {
        if !(2..=3).contains(&d) {
            return Err(Failure(HomogStatus::InvalidArgument, format!("dimension must be 2 or 3, got {d}")));
        }
        let res = slice(resolution, d, "resolution")?;
        let count = res.iter().product();
        let phases = slice(phases, count, "phases")?.to_vec();
        let ids = slice(phase_ids, n_phases, "phase_ids")?;
        let values = slice(conductivities, n_phases, "conductivities")?;
        let table: BTreeMap<u8, f64> = ids.iter().copied().zip(values.iter().copied()).collect();
        let spec = MaterialSpec::voxel(VoxelImage::new(res, phases, table)?)?;
        write(out, Box::into_raw(Box::new(HomogMaterial { spec })), "out")
    })
}

/// # Safety
/// `material` must be NULL or a handle from a `homog_material_new*`
/// function that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn homog_material_free(material: *mut HomogMaterial) {
    if !material.is_null() {
        drop(Box::from_raw(material));
    }
}

/// Solves the cell problem for `E = e_1` on grid `n` (Fourier methods) or
/// an `n^d` mesh (finite elements). `method` is a [`HomogMethod`] value.
///
/// # Safety
/// `material` must be a live handle, `options` NULL or valid, and `out`
/// valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn homog_solve(
    material: *const HomogMaterial,
    method: i32,
    n: usize,
    options: *const HomogSolveOptions,
    out: *mut *mut HomogResult,
) -> HomogStatus {
    guard(|| {
        let spec = &deref(material, "material")?.spec;
        let method = [HomogMethod::FfthGa, HomogMethod::FfthGani, HomogMethod::FemP1, HomogMethod::FemP2]
            .into_iter()
            .find(|m| *m as i32 == method)
            .ok_or_else(|| Failure(HomogStatus::InvalidArgument, format!("unknown method {method}")))?;
        let mut cg = CgOptions::default();
        let mut precondition = false;
        if let Some(o) = options.as_ref() {
            cg.rtol = o.rtol;
            cg.max_iter = (o.max_iter > 0).then_some(o.max_iter);
            precondition = o.precondition;
        }
        if !(cg.rtol > 0.0) {
            return Err(Failure(HomogStatus::InvalidArgument, format!("rtol must be positive, got {}", cg.rtol)));
        }
        let d = spec.dim();
        let result = match method {
            HomogMethod::FfthGa | HomogMethod::FfthGani => {
                let grid = GridShape::cube(d, n)?;
                let ga = method == HomogMethod::FfthGa;
                let variant = if ga { Variant::Ga } else { Variant::GaNi };
                let sol = solve_ffth(spec, &grid, variant, &cg)?;
                let upper_bound = if ga { sol.value } else { gani_posteriori_bound(spec, &sol.field)? };
                result(sol.value, upper_bound, &sol.trace, system_size(d, n).reduced, memory_ffth(ga, d, n))
            }
            HomogMethod::FemP1 | HomogMethod::FemP2 => {
                let p = if method == HomogMethod::FemP1 { 1 } else { 2 };
                let sol = solve_fem(spec, n, p, &FemOptions { cg, precondition })?;
                let mut stats = CsrStats::of(&sol.matrix);
                stats.factor_nnz = sol.preconditioner.as_ref().map(|f| f.nnz() as u64);
                result(sol.value, sol.value, &sol.trace, fem_system_size(d, n, p), memory_fem(&stats))
            }
        };
        write(out, Box::into_raw(Box::new(result)), "out")
    })
}

fn result(value: f64, upper_bound: f64, trace: &IterationTrace, size: u64, memory: u64) -> HomogResult {
    HomogResult {
        value,
        upper_bound,
        iterations: trace.iterations(),
        size,
        memory,
        energies: trace.energies(),
    }
}

/// Homogenised value `A_11` (for GaNi the plain, unbounded approximation).
///
/// # Safety
/// `result` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn homog_result_value(result: *const HomogResult, out: *mut f64) -> HomogStatus {
    guard(|| write(out, deref(result, "result")?.value, "out"))
}

/// Guaranteed upper bound on the homogenised value.
///
/// # Safety
/// `result` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn homog_result_upper_bound(result: *const HomogResult, out: *mut f64) -> HomogStatus {
    guard(|| write(out, deref(result, "result")?.upper_bound, "out"))
}

/// Conjugate-gradient iterations performed.
///
/// # Safety
/// `result` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn homog_result_iterations(result: *const HomogResult, out: *mut usize) -> HomogStatus {
    guard(|| write(out, deref(result, "result")?.iterations, "out"))
}

/// Reported system size and memory count (in floating point numbers).
///
/// # Safety
/// `result` must be a live handle; `size` and `memory` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn homog_result_accounting(result: *const HomogResult, size: *mut u64, memory: *mut u64) -> HomogStatus {
    guard(|| {
        let r = deref(result, "result")?;
        write(size, r.size, "size")?;
        write(memory, r.memory, "memory")
    })
}

/// Homogenised value after each CG iteration, starting with the initial
/// guess. Writes the trace length to `len`; copies `min(len, capacity)`
/// values into `buffer`, which may be NULL when `capacity` is 0.
///
/// # Safety
/// `result` must be a live handle, `buffer` valid for `capacity` values
/// and `len` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn homog_result_trace(
    result: *const HomogResult,
    buffer: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> HomogStatus {
    guard(|| {
        let r = deref(result, "result")?;
        let k = r.energies.len().min(capacity);
        if k > 0 {
            if buffer.is_null() {
                return Err(null("buffer"));
            }
            std::ptr::copy_nonoverlapping(r.energies.as_ptr(), buffer, k);
        }
        write(len, r.energies.len(), "len")
    })
}

/// # Safety
/// `result` must be NULL or a handle from `homog_solve` that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn homog_result_free(result: *mut HomogResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Copies the last error message into a caller buffer, truncating and
/// NUL-terminating; returns the full message length (0 if none).
///
/// # Safety
/// `buffer` must be valid for `capacity` bytes, or NULL with capacity 0.
#[no_mangle]
pub unsafe extern "C" fn homog_last_error_copy(buffer: *mut c_char, capacity: usize) -> usize {
    let p = homog_last_error();
    if p.is_null() {
        return 0;
    }
    let msg = CStr::from_ptr(p).to_bytes();
    if capacity > 0 && !buffer.is_null() {
        let k = msg.len().min(capacity - 1);
        std::ptr::copy_nonoverlapping(msg.as_ptr().cast(), buffer, k);
        *buffer.add(k) = 0;
    }
    msg.len()
}
