//! Error, accounting and extrapolation tools for comparing the methods,
//! plus report emission.

pub mod accounting;
pub mod fit;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HomogError, Result};
use crate::fem::FemSolution;
use crate::ffth::FfthOperator;
use crate::linalg::{lanczos_extremes, random_start, IterationTrace, LanczosEstimate, LinearOperator, SplitPreconditioned};

pub use accounting::{fem_system_size, matvec_ops, memory_count, memory_ffth, memory_fem, CsrStats, Method};
pub use fit::{fit_reference, FitResult};

/// Errors above `-CLAMP_TOL` but below zero are reported as zero.
pub const CLAMP_TOL: f64 = 1e-9;

/// `‖e - e_N‖²_A = A_N - A_eff`, the excess of a discrete homogenised
/// value over the exact one.
pub fn energetic_error(value: f64, reference: f64) -> f64 {
    value - reference
}

/// [`energetic_error`] with small negative values clamped to zero; the flag
/// tells whether clamping happened.
pub fn clamped_error(value: f64, reference: f64) -> (f64, bool) {
    let e = energetic_error(value, reference);
    if e < 0.0 && e > -CLAMP_TOL {
        (0.0, true)
    } else {
        (e, false)
    }
}

/// `A_(k) - A` along a CG trace: the algebraic error in the energy norm.
pub fn algebraic_error_trace(trace: &IterationTrace, converged_value: f64) -> Vec<f64> {
    trace.records.iter().map(|r| r.energy - converged_value).collect()
}

/// Published extrapolated homogenised values for the standard cases, by
/// `(d, geometry, ρ)`.
pub fn tabulated_reference(d: usize, geometry: &str, rho: f64) -> Option<f64> {
    const TABLE: [(usize, &str, f64, f64); 8] = [
        (2, "square", 10.0, 3.0416470728),
        (2, "pyramid", 10.0, 3.6685617065),
        (3, "square", 10.0, 2.9072530862),
        (3, "pyramid", 10.0, 2.9870480854),
        (2, "square", 100.0, 3.6931324468),
        (2, "pyramid", 100.0, 14.482810295),
        (3, "square", 100.0, 3.6418887304),
        (3, "pyramid", 100.0, 9.1891217513),
    ];
    TABLE
        .iter()
        .find(|(dd, g, r, _)| *dd == d && g.eq_ignore_ascii_case(geometry) && *r == rho)
        .map(|t| t.3)
}

/// Condition number estimate of a Fourier operator on the range of its
/// projection.
pub fn kappa_ffth(op: &FfthOperator, iters: usize, seed: u64) -> LanczosEstimate {
    let start = random_start(op.dim(), seed);
    lanczos_extremes(op, &start, iters)
}

/// Condition number estimate of the reduced FEM system, preconditioned when
/// the solution carries an incomplete factor.
pub fn kappa_fem(sol: &FemSolution, iters: usize, seed: u64) -> LanczosEstimate {
    let start = random_start(sol.matrix.nrows(), seed);
    match &sol.preconditioner {
        Some(factor) => lanczos_extremes(&SplitPreconditioned { matrix: &sol.matrix, factor }, &start, iters),
        None => lanczos_extremes(&sol.matrix, &start, iters),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    /// Value taken from the published table.
    Table,
    /// Extrapolated in-repo by [`fit_reference`].
    Fit,
    /// Known in closed form, e.g. a homogeneous medium.
    Exact,
    /// No reference available; errors are not reported.
    None,
}

/// One run of one method on one discretisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub method: Method,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Element order; `None` for Fourier methods.
    pub p: Option<usize>,
    pub rho: f64,
    pub geometry: String,
    pub value: f64,
    #[serde(rename = "ref")]
    pub reference: Option<f64>,
    pub ref_source: ReferenceSource,
    pub sq_error: Option<f64>,
    pub clamped: bool,
    pub size: u64,
    pub memory: u64,
    pub ops: f64,
    pub kappa: Option<f64>,
    pub iters: usize,
}

impl ErrorReport {
    /// Fills `reference`, `sq_error` and `clamped` from a reference value.
    pub fn set_reference(&mut self, reference: f64, source: ReferenceSource) {
        let (e, clamped) = clamped_error(self.value, reference);
        self.reference = Some(reference);
        self.ref_source = source;
        self.sq_error = Some(e);
        self.clamped = clamped;
    }
}

pub const CSV_HEADER: &str = "method,d,N,p,rho,geometry,value,ref,sq_error,size,memory,ops,kappa,iters";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), |x| x.to_string())
}

/// CSV text with the fixed column schema; floats use the shortest
/// round-trip representation so output is byte-stable.
pub fn reports_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method.name(),
            r.d,
            r.n,
            opt(&r.p),
            r.rho,
            r.geometry,
            r.value,
            opt(&r.reference),
            opt(&r.sq_error),
            r.size,
            r.memory,
            r.ops,
            opt(&r.kappa),
            r.iters
        );
    }
    out
}

/// Per-iteration values of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSeries {
    pub method: Method,
    pub d: usize,
    pub n: usize,
    pub p: Option<usize>,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: f64,
}

impl TraceSeries {
    pub fn new(method: Method, d: usize, n: usize, p: Option<usize>, trace: &IterationTrace, converged: f64) -> Self {
        TraceSeries {
            method,
            d,
            n,
            p,
            values: trace.energies(),
            residuals: trace.records.iter().map(|r| r.residual).collect(),
            converged,
        }
    }
}

pub const TRACE_HEADER: &str = "method,d,N,p,iteration,value,alg_error,residual";

pub fn traces_csv(traces: &[TraceSeries]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in traces {
        for (k, (v, r)) in t.values.iter().zip(&t.residuals).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.method.name(),
                t.d,
                t.n,
                opt(&t.p),
                k,
                v,
                v - t.converged,
                r
            );
        }
    }
    out
}

/// Hex SHA-256 of the configuration text.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub config_hash: String,
    pub schema: Vec<String>,
    pub environment: Environment,
    pub fits: Vec<NamedFit>,
    pub runs: Vec<ErrorReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub d: usize,
    pub geometry: String,
    pub rho: f64,
    pub method: Method,
    pub fit: FitResult,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HomogError::io(path, e))
}

/// Writes `<name>.csv`, `<name>_trace.csv` and `<name>.json` into `dir`.
pub fn emit_report(
    dir: &Path,
    name: &str,
    config_text: &str,
    reports: &[ErrorReport],
    traces: &[TraceSeries],
    fits: &[NamedFit],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HomogError::io(dir, e))?;
    let csv = dir.join(format!("{name}.csv"));
    write_file(&csv, &reports_csv(reports))?;
    let trace = dir.join(format!("{name}_trace.csv"));
    write_file(&trace, &traces_csv(traces))?;
    let summary = Summary {
        name: name.to_string(),
        config_hash: config_hash(config_text),
        schema: CSV_HEADER.split(',').map(String::from).collect(),
        environment: Environment::current(),
        fits: fits.to_vec(),
        runs: reports.to_vec(),
    };
    let json = dir.join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(&summary).expect("summary serialises");
    write_file(&json, &(text + "\n"))?;
    Ok(vec![csv, trace, json])
}
