//! Executes an experiment: pre-flight sizing, the (case × method × N) run
//! matrix on a worker pool, reference selection and report emission.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{
    emit_report, fem_system_size, fit_reference, kappa_fem, kappa_ffth, matvec_ops, memory_count, tabulated_reference,
    CsrStats, ErrorReport, Method, NamedFit, ReferenceSource, TraceSeries,
};
use crate::error::{HomogError, Result};
use crate::fem::{build_mesh, solve_fem, FemOptions, FemSpace};
use crate::ffth::{gani_posteriori_bound, solve_ffth, system_size, Variant};
use crate::grid::GridShape;
use crate::linalg::CgOptions;
use crate::materials::Geometry;

use super::config::{Case, ExperimentConfig};

/// Fixed allowance for the process itself (code, thread stacks, allocator).
const BASELINE_BYTES: u64 = 8 << 20;

/// One solve. GaNi and its bound come from the same solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Task {
    pub case: usize,
    pub kind: TaskKind,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Ga,
    GaNi { plain: bool, bound: bool },
    Fem(usize),
}

impl TaskKind {
    fn methods(&self) -> Vec<Method> {
        match *self {
            TaskKind::Ga => vec![Method::FfthGa],
            TaskKind::GaNi { plain, bound } => {
                let mut m = Vec::new();
                if plain {
                    m.push(Method::FfthGaNi);
                }
                if bound {
                    m.push(Method::FfthGaNiBound);
                }
                m
            }
            TaskKind::Fem(1) => vec![Method::FemP1],
            TaskKind::Fem(_) => vec![Method::FemP2],
        }
    }

    pub fn label(&self) -> String {
        self.methods().iter().map(|m| m.name()).collect::<Vec<_>>().join("+")
    }
}

/// Runs in config order: cases, then methods in listed order, then grids.
pub fn plan(cfg: &ExperimentConfig, cases: &[Case]) -> Vec<Task> {
    let has = |m: Method| cfg.methods.contains(&m);
    let mut tasks = Vec::new();
    for (ci, case) in cases.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for &m in &cfg.methods {
            let kind = match m {
                Method::FfthGa => TaskKind::Ga,
                Method::FfthGaNi | Method::FfthGaNiBound => TaskKind::GaNi {
                    plain: has(Method::FfthGaNi),
                    bound: has(Method::FfthGaNiBound),
                },
                Method::FemP1 => TaskKind::Fem(1),
                Method::FemP2 => TaskKind::Fem(2),
            };
            if !seen.insert(kind.label()) {
                continue;
            }
            let grids = if m.is_fem() { &case.fem_grids } else { &case.ffth_grids };
            tasks.extend(grids.iter().map(|&n| Task { case: ci, kind, n }));
        }
    }
    tasks
}

/// Stiffness nonzeros of a full periodic FEM system, from the stencil of
/// a small mesh; the pattern is translation invariant so the count per
/// lattice point is exact for any `n`.
pub fn fem_nnz(d: usize, n: usize, p: usize) -> Result<u64> {
    let n0 = n.min(4);
    let space = FemSpace::new(build_mesh(d, n0)?, p)?;
    let mesh = space.mesh();
    let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); space.num_dofs_full()];
    for e in 0..mesh.num_elements() {
        let dofs = space.element_dofs(&mesh.element(e));
        for &i in &dofs {
            rows[i].extend(dofs.iter().copied());
        }
    }
    let nnz0: u64 = rows.iter().map(|r| r.len() as u64).sum();
    let scale = ((n * p) as u64).pow(d as u32) as f64 / ((n0 * p) as u64).pow(d as u32) as f64;
    Ok((nnz0 as f64 * scale).round() as u64)
}

/// Size, memory count and per-matvec operations of a task before running it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub size: u64,
    pub memory: u64,
    pub ops: f64,
    /// Peak resident bytes of the solve.
    pub bytes: u64,
}

pub fn estimate(cfg: &ExperimentConfig, d: usize, task: &Task) -> Result<Estimate> {
    let n = task.n;
    let g = |m: usize| (m as u64).pow(d as u32);
    let dd = d as u64;
    // Lanczos keeps its whole basis for reorthogonalisation
    let lanczos = |dim: u64| if cfg.kappa { dim.min(cfg.lanczos_iters as u64) * dim * 8 } else { 0 };
    // material tensor, six CG vectors, complex FFT buffers per component
    let working = |grid: u64| grid * (8 * dd * dd + 48 * dd + 16 * dd + 16 + 8 * dd) + lanczos(dd * grid);
    Ok(match task.kind {
        TaskKind::Ga => Estimate {
            size: system_size(d, n).reduced,
            memory: memory_count(Method::FfthGa, d, n, None)?,
            ops: matvec_ops(Method::FfthGa, d, n, None)?,
            bytes: working(g(2 * n - 1)),
        },
        TaskKind::GaNi { bound, .. } => {
            let solve = working(g(n));
            // bound: exact material, padded field and its spectrum on 2N - 1
            let post = g(n) * 8 * dd + g(2 * n - 1) * (8 * dd * dd + 40 * dd);
            Estimate {
                size: system_size(d, n).reduced,
                memory: memory_count(Method::FfthGaNi, d, n, None)?,
                ops: matvec_ops(Method::FfthGaNi, d, n, None)?,
                bytes: if bound { solve.max(post) } else { solve },
            }
        }
        TaskKind::Fem(p) => {
            let rows = fem_system_size(d, n, p);
            let nnz = fem_nnz(d, n, p)?;
            let factor = if cfg.precondition { Some((nnz + rows) / 2) } else { None };
            let stats = CsrStats { rows, nnz, factor_nnz: factor };
            let elements = g(n) * (1..=dd).product::<u64>();
            let local = if p == 1 { dd + 1 } else { (dd + 1) * (dd + 2) / 2 };
            // assembly: per-row column lists with duplicates (plus growth
            // slack) next to the final pattern
            let assembly = 16 * elements * local * local + 16 * nnz;
            // full and reduced CSR, factor, vectors
            let steady = 32 * nnz + factor.map_or(0, |f| 16 * f) + 100 * rows + lanczos(rows);
            Estimate {
                size: rows,
                memory: memory_count(Method::FemP1, d, n, Some(&stats))?,
                ops: matvec_ops(Method::FemP1, d, n, Some(&stats))?,
                bytes: assembly.max(steady),
            }
        }
    })
}

/// Available memory from `/proc/meminfo`, when readable.
fn available_bytes() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = text.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Peak resident set size of this process, on Linux.
pub fn peak_resident_bytes() -> Option<u64> {
    let text = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = text.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

pub struct Preflight {
    pub rows: Vec<(Task, Estimate)>,
    /// Peak estimate with `threads` tasks in flight.
    pub peak_bytes: u64,
    pub limit_bytes: Option<u64>,
}

pub fn preflight(cfg: &ExperimentConfig, cases: &[Case], threads: usize) -> Result<Preflight> {
    let tasks = plan(cfg, cases);
    let rows = tasks
        .iter()
        .map(|t| Ok((*t, estimate(cfg, cases[t.case].d, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut sizes: Vec<u64> = rows.iter().map(|r| r.1.bytes).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let peak_bytes = BASELINE_BYTES + sizes.iter().take(threads.max(1)).sum::<u64>();
    let limit_bytes = cfg.max_memory_mb.map(|mb| (mb * 1048576.0) as u64).or_else(available_bytes);
    Ok(Preflight {
        rows,
        peak_bytes,
        limit_bytes,
    })
}

impl Preflight {
    /// Tasks that do not fit the limit even when run alone.
    pub fn infeasible(&self) -> Vec<&(Task, Estimate)> {
        match self.limit_bytes {
            Some(limit) => self.rows.iter().filter(|r| BASELINE_BYTES + r.1.bytes > limit).collect(),
            None => Vec::new(),
        }
    }

    pub fn table(&self, cases: &[Case]) -> String {
        let mut out = String::from("case  d  geometry  method                    N  size        memory      est. MiB\n");
        for (t, e) in &self.rows {
            let c = &cases[t.case];
            let _ = writeln!(
                out,
                "{:<5} {}  {:<9} {:<24} {:>4}  {:<11} {:<11} {:.1}",
                t.case,
                c.d,
                c.geometry_name(),
                t.kind.label(),
                t.n,
                e.size,
                e.memory,
                e.bytes as f64 / 1048576.0
            );
        }
        let _ = writeln!(out, "peak estimate {:.1} MiB", self.peak_bytes as f64 / 1048576.0);
        if let Some(l) = self.limit_bytes {
            let _ = writeln!(out, "limit {:.1} MiB", l as f64 / 1048576.0);
        }
        out
    }
}

struct TaskOutput {
    reports: Vec<ErrorReport>,
    traces: Vec<TraceSeries>,
}

fn blank_report(method: Method, case: &Case, n: usize) -> ErrorReport {
    ErrorReport {
        method,
        d: case.d,
        n,
        p: method.order(),
        rho: case.rho(),
        geometry: case.geometry_name().to_string(),
        value: f64::NAN,
        reference: None,
        ref_source: ReferenceSource::None,
        sq_error: None,
        clamped: false,
        size: 0,
        memory: 0,
        ops: 0.0,
        kappa: None,
        iters: 0,
    }
}

fn run_task(cfg: &ExperimentConfig, seed: u64, case: &Case, task: &Task) -> Result<TaskOutput> {
    let d = case.d;
    let n = task.n;
    let est = estimate(cfg, d, task)?;
    let cg = CgOptions {
        rtol: cfg.rtol,
        max_iter: cfg.max_iter,
        energy_offset: 0.0,
    };
    let mut reports = Vec::new();
    let mut traces = Vec::new();
    match task.kind {
        TaskKind::Ga | TaskKind::GaNi { .. } => {
            let variant = if task.kind == TaskKind::Ga { Variant::Ga } else { Variant::GaNi };
            let sol = solve_ffth(&case.spec, &GridShape::cube(d, n)?, variant, &cg)?;
            let kappa = cfg.kappa.then(|| kappa_ffth(&sol.operator, cfg.lanczos_iters, seed).kappa());
            let iters = sol.trace.iterations();
            let matvecs = sol.operator.matvec_count() as f64;
            for m in task.kind.methods() {
                let mut r = blank_report(m, case, n);
                r.value = match m {
                    Method::FfthGaNiBound => gani_posteriori_bound(&case.spec, &sol.field)?,
                    _ => sol.value,
                };
                r.size = est.size;
                r.memory = est.memory;
                r.ops = est.ops * matvecs;
                r.kappa = kappa;
                r.iters = iters;
                reports.push(r);
            }
            if cfg.traces {
                let m = task.kind.methods()[0];
                traces.push(TraceSeries::new(m, d, n, None, &sol.trace, sol.value));
            }
        }
        TaskKind::Fem(p) => {
            let opts = FemOptions {
                cg,
                precondition: cfg.precondition,
            };
            let sol = solve_fem(&case.spec, n, p, &opts)?;
            let mut stats = CsrStats::of(&sol.matrix);
            stats.factor_nnz = sol.preconditioner.as_ref().map(|f| f.nnz() as u64);
            let m = task.kind.methods()[0];
            let mut r = blank_report(m, case, n);
            r.value = sol.value;
            r.size = stats.rows;
            r.memory = memory_count(m, d, n, Some(&stats))?;
            r.ops = matvec_ops(m, d, n, Some(&stats))? * sol.trace.records.last().map_or(0, |t| t.matvecs) as f64;
            r.kappa = cfg.kappa.then(|| kappa_fem(&sol, cfg.lanczos_iters, seed).kappa());
            r.iters = sol.trace.iterations();
            reports.push(r);
            if cfg.traces {
                traces.push(TraceSeries::new(m, d, n, Some(p), &sol.trace, sol.value));
            }
        }
    }
    Ok(TaskOutput { reports, traces })
}

/// Picks the reference for one case: exact for a homogeneous medium, the
/// tabulated value when the case is listed, otherwise the in-repo fit of the
/// bound-producing series with the lowest finest value.
fn assign_references(case: &Case, reports: &mut [ErrorReport], fits: &mut Vec<NamedFit>, warnings: &mut Vec<String>) {
    let analytic = !matches!(case.spec.geometry(), Geometry::Voxel(_));
    let mut methods: Vec<Method> = reports.iter().map(|r| r.method).collect();
    methods.dedup();
    let mut best: Option<(f64, f64)> = None;
    for m in methods.into_iter().filter(|m| m.is_bound()) {
        let points: Vec<(f64, f64)> = reports
            .iter()
            .filter(|r| r.method == m)
            .map(|r| (r.n as f64, r.value))
            .collect();
        if points.len() < 4 {
            continue;
        }
        match fit_reference(&points) {
            Ok(fit) => {
                let finest = points.iter().fold((0.0, f64::INFINITY), |a, p| if p.0 > a.0 { *p } else { a }).1;
                if best.is_none_or(|b| finest < b.0) {
                    best = Some((finest, fit.limit));
                }
                if let Some(w) = &fit.warning {
                    warnings.push(format!("{} {} d={}: {w}", case.geometry_name(), m.name(), case.d));
                }
                fits.push(NamedFit {
                    d: case.d,
                    geometry: case.geometry_name().to_string(),
                    rho: case.rho(),
                    method: m,
                    fit,
                });
            }
            Err(e) => warnings.push(format!("{} {} d={}: fit failed: {e}", case.geometry_name(), m.name(), case.d)),
        }
    }
    let reference = if analytic && case.spec.contrast() == 0.0 {
        Some((case.spec.mean_a11(), ReferenceSource::Exact))
    } else if let Some(v) = analytic.then(|| tabulated_reference(case.d, case.geometry_name(), case.rho())).flatten() {
        Some((v, ReferenceSource::Table))
    } else {
        best.map(|b| (b.1, ReferenceSource::Fit))
    };
    if let Some((v, src)) = reference {
        for r in reports.iter_mut() {
            r.set_reference(v, src);
        }
    }
}

pub struct RunOutcome {
    pub reports: Vec<ErrorReport>,
    pub fits: Vec<NamedFit>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Runs every task on the current rayon pool and writes the report files.
pub fn execute(cfg: &ExperimentConfig, config_text: &str, cases: &[Case], seed: u64, out: &Path) -> Result<RunOutcome> {
    let tasks = plan(cfg, cases);
    let outputs: Vec<Result<TaskOutput>> = tasks
        .par_iter()
        .map(|t| run_task(cfg, seed, &cases[t.case], t))
        .collect();
    let mut per_case: Vec<Vec<ErrorReport>> = vec![Vec::new(); cases.len()];
    let mut traces = Vec::new();
    for (t, o) in tasks.iter().zip(outputs) {
        let o = o.map_err(|e| tag(e, cases, t))?;
        per_case[t.case].extend(o.reports);
        traces.extend(o.traces);
    }
    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    for (case, mut rs) in cases.iter().zip(per_case) {
        assign_references(case, &mut rs, &mut fits, &mut warnings);
        reports.extend(rs);
    }
    // fold the effective seed into the hash so --seed overrides are recorded
    let hashed = format!("{config_text}\n# seed {seed}\n");
    let files = emit_report(out, &cfg.name, &hashed, &reports, &traces, &fits)?;
    Ok(RunOutcome {
        reports,
        fits,
        files,
        warnings,
    })
}

fn tag(e: HomogError, cases: &[Case], t: &Task) -> HomogError {
    match e {
        HomogError::NonConvergence { .. } | HomogError::Indefinite { .. } | HomogError::FactorBreakdown { .. } => {
            eprintln!(
                "solver failure in case {} ({}, d={}), {} N={}",
                t.case,
                cases[t.case].geometry_name(),
                cases[t.case].d,
                t.kind.label(),
                t.n
            );
            e
        }
        e => e,
    }
}
