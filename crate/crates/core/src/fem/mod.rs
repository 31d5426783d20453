//! Conforming periodic Lagrange finite elements of order 1 and 2.
//!
//! Degrees of freedom sit on the lattice of `Np` points per axis (vertices
//! for `p = 1`, vertices and edge midpoints for `p = 2`, which on a Kuhn
//! mesh are exactly the half-lattice points), identified periodically. The
//! DOF at lattice index 0, the cell corner, is fixed to remove the constant
//! null space; the reduced system has `(Np)^d - 1` unknowns.

pub mod mesh;
pub mod quadrature;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{HomogError, Result};
use crate::linalg::{cg, ic0_factor_shifted, CgOptions, CsrMatrix, IcPreconditioner, IterationTrace};
use crate::materials::{element_material, ElementMaterial, MaterialSpec};

pub use mesh::{build_mesh, simplex_volume, PeriodicMesh, Simplex};
use quadrature::{simplex_rule, SimplexRule};

/// Elements processed per parallel batch during assembly.
const BATCH: usize = 4096;

#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: PeriodicMesh,
    p: usize,
}

impl FemSpace {
    pub fn new(mesh: PeriodicMesh, p: usize) -> Result<Self> {
        if !(1..=2).contains(&p) {
            return Err(HomogError::InvalidArgument(format!("element order must be 1 or 2, got {p}")));
        }
        Ok(FemSpace { mesh, p })
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// DOF lattice points per axis, `Np`.
    pub fn lattice(&self) -> usize {
        self.mesh.n() * self.p
    }

    /// DOFs before eliminating the corner, `(Np)^d`.
    pub fn num_dofs_full(&self) -> usize {
        self.lattice().pow(self.dim() as u32)
    }

    /// Size of the reduced linear system, `(Np)^d - 1`.
    pub fn num_dofs(&self) -> usize {
        self.num_dofs_full() - 1
    }

    /// Local DOFs per element.
    pub fn local_dofs(&self) -> usize {
        let d = self.dim();
        if self.p == 1 {
            d + 1
        } else {
            (d + 1) * (d + 2) / 2
        }
    }

    /// Physical coordinates of DOF `id`.
    pub fn dof_point(&self, mut id: usize) -> Vec<f64> {
        let m = self.lattice();
        let mut x = vec![0.0; self.dim()];
        for a in (0..self.dim()).rev() {
            x[a] = -0.5 + (id % m) as f64 / m as f64;
            id /= m;
        }
        x
    }

    /// Global DOF ids of an element's local nodes: vertices first, then
    /// edge midpoints `(i, j)`, `i < j`, in lexicographic order.
    pub fn element_dofs(&self, s: &Simplex<'_>) -> Vec<usize> {
        let d = self.dim();
        let m = self.lattice();
        let verts = self.mesh.lattice_vertices(s);
        let id = |node: [usize; 3]| (0..d).fold(0, |acc, a| acc * m + node[a] % m);
        let mut out: Vec<usize> = verts
            .iter()
            .map(|v| {
                let mut node = [0usize; 3];
                for a in 0..d {
                    node[a] = self.p * v[a];
                }
                id(node)
            })
            .collect();
        if self.p == 2 {
            for i in 0..=d {
                for j in i + 1..=d {
                    let mut node = [0usize; 3];
                    for a in 0..d {
                        node[a] = verts[i][a] + verts[j][a];
                    }
                    out.push(id(node));
                }
            }
        }
        out
    }
}

/// Gradients of the barycentric coordinates of a simplex (constant).
pub fn barycentric_gradients(vertices: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = vertices.len() - 1;
    // columns e_j = X_j - X_0; gradients of λ_1..λ_d are the rows of E^{-1}
    let e: Vec<Vec<f64>> = (0..d).map(|a| (1..=d).map(|j| vertices[j][a] - vertices[0][a]).collect()).collect();
    let inv = invert_small(&e);
    let mut grads = vec![vec![0.0; d]; d + 1];
    for j in 1..=d {
        grads[j] = inv[j - 1].clone();
    }
    for a in 0..d {
        grads[0][a] = -(1..=d).map(|j| grads[j][a]).sum::<f64>();
    }
    grads
}

fn invert_small(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = m.len();
    if d == 2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        vec![vec![m[1][1] / det, -m[0][1] / det], vec![-m[1][0] / det, m[0][0] / det]]
    } else {
        let c = |i: usize, j: usize| {
            let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
            let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
        (0..3).map(|i| (0..3).map(|j| c(j, i) / det).collect()).collect()
    }
}

/// Gradients of the local basis at barycentric point `l`.
fn basis_gradients(p: usize, l: &[f64], grad_l: &[Vec<f64>], out: &mut Vec<Vec<f64>>) {
    let d = grad_l[0].len();
    out.clear();
    if p == 1 {
        out.extend(grad_l.iter().cloned());
        return;
    }
    for i in 0..=d {
        out.push(grad_l[i].iter().map(|g| (4.0 * l[i] - 1.0) * g).collect());
    }
    for i in 0..=d {
        for j in i + 1..=d {
            out.push((0..d).map(|a| 4.0 * (l[i] * grad_l[j][a] + l[j] * grad_l[i][a])).collect());
        }
    }
}

/// Contributions of one element: local stiffness, right-hand side
/// `-∫ A E·∇ψ_i` and `∫ A_11` for `E = e_1`.
struct ElementData {
    dofs: Vec<usize>,
    stiffness: Vec<f64>,
    rhs: Vec<f64>,
    a_ee: f64,
}

fn element_data(space: &FemSpace, spec: &MaterialSpec, e: usize, rules: &RuleCache) -> Result<ElementData> {
    let mesh = space.mesh();
    let s = mesh.element(e);
    let coords = mesh.coordinates(&s);
    let material = element_material(spec, &coords)?;
    let rule = rules.get(&material);
    let grad_l = barycentric_gradients(&coords);
    let vol = mesh.element_volume();
    let d = space.dim();
    let nloc = space.local_dofs();
    let mut stiffness = vec![0.0; nloc * nloc];
    let mut rhs = vec![0.0; nloc];
    let mut a_ee = 0.0;
    let mut grads = Vec::with_capacity(nloc);
    let mut x = vec![0.0; d];
    let mut ag = vec![0.0; d];
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        for a in 0..d {
            x[a] = (0..=d).map(|i| l[i] * coords[i][a]).sum();
        }
        let m = material.evaluate(&x);
        let wv = w * vol;
        basis_gradients(space.order(), l, &grad_l, &mut grads);
        a_ee += wv * m[0];
        for j in 0..nloc {
            for a in 0..d {
                ag[a] = (0..d).map(|b| m[a * d + b] * grads[j][b]).sum();
            }
            // (A E)·∇ψ_j = Σ_b A_b1 ∂_b ψ_j = (A ∇ψ_j)_1 by symmetry
            rhs[j] -= wv * ag[0];
            for i in 0..nloc {
                stiffness[i * nloc + j] += wv * (0..d).map(|a| grads[i][a] * ag[a]).sum::<f64>();
            }
        }
    }
    Ok(ElementData {
        dofs: space.element_dofs(&s),
        stiffness,
        rhs,
        a_ee,
    })
}

/// Quadrature rules indexed by material polynomial degree.
struct RuleCache {
    rules: Vec<SimplexRule>,
}

impl RuleCache {
    fn new(space: &FemSpace) -> Self {
        let rules = (0..=space.dim())
            .map(|deg| simplex_rule(space.dim(), deg + 2 * (space.order() - 1)))
            .collect();
        RuleCache { rules }
    }

    fn get(&self, material: &ElementMaterial) -> &SimplexRule {
        &self.rules[material.degree()]
    }
}

/// Runs `f` over all elements in parallel batches and hands the results to
/// `sink` in element order, so accumulation is bit-reproducible.
fn for_each_element(
    space: &FemSpace,
    spec: &MaterialSpec,
    mut sink: impl FnMut(ElementData),
) -> Result<()> {
    let rules = RuleCache::new(space);
    let total = space.mesh().num_elements();
    let mut start = 0;
    while start < total {
        let end = (start + BATCH).min(total);
        let batch: Vec<Result<ElementData>> =
            (start..end).into_par_iter().map(|e| element_data(space, spec, e, &rules)).collect();
        for item in batch {
            sink(item?);
        }
        start = end;
    }
    Ok(())
}

/// Full (unreduced) periodic system: singular stiffness `A` on all
/// `(Np)^d` DOFs, right-hand side `b_i = -a(E, ∇ψ_i)`, and `a(E, E)`.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub a_ee: f64,
}

impl FemSystem {
    /// Removes the corner DOF (index 0).
    pub fn reduce(&self) -> (CsrMatrix, Vec<f64>) {
        (self.matrix.without_index(0), self.rhs[1..].to_vec())
    }
}

pub fn assemble(space: &FemSpace, spec: &MaterialSpec) -> Result<FemSystem> {
    if spec.dim() != space.dim() {
        return Err(HomogError::InvalidArgument(format!(
            "{}-d mesh for a {}-d material",
            space.dim(),
            spec.dim()
        )));
    }
    let n = space.num_dofs_full();
    let nloc = space.local_dofs();

    // sparsity pattern from the connectivity alone
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mesh = space.mesh();
    for e in 0..mesh.num_elements() {
        let dofs = space.element_dofs(&mesh.element(e));
        for &i in &dofs {
            cols[i].extend_from_slice(&dofs);
        }
    }
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    for row in cols.iter_mut() {
        row.sort_unstable();
        row.dedup();
        col_idx.extend_from_slice(row);
        row_ptr.push(col_idx.len());
        *row = Vec::new();
    }
    drop(cols);
    let mut values = vec![0.0; col_idx.len()];
    let mut rhs = vec![0.0; n];
    let mut a_ee = 0.0;

    for_each_element(space, spec, |el| {
        for (li, &gi) in el.dofs.iter().enumerate() {
            rhs[gi] += el.rhs[li];
            let row = &col_idx[row_ptr[gi]..row_ptr[gi + 1]];
            for (lj, &gj) in el.dofs.iter().enumerate() {
                let pos = row.binary_search(&gj).expect("pattern covers element couplings");
                values[row_ptr[gi] + pos] += el.stiffness[li * nloc + lj];
            }
        }
        a_ee += el.a_ee;
    })?;
    Ok(FemSystem {
        matrix: CsrMatrix::from_parts(n, row_ptr, col_idx, values),
        rhs,
        a_ee,
    })
}

/// Places a reduced solution back on the full DOF set (corner value 0).
pub fn expand(u_reduced: &[f64]) -> Vec<f64> {
    let mut u = Vec::with_capacity(u_reduced.len() + 1);
    u.push(0.0);
    u.extend_from_slice(u_reduced);
    u
}

/// `a(E + ∇u, E + ∇u)` by direct element-wise quadrature; `u` holds the
/// values on all `(Np)^d` DOFs.
pub fn homogenized_value_fem(space: &FemSpace, spec: &MaterialSpec, u: &[f64]) -> Result<f64> {
    if u.len() != space.num_dofs_full() {
        return Err(HomogError::shape(&[space.num_dofs_full()], &[u.len()]));
    }
    let d = space.dim();
    let rules = RuleCache::new(space);
    let mesh = space.mesh();
    let vol = mesh.element_volume();
    let partial: Vec<Result<f64>> = (0..mesh.num_elements())
        .into_par_iter()
        .with_min_len(BATCH)
        .map(|e| {
            let s = mesh.element(e);
            let coords = mesh.coordinates(&s);
            let material = element_material(spec, &coords)?;
            let rule = rules.get(&material);
            let grad_l = barycentric_gradients(&coords);
            let dofs = space.element_dofs(&s);
            let mut grads = Vec::new();
            let mut sum = 0.0;
            let mut x = vec![0.0; d];
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                basis_gradients(space.order(), l, &grad_l, &mut grads);
                let mut g = vec![0.0; d];
                g[0] = 1.0;
                for (k, &dof) in dofs.iter().enumerate() {
                    for a in 0..d {
                        g[a] += u[dof] * grads[k][a];
                    }
                }
                for a in 0..d {
                    x[a] = (0..=d).map(|i| l[i] * coords[i][a]).sum();
                }
                let m = material.evaluate(&x);
                let q: f64 = (0..d).map(|a| g[a] * (0..d).map(|b| m[a * d + b] * g[b]).sum::<f64>()).sum();
                sum += w * vol * q;
            }
            Ok(sum)
        })
        .collect();
    // fixed-order reduction
    let mut total = 0.0;
    for p in partial {
        total += p?;
    }
    Ok(total)
}

/// The same value from the assembled system:
/// `a(E, E) - 2 b·u + u·A u`.
pub fn homogenized_value_bilinear(system: &FemSystem, u: &[f64]) -> f64 {
    let au = system.matrix.matvec(u);
    system.a_ee - 2.0 * crate::grid::dot(&system.rhs, u) + crate::grid::dot(u, &au)
}

#[derive(Debug, Clone, Copy)]
#[derive(Default)]
pub struct FemOptions {
    pub cg: CgOptions,
    pub precondition: bool,
}


#[derive(Debug, Clone)]
pub struct FemSolution {
    pub space: FemSpace,
    pub system: FemSystem,
    /// Reduced stiffness matrix, `(Np)^d - 1` rows.
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Solution on all DOFs, corner value 0.
    pub u: Vec<f64>,
    pub value: f64,
    pub trace: IterationTrace,
    pub preconditioner: Option<IcPreconditioner>,
}

/// Assembles and solves the periodic cell problem for `E = e_1`.
pub fn solve_fem(spec: &MaterialSpec, n: usize, p: usize, opts: &FemOptions) -> Result<FemSolution> {
    let space = FemSpace::new(build_mesh(spec.dim(), n)?, p)?;
    let system = assemble(&space, spec)?;
    let (matrix, rhs) = system.reduce();
    let preconditioner = if opts.precondition {
        Some(ic0_factor_shifted(&matrix)?)
    } else {
        None
    };
    let mut cg_opts = opts.cg;
    cg_opts.energy_offset = system.a_ee;
    let outcome = cg(
        &matrix,
        &rhs,
        None,
        preconditioner.as_ref().map(|m| m as &dyn crate::linalg::Preconditioner),
        &cg_opts,
    )?;
    let u = expand(&outcome.x);
    let value = homogenized_value_fem(&space, spec, &u)?;
    Ok(FemSolution {
        space,
        system,
        matrix,
        rhs,
        u,
        value,
        trace: outcome.trace,
        preconditioner,
    })
}

/// Plain-text dump for external viewers: vertex coordinates, simplices as
/// vertex ids, and DOF coordinates with values.
pub fn write_dump(path: &Path, space: &FemSpace, u: &[f64]) -> Result<()> {
    let err = |e| HomogError::io(path, e);
    let file = std::fs::File::create(path).map_err(err)?;
    let mut w = std::io::BufWriter::new(file);
    let mesh = space.mesh();
    let d = space.dim();
    let n = mesh.n();
    writeln!(w, "# vertices {}", mesh.num_vertices()).map_err(err)?;
    for v in 0..mesh.num_vertices() {
        let c = mesh.cube_index(v);
        let coords: Vec<String> = (0..d).map(|a| format!("{}", -0.5 + c[a] as f64 / n as f64)).collect();
        writeln!(w, "{}", coords.join(" ")).map_err(err)?;
    }
    writeln!(w, "# cells {}", mesh.num_elements()).map_err(err)?;
    for e in 0..mesh.num_elements() {
        let s = mesh.element(e);
        let ids: Vec<String> = mesh.lattice_vertices(&s).iter().map(|v| mesh.vertex_id(v).to_string()).collect();
        writeln!(w, "{}", ids.join(" ")).map_err(err)?;
    }
    writeln!(w, "# dofs {} order {}", space.num_dofs_full(), space.order()).map_err(err)?;
    for (i, val) in u.iter().enumerate() {
        let x: Vec<String> = space.dof_point(i).iter().map(|c| c.to_string()).collect();
        writeln!(w, "{} {:e}", x.join(" "), val).map_err(err)?;
    }
    w.flush().map_err(err)
}
