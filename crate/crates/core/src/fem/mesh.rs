//! Regular periodic simplicial meshes of the cell `[-1/2, 1/2)^d`.
//!
//! Each of the `N^d` cubes is split by the Kuhn (Freudenthal)
//! triangulation: for every permutation `π` of the axes, the simplex with
//! vertices `c, c + e_π(1), c + e_π(1) + e_π(2), ...`. This gives 2
//! triangles per square and 6 tetrahedra per cube, and because the split is
//! translation invariant the faces match across the periodic boundary.

use crate::error::{HomogError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMesh {
    d: usize,
    n: usize,
    perms: Vec<Vec<usize>>,
}

/// One simplex, described by its cube and the axis order of its path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Simplex<'a> {
    pub cube: [usize; 3],
    pub perm: &'a [usize],
}

pub fn build_mesh(d: usize, n: usize) -> Result<PeriodicMesh> {
    if !(2..=3).contains(&d) {
        return Err(HomogError::InvalidArgument(format!("dimension must be 2 or 3, got {d}")));
    }
    if n < 2 {
        return Err(HomogError::InvalidArgument(format!("need at least 2 elements per axis, got {n}")));
    }
    Ok(PeriodicMesh {
        d,
        n,
        perms: permutations(d),
    })
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 2 {
        vec![vec![0, 1], vec![1, 0]]
    } else {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    }
}

impl PeriodicMesh {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Elements per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_cubes(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn simplices_per_cube(&self) -> usize {
        self.perms.len()
    }

    pub fn num_elements(&self) -> usize {
        self.num_cubes() * self.perms.len()
    }

    /// Distinct vertices after periodic identification.
    pub fn num_vertices(&self) -> usize {
        self.num_cubes()
    }

    pub fn cube_index(&self, mut flat: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in (0..self.d).rev() {
            c[a] = flat % self.n;
            flat /= self.n;
        }
        c
    }

    pub fn element(&self, e: usize) -> Simplex<'_> {
        let per = self.perms.len();
        Simplex {
            cube: self.cube_index(e / per),
            perm: &self.perms[e % per],
        }
    }

    /// Unwrapped lattice coordinates (in units of `1/N`, origin at the
    /// cell corner) of the simplex's `d + 1` vertices.
    pub fn lattice_vertices(&self, s: &Simplex<'_>) -> Vec<[usize; 3]> {
        let mut v = s.cube;
        let mut out = vec![v];
        for &axis in s.perm {
            v[axis] += 1;
            out.push(v);
        }
        out
    }

    /// Physical vertex coordinates `-1/2 + i/N`.
    pub fn coordinates(&self, s: &Simplex<'_>) -> Vec<Vec<f64>> {
        self.lattice_vertices(s)
            .iter()
            .map(|v| (0..self.d).map(|a| -0.5 + v[a] as f64 / self.n as f64).collect())
            .collect()
    }

    /// Identified vertex id of a lattice point (row-major, last axis fastest).
    pub fn vertex_id(&self, v: &[usize; 3]) -> usize {
        (0..self.d).fold(0, |acc, a| acc * self.n + v[a] % self.n)
    }

    /// Every Kuhn simplex has volume `1 / (d! N^d)`.
    pub fn element_volume(&self) -> f64 {
        1.0 / (self.perms.len() as f64 * self.num_cubes() as f64)
    }
}

/// Volume of a simplex from its vertex coordinates.
pub fn simplex_volume(vertices: &[Vec<f64>]) -> f64 {
    let d = vertices.len() - 1;
    let m: Vec<Vec<f64>> = (1..=d)
        .map(|i| (0..d).map(|a| vertices[i][a] - vertices[0][a]).collect())
        .collect();
    let det = if d == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    det.abs() / fact
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeSet, HashMap};

    #[test]
    fn counts() {
        let m = build_mesh(2, 10).unwrap();
        assert_eq!(m.num_elements(), 200);
        let mut ids = BTreeSet::new();
        for e in 0..m.num_elements() {
            for v in m.lattice_vertices(&m.element(e)) {
                ids.insert(m.vertex_id(&v));
            }
        }
        assert_eq!(ids.len(), 100);
        assert_eq!(build_mesh(3, 2).unwrap().num_elements(), 48);
        assert!(build_mesh(2, 1).is_err());
        assert!(build_mesh(4, 3).is_err());
    }

    #[test]
    fn volumes_partition_the_cell() {
        for (d, n) in [(2, 7), (3, 4)] {
            let m = build_mesh(d, n).unwrap();
            let total: f64 = (0..m.num_elements()).map(|e| simplex_volume(&m.coordinates(&m.element(e)))).sum();
            assert!((total - 1.0).abs() < 1e-14);
            let v = simplex_volume(&m.coordinates(&m.element(0)));
            assert!((v - m.element_volume()).abs() < 1e-16);
        }
    }

    #[test]
    fn faces_match_periodically() {
        // every facet, after identification, is shared by exactly two simplices
        for (d, n) in [(2, 3), (3, 3)] {
            let m = build_mesh(d, n).unwrap();
            let mut facets: HashMap<Vec<usize>, usize> = HashMap::new();
            for e in 0..m.num_elements() {
                let ids: Vec<usize> = m.lattice_vertices(&m.element(e)).iter().map(|v| m.vertex_id(v)).collect();
                for skip in 0..=d {
                    let mut f: Vec<usize> = ids.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
                    f.sort_unstable();
                    *facets.entry(f).or_default() += 1;
                }
            }
            assert!(facets.values().all(|&c| c == 2), "d={d}");
        }
    }
}
