//! Voxel images: piecewise-constant isotropic conductivity on a regular
//! partition of the cell.
//!
//! On disk an image is a JSON header plus a raw `u8` phase payload in
//! x-fastest order (first axis fastest). Voxel `i` on an axis of `R` voxels
//! covers `[-1/2 + i/R, -1/2 + (i+1)/R)`, so for odd `R` its centre is the
//! grid point with signed index `i - (R-1)/2`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};
use crate::grid::{DftPlan, FreqIndex, GridShape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoxelHeader {
    pub dims: Vec<usize>,
    pub dtype: String,
    pub byte_order: String,
    /// Phase id (as a decimal string, JSON keys are strings) to conductivity.
    pub phases: BTreeMap<String, f64>,
    /// Payload file, relative to the header's directory.
    pub data: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelImage {
    resolution: Vec<usize>,
    /// Phase per voxel, x-fastest.
    phases: Vec<u8>,
    conductivity: BTreeMap<u8, f64>,
    /// Conductivity per voxel in grid storage order (see [`crate::grid`]).
    grid_values: Vec<f64>,
}

impl VoxelImage {
    pub fn new(resolution: &[usize], phases: Vec<u8>, conductivity: BTreeMap<u8, f64>) -> Result<Self> {
        let shape = GridShape::new(resolution)?;
        if !shape.is_odd() {
            return Err(HomogError::InvalidArgument(format!(
                "voxel resolution must be odd per axis, got {resolution:?}"
            )));
        }
        if phases.len() != shape.len() {
            return Err(HomogError::shape(&[shape.len()], &[phases.len()]));
        }
        for (p, a) in &conductivity {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(HomogError::InvalidArgument(format!(
                    "phase {p} has non-positive conductivity {a}"
                )));
            }
        }
        if let Some(p) = phases.iter().find(|p| !conductivity.contains_key(p)) {
            return Err(HomogError::InvalidArgument(format!("phase {p} has no conductivity")));
        }
        let mut grid_values = vec![0.0; shape.len()];
        for (xf, p) in phases.iter().enumerate() {
            grid_values[grid_slot(&shape, xf)] = conductivity[p];
        }
        Ok(VoxelImage {
            resolution: resolution.to_vec(),
            phases,
            conductivity,
            grid_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn phases(&self) -> &[u8] {
        &self.phases
    }

    pub fn conductivity(&self) -> &BTreeMap<u8, f64> {
        &self.conductivity
    }

    /// Fraction of voxels in each phase.
    pub fn phase_fractions(&self) -> BTreeMap<u8, f64> {
        let mut out: BTreeMap<u8, f64> = self.conductivity.keys().map(|&p| (p, 0.0)).collect();
        let w = 1.0 / self.phases.len() as f64;
        for p in &self.phases {
            *out.get_mut(p).unwrap() += w;
        }
        out
    }

    /// Smallest and largest conductivity present in the image.
    pub fn value_range(&self) -> (f64, f64) {
        self.grid_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Voxel containing `x`, per axis.
    pub fn cell_of(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .zip(&self.resolution)
            .map(|(&xi, &r)| {
                let t = xi + 0.5;
                let t = t - t.floor();
                ((t * r as f64).floor() as usize).min(r - 1)
            })
            .collect()
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        let cell = self.cell_of(x);
        let mut xf = 0;
        for a in (0..self.dim()).rev() {
            xf = xf * self.resolution[a] + cell[a];
        }
        self.conductivity[&self.phases[xf]]
    }

    /// Exact `∫ a(x) e^{-2πik·x} dx`.
    pub fn fourier_coeff(&self, k: &FreqIndex) -> Complex64 {
        let r: Vec<f64> = self.resolution.iter().map(|&r| r as f64).collect();
        let mut sum = Complex64::new(0.0, 0.0);
        let shape = GridShape::new(&self.resolution).expect("validated");
        shape.for_each_index(|flat, m| {
            let phase: f64 = m.iter().zip(&k.0).zip(&r).map(|((mi, ki), ri)| (mi * ki) as f64 / ri).sum();
            sum += self.grid_values[flat] * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
        });
        sum * cell_factor(k, &self.resolution)
    }

    /// Exact coefficients on every frequency of `shape`, written to `out`
    /// in storage order. The voxel sum is periodic in `k` with period `R`,
    /// so one DFT of the image serves any target grid.
    pub(crate) fn fourier_coeffs_on(&self, shape: &GridShape, out: &mut [Complex64]) {
        let own = GridShape::new(&self.resolution).expect("validated");
        let mut dft: Vec<Complex64> = self.grid_values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        // forward_scalar divides by |R|; undo it to get the plain sum
        DftPlan::new(&own).forward_scalar(&mut dft);
        let scale = own.len() as f64;
        shape.for_each_index(|flat, k| {
            let mut src = 0usize;
            for (a, &ka) in k.iter().enumerate() {
                let r = self.resolution[a];
                src = src * r + ka.rem_euclid(r as i64) as usize;
            }
            out[flat] = dft[src] * scale * cell_factor(&FreqIndex::new(k), &self.resolution);
        });
    }

    pub fn read(header_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(header_path).map_err(|e| HomogError::io(header_path, e))?;
        let header: VoxelHeader = serde_json::from_str(&text)
            .map_err(|e| HomogError::Config(format!("{}: {e}", header_path.display())))?;
        if header.dtype != "u8" {
            return Err(HomogError::Config(format!("unsupported voxel dtype {:?}", header.dtype)));
        }
        if header.byte_order != "little" {
            return Err(HomogError::Config(format!("unsupported byte order {:?}", header.byte_order)));
        }
        let mut conductivity = BTreeMap::new();
        for (k, v) in &header.phases {
            let p: u8 = k
                .parse()
                .map_err(|_| HomogError::Config(format!("phase id {k:?} is not a u8")))?;
            conductivity.insert(p, *v);
        }
        let data_path = payload_path(header_path, &header.data);
        let phases = std::fs::read(&data_path).map_err(|e| HomogError::io(&data_path, e))?;
        Self::new(&header.dims, phases, conductivity)
    }

    /// Writes `<stem>.json` and `<stem>.raw` into `dir`; returns the header path.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let header = VoxelHeader {
            dims: self.resolution.clone(),
            dtype: "u8".into(),
            byte_order: "little".into(),
            phases: self.conductivity.iter().map(|(p, a)| (p.to_string(), *a)).collect(),
            data: format!("{stem}.raw"),
        };
        let header_path = dir.join(format!("{stem}.json"));
        let data_path = dir.join(&header.data);
        std::fs::write(&data_path, &self.phases).map_err(|e| HomogError::io(&data_path, e))?;
        let text = serde_json::to_string_pretty(&header).expect("header serialises");
        std::fs::write(&header_path, text).map_err(|e| HomogError::io(&header_path, e))?;
        Ok(header_path)
    }
}

fn payload_path(header_path: &Path, data: &str) -> PathBuf {
    match header_path.parent() {
        Some(dir) => dir.join(data),
        None => PathBuf::from(data),
    }
}

/// `∏_α sin(π k_α / R_α) / (π k_α)`, `1/R_α` at `k_α = 0`: transform of
/// one voxel's indicator, centred at the origin.
fn cell_factor(k: &FreqIndex, resolution: &[usize]) -> f64 {
    k.0.iter()
        .zip(resolution)
        .map(|(&ka, &r)| {
            if ka == 0 {
                1.0 / r as f64
            } else {
                let pk = std::f64::consts::PI * ka as f64;
                (pk / r as f64).sin() / pk
            }
        })
        .product()
}

/// Grid storage slot of the voxel with x-fastest flat index `xf`.
fn grid_slot(shape: &GridShape, mut xf: usize) -> usize {
    let dims = shape.dims();
    let mut cell = vec![0usize; dims.len()];
    for (a, c) in cell.iter_mut().enumerate() {
        *c = xf % dims[a];
        xf /= dims[a];
    }
    let mut flat = 0;
    for (a, &i) in cell.iter().enumerate() {
        let r = dims[a];
        let m = i as i64 - (r as i64 - 1) / 2;
        flat = flat * r + m.rem_euclid(r as i64) as usize;
    }
    flat
}

/// Two-phase periodic microstructure: a matrix (phase 1) with randomly
/// placed overlapping spherical pores (phase 0) until the pore fraction
/// reaches `porosity`. Conductivities follow aerated fly-ash concrete,
/// 0.49 for the solid and 0.026 for the pores.
pub fn synthetic_voxels(d: usize, resolution: usize, porosity: f64, seed: u64) -> Result<VoxelImage> {
    if !(0.0..1.0).contains(&porosity) {
        return Err(HomogError::InvalidArgument(format!("porosity must lie in [0, 1), got {porosity}")));
    }
    let shape = GridShape::cube(d, resolution)?;
    let n = shape.len();
    let r = resolution as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phases = vec![1u8; n];
    let mut pores = 0usize;
    let target = (porosity * n as f64).round() as usize;
    let mut cell = vec![0usize; d];
    while pores < target {
        let centre: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..r)).collect();
        let radius = rng.gen_range(0.04..0.12) * r;
        let reach = radius.ceil() as i64;
        // visit the bounding box of the ball, wrapping periodically
        let span = (2 * reach + 1) as usize;
        let count = span.pow(d as u32);
        for o in 0..count {
            let mut rem = o;
            let mut dist2 = 0.0;
            for a in 0..d {
                let off = (rem % span) as i64 - reach;
                rem /= span;
                let c = centre[a].floor() as i64 + off;
                let dx = c as f64 + 0.5 - centre[a];
                dist2 += dx * dx;
                cell[a] = c.rem_euclid(resolution as i64) as usize;
            }
            if dist2 > radius * radius {
                continue;
            }
            let mut xf = 0;
            for a in (0..d).rev() {
                xf = xf * resolution + cell[a];
            }
            if phases[xf] == 1 {
                phases[xf] = 0;
                pores += 1;
                if pores >= target {
                    break;
                }
            }
        }
    }
    let conductivity = BTreeMap::from([(0u8, 0.026), (1u8, 0.49)]);
    VoxelImage::new(shape.dims(), phases, conductivity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VoxelImage {
        // 3x5 image with x-fastest payload
        let phases = vec![0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1, 0];
        VoxelImage::new(&[3, 5], phases, BTreeMap::from([(0, 1.0), (1, 4.0)])).unwrap()
    }

    #[test]
    fn coefficients_match_cellwise_integration() {
        // each voxel is a box: integrate e^{-2πik·x} over it in closed form
        let img = small();
        let res = img.resolution().to_vec();
        let one_d = |k: i64, lo: f64, hi: f64| -> Complex64 {
            if k == 0 {
                Complex64::new(hi - lo, 0.0)
            } else {
                let w = -2.0 * std::f64::consts::PI * k as f64;
                (Complex64::from_polar(1.0, w * hi) - Complex64::from_polar(1.0, w * lo)) / Complex64::new(0.0, w)
            }
        };
        let grid = GridShape::new(&[7, 9]).unwrap();
        let mut fast = vec![Complex64::new(0.0, 0.0); grid.len()];
        img.fourier_coeffs_on(&grid, &mut fast);
        grid.for_each_index(|flat, k| {
            let mut want = Complex64::new(0.0, 0.0);
            for i0 in 0..res[0] {
                for i1 in 0..res[1] {
                    let a = img.conductivity()[&img.phases()[i0 + res[0] * i1]];
                    let lo0 = -0.5 + i0 as f64 / res[0] as f64;
                    let lo1 = -0.5 + i1 as f64 / res[1] as f64;
                    want += a
                        * one_d(k[0], lo0, lo0 + 1.0 / res[0] as f64)
                        * one_d(k[1], lo1, lo1 + 1.0 / res[1] as f64);
                }
            }
            let direct = img.fourier_coeff(&FreqIndex::new(k));
            assert!((direct - want).norm() < 1e-14, "{k:?}");
            assert!((fast[flat] - want).norm() < 1e-14, "{k:?}");
        });
    }

    #[test]
    fn point_values_follow_voxel_centres() {
        let img = small();
        let shape = GridShape::new(&[3, 5]).unwrap();
        for flat in 0..shape.len() {
            let x = shape.point(flat);
            assert_eq!(img.value_at(&x), img.grid_values[flat]);
        }
        // x-fastest: voxel (1, 0) is payload entry 1
        assert_eq!(img.value_at(&[0.0, -0.45]), 4.0);
    }

    #[test]
    fn roundtrip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let img = synthetic_voxels(3, 9, 0.3, 7).unwrap();
        let path = img.write(dir.path(), "sample").unwrap();
        let back = VoxelImage::read(&path).unwrap();
        assert_eq!(back, img);
        let raw = std::fs::read(dir.path().join("sample.raw")).unwrap();
        assert_eq!(raw.len(), 729);
    }

    #[test]
    fn rejects_bad_input() {
        let table = BTreeMap::from([(0u8, 1.0)]);
        assert!(VoxelImage::new(&[4, 5], vec![0; 20], table.clone()).is_err());
        assert!(VoxelImage::new(&[3, 3], vec![0; 8], table.clone()).is_err());
        assert!(VoxelImage::new(&[3, 3], vec![1; 9], table).is_err());
        assert!(VoxelImage::new(&[3, 3], vec![0; 9], BTreeMap::from([(0u8, -1.0)])).is_err());
    }

    #[test]
    fn generator_is_seeded_and_hits_the_porosity() {
        let a = synthetic_voxels(3, 15, 0.4, 11).unwrap();
        let b = synthetic_voxels(3, 15, 0.4, 11).unwrap();
        let c = synthetic_voxels(3, 15, 0.4, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.phases(), c.phases());
        let frac = a.phase_fractions()[&0];
        assert!((frac - 0.4).abs() < 1.0 / 3375.0 + 1e-12);
        assert_eq!(a.value_range(), (0.026, 0.49));
    }
}
