//! Experiment configuration.
//!
//! A config is TOML. Unknown keys are rejected. One experiment runs a list
//! of cases; each case is a material (dimension, geometry, contrast)
//! solved by every listed method on that method's grid schedule. The
//! top-level `d`/`geometry`/`rho` keys describe a single case when no
//! `[[case]]` tables are given.
//!
//! ```toml
//! name = "square-2d"
//! d = 2
//! geometry = "square"          # square | pyramid | circle | voxel
//! rho = 100.0
//! methods = ["FFTH-Ga", "FFTH-GaNi-bound", "FEM-p1"]
//! ffth_grids = [5, 15, 45]     # odd
//! fem_grids = [10, 20, 40]     # multiples of 10 (of the resolution for voxels)
//! rtol = 1e-8
//! precondition = false         # IC(0) for FEM
//! kappa = false                # Lanczos condition estimates
//! traces = false               # per-iteration CSV
//! seed = 0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Method;
use crate::error::{HomogError, Result};
use crate::materials::{synthetic_voxels, Geometry, MaterialSpec, VoxelImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Square,
    Pyramid,
    Circle,
    Voxel,
}

/// Source of a voxel image: a header file, or a synthetic porous medium
/// generated from the experiment seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoxelConfig {
    pub path: Option<PathBuf>,
    pub resolution: Option<usize>,
    pub porosity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub d: usize,
    pub geometry: GeometryKind,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub voxel: Option<VoxelConfig>,
    #[serde(default)]
    pub ffth_grids: Option<Vec<usize>>,
    #[serde(default)]
    pub fem_grids: Option<Vec<usize>>,
}

fn default_rtol() -> f64 {
    1e-8
}

fn default_lanczos() -> usize {
    80
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub geometry: Option<GeometryKind>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub voxel: Option<VoxelConfig>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub ffth_grids: Vec<usize>,
    #[serde(default)]
    pub fem_grids: Vec<usize>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub precondition: bool,
    #[serde(default)]
    pub kappa: bool,
    #[serde(default = "default_lanczos")]
    pub lanczos_iters: usize,
    #[serde(default)]
    pub traces: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Pre-flight limit; defaults to the available system memory.
    #[serde(default)]
    pub max_memory_mb: Option<f64>,
    #[serde(default, rename = "case")]
    pub cases: Vec<CaseConfig>,
}

/// A case with schedules resolved and its material built.
#[derive(Debug, Clone)]
pub struct Case {
    pub d: usize,
    pub spec: MaterialSpec,
    pub ffth_grids: Vec<usize>,
    pub fem_grids: Vec<usize>,
}

impl Case {
    pub fn geometry_name(&self) -> &'static str {
        self.spec.geometry().name()
    }

    /// The contrast column: `ρ`, or the conductivity ratio of a voxel image.
    pub fn rho(&self) -> f64 {
        match self.spec.geometry() {
            Geometry::Voxel(img) => {
                let (lo, hi) = img.value_range();
                hi / lo
            }
            _ => self.spec.contrast(),
        }
    }
}

fn config_err(msg: impl Into<String>) -> HomogError {
    HomogError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(&text)?, text))
    }

    fn case_configs(&self) -> Result<Vec<CaseConfig>> {
        let top = self.d.is_some() || self.geometry.is_some();
        match (top, self.cases.is_empty()) {
            (true, true) => Ok(vec![CaseConfig {
                d: self.d.ok_or_else(|| config_err("missing key `d`"))?,
                geometry: self.geometry.ok_or_else(|| config_err("missing key `geometry`"))?,
                rho: self.rho,
                radius: self.radius,
                voxel: self.voxel.clone(),
                ffth_grids: None,
                fem_grids: None,
            }]),
            (false, false) => Ok(self.cases.clone()),
            (true, false) => Err(config_err("give either top-level d/geometry or [[case]] tables, not both")),
            (false, true) => Err(config_err("no case: set d and geometry")),
        }
    }

    /// Schema checks that need no material construction.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(config_err(format!("name `{}` must be nonempty [A-Za-z0-9._-]", self.name)));
        }
        if self.methods.is_empty() {
            return Err(config_err("`methods` is empty"));
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(config_err(format!("rtol must lie in (0, 1), got {}", self.rtol)));
        }
        if self.kappa && self.lanczos_iters < 2 {
            return Err(config_err("lanczos_iters must be at least 2"));
        }
        for c in self.case_configs()? {
            if !(2..=3).contains(&c.d) {
                return Err(config_err(format!("d must be 2 or 3, got {}", c.d)));
            }
            let voxel = c.geometry == GeometryKind::Voxel;
            if !voxel && c.rho.is_none_or(|r| !(r >= 0.0 && r.is_finite())) {
                return Err(config_err("`rho` must be given and nonnegative for analytic geometries"));
            }
            if voxel && c.voxel.is_none() {
                return Err(config_err("voxel geometry needs a [voxel] table"));
            }
            if c.geometry == GeometryKind::Circle && c.radius.is_none() {
                return Err(config_err("circle geometry needs `radius`"));
            }
            let ffth = c.ffth_grids.as_ref().unwrap_or(&self.ffth_grids);
            let fem = c.fem_grids.as_ref().unwrap_or(&self.fem_grids);
            if self.methods.iter().any(|m| !m.is_fem()) && ffth.is_empty() {
                return Err(config_err("Fourier methods requested but `ffth_grids` is empty"));
            }
            if self.methods.iter().any(|m| m.is_fem()) && fem.is_empty() {
                return Err(config_err("FEM methods requested but `fem_grids` is empty"));
            }
            if let Some(&n) = ffth.iter().find(|&&n| n % 2 == 0 || n < 3) {
                return Err(config_err(format!("Fourier grid N = {n} must be odd and >= 3")));
            }
            if !voxel {
                if let Some(&n) = fem.iter().find(|&&n| n == 0 || n % 10 != 0) {
                    return Err(config_err(format!("FEM mesh N = {n} must be a positive multiple of 10")));
                }
            }
        }
        Ok(())
    }

    /// Builds the materials, generating or reading voxel images.
    pub fn cases(&self, seed: u64) -> Result<Vec<Case>> {
        let mut out = Vec::new();
        for c in self.case_configs()? {
            let geometry = match c.geometry {
                GeometryKind::Square => Geometry::Square,
                GeometryKind::Pyramid => Geometry::Pyramid,
                GeometryKind::Circle => Geometry::Circle {
                    radius: c.radius.expect("validated"),
                },
                GeometryKind::Voxel => Geometry::Voxel(load_voxels(c.d, c.voxel.as_ref().expect("validated"), seed)?),
            };
            let spec = match geometry {
                Geometry::Voxel(img) => MaterialSpec::voxel(img),
                g => MaterialSpec::new(c.d, c.rho.expect("validated"), g),
            }
            .map_err(|e| config_err(e.to_string()))?;
            let case = Case {
                d: c.d,
                spec,
                ffth_grids: c.ffth_grids.clone().unwrap_or_else(|| self.ffth_grids.clone()),
                fem_grids: c.fem_grids.clone().unwrap_or_else(|| self.fem_grids.clone()),
            };
            if let Geometry::Voxel(img) = case.spec.geometry() {
                check_voxel_schedules(&case, img)?;
            }
            out.push(case);
        }
        Ok(out)
    }
}

fn load_voxels(d: usize, v: &VoxelConfig, seed: u64) -> Result<VoxelImage> {
    let img = match (&v.path, v.resolution, v.porosity) {
        (Some(path), None, None) => VoxelImage::read(path).map_err(|e| config_err(e.to_string()))?,
        (None, Some(r), Some(p)) => synthetic_voxels(d, r, p, seed).map_err(|e| config_err(e.to_string()))?,
        _ => return Err(config_err("[voxel] takes either `path`, or `resolution` and `porosity`")),
    };
    if img.dim() != d {
        return Err(config_err(format!("voxel image is {}-d, case is {d}-d", img.dim())));
    }
    Ok(img)
}

fn check_voxel_schedules(case: &Case, img: &VoxelImage) -> Result<()> {
    let res = img.resolution();
    if res.iter().any(|&r| r != res[0]) {
        return Err(config_err("voxel images must be cubic to use uniform schedules"));
    }
    let r = res[0];
    if let Some(&n) = case.ffth_grids.iter().find(|&&n| n != r) {
        return Err(config_err(format!("Fourier grid N = {n} must equal the voxel resolution {r}")));
    }
    if let Some(&n) = case.fem_grids.iter().find(|&&n| n == 0 || n % r != 0) {
        return Err(config_err(format!("FEM mesh N = {n} must be a multiple of the voxel resolution {r}")));
    }
    Ok(())
}
