//! Built-in experiment configurations.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig3-2d",
        summary: "error vs. system size and memory, 2-d square, rho = 100, all methods",
        config: r#"name = "fig3-2d"
d = 2
geometry = "square"
rho = 100.0
methods = ["FFTH-Ga", "FFTH-GaNi", "FFTH-GaNi-bound", "FEM-p1", "FEM-p2"]
ffth_grids = [5, 15, 45, 135]
fem_grids = [10, 20, 40, 80]
"#,
    },
    Preset {
        name: "fig3-3d",
        summary: "error vs. system size and memory, 3-d square, rho = 100, short schedules",
        config: r#"name = "fig3-3d"
d = 3
geometry = "square"
rho = 100.0
methods = ["FFTH-Ga", "FFTH-GaNi-bound", "FEM-p1", "FEM-p2"]
ffth_grids = [5, 15, 25]
fem_grids = [10, 20]
"#,
    },
    Preset {
        name: "fig4-cond",
        summary: "condition number estimates vs. DOFs in 2-d, both shapes, rho = 10 and 100",
        config: r#"name = "fig4-cond"
methods = ["FFTH-Ga", "FFTH-GaNi", "FEM-p1"]
ffth_grids = [15, 45, 135]
fem_grids = [10, 20, 40]
kappa = true

[[case]]
d = 2
geometry = "square"
rho = 10.0

[[case]]
d = 2
geometry = "pyramid"
rho = 10.0

[[case]]
d = 2
geometry = "square"
rho = 100.0

[[case]]
d = 2
geometry = "pyramid"
rho = 100.0
"#,
    },
    Preset {
        name: "fig5-cond",
        summary: "condition number estimates vs. DOFs in 3-d with IC(0) preconditioned FEM",
        config: r#"name = "fig5-cond"
methods = ["FFTH-Ga", "FEM-p1"]
ffth_grids = [5, 15]
fem_grids = [10, 20]
kappa = true
precondition = true

[[case]]
d = 3
geometry = "square"
rho = 10.0

[[case]]
d = 3
geometry = "pyramid"
rho = 100.0
"#,
    },
    Preset {
        name: "fig6-cg",
        summary: "algebraic error per CG iteration, 2-d pyramid, rho = 100",
        config: r#"name = "fig6-cg"
d = 2
geometry = "pyramid"
rho = 100.0
methods = ["FFTH-Ga", "FEM-p1"]
ffth_grids = [135]
fem_grids = [80]
traces = true
"#,
    },
    Preset {
        name: "fig7-ops",
        summary: "error vs. operation count, 2-d pyramid, rho = 100",
        config: r#"name = "fig7-ops"
d = 2
geometry = "pyramid"
rho = 100.0
methods = ["FFTH-Ga", "FFTH-GaNi-bound", "FEM-p1", "FEM-p2"]
ffth_grids = [5, 15, 45, 135]
fem_grids = [10, 20, 40, 80]
"#,
    },
    Preset {
        name: "circle",
        summary: "2-d disk inclusion; FEM with outer approximation of the boundary",
        config: r#"name = "circle"
d = 2
geometry = "circle"
radius = 0.3
rho = 10.0
methods = ["FFTH-Ga", "FFTH-GaNi-bound", "FEM-p1"]
ffth_grids = [5, 15, 45, 135]
fem_grids = [10, 20, 40, 80]
"#,
    },
    Preset {
        name: "voxel-synthetic",
        summary: "seeded porous 45^3 image, bound chain and accounting",
        config: r#"name = "voxel-synthetic"
d = 3
geometry = "voxel"
voxel = { resolution = 45, porosity = 0.2 }
methods = ["FFTH-Ga", "FFTH-GaNi", "FFTH-GaNi-bound", "FEM-p1"]
ffth_grids = [45]
fem_grids = [45]
"#,
    },
    Preset {
        name: "table-aeff",
        summary: "extrapolated homogenised coefficients for the 2-d reference cases",
        config: r#"name = "table-aeff"
methods = ["FFTH-Ga", "FEM-p2"]
ffth_grids = [5, 15, 45, 135]
fem_grids = [10, 20, 40, 80]

[[case]]
d = 2
geometry = "square"
rho = 10.0

[[case]]
d = 2
geometry = "pyramid"
rho = 10.0

[[case]]
d = 2
geometry = "square"
rho = 100.0

[[case]]
d = 2
geometry = "pyramid"
rho = 100.0
"#,
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
