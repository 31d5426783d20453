//! Memory and operation counts of one solver iteration.

use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "FFTH-Ga")]
    FfthGa,
    #[serde(rename = "FFTH-GaNi")]
    FfthGaNi,
    #[serde(rename = "FFTH-GaNi-bound")]
    FfthGaNiBound,
    #[serde(rename = "FEM-p1")]
    FemP1,
    #[serde(rename = "FEM-p2")]
    FemP2,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::FfthGa, Method::FfthGaNi, Method::FfthGaNiBound, Method::FemP1, Method::FemP2];

    pub fn name(&self) -> &'static str {
        match self {
            Method::FfthGa => "FFTH-Ga",
            Method::FfthGaNi => "FFTH-GaNi",
            Method::FfthGaNiBound => "FFTH-GaNi-bound",
            Method::FemP1 => "FEM-p1",
            Method::FemP2 => "FEM-p2",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(s))
    }

    pub fn is_fem(&self) -> bool {
        matches!(self, Method::FemP1 | Method::FemP2)
    }

    /// Element order for FEM methods.
    pub fn order(&self) -> Option<usize> {
        match self {
            Method::FemP1 => Some(1),
            Method::FemP2 => Some(2),
            _ => None,
        }
    }

    /// Whether the reported value is a guaranteed upper bound.
    pub fn is_bound(&self) -> bool {
        !matches!(self, Method::FfthGaNi)
    }
}

/// Storage statistics of an assembled FEM system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CsrStats {
    pub rows: u64,
    pub nnz: u64,
    /// Nonzeros of the incomplete factor, when preconditioned.
    pub factor_nnz: Option<u64>,
}

impl CsrStats {
    pub fn of(a: &crate::linalg::CsrMatrix) -> Self {
        CsrStats {
            rows: a.nrows() as u64,
            nnz: a.nnz() as u64,
            factor_nnz: None,
        }
    }
}

fn pow(n: u64, d: usize) -> u64 {
    n.pow(d as u32)
}

/// `(2d + 2d²) N^d` for GaNi, `2d N^d + d² N^d + d² (2N-1)^d` for Ga.
pub fn memory_ffth(ga: bool, d: usize, n: usize) -> u64 {
    let (d, nd, dd) = (d as u64, pow(n as u64, d), pow(2 * n as u64 - 1, d));
    if ga {
        2 * d * nd + d * d * nd + d * d * dd
    } else {
        (2 * d + 2 * d * d) * nd
    }
}

/// `nnz u + nnz b + 2 nnz A + rank A`, vectors stored densely and the
/// reduced matrix nonsingular.
pub fn memory_fem(stats: &CsrStats) -> u64 {
    stats.rows + stats.rows + 2 * stats.nnz + stats.rows
}

pub fn memory_count(method: Method, d: usize, n: usize, csr: Option<&CsrStats>) -> Result<u64> {
    match method {
        Method::FfthGa => Ok(memory_ffth(true, d, n)),
        Method::FfthGaNi | Method::FfthGaNiBound => Ok(memory_ffth(false, d, n)),
        Method::FemP1 | Method::FemP2 => csr
            .map(memory_fem)
            .ok_or_else(|| HomogError::InvalidArgument("FEM memory needs CSR statistics".into())),
    }
}

/// Floating point operations of one operator application.
pub fn matvec_ops(method: Method, d: usize, n: usize, csr: Option<&CsrStats>) -> Result<f64> {
    let df = d as f64;
    let nd = pow(n as u64, d) as f64;
    let dd = pow(2 * n as u64 - 1, d) as f64;
    match method {
        Method::FfthGa => Ok(df * df * dd + df * df * nd + 5.0 * df * dd * dd.log2()),
        Method::FfthGaNi | Method::FfthGaNiBound => Ok(2.0 * df * df * nd + 5.0 * df * nd * nd.log2()),
        Method::FemP1 | Method::FemP2 => {
            let s = csr.ok_or_else(|| HomogError::InvalidArgument("FEM operation count needs CSR statistics".into()))?;
            Ok(2.0 * s.nnz as f64 + s.factor_nnz.map_or(0.0, |l| 2.0 * l as f64))
        }
    }
}

/// FEM system size `(Np)^d - 1`.
pub fn fem_system_size(d: usize, n: usize, p: usize) -> u64 {
    pow((n * p) as u64, d) - 1
}
