//! Reduced operators and the online Newton solvers: the Galerkin reference (GN),
//! hyperreduction before linearization (H-GN) and after it (GN-H).

mod artifacts;
mod offline;
mod online;

pub use artifacts::{load_artifacts, save_artifacts, ArtifactMeta};
pub use offline::{offline_assemble, reduce_affine};
pub use online::{hgn_system, online_gn_reference, online_gnh, online_hgn, online_solve, point_values, residual_estimate};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cases::{CaseError, CaseName, Target};
use crate::interp::{InterpError, RankPolicy};
use crate::mesh_fem::FemError;
use crate::numerics::{DenseMatrix, NumericsError};
use crate::snapshots_rb::RbError;

#[derive(Debug, Error)]
pub enum RomError {
    #[error("missing interpolation system for {0}")]
    MissingSystem(String),
    #[error("reduced Newton diverged at mu = {mu:?} after {iterations} iterations (step {step:e})")]
    NewtonDiverged { mu: Vec<f64>, iterations: usize, step: f64 },
    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Rb(#[from] RbError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "GN")]
    Gn,
    #[serde(rename = "EIM-GN")]
    EimGn,
    #[serde(rename = "FOEIM-GN")]
    FoeimGn,
    #[serde(rename = "SOEIM-GN")]
    SoeimGn,
    #[serde(rename = "GN-SOEIM")]
    GnSoeim,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::EimGn, Scheme::FoeimGn, Scheme::SoeimGn, Scheme::GnSoeim, Scheme::Gn];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Gn => "GN",
            Scheme::EimGn => "EIM-GN",
            Scheme::FoeimGn => "FOEIM-GN",
            Scheme::SoeimGn => "SOEIM-GN",
            Scheme::GnSoeim => "GN-SOEIM",
        }
    }

    /// Default Taylor orders and `M / N` multipliers with `P = N`.
    pub fn spec(self) -> SchemeSpec {
        let (ro, rm, jo, jm) = match self {
            Scheme::Gn => (0, 0, 0, 0),
            Scheme::EimGn => (0, 1, 0, 0),
            Scheme::FoeimGn => (1, 2, 0, 0),
            Scheme::SoeimGn => (2, 4, 0, 0),
            Scheme::GnSoeim => (2, 8, 1, 2),
        };
        SchemeSpec {
            scheme: self,
            residual_order: ro,
            residual_mult: rm,
            jacobian_order: jo,
            jacobian_mult: jm,
            p_mult: 1,
            policy: RankPolicy::KeepM,
        }
    }

    pub fn is_gnh(self) -> bool {
        self == Scheme::GnSoeim
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// Interpolation settings of a scheme. `jacobian_mult = 0` means the Jacobian is
/// differentiated through the residual interpolant (H-GN).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub residual_order: usize,
    pub residual_mult: usize,
    pub jacobian_order: usize,
    pub jacobian_mult: usize,
    pub p_mult: usize,
    pub policy: RankPolicy,
}

/// Interpolated residual term `C h(Q α)`.
#[derive(Debug, Clone)]
pub struct HyperTerm {
    pub target: Target,
    pub m: usize,
    pub p: usize,
    /// `(M+P) × (M+P)` interpolation matrix.
    pub b: DenseMatrix,
    /// `(M+P) × N`, `ζ_j(y_i)`.
    pub q: DenseMatrix,
    /// `N × M`, the test-function moments of `ψ` times `B_M⁻¹`.
    pub c: DenseMatrix,
    pub points: Vec<usize>,
    pub coords: Vec<[f64; 2]>,
}

/// Interpolated Jacobian term `Σ_m β_m T_m` with `β = B⁻¹ h_u(Q α)`.
#[derive(Debug, Clone)]
pub struct JacobianTerm {
    pub target: Target,
    pub m: usize,
    pub b: DenseMatrix,
    pub q: DenseMatrix,
    /// `T_m[i, j] = ∫ ψ_m ζ_j v_i` with `v_i = ζ_i` for `g_u` and `∂_d ζ_i` for `f^d_u`.
    pub tensors: Vec<DenseMatrix>,
    pub points: Vec<usize>,
    pub coords: Vec<[f64; 2]>,
}

/// Reduced affine part: `A_N^q = Zᵀ A^q Z`, load and output vectors.
#[derive(Debug, Clone)]
pub struct ReducedAffine {
    pub a: Vec<DenseMatrix>,
    pub load: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RomOperators {
    pub case: CaseName,
    pub scheme: Scheme,
    pub n: usize,
    /// `[nx, ny, p, quad_order]` of the FOM the operators came from.
    pub mesh: [usize; 4],
    pub affine: ReducedAffine,
    pub residual: Vec<HyperTerm>,
    pub jacobian: Vec<JacobianTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RomSolution {
    pub mu: Vec<f64>,
    pub alpha: Vec<f64>,
    pub output: f64,
    pub iterations: usize,
    pub final_step: f64,
}

/// Online Newton settings: tolerance on `||δα||₂` and iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50 }
    }
}
