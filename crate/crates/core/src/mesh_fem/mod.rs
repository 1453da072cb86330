//! Full-order finite element model: structured meshes, tensor Lagrange bases,
//! affine operator assembly and the Newton solver.

mod fom;
mod space;

pub use fom::{
    assemble_affine, assemble_load, assemble_stiffness, fom_jacobian, fom_newton_solve, fom_output, fom_residual,
    fom_solve_continuation, x_norm, AffineOperators, FOMSolution, NewtonConfig,
};
pub use space::FESpace;

use thiserror::Error;

use crate::cases::CaseError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("polynomial degree {0} not supported (1..=3)")]
    InvalidDegree(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("case is {case}-dimensional but the space is {space}-dimensional")]
    CaseDimensionMismatch { case: usize, space: usize },
    #[error("point {0:?} lies outside the domain")]
    PointOutsideDomain([f64; 2]),
    #[error("parameter {0:?} outside the case parameter domain")]
    ParameterOutsideDomain(Vec<f64>),
    #[error("Newton diverged at mu = {mu:?} after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { mu: Vec<f64>, iterations: usize, residual: f64 },
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Structured FE space on the unit interval (`dim = 1`) or unit square (`dim = 2`).
pub fn build_fe_space(dim: usize, nx: usize, ny: usize, p: usize, quad_order: usize) -> Result<FESpace, FemError> {
    FESpace::new(dim, nx, ny, p, quad_order)
}
