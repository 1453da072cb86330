//! Deterministic dense linear algebra, banded LU, Gauss-Legendre rules and the
//! ROMX binary matrix format.
//!
//! Everything here is a pure function of its inputs. All reals are `f64`.

mod banded;
mod dense;
mod eig;
mod quadrature;
mod romx;

pub use banded::{BandedLu, BandedMatrix};
pub use dense::{dot, lu_factor, lu_factor_solve, lu_solve_vec, norm2, norm_inf, DenseMatrix, LuFactors};
pub use dense::{solve_lower_unit, solve_upper_transpose_unit};
pub use eig::{sym_eig_desc, sym_eig_jacobi, SymEigen};
pub use quadrature::{gauss_legendre_rule, QuadratureRule};
pub use romx::{read_romx, read_romx_file, write_romx, write_romx_file, ROMX_MAGIC, ROMX_VERSION};

use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("singular matrix: pivot {pivot:e} at step {step} below threshold {threshold:e}")]
    SingularMatrix { step: usize, pivot: f64, threshold: f64 },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("unsupported quadrature order {0} (supported: 1..=32)")]
    UnsupportedOrder(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("invalid ROMX data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
