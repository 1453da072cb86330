//! High-order empirical interpolation: Lagrange-Taylor snapshot spaces, POD
//! compression, greedy point selection, interpolants and a posteriori estimates.

mod eim;
mod pod;
mod snapshots;

pub use eim::{
    eim_select, error_estimator, estimate_with_matrix, interp_coefficients, interpolate_and_error, lebesgue_constant, ErrorEstimate,
    InterpolationSystem,
};
pub use pod::{pod_compress, pod_modes, PodBasis, POD_DROP_TOL};
pub use snapshots::{taylor_snapshots, NonlinearSnapshotSet};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),
    #[error("requested {requested} modes but the numerical rank is {rank}")]
    RankCollapse { requested: usize, rank: usize },
    #[error("residual vanished after {selected} of {requested} points")]
    DegenerateResidual { selected: usize, requested: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// How `(M, P)` shrink when the snapshot rank cannot supply `M + P` functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankPolicy {
    /// Keep as much of `M` as possible; `P` takes what is left.
    KeepM,
    /// Reserve up to half the rank for `P` so the estimator stays informative.
    KeepP,
}

pub fn clamp_sizes(m: usize, p: usize, rank: usize, policy: RankPolicy) -> (usize, usize) {
    if m + p <= rank {
        return (m, p);
    }
    match policy {
        RankPolicy::KeepM => {
            let m2 = m.min(rank);
            (m2, p.min(rank - m2))
        }
        RankPolicy::KeepP => {
            let p2 = p.min(rank / 2);
            (m.min(rank - p2), p2)
        }
    }
}

/// Selects `M + P` functions, shrinking both per `policy` when the POD rank (or
/// a residual that vanishes before the rank is reached) cannot support them.
pub fn build_system(
    pod: &PodBasis,
    m: usize,
    p: usize,
    candidates: &[[f64; 2]],
    policy: RankPolicy,
) -> Result<InterpolationSystem, InterpError> {
    let mut rank = pod.len();
    loop {
        let (m2, p2) = clamp_sizes(m, p, rank, policy);
        if m2 == 0 {
            return Err(InterpError::RankCollapse { requested: m + p, rank });
        }
        match eim_select(pod, m2, p2, candidates) {
            Err(InterpError::DegenerateResidual { selected, .. }) if selected < rank => rank = selected,
            other => return other,
        }
    }
}

/// `n` equispaced candidates on `[a, b]` with trapezoid weights.
pub fn candidate_grid_1d(n: usize, a: f64, b: f64) -> (Vec<[f64; 2]>, Vec<f64>) {
    let h = (b - a) / (n - 1) as f64;
    let pts = (0..n).map(|i| [a + h * i as f64, 0.0]).collect();
    let w = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
    (pts, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamping() {
        assert_eq!(clamp_sizes(6, 3, 20, RankPolicy::KeepM), (6, 3));
        assert_eq!(clamp_sizes(12, 3, 13, RankPolicy::KeepM), (12, 1));
        assert_eq!(clamp_sizes(15, 3, 12, RankPolicy::KeepM), (12, 0));
        assert_eq!(clamp_sizes(18, 3, 18, RankPolicy::KeepP), (15, 3));
        assert_eq!(clamp_sizes(18, 3, 4, RankPolicy::KeepP), (2, 2));
    }

    #[test]
    fn trapezoid_grid() {
        let (p, w) = candidate_grid_1d(1000, 0.0, 2.0);
        assert_eq!(p[0][0], 0.0);
        assert!((p[999][0] - 2.0).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }
}
