use faer::Mat;

use crate::cases::Target;
use crate::numerics::NumericsError;

use super::{InterpError, NonlinearSnapshotSet};

/// Singular values below this fraction of the largest are numerically zero.
pub const POD_DROP_TOL: f64 = 1e-14;

/// POD modes of a snapshot set, stored column-major at the candidate points and
/// scaled so that `φ_m = √λ_m ϕ_m` with `ϕ_m` orthonormal in discrete L².
#[derive(Debug, Clone)]
pub struct PodBasis {
    pub target: Target,
    pub order: usize,
    pub n_cand: usize,
    pub modes: Vec<f64>,
    /// Eigenvalues of the retained modes, descending.
    pub lambdas: Vec<f64>,
    /// Number of singular values at or above `POD_DROP_TOL · σ₁`.
    pub rank: usize,
    /// Singular values discarded as numerically zero.
    pub dropped: usize,
}

impl PodBasis {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn mode(&self, m: usize) -> &[f64] {
        &self.modes[m * self.n_cand..(m + 1) * self.n_cand]
    }

    /// Unit-norm mode `ϕ_m = φ_m / √λ_m`.
    pub fn raw_mode(&self, m: usize) -> Vec<f64> {
        let s = self.lambdas[m].sqrt();
        self.mode(m).iter().map(|v| v / s).collect()
    }
}

/// Modes from the thin SVD of `W^{1/2} Y`: with `W^{1/2} Y = U Σ Vᵀ` the
/// correlation eigenvalues are `λ_m = σ_m² / K` and `ϕ_m = W^{-1/2} u_m`. Working
/// with `σ` instead of `λ` keeps the trailing spectrum resolved to machine
/// precision. At most `cap` modes are built.
pub fn pod_modes(snaps: &NonlinearSnapshotSet, weights: &[f64], cap: usize) -> Result<PodBasis, InterpError> {
    let n = snaps.n_cand;
    let k = snaps.len();
    if weights.len() != n {
        return Err(InterpError::DimensionMismatch(format!("{} weights for {n} candidates", weights.len())));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(InterpError::DimensionMismatch("candidate weights must be positive".into()));
    }
    if k == 0 || n == 0 {
        return Err(InterpError::RankCollapse { requested: cap, rank: 0 });
    }
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let yw = Mat::<f64>::from_fn(n, k, |i, j| sw[i] * snaps.data[j * n + i]);
    let svd = yw.thin_svd().map_err(|_| NumericsError::NoConvergence)?;
    let sv = svd.S().column_vector();
    let u = svd.U();
    let dim = n.min(k);
    let s1 = sv[0];
    let rank = (0..dim).take_while(|&m| s1 > 0.0 && sv[m] >= POD_DROP_TOL * s1).count();
    let keep = rank.min(cap);
    let kf = k as f64;
    let mut modes = vec![0.0; n * keep];
    for m in 0..keep {
        let col = &mut modes[m * n..(m + 1) * n];
        for (i, c) in col.iter_mut().enumerate() {
            *c = u[(i, m)] / sw[i];
        }
        // sign: largest-magnitude entry positive
        let big = col.iter().fold(0.0f64, |a, &v| if v.abs() > a.abs() { v } else { a });
        let scale = sv[m] / kf.sqrt() * big.signum();
        col.iter_mut().for_each(|c| *c *= scale);
    }
    Ok(PodBasis {
        target: snaps.target,
        order: snaps.order,
        n_cand: n,
        modes,
        lambdas: (0..keep).map(|m| sv[m] * sv[m] / kf).collect(),
        rank,
        dropped: dim - rank,
    })
}

/// Exactly `m_total` modes, or `RankCollapse` if the numerical rank is smaller.
pub fn pod_compress(snaps: &NonlinearSnapshotSet, m_total: usize, weights: &[f64]) -> Result<PodBasis, InterpError> {
    let pod = pod_modes(snaps, weights, m_total)?;
    if pod.rank < m_total {
        return Err(InterpError::RankCollapse { requested: m_total, rank: pod.rank });
    }
    Ok(pod)
}
