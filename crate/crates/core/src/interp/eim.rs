use crate::cases::Target;
use crate::numerics::{solve_lower_unit, DenseMatrix};

use super::{InterpError, PodBasis};

/// Residuals below this fraction of the first sup-norm count as zero.
const DEGENERATE_TOL: f64 = 1e-12;

/// Interpolation basis `ψ_1..ψ_{M+P}` at the candidate points together with the
/// selected points and `B_ij = ψ_j(y_i)`.
#[derive(Debug, Clone)]
pub struct InterpolationSystem {
    pub target: Target,
    pub order: usize,
    pub n_cand: usize,
    pub m: usize,
    pub p: usize,
    /// Column-major, `n_cand × (m + p)`.
    pub psi: Vec<f64>,
    /// Candidate indices `y_1..y_{M+P}`.
    pub points: Vec<usize>,
    pub coords: Vec<[f64; 2]>,
    pub b: DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub estimate: f64,
    pub e: Vec<f64>,
}

impl InterpolationSystem {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn psi(&self, j: usize) -> &[f64] {
        &self.psi[j * self.n_cand..(j + 1) * self.n_cand]
    }

    /// Values of a candidate-grid field at `y_1..y_{M+P}`.
    pub fn gather(&self, field: &[f64]) -> Vec<f64> {
        self.points.iter().map(|&i| field[i]).collect()
    }

    /// `Σ β_m ψ_m` at every candidate.
    pub fn expand(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cand];
        for (j, b) in beta.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.psi(j)) {
                *o += b * v;
            }
        }
        out
    }
}

/// Greedy EIM over the first `m + p` POD modes. Each step picks the remaining
/// mode with the largest residual sup-norm, places the next point at its
/// maximiser and deflates every other residual by the new basis function.
pub fn eim_select(pod: &PodBasis, m: usize, p: usize, candidates: &[[f64; 2]]) -> Result<InterpolationSystem, InterpError> {
    let l = m + p;
    let n = pod.n_cand;
    if candidates.len() != n {
        return Err(InterpError::DimensionMismatch(format!("{} candidates for {n} mode rows", candidates.len())));
    }
    if l > pod.len() {
        return Err(InterpError::RankCollapse { requested: l, rank: pod.len() });
    }
    let mut r = pod.modes[..n * l].to_vec();
    let mut used = vec![false; l];
    let mut psi = vec![0.0; n * l];
    let mut points = Vec::with_capacity(l);
    let mut first = 0.0;
    for step in 0..l {
        let (mut best, mut jbest, mut ibest) = (-1.0, 0, 0);
        for j in (0..l).filter(|&j| !used[j]) {
            let col = &r[j * n..(j + 1) * n];
            let (mut s, mut at) = (-1.0, 0);
            for (i, v) in col.iter().enumerate() {
                if v.abs() > s {
                    s = v.abs();
                    at = i;
                }
            }
            if s > best {
                (best, jbest, ibest) = (s, j, at);
            }
        }
        if step == 0 {
            first = best;
        }
        if !(best > DEGENERATE_TOL * first) || first == 0.0 {
            return Err(InterpError::DegenerateResidual { selected: step, requested: l });
        }
        used[jbest] = true;
        let piv = r[jbest * n + ibest];
        let new: Vec<f64> = r[jbest * n..(jbest + 1) * n].iter().map(|v| v / piv).collect();
        psi[step * n..(step + 1) * n].copy_from_slice(&new);
        psi[step * n + ibest] = 1.0;
        for j in (0..l).filter(|&j| !used[j]) {
            let c = r[j * n + ibest];
            if c != 0.0 {
                for (rv, pv) in r[j * n..(j + 1) * n].iter_mut().zip(&psi[step * n..(step + 1) * n]) {
                    *rv -= c * pv;
                }
            }
            r[j * n + ibest] = 0.0;
        }
        points.push(ibest);
    }
    let b = DenseMatrix::from_fn(l, l, |i, j| if j > i { 0.0 } else { psi[j * n + points[i]] });
    Ok(InterpolationSystem {
        target: pod.target,
        order: pod.order,
        n_cand: n,
        m,
        p,
        psi,
        coords: points.iter().map(|&i| candidates[i]).collect(),
        points,
        b,
    })
}

/// `β = B_k⁻¹ v` for `k = values.len()` leading points.
pub fn interp_coefficients(system: &InterpolationSystem, values: &[f64]) -> Vec<f64> {
    solve_lower_unit(&system.b, values.len(), values)
}

/// Interpolant with `m` functions at every candidate and its sup-norm error.
pub fn interpolate_and_error(system: &InterpolationSystem, target: &[f64], m: usize) -> (Vec<f64>, f64) {
    let vals: Vec<f64> = system.points[..m].iter().map(|&i| target[i]).collect();
    let beta = interp_coefficients(system, &vals);
    let gm = system.expand(&beta);
    let err = target.iter().zip(&gm).map(|(t, g)| (t - g).abs()).fold(0.0, f64::max);
    (gm, err)
}

/// `Λ_M = max_x Σ_j |Σ_m ψ_m(x) (B_M⁻¹)_{mj}|`.
pub fn lebesgue_constant(system: &InterpolationSystem, m: usize) -> f64 {
    let n = system.n_cand;
    // column j of B_M⁻¹ gives the Lagrange function attached to y_j
    let mut sums = vec![0.0; n];
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let col = solve_lower_unit(&system.b, m, &e);
        let mut lj = vec![0.0; n];
        for (k, c) in col.iter().enumerate() {
            for (v, s) in lj.iter_mut().zip(system.psi(k)) {
                *v += c * s;
            }
        }
        for (s, v) in sums.iter_mut().zip(&lj) {
            *s += v.abs();
        }
    }
    sums.into_iter().fold(0.0, f64::max)
}

/// Estimator from the `P` extra points: interpolate with `M` functions, then
/// expand the residual at `y_{M+1..M+P}` in `ψ_{M+1..M+P}`.
pub fn error_estimator(system: &InterpolationSystem, values: &[f64], m: usize, p: usize) -> ErrorEstimate {
    estimate_with_matrix(&system.b, values, m, p)
}

/// [`error_estimator`] given only the interpolation matrix `B_{M+P}`.
pub fn estimate_with_matrix(b: &DenseMatrix, values: &[f64], m: usize, p: usize) -> ErrorEstimate {
    let beta = solve_lower_unit(b, m, &values[..m]);
    let resid: Vec<f64> =
        (0..p).map(|i| values[m + i] - (0..m).map(|k| b[(m + i, k)] * beta[k]).sum::<f64>()).collect();
    let mut e = vec![0.0; p];
    for i in 0..p {
        let mut s = resid[i];
        for j in 0..i {
            s -= b[(m + i, m + j)] * e[j];
        }
        e[i] = s;
    }
    ErrorEstimate { estimate: e.iter().map(|v| v.abs()).sum(), e }
}
