use crate::cases::{CaseDefinition, Order, Target};

use super::InterpError;

/// Snapshots of a nonlinear target at every candidate point, stored column-major
/// (`n_cand` rows, one column per snapshot function).
#[derive(Debug, Clone)]
pub struct NonlinearSnapshotSet {
    pub target: Target,
    pub order: usize,
    pub n_cand: usize,
    pub data: Vec<f64>,
    /// Expansion indices `(m, n, k)` of each column (`k = n` for order <= 1,
    /// `m = k = n` for order 0).
    pub indices: Vec<(usize, usize, usize)>,
}

impl NonlinearSnapshotSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_cand..(k + 1) * self.n_cand]
    }
}

/// Above this many samples the second-order set is thinned.
const FULL_SECOND_ORDER_MAX_N: usize = 20;
const MAX_SECOND_ORDER_SNAPSHOTS: usize = 20_000;

/// Index triples `(m, n, k)` in column order: `m` fastest, then `n`, then `k`.
fn expansion_indices(order: usize, n: usize) -> Vec<(usize, usize, usize)> {
    match order {
        0 => (0..n).map(|i| (i, i, i)).collect(),
        1 => {
            let mut v = Vec::with_capacity(n * n);
            for b in 0..n {
                for a in 0..n {
                    v.push((a, b, b));
                }
            }
            v
        }
        _ => {
            let keep = |stride: usize, b: usize, k: usize| k == b || k % stride == 0;
            let count = |stride: usize| {
                let mut c = 0;
                for k in 0..n {
                    for b in 0..n {
                        if keep(stride, b, k) {
                            c += n;
                        }
                    }
                }
                c
            };
            let mut stride = 1;
            if n > FULL_SECOND_ORDER_MAX_N {
                stride = 2;
                while count(stride) > MAX_SECOND_ORDER_SNAPSHOTS {
                    stride += 1;
                }
            }
            let mut v = Vec::new();
            for k in 0..n {
                for b in 0..n {
                    if !keep(stride, b, k) {
                        continue;
                    }
                    for a in 0..n {
                        v.push((a, b, k));
                    }
                }
            }
            v
        }
    }
}

struct Expansion {
    h: Vec<f64>,
    hu: Vec<f64>,
    huu: Vec<f64>,
    hmu: Vec<Vec<f64>>,
    hmumu: Vec<Vec<Vec<f64>>>,
}

fn expansion_at(
    case: &CaseDefinition,
    target: Target,
    order: usize,
    zeta: &[f64],
    mu: &[f64],
) -> Result<Expansion, InterpError> {
    let np = case.n_params();
    let eval = |o: Order| -> Result<Vec<f64>, InterpError> {
        zeta.iter()
            .map(|&u| {
                case.eval_target(target, u, mu, o).map_err(|e| InterpError::DerivativeUnavailable(e.to_string()))
            })
            .collect()
    };
    let unit = |i: usize| {
        let mut d = [0usize; 2];
        d[i] += 1;
        d
    };
    let h = eval(Order::default())?;
    let (mut hu, mut huu, mut hmu, mut hmumu) = (vec![], vec![], vec![], vec![]);
    if order >= 1 {
        hu = eval(Order::new(1, [0, 0]))?;
        hmu = (0..np).map(|i| eval(Order::new(0, unit(i)))).collect::<Result<_, _>>()?;
    }
    if order >= 2 {
        huu = eval(Order::new(2, [0, 0]))?;
        hmumu = (0..np)
            .map(|i| {
                (0..np)
                    .map(|j| {
                        let mut d = unit(i);
                        d[j] += 1;
                        eval(Order::new(0, d))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
    }
    Ok(Expansion { h, hu, huu, hmu, hmumu })
}

/// Lagrange-Taylor snapshots of `target` built from the raw FOM snapshots
/// `zeta[n]` (values at the candidate points) at parameters `mus[n]`.
///
/// Order 0 gives `ξ_n = h(ζ_n, μ_n)`; order 1 adds the first-order expansion of
/// `h` at `(ζ_n, μ_n)` evaluated at `(ζ_m, μ_m)`; order 2 adds the pure second
/// derivatives in `u` and `μ` with the third index `k`.
pub fn taylor_snapshots(
    case: &CaseDefinition,
    target: Target,
    order: usize,
    zeta: &[Vec<f64>],
    mus: &[Vec<f64>],
) -> Result<NonlinearSnapshotSet, InterpError> {
    if order > 2 {
        return Err(InterpError::DerivativeUnavailable(format!("Taylor order {order}")));
    }
    let n = zeta.len();
    let n_cand = zeta.first().map_or(0, |z| z.len());
    let exps = (0..n).map(|i| expansion_at(case, target, order, &zeta[i], &mus[i])).collect::<Result<Vec<_>, _>>()?;
    let indices = expansion_indices(order, n);
    let mut data = vec![0.0; n_cand * indices.len()];
    let np = case.n_params();
    let fill = |(col, &(m, b, k)): (&mut [f64], &(usize, usize, usize))| {
        let e = &exps[b];
        col.copy_from_slice(&e.h);
        if order == 0 || m == b && k == b {
            return;
        }
        let dmu_m: Vec<f64> = (0..np).map(|i| mus[m][i] - mus[b][i]).collect();
        let dmu_k: Vec<f64> = (0..np).map(|i| mus[k][i] - mus[b][i]).collect();
        for x in 0..n_cand {
            let zb = zeta[b][x];
            let dm = zeta[m][x] - zb;
            let mut v = e.h[x] + e.hu[x] * dm;
            for i in 0..np {
                v += e.hmu[i][x] * dmu_m[i];
            }
            if order == 2 {
                let dk = zeta[k][x] - zb;
                v += 0.5 * e.huu[x] * dk * dm;
                for i in 0..np {
                    for j in 0..np {
                        v += 0.5 * dmu_k[i] * e.hmumu[i][j][x] * dmu_m[j];
                    }
                }
            }
            col[x] = v;
        }
    };
    if n_cand > 0 {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            data.par_chunks_mut(n_cand).zip(indices.par_iter()).for_each(fill);
        }
        #[cfg(not(feature = "parallel"))]
        data.chunks_mut(n_cand).zip(indices.iter()).for_each(fill);
    }
    Ok(NonlinearSnapshotSet { target, order, n_cand, data, indices })
}
