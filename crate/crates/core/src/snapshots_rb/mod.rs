//! Full-order snapshots on a parameter sample and the X-orthonormal reduced basis.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cases::CaseDefinition;
use crate::mesh_fem::{fom_solve_continuation, AffineOperators, FESpace, FemError, NewtonConfig};
use crate::numerics::{read_romx_file, write_romx_file, DenseMatrix};

#[derive(Debug, Error)]
pub enum RbError {
    #[error("no snapshot survived orthonormalization")]
    RankDeficient { surviving: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveMeta {
    pub iterations: usize,
    pub final_step: f64,
}

#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub mus: Vec<Vec<f64>>,
    /// One nodal vector per parameter point, in sample order.
    pub columns: Vec<Vec<f64>>,
    pub meta: Vec<SolveMeta>,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Memoizes FOM solves by `(case, mesh, tolerance, μ)`; optionally mirrored to a
/// directory of ROMX files so repeated runs skip the solves.
#[derive(Debug, Default)]
pub struct FomCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, (Vec<f64>, SolveMeta)>>,
}

impl FomCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self { dir: Some(dir.into()), memory: Mutex::new(HashMap::new()) }
    }

    /// Directory from `HYPERROM_CACHE` when set, memory only otherwise.
    pub fn from_env() -> Self {
        match std::env::var_os("HYPERROM_CACHE") {
            Some(d) if !d.is_empty() => Self::with_dir(PathBuf::from(d)),
            _ => Self::in_memory(),
        }
    }

    fn key(space: &FESpace, case: &CaseDefinition, cfg: &NewtonConfig, mu: &[f64]) -> String {
        let mut h = Sha256::new();
        h.update(case.name.as_str().as_bytes());
        for v in [space.dim, space.nx, space.ny, space.p, space.quad_order, cfg.max_iter] {
            h.update((v as u64).to_le_bytes());
        }
        h.update(cfg.tol.to_le_bytes());
        for m in mu {
            h.update(m.to_le_bytes());
        }
        let digest = h.finalize();
        digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
    }

    pub fn solve(
        &self,
        space: &FESpace,
        case: &CaseDefinition,
        ops: &AffineOperators,
        mu: &[f64],
        cfg: NewtonConfig,
    ) -> Result<(Vec<f64>, SolveMeta), FemError> {
        let key = Self::key(space, case, &cfg, mu);
        if let Some(hit) = self.memory.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("fom_{key}.romx"));
            if let Ok(m) = read_romx_file(&path) {
                if m.rows() == 1 && m.cols() == space.n_nodes() + 2 {
                    let data = m.into_vec();
                    let meta = SolveMeta { iterations: data[0] as usize, final_step: data[1] };
                    let out = (data[2..].to_vec(), meta);
                    self.memory.lock().unwrap().insert(key, out.clone());
                    return Ok(out);
                }
            }
        }
        let sol = fom_solve_continuation(space, case, ops, mu, cfg)?;
        let meta = SolveMeta { iterations: sol.iterations, final_step: sol.final_step };
        if let Some(dir) = &self.dir {
            let mut row = vec![sol.iterations as f64, sol.final_step];
            row.extend_from_slice(&sol.nodal);
            // the cache is an optimization; a failed write only costs a future re-solve
            if std::fs::create_dir_all(dir).is_ok() {
                let m = DenseMatrix::from_row_major(1, row.len(), row).expect("shape");
                let _ = write_romx_file(dir.join(format!("fom_{key}.romx")), &m);
            }
        }
        self.memory.lock().unwrap().insert(key, (sol.nodal.clone(), meta));
        Ok((sol.nodal, meta))
    }
}

/// Solves the FOM at every point of `mus`, in order. Independent solves run in
/// parallel when the `parallel` feature is on.
pub fn compute_snapshots(
    space: &FESpace,
    case: &CaseDefinition,
    ops: &AffineOperators,
    mus: &[Vec<f64>],
    cfg: NewtonConfig,
    cache: &FomCache,
) -> Result<SnapshotSet, FemError> {
    let solve = |mu: &Vec<f64>| cache.solve(space, case, ops, mu, cfg);
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        mus.par_iter().map(solve).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = mus.iter().map(solve).collect();
    let mut columns = Vec::with_capacity(mus.len());
    let mut meta = Vec::with_capacity(mus.len());
    for r in results {
        let (c, m) = r?;
        columns.push(c);
        meta.push(m);
    }
    Ok(SnapshotSet { mus: mus.to_vec(), columns, meta })
}

/// X-orthonormal reduced basis with its traces at the quadrature points.
#[derive(Debug, Clone)]
pub struct RBSpace {
    /// Orthonormal basis functions as nodal vectors.
    pub basis: Vec<Vec<f64>>,
    /// Indices of snapshots rejected as numerically dependent.
    pub rejected: Vec<usize>,
    /// `values[(q, j)] = ζ_j(x_q)`.
    pub values: DenseMatrix,
    /// `grads[d][(q, j)] = ∂_d ζ_j(x_q)`.
    pub grads: [DenseMatrix; 2],
}

impl RBSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Nodal field `Σ α_j ζ_j`.
    pub fn reconstruct(&self, alpha: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.basis.first().map_or(0, |b| b.len())];
        for (a, z) in alpha.iter().zip(&self.basis) {
            for (ui, zi) in u.iter_mut().zip(z) {
                *ui += a * zi;
            }
        }
        u
    }

    pub fn max_gram_defect(&self, space: &FESpace, ops: &AffineOperators) -> f64 {
        let dofs: Vec<Vec<f64>> = self.basis.iter().map(|b| space.dofs_from_nodal(b)).collect();
        let mut worst = 0.0f64;
        for i in 0..dofs.len() {
            let ai = ops.x_matrix.matvec(&dofs[i]);
            for (j, dj) in dofs.iter().enumerate() {
                let g: f64 = ai.iter().zip(dj).map(|(a, b)| a * b).sum();
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - t).abs());
            }
        }
        worst
    }

    /// X-orthogonal projection coefficients `(u, ζ_j)_X`.
    pub fn project(&self, space: &FESpace, ops: &AffineOperators, nodal: &[f64]) -> Vec<f64> {
        let au = ops.x_matrix.matvec(&space.dofs_from_nodal(nodal));
        self.basis.iter().map(|z| space.dofs_from_nodal(z).iter().zip(&au).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Modified Gram-Schmidt in the X inner product with one re-orthogonalization
/// pass. Columns whose projected norm drops below `1e-10` of their original norm
/// are rejected and reported in [`RBSpace::rejected`].
pub fn orthonormalize_rb(space: &FESpace, ops: &AffineOperators, columns: &[Vec<f64>]) -> Result<RBSpace, RbError> {
    let xdot = |a: &[f64], ab: &[f64]| -> f64 { a.iter().zip(ab).map(|(x, y)| x * y).sum() };
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut abasis: Vec<Vec<f64>> = Vec::new();
    let mut rejected = Vec::new();
    for (k, col) in columns.iter().enumerate() {
        let mut v = space.dofs_from_nodal(col);
        let orig = xdot(&v, &ops.x_matrix.matvec(&v)).max(0.0).sqrt();
        for _ in 0..2 {
            for (z, az) in basis.iter().zip(&abasis) {
                let c = xdot(&v, az);
                for (vi, zi) in v.iter_mut().zip(z) {
                    *vi -= c * zi;
                }
            }
        }
        let av = ops.x_matrix.matvec(&v);
        let nrm = xdot(&v, &av).max(0.0).sqrt();
        if orig == 0.0 || nrm < 1e-10 * orig {
            rejected.push(k);
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nrm);
        abasis.push(av.iter().map(|x| x / nrm).collect());
        basis.push(v);
    }
    if basis.is_empty() {
        return Err(RbError::RankDeficient { surviving: 0 });
    }
    let nodal: Vec<Vec<f64>> = basis.iter().map(|b| space.nodal_from_dofs(b)).collect();
    let n = nodal.len();
    let nq = space.n_quad();
    let mut values = DenseMatrix::zeros(nq, n);
    let mut gx = DenseMatrix::zeros(nq, n);
    let mut gy = DenseMatrix::zeros(nq, n);
    for (j, z) in nodal.iter().enumerate() {
        let v = space.values_at_quadrature(z);
        let [dx, dy] = space.gradients_at_quadrature(z);
        for q in 0..nq {
            values[(q, j)] = v[q];
            gx[(q, j)] = dx[q];
            gy[(q, j)] = dy[q];
        }
    }
    Ok(RBSpace { basis: nodal, rejected, values, grads: [gx, gy] })
}
