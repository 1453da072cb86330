use crate::cases::{BilinearForm, CaseDefinition, Order, Term};
use crate::numerics::BandedMatrix;

use super::{FESpace, FemError};

/// μ-independent operators on the interior degrees of freedom.
#[derive(Debug, Clone)]
pub struct AffineOperators {
    /// One matrix per affine term `Θ^q(μ) a^q`.
    pub a: Vec<BandedMatrix>,
    /// Laplacian stiffness, the Gram matrix of the X inner product.
    pub x_matrix: BandedMatrix,
    pub load: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct FOMSolution {
    pub mu: Vec<f64>,
    /// Nodal coefficients with zero boundary entries.
    pub nodal: Vec<f64>,
    pub iterations: usize,
    /// X norm of the final Newton increment.
    pub final_step: f64,
    pub step_norms: Vec<f64>,
    pub residual_norms: Vec<f64>,
}

fn assemble_matrix(space: &FESpace, local: &[f64]) -> BandedMatrix {
    let bw = space.bandwidth();
    let mut m = BandedMatrix::zeros(space.n_dofs(), bw, bw);
    let nl = space.n_local();
    for c in 0..space.n_cells() {
        let dofs = space.cell_dofs(c);
        for (a, da) in dofs.iter().enumerate() {
            let Some(i) = *da else { continue };
            for (b, db) in dofs.iter().enumerate() {
                let Some(j) = *db else { continue };
                m.add(i, j, local[a * nl + b]);
            }
        }
    }
    m
}

fn local_laplacian(space: &FESpace) -> Vec<f64> {
    let nl = space.n_local();
    let nq = space.nq_cell();
    let w = &space.quad_weights()[..nq];
    let mut k = vec![0.0; nl * nl];
    for a in 0..nl {
        for b in 0..nl {
            let mut s = 0.0;
            for (q, wq) in w.iter().enumerate() {
                let (_, ax, ay) = space.basis(a, q);
                let (_, bx, by) = space.basis(b, q);
                s += wq * (ax * bx + ay * by);
            }
            k[a * nl + b] = s;
        }
    }
    k
}

pub fn assemble_stiffness(space: &FESpace) -> BandedMatrix {
    assemble_matrix(space, &local_laplacian(space))
}

/// `l_i = ∫ s φ_i` on the interior degrees of freedom.
pub fn assemble_load(space: &FESpace, source: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut l = vec![0.0; space.n_dofs()];
    let nq = space.nq_cell();
    let pts = space.quad_points();
    let w = space.quad_weights();
    for c in 0..space.n_cells() {
        let dofs = space.cell_dofs(c);
        for q in 0..nq {
            let g = c * nq + q;
            let s = source(pts[g]) * w[g];
            if s == 0.0 {
                continue;
            }
            for (a, da) in dofs.iter().enumerate() {
                if let Some(i) = *da {
                    l[i] += s * space.basis(a, q).0;
                }
            }
        }
    }
    l
}

pub fn assemble_affine(space: &FESpace, case: &CaseDefinition) -> Result<AffineOperators, FemError> {
    if case.dim != space.dim {
        return Err(FemError::CaseDimensionMismatch { case: case.dim, space: space.dim });
    }
    let x_matrix = assemble_stiffness(space);
    let a = case
        .affine
        .iter()
        .map(|f| match f {
            BilinearForm::Laplacian => x_matrix.clone(),
        })
        .collect();
    Ok(AffineOperators {
        a,
        x_matrix,
        load: assemble_load(space, |x| case.source(x)),
        output: assemble_load(space, |_| 1.0),
    })
}

fn affine_sum(ops: &AffineOperators, theta: &[f64]) -> BandedMatrix {
    let n = ops.x_matrix.dim();
    let (kl, ku) = ops.x_matrix.bandwidths();
    let mut m = BandedMatrix::zeros(n, kl, ku);
    for (a, t) in ops.a.iter().zip(theta) {
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                let v = a.get(i, j);
                if v != 0.0 {
                    m.add(i, j, t * v);
                }
            }
        }
    }
    m
}

/// Pointwise nonlinear data at the quadrature points: `g`, `f^d` and, when
/// requested, their `u` derivatives.
struct PointData {
    g: Vec<f64>,
    f: Vec<Vec<f64>>,
    gu: Vec<f64>,
    fu: Vec<Vec<f64>>,
}

fn point_data(case: &CaseDefinition, u: &[f64], mu: &[f64], derivs: bool) -> Result<PointData, FemError> {
    let n = u.len();
    let ev = |t: Term, du: usize| -> Result<Vec<f64>, FemError> {
        u.iter().map(|&v| case.eval(t, v, mu, Order::new(du, [0, 0])).map_err(FemError::from)).collect()
    };
    let zeros = || vec![0.0; n];
    Ok(PointData {
        g: if case.has_g { ev(Term::G, 0)? } else { zeros() },
        f: (0..case.n_flux).map(|d| ev(Term::F(d), 0)).collect::<Result<_, _>>()?,
        gu: if derivs && case.has_g { ev(Term::G, 1)? } else { zeros() },
        fu: if derivs { (0..case.n_flux).map(|d| ev(Term::F(d), 1)).collect::<Result<_, _>>()? } else { vec![] },
    })
}

/// `R(u) = Σ Θ^q A^q u + ∫ g(u) φ_i + ∫ f(u)·∇φ_i − l` on the interior DOFs.
pub fn fom_residual(
    space: &FESpace,
    case: &CaseDefinition,
    ops: &AffineOperators,
    mu: &[f64],
    dofs: &[f64],
) -> Result<Vec<f64>, FemError> {
    let theta = case.theta(mu);
    let mut r = vec![0.0; space.n_dofs()];
    for (a, t) in ops.a.iter().zip(&theta) {
        for (ri, v) in r.iter_mut().zip(a.matvec(dofs)) {
            *ri += t * v;
        }
    }
    for (ri, l) in r.iter_mut().zip(&ops.load) {
        *ri -= l;
    }
    if !case.has_g && case.n_flux == 0 {
        return Ok(r);
    }
    let uq = space.values_at_quadrature(&space.nodal_from_dofs(dofs));
    let pd = point_data(case, &uq, mu, false)?;
    let nq = space.nq_cell();
    let w = space.quad_weights();
    for c in 0..space.n_cells() {
        let cd = space.cell_dofs(c);
        for q in 0..nq {
            let k = c * nq + q;
            let (gw, f0, f1) = (
                pd.g[k] * w[k],
                pd.f.first().map_or(0.0, |f| f[k] * w[k]),
                pd.f.get(1).map_or(0.0, |f| f[k] * w[k]),
            );
            for (a, da) in cd.iter().enumerate() {
                if let Some(i) = *da {
                    let (v, dx, dy) = space.basis(a, q);
                    r[i] += gw * v + f0 * dx + f1 * dy;
                }
            }
        }
    }
    Ok(r)
}

/// Exact Jacobian of [`fom_residual`].
pub fn fom_jacobian(
    space: &FESpace,
    case: &CaseDefinition,
    ops: &AffineOperators,
    mu: &[f64],
    dofs: &[f64],
) -> Result<BandedMatrix, FemError> {
    let mut j = affine_sum(ops, &case.theta(mu));
    if !case.has_g && case.n_flux == 0 {
        return Ok(j);
    }
    let uq = space.values_at_quadrature(&space.nodal_from_dofs(dofs));
    let pd = point_data(case, &uq, mu, true)?;
    let nq = space.nq_cell();
    let nl = space.n_local();
    let w = space.quad_weights();
    let mut local = vec![0.0; nl * nl];
    for c in 0..space.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        for q in 0..nq {
            let k = c * nq + q;
            let gu = pd.gu[k] * w[k];
            let fu0 = pd.fu.first().map_or(0.0, |f| f[k] * w[k]);
            let fu1 = pd.fu.get(1).map_or(0.0, |f| f[k] * w[k]);
            for a in 0..nl {
                let (va, ax, ay) = space.basis(a, q);
                let row = gu * va + fu0 * ax + fu1 * ay;
                if row == 0.0 {
                    continue;
                }
                for b in 0..nl {
                    local[a * nl + b] += row * space.basis(b, q).0;
                }
            }
        }
        let cd = space.cell_dofs(c);
        for (a, da) in cd.iter().enumerate() {
            let Some(i) = *da else { continue };
            for (b, db) in cd.iter().enumerate() {
                let Some(jj) = *db else { continue };
                j.add(i, jj, local[a * nl + b]);
            }
        }
    }
    Ok(j)
}

pub fn x_norm(ops: &AffineOperators, dofs: &[f64]) -> f64 {
    let av = ops.x_matrix.matvec(dofs);
    av.iter().zip(dofs).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
}

/// Newton iteration on the full-order system with the exact Jacobian.
pub fn fom_newton_solve(
    space: &FESpace,
    case: &CaseDefinition,
    ops: &AffineOperators,
    mu: &[f64],
    cfg: NewtonConfig,
    initial: Option<&[f64]>,
) -> Result<FOMSolution, FemError> {
    if !case.contains(mu) {
        return Err(FemError::ParameterOutsideDomain(mu.to_vec()));
    }
    let mut u = match initial {
        Some(nodal) => space.dofs_from_nodal(nodal),
        None => vec![0.0; space.n_dofs()],
    };
    let mut steps = Vec::new();
    let mut residuals = Vec::new();
    let mut growth = 0;
    for it in 1..=cfg.max_iter {
        let r = fom_residual(space, case, ops, mu, &u)?;
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if let Some(&prev) = residuals.last() {
            growth = if rn > prev { growth + 1 } else { 0 };
        }
        residuals.push(rn);
        if !rn.is_finite() || growth >= 5 {
            return Err(FemError::NewtonDiverged { mu: mu.to_vec(), iterations: it, residual: rn });
        }
        let jac = fom_jacobian(space, case, ops, mu, &u)?;
        let lu = jac.factor()?;
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve_in_place(&mut delta);
        for (ui, d) in u.iter_mut().zip(&delta) {
            *ui += d;
        }
        let dn = x_norm(ops, &delta);
        steps.push(dn);
        if dn <= cfg.tol {
            return Ok(FOMSolution {
                mu: mu.to_vec(),
                nodal: space.nodal_from_dofs(&u),
                iterations: it,
                final_step: dn,
                step_norms: steps,
                residual_norms: residuals,
            });
        }
    }
    Err(FemError::NewtonDiverged { mu: mu.to_vec(), iterations: cfg.max_iter, residual: *residuals.last().unwrap_or(&f64::NAN) })
}

/// [`fom_newton_solve`] from zero, falling back to parameter continuation along
/// the segment from the lower corner of the parameter box when that diverges.
/// Each stage is warm-started from the previous one; a failed stage is retried
/// with half the parameter increment, down to `1/256` of the segment.
pub fn fom_solve_continuation(
    space: &FESpace,
    case: &CaseDefinition,
    ops: &AffineOperators,
    mu: &[f64],
    cfg: NewtonConfig,
) -> Result<FOMSolution, FemError> {
    let first = match fom_newton_solve(space, case, ops, mu, cfg, None) {
        Err(e @ FemError::NewtonDiverged { .. }) => e,
        other => return other,
    };
    let anchor: Vec<f64> = case.bounds.iter().map(|b| b.0).collect();
    let mut current = fom_newton_solve(space, case, ops, &anchor, cfg, None).map_err(|_| first)?;
    let at = |t: f64| -> Vec<f64> { anchor.iter().zip(mu).map(|(a, m)| a + t * (m - a)).collect() };
    let (mut t, mut h) = (0.0f64, 0.25f64);
    let mut total_iterations = current.iterations;
    while t < 1.0 {
        let next = (t + h).min(1.0);
        // the last stage lands exactly on `mu`
        let target = if next >= 1.0 { mu.to_vec() } else { at(next) };
        match fom_newton_solve(space, case, ops, &target, cfg, Some(&current.nodal)) {
            Ok(sol) => {
                total_iterations += sol.iterations;
                current = sol;
                t = next;
                h = (2.0 * h).min(0.5);
            }
            Err(FemError::NewtonDiverged { .. }) if h > 1.0 / 256.0 => h *= 0.5,
            Err(e) => return Err(e),
        }
    }
    current.iterations = total_iterations;
    Ok(current)
}

/// Output `s = ℓ^O(u) = ∫ u`.
pub fn fom_output(space: &FESpace, ops: &AffineOperators, nodal: &[f64]) -> f64 {
    space.dofs_from_nodal(nodal).iter().zip(&ops.output).map(|(a, b)| a * b).sum()
}
