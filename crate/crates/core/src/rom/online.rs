use crate::cases::{CaseDefinition, Order, Target};
use crate::interp::estimate_with_matrix;
use crate::mesh_fem::FESpace;
use crate::numerics::{lu_solve_vec, norm2, solve_lower_unit, DenseMatrix};
use crate::snapshots_rb::RBSpace;

use super::{OnlineConfig, ReducedAffine, RomError, RomOperators, RomSolution};

const DAMPING_GROWTH: f64 = 10.0;
const MAX_HALVINGS: usize = 8;
const POOR_CONTRACTION: f64 = 0.5;

type System = (Vec<f64>, DenseMatrix);
type Consistent<'a> = &'a mut dyn FnMut(&[f64]) -> Result<System, RomError>;

/// Newton on a reduced system from `alpha`. A step more than ten times longer
/// than its predecessor is halved (up to eight times).
///
/// `consistent`, the exact derivative of the residual `eval` returns, takes
/// over once a step shrinks by less than half: an approximate Jacobian can
/// leave Newton crawling. The solution is the same either way.
fn newton<F>(
    mu: &[f64],
    affine: &ReducedAffine,
    cfg: OnlineConfig,
    mut alpha: Vec<f64>,
    mut eval: F,
    mut consistent: Option<Consistent<'_>>,
) -> Result<RomSolution, RomError>
where
    F: FnMut(&[f64]) -> Result<System, RomError>,
{
    let mut prev: Option<f64> = None;
    let mut exact = false;
    for it in 1..=cfg.max_iter {
        let (r, j) = match consistent.as_deref_mut() {
            Some(c) if exact => c(&alpha)?,
            _ => eval(&alpha)?,
        };
        let mut delta = lu_solve_vec(&j, &r)?;
        delta.iter_mut().for_each(|d| *d = -*d);
        let mut dn = norm2(&delta);
        if let Some(p) = prev {
            exact |= consistent.is_some() && dn > POOR_CONTRACTION * p;
            let mut k = 0;
            while dn > DAMPING_GROWTH * p && k < MAX_HALVINGS {
                delta.iter_mut().for_each(|d| *d *= 0.5);
                dn *= 0.5;
                k += 1;
            }
        }
        if !dn.is_finite() {
            return Err(RomError::NewtonDiverged { mu: mu.to_vec(), iterations: it, step: dn });
        }
        alpha.iter_mut().zip(&delta).for_each(|(a, d)| *a += d);
        prev = Some(dn);
        if dn <= cfg.tol {
            let output = affine.output.iter().zip(&alpha).map(|(l, a)| l * a).sum();
            return Ok(RomSolution { mu: mu.to_vec(), alpha, output, iterations: it, final_step: dn });
        }
    }
    Err(RomError::NewtonDiverged { mu: mu.to_vec(), iterations: cfg.max_iter, step: prev.unwrap_or(f64::NAN) })
}

/// `solve(μ, α₀)` from `α₀ = 0`, falling back to continuation along the segment
/// from the lower corner of the parameter box, with the step control of the
/// full-order continuation.
fn continuation<S>(case: &CaseDefinition, mu: &[f64], n: usize, mut solve: S) -> Result<RomSolution, RomError>
where
    S: FnMut(&[f64], Vec<f64>) -> Result<RomSolution, RomError>,
{
    let first = match solve(mu, vec![0.0; n]) {
        Err(e @ RomError::NewtonDiverged { .. }) => e,
        other => return other,
    };
    let anchor: Vec<f64> = case.bounds.iter().map(|b| b.0).collect();
    let mut current = solve(&anchor, vec![0.0; n]).map_err(|_| first)?;
    let at = |t: f64| -> Vec<f64> { anchor.iter().zip(mu).map(|(a, m)| a + t * (m - a)).collect() };
    let (mut t, mut h) = (0.0f64, 0.25f64);
    let mut total_iterations = current.iterations;
    while t < 1.0 {
        let next = (t + h).min(1.0);
        let target = if next >= 1.0 { mu.to_vec() } else { at(next) };
        match solve(&target, current.alpha.clone()) {
            Ok(sol) => {
                total_iterations += sol.iterations;
                current = sol;
                t = next;
                h = (2.0 * h).min(0.5);
            }
            Err(RomError::NewtonDiverged { .. }) if h > 1.0 / 256.0 => h *= 0.5,
            Err(e) => return Err(e),
        }
    }
    current.iterations = total_iterations;
    Ok(current)
}

/// `Σ Θ^q A^q α − l` and `Σ Θ^q A^q`.
fn affine_part(case: &CaseDefinition, affine: &ReducedAffine, mu: &[f64], alpha: &[f64]) -> (Vec<f64>, DenseMatrix) {
    let n = alpha.len();
    let mut j = DenseMatrix::zeros(n, n);
    for (a, t) in affine.a.iter().zip(case.theta(mu)) {
        j.axpy(t, a);
    }
    let mut r = j.matvec(alpha);
    r.iter_mut().zip(&affine.load).for_each(|(r, l)| *r -= l);
    (r, j)
}

fn eval_all(case: &CaseDefinition, t: Target, du: usize, u: &[f64], mu: &[f64]) -> Result<Vec<f64>, RomError> {
    u.iter().map(|&v| Ok(case.eval_target(t, v, mu, Order::new(du, [0, 0]))?)).collect()
}

fn hyper_residual(
    ops: &RomOperators,
    case: &CaseDefinition,
    mu: &[f64],
    alpha: &[f64],
    r: &mut [f64],
    j: Option<&mut DenseMatrix>,
) -> Result<(), RomError> {
    let mut j = j;
    for term in &ops.residual {
        let m = term.m;
        let q = term.q.leading_block(m, ops.n);
        let u = q.matvec(alpha);
        let h = eval_all(case, term.target, 0, &u, mu)?;
        for (ri, ci) in r.iter_mut().zip(term.c.matvec(&h)) {
            *ri += ci;
        }
        if let Some(j) = j.as_deref_mut() {
            let hu = eval_all(case, term.target, 1, &u, mu)?;
            for i in 0..ops.n {
                let crow = term.c.row(i);
                let jrow = j.row_mut(i);
                for k in 0..m {
                    let s = crow[k] * hu[k];
                    if s != 0.0 {
                        for (jv, qv) in jrow.iter_mut().zip(q.row(k)) {
                            *jv += s * qv;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Hyperreduced residual at `alpha` and its exact Jacobian.
pub fn hgn_system(
    ops: &RomOperators,
    case: &CaseDefinition,
    mu: &[f64],
    alpha: &[f64],
) -> Result<(Vec<f64>, DenseMatrix), RomError> {
    let (mut r, mut j) = affine_part(case, &ops.affine, mu, alpha);
    hyper_residual(ops, case, mu, alpha, &mut r, Some(&mut j))?;
    Ok((r, j))
}

/// H-GN: Newton on the hyperreduced system, differentiated exactly through
/// the residual interpolants.
pub fn online_hgn(
    ops: &RomOperators,
    case: &CaseDefinition,
    mu: &[f64],
    cfg: OnlineConfig,
) -> Result<RomSolution, RomError> {
    if ops.residual.is_empty() && (case.has_g || case.n_flux > 0) {
        return Err(RomError::MissingSystem("residual".into()));
    }
    continuation(case, mu, ops.n, |mu, a0| newton(mu, &ops.affine, cfg, a0, |alpha| hgn_system(ops, case, mu, alpha), None))
}

/// GN-H: residual from the residual interpolants, Jacobian from separate
/// interpolants of `g_u` and `f^d_u`.
pub fn online_gnh(
    ops: &RomOperators,
    case: &CaseDefinition,
    mu: &[f64],
    cfg: OnlineConfig,
) -> Result<RomSolution, RomError> {
    if (case.has_g || case.n_flux > 0) && (ops.residual.is_empty() || ops.jacobian.is_empty()) {
        return Err(RomError::MissingSystem("GN-H needs residual and Jacobian systems".into()));
    }
    continuation(case, mu, ops.n, |mu, a0| gnh_newton(ops, case, mu, cfg, a0))
}

fn gnh_newton(
    ops: &RomOperators,
    case: &CaseDefinition,
    mu: &[f64],
    cfg: OnlineConfig,
    a0: Vec<f64>,
) -> Result<RomSolution, RomError> {
    let mut exact = |alpha: &[f64]| hgn_system(ops, case, mu, alpha);
    let eval = |alpha: &[f64]| {
        let (mut r, mut j) = affine_part(case, &ops.affine, mu, alpha);
        hyper_residual(ops, case, mu, alpha, &mut r, None)?;
        for term in &ops.jacobian {
            let u = term.q.matvec(alpha);
            let hu = eval_all(case, term.target, 0, &u, mu)?;
            let beta = solve_lower_unit(&term.b, term.m, &hu);
            for (b, t) in beta.iter().zip(&term.tensors) {
                j.axpy(*b, t);
            }
        }
        Ok((r, j))
    };
    newton(mu, &ops.affine, cfg, a0, eval, Some(&mut exact))
}

/// H-GN or GN-H according to the operators' scheme.
pub fn online_solve(
    ops: &RomOperators,
    case: &CaseDefinition,
    mu: &[f64],
    cfg: OnlineConfig,
) -> Result<RomSolution, RomError> {
    if ops.scheme.is_gnh() {
        online_gnh(ops, case, mu, cfg)
    } else {
        online_hgn(ops, case, mu, cfg)
    }
}

/// Galerkin reference: nonlinear integrals over all quadrature points at every
/// iteration.
pub fn online_gn_reference(
    space: &FESpace,
    case: &CaseDefinition,
    rb: &RBSpace,
    affine: &ReducedAffine,
    mu: &[f64],
    cfg: OnlineConfig,
) -> Result<RomSolution, RomError> {
    let n = rb.dim();
    let mut terms: Vec<(Target, &DenseMatrix)> = Vec::new();
    if case.has_g {
        terms.push((Target::G, &rb.values));
    }
    for d in 0..case.n_flux {
        terms.push((Target::f(d), &rb.grads[d]));
    }
    continuation(case, mu, n, |mu, a0| gn_newton(space, case, rb, affine, mu, cfg, a0, &terms))
}

#[allow(clippy::too_many_arguments)]
fn gn_newton(
    space: &FESpace,
    case: &CaseDefinition,
    rb: &RBSpace,
    affine: &ReducedAffine,
    mu: &[f64],
    cfg: OnlineConfig,
    a0: Vec<f64>,
    terms: &[(Target, &DenseMatrix)],
) -> Result<RomSolution, RomError> {
    let n = rb.dim();
    let w = space.quad_weights();
    let nq = space.n_quad();
    newton(mu, affine, cfg, a0, |alpha| {
        let (mut r, mut j) = affine_part(case, affine, mu, alpha);
        if terms.is_empty() {
            return Ok((r, j));
        }
        let u = rb.values.matvec(alpha);
        for &(t, v) in terms {
            let h = eval_all(case, t, 0, &u, mu)?;
            let hu = eval_all(case, t, 1, &u, mu)?;
            for q in 0..nq {
                let (hw, huw) = (w[q] * h[q], w[q] * hu[q]);
                let vq = v.row(q);
                let zq = rb.values.row(q);
                for i in 0..n {
                    r[i] += hw * vq[i];
                    let a = huw * vq[i];
                    if a != 0.0 {
                        for (jv, z) in j.row_mut(i).iter_mut().zip(zq) {
                            *jv += a * z;
                        }
                    }
                }
            }
        }
        Ok((r, j))
    }, None)
}

/// `u_N` at the `M + P` points of each residual system.
pub fn point_values(ops: &RomOperators, alpha: &[f64]) -> Vec<Vec<f64>> {
    ops.residual.iter().map(|t| t.q.matvec(alpha)).collect()
}

/// Largest interpolation error estimate over the residual targets at the
/// reduced solution `alpha`.
pub fn residual_estimate(ops: &RomOperators, case: &CaseDefinition, mu: &[f64], alpha: &[f64]) -> Result<f64, RomError> {
    let mut worst = 0.0f64;
    for term in &ops.residual {
        let u = term.q.matvec(alpha);
        let h = eval_all(case, term.target, 0, &u, mu)?;
        let est = estimate_with_matrix(&term.b, &h, term.m, term.p).estimate;
        worst = worst.max(est);
    }
    Ok(worst)
}

