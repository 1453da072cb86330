use crate::cases::{CaseDefinition, Target, Term};
use crate::interp::{build_system, pod_modes, taylor_snapshots, InterpolationSystem};
use crate::mesh_fem::{AffineOperators, FESpace};
use crate::numerics::{solve_upper_transpose_unit, DenseMatrix};
use crate::snapshots_rb::{RBSpace, SnapshotSet};

use super::{HyperTerm, JacobianTerm, ReducedAffine, RomError, RomOperators, SchemeSpec};

pub fn reduce_affine(space: &FESpace, ops: &AffineOperators, rb: &RBSpace) -> ReducedAffine {
    let z: Vec<Vec<f64>> = rb.basis.iter().map(|b| space.dofs_from_nodal(b)).collect();
    let n = z.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let a = ops
        .a
        .iter()
        .map(|aq| {
            let az: Vec<Vec<f64>> = z.iter().map(|zj| aq.matvec(zj)).collect();
            DenseMatrix::from_fn(n, n, |i, j| dot(&z[i], &az[j]))
        })
        .collect();
    ReducedAffine {
        a,
        load: z.iter().map(|zi| dot(zi, &ops.load)).collect(),
        output: z.iter().map(|zi| dot(zi, &ops.output)).collect(),
    }
}

/// Test-function traces paired with a target: `ζ_i` for `g`, `∂_d ζ_i` for `f^d`.
fn test_traces(rb: &RBSpace, target: Target) -> &DenseMatrix {
    match target.term {
        Term::G => &rb.values,
        Term::F(d) => &rb.grads[d],
    }
}

fn point_rows(rb: &RBSpace, points: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(points.len(), rb.dim(), |i, j| rb.values[(points[i], j)])
}

struct Builder<'a> {
    case: &'a CaseDefinition,
    zq: Vec<Vec<f64>>,
    mus: &'a [Vec<f64>],
    weights: &'a [f64],
    candidates: &'a [[f64; 2]],
    spec: &'a SchemeSpec,
}

impl Builder<'_> {
    fn system(&self, target: Target, order: usize, m: usize, p: usize) -> Result<InterpolationSystem, RomError> {
        let snaps = taylor_snapshots(self.case, target, order, &self.zq, self.mus)?;
        let pod = pod_modes(&snaps, self.weights, m + p)?;
        Ok(build_system(&pod, m, p, self.candidates, self.spec.policy)?)
    }
}

/// Builds every μ-independent reduced quantity of the scheme settings from the snapshots
/// and the orthonormal basis.
pub fn offline_assemble(
    space: &FESpace,
    case: &CaseDefinition,
    ops: &AffineOperators,
    rb: &RBSpace,
    snapshots: &SnapshotSet,
    spec: &SchemeSpec,
) -> Result<RomOperators, RomError> {
    let n = rb.dim();
    let builder = Builder {
        case,
        zq: snapshots.columns.iter().map(|c| space.values_at_quadrature(c)).collect(),
        mus: &snapshots.mus,
        weights: space.quad_weights(),
        candidates: space.quad_points(),
        spec,
    };
    let w = space.quad_weights();
    let nq = space.n_quad();
    let mut residual_targets = Vec::new();
    if case.has_g {
        residual_targets.push(Target::G);
    }
    residual_targets.extend((0..case.n_flux).map(Target::f));

    let mut residual = Vec::new();
    if spec.residual_mult > 0 {
        for &t in &residual_targets {
            let sys = builder.system(t, spec.residual_order, spec.residual_mult * n, spec.p_mult * n)?;
            let v = test_traces(rb, t);
            let m = sys.m;
            let mut e = DenseMatrix::zeros(n, m);
            for k in 0..m {
                let psi = sys.psi(k);
                for q in 0..nq {
                    let s = w[q] * psi[q];
                    if s == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        e[(i, k)] += s * v[(q, i)];
                    }
                }
            }
            let mut c = DenseMatrix::zeros(n, m);
            for i in 0..n {
                c.row_mut(i).copy_from_slice(&solve_upper_transpose_unit(&sys.b, m, e.row(i)));
            }
            residual.push(HyperTerm {
                target: t,
                m,
                p: sys.p,
                q: point_rows(rb, &sys.points),
                b: sys.b,
                c,
                coords: sys.coords,
                points: sys.points,
            });
        }
    }

    let mut jacobian = Vec::new();
    if spec.jacobian_mult > 0 {
        for &t in &residual_targets {
            let tu = Target { du: 1, ..t };
            let sys = builder.system(tu, spec.jacobian_order, spec.jacobian_mult * n, 0)?;
            let v = test_traces(rb, t);
            let tensors = (0..sys.m)
                .map(|k| {
                    let psi = sys.psi(k);
                    let mut tk = DenseMatrix::zeros(n, n);
                    for q in 0..nq {
                        let s = w[q] * psi[q];
                        if s == 0.0 {
                            continue;
                        }
                        for i in 0..n {
                            let a = s * v[(q, i)];
                            let row = tk.row_mut(i);
                            for (j, r) in row.iter_mut().enumerate() {
                                *r += a * rb.values[(q, j)];
                            }
                        }
                    }
                    tk
                })
                .collect();
            jacobian.push(JacobianTerm {
                target: tu,
                m: sys.m,
                q: point_rows(rb, &sys.points),
                b: sys.b,
                tensors,
                coords: sys.coords,
                points: sys.points,
            });
        }
    }

    Ok(RomOperators {
        case: case.name,
        scheme: spec.scheme,
        n,
        mesh: [space.nx, space.ny, space.p, space.quad_order],
        affine: reduce_affine(space, ops, rb),
        residual,
        jacobian,
    })
}
