use super::{DenseMatrix, NumericsError};

/// Matrices up to this size go through cyclic Jacobi; larger ones are handed to
/// faer's tridiagonal eigensolver, which is orders of magnitude faster on the
/// correlation matrices produced by second-order snapshot sets.
const JACOBI_MAX_DIM: usize = 64;

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: DenseMatrix,
}

fn check_symmetric(c: &DenseMatrix) -> Result<(), NumericsError> {
    if !c.is_square() {
        return Err(NumericsError::DimensionMismatch(format!("eigenproblem of a {}x{} matrix", c.rows(), c.cols())));
    }
    let scale = c.max_abs();
    let n = c.rows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((c[(i, j)] - c[(j, i)]).abs());
        }
    }
    if worst > 1e-12 * scale {
        return Err(NumericsError::NotSymmetric { asymmetry: if scale > 0.0 { worst / scale } else { worst } });
    }
    Ok(())
}

/// Symmetric eigensolver. Descending eigenvalues, orthonormal eigenvectors,
/// each eigenvector signed so that its largest-magnitude entry is positive.
pub fn sym_eig_desc(c: &DenseMatrix) -> Result<SymEigen, NumericsError> {
    check_symmetric(c)?;
    if c.rows() <= JACOBI_MAX_DIM {
        jacobi(c)
    } else {
        faer_eig(c)
    }
}

/// Cyclic Jacobi regardless of size.
pub fn sym_eig_jacobi(c: &DenseMatrix) -> Result<SymEigen, NumericsError> {
    check_symmetric(c)?;
    jacobi(c)
}

fn jacobi(c: &DenseMatrix) -> Result<SymEigen, NumericsError> {
    let n = c.rows();
    let mut a = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let mut v = DenseMatrix::identity(n);
    let frob = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-12 * frob;

    let off = |a: &DenseMatrix| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > target && frob > 0.0 {
        sweeps += 1;
        if sweeps > 100 {
            return Err(NumericsError::NoConvergence);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let values: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    Ok(sorted(values, &v))
}

fn faer_eig(c: &DenseMatrix) -> Result<SymEigen, NumericsError> {
    let n = c.rows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = m.self_adjoint_eigen(faer::Side::Lower).map_err(|_| NumericsError::NoConvergence)?;
    let s = evd.S();
    let u = evd.U();
    let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let v = DenseMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    let out = sorted(values, &v);
    if !out.vectors.is_finite() || out.values.iter().any(|x| !x.is_finite()) {
        return Err(NumericsError::NoConvergence);
    }
    Ok(out)
}

fn sorted(values: Vec<f64>, v: &DenseMatrix) -> SymEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let mut big = 0usize;
        for i in 0..n {
            if v[(i, src)].abs() > v[(big, src)].abs() {
                big = i;
            }
        }
        let sign = if v[(big, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * v[(i, src)];
        }
    }
    SymEigen { values: order.iter().map(|&i| values[i]).collect(), vectors }
}
