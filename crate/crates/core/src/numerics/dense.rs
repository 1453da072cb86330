use std::ops::{Index, IndexMut};

use super::NumericsError;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn column_vector(v: &[f64]) -> Self {
        Self { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, NumericsError> {
        if self.cols != other.rows {
            return Err(NumericsError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self^T * x`.
    pub fn tmatvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows).map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Top-left `r x c` block.
    pub fn leading_block(&self, r: usize, c: usize) -> Self {
        Self::from_fn(r, c, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// LU factors with row permutation, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

/// Partial-pivoting LU. The first row attaining the maximal pivot magnitude wins.
pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::DimensionMismatch(format!("LU of a {}x{} matrix", a.rows, a.cols)));
    }
    let n = a.rows;
    let threshold = 1e-14 * a.max_abs();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= threshold || best == 0.0 {
            return Err(NumericsError::SingularMatrix { step: k, pivot: best, threshold });
        }
        if p != k {
            perm.swap(k, p);
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / pivot;
            lu[(i, k)] = l;
            if l != 0.0 {
                for j in k + 1..n {
                    lu.data[i * n + j] -= l * lu.data[k * n + j];
                }
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    pub fn solve_mat(&self, rhs: &DenseMatrix) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = (0..rhs.cols()).map(|j| self.solve_vec(&rhs.column(j))).collect();
        DenseMatrix::from_columns(rhs.rows(), &cols)
    }
}

/// Solves `A X = rhs` for a matrix right-hand side.
pub fn lu_factor_solve(a: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if rhs.rows() != a.rows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "rhs has {} rows, matrix has {}",
            rhs.rows(),
            a.rows()
        )));
    }
    Ok(lu_factor(a)?.solve_mat(rhs))
}

pub fn lu_solve_vec(a: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if rhs.len() != a.rows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "rhs has {} rows, matrix has {}",
            rhs.len(),
            a.rows()
        )));
    }
    Ok(lu_factor(a)?.solve_vec(rhs))
}

/// Forward substitution with the unit lower-triangular leading `n x n` block of `b`.
/// Entries above the diagonal are ignored.
pub fn solve_lower_unit(b: &DenseMatrix, n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut x = rhs[..n].to_vec();
    for i in 0..n {
        let row = b.row(i);
        let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
        x[i] -= s;
    }
    x
}

/// Solves `L^T x = rhs` for the unit lower-triangular leading `n x n` block `L` of `b`.
pub fn solve_upper_transpose_unit(b: &DenseMatrix, n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut x = rhs[..n].to_vec();
    for i in (0..n).rev() {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        let row = b.row(i);
        for (xj, l) in x[..i].iter_mut().zip(&row[..i]) {
            *xj -= l * xi;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let x = lu_solve_vec(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::from_row_major(2, 2, vec![2.0, 0.0, 0.0, 4.0]).unwrap();
        let x = lu_solve_vec(&a, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_well_conditioned_recovers_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10;
        let mut a = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        for i in 0..n {
            a[(i, i)] += 10.0;
        }
        let rhs = a.matvec(&vec![1.0; n]);
        let x = lu_solve_vec(&a, &rhs).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn matrix_rhs_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DenseMatrix::from_fn(6, 6, |i, j| rng.random_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 });
        let rhs = DenseMatrix::from_fn(6, 3, |_, _| rng.random_range(-5.0..5.0));
        let x = lu_factor_solve(&a, &rhs).unwrap();
        let r = a.matmul(&x).unwrap();
        let bound = 1e-10 * (1.0 + rhs.max_abs());
        for (u, v) in r.as_slice().iter().zip(rhs.as_slice()) {
            assert!((u - v).abs() <= bound);
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(lu_factor(&a), Err(NumericsError::SingularMatrix { .. })));
    }

    #[test]
    fn pivot_tie_takes_first_row() {
        // both candidate pivots have magnitude 1; row 0 must be kept
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 1.0, -1.0, 1.0]).unwrap();
        let f = lu_factor(&a).unwrap();
        assert_eq!(f.perm, vec![0, 1]);
    }

    #[test]
    fn triangular_helpers() {
        let b = DenseMatrix::from_row_major(3, 3, vec![1.0, 9.0, 9.0, 0.5, 1.0, 9.0, -0.25, 0.75, 1.0]).unwrap();
        let rhs = [1.0, 2.0, 3.0];
        let x = solve_lower_unit(&b, 3, &rhs);
        for i in 0..3 {
            let s: f64 = (0..=i).map(|j| if i == j { x[j] } else { b[(i, j)] * x[j] }).sum();
            assert!((s - rhs[i]).abs() < 1e-14);
        }
        let y = solve_upper_transpose_unit(&b, 3, &rhs);
        for i in 0..3 {
            let s: f64 = (i..3).map(|j| if i == j { y[j] } else { b[(j, i)] * y[j] }).sum();
            assert!((s - rhs[i]).abs() < 1e-14);
        }
    }
}
