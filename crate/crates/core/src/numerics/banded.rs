use super::NumericsError;

/// Square band matrix in LAPACK general-band layout (column-major, `2*kl + ku + 1`
/// rows per column) so that partial-pivoting LU can grow the upper band in place.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    /// Accumulates `v` into entry `(i, j)`, which must lie inside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.ab[self.idx(i, j)] * xj;
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.ab.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// LU factorization with partial pivoting (first maximal pivot within the band).
    pub fn factor(mut self) -> Result<BandedLu, NumericsError> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let threshold = 1e-14 * self.max_abs();
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0usize;
            let mut best = self.ab[self.idx(j, j)].abs();
            for i in 1..=km {
                let v = self.ab[self.idx(j + i, j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            if best <= threshold || best == 0.0 {
                return Err(NumericsError::SingularMatrix { step: j, pivot: best, threshold });
            }
            ipiv[j] = j + jp;
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + jp, c);
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let inv = 1.0 / self.ab[self.idx(j, j)];
                let base = self.idx(j, j);
                for i in 1..=km {
                    self.ab[base + i] *= inv;
                }
                for c in j + 1..=ju {
                    let t = self.ab[self.idx(j, c)];
                    if t == 0.0 {
                        continue;
                    }
                    let cb = self.idx(j, c);
                    for i in 1..=km {
                        let l = self.ab[base + i];
                        self.ab[cb + i] -= l * t;
                    }
                }
            }
        }
        Ok(BandedLu { m: self, ipiv })
    }
}

/// Packed factors produced by [`BandedMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn dim(&self) -> usize {
        self.m.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = rhs.to_vec();
        self.solve_in_place(&mut b);
        b
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.n;
        let kv = m.kl + m.ku;
        for j in 0..n {
            let km = m.kl.min(n - 1 - j);
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                let base = m.idx(j, j);
                for i in 1..=km {
                    b[j + i] -= m.ab[base + i] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= m.ab[m.idx(j, j)];
            let bj = b[j];
            if bj == 0.0 {
                continue;
            }
            let lo = j.saturating_sub(kv);
            let top = m.idx(lo, j);
            for (k, i) in (lo..j).enumerate() {
                b[i] -= m.ab[top + k] * bj;
            }
        }
    }
}
