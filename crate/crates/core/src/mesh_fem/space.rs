use crate::numerics::gauss_legendre_rule;

use super::FemError;

/// Lagrange basis on `p + 1` equispaced nodes of `[0, 1]`: values and derivatives at `t`.
pub(crate) fn lagrange_1d(p: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..=p).map(|a| a as f64 / p as f64).collect();
    let mut val = vec![0.0; p + 1];
    let mut der = vec![0.0; p + 1];
    for a in 0..=p {
        let mut v = 1.0;
        let mut d = 0.0;
        for b in 0..=p {
            if b == a {
                continue;
            }
            let den = nodes[a] - nodes[b];
            let f = (t - nodes[b]) / den;
            d = d * f + v / den;
            v *= f;
        }
        val[a] = v;
        der[a] = d;
    }
    (val, der)
}

/// Structured mesh of the unit interval or unit square with a continuous tensor
/// Lagrange space of degree `p` and homogeneous Dirichlet conditions on the boundary.
///
/// Global nodes are numbered row by row (`x` fastest). Quadrature points, which
/// double as interpolation candidates, are numbered cell by cell (cells row by
/// row) and inside a cell with the `x` index fastest.
#[derive(Debug, Clone)]
pub struct FESpace {
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub p: usize,
    pub quad_order: usize,
    pub hx: f64,
    pub hy: f64,
    npx: usize,
    npy: usize,
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
    n_local: usize,
    nq_cell: usize,
    /// Reference basis tables, `[local basis * nq_cell + local point]`.
    val: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    quad_points: Vec<[f64; 2]>,
    quad_weights: Vec<f64>,
}

impl FESpace {
    pub fn new(dim: usize, nx: usize, ny: usize, p: usize, quad_order: usize) -> Result<Self, FemError> {
        if !(1..=3).contains(&p) {
            return Err(FemError::InvalidDegree(p));
        }
        if !(1..=2).contains(&dim) {
            return Err(FemError::InvalidGrid(format!("spatial dimension {dim}")));
        }
        let ny = if dim == 1 { 1 } else { ny };
        if nx < 2 || (dim == 2 && ny < 2) {
            return Err(FemError::InvalidGrid(format!("{nx}x{ny} cells, need at least 2 per direction")));
        }
        if quad_order < p + 1 {
            return Err(FemError::InvalidGrid(format!("quadrature order {quad_order} below p+1")));
        }
        let rule = gauss_legendre_rule(quad_order).map_err(|e| FemError::InvalidGrid(e.to_string()))?;
        let npx = p * nx + 1;
        let npy = if dim == 2 { p * ny + 1 } else { 1 };
        let mut dof_of_node = vec![None; npx * npy];
        let mut node_of_dof = Vec::new();
        for iy in 0..npy {
            for ix in 0..npx {
                let boundary = ix == 0 || ix == npx - 1 || (dim == 2 && (iy == 0 || iy == npy - 1));
                if !boundary {
                    dof_of_node[iy * npx + ix] = Some(node_of_dof.len());
                    node_of_dof.push(iy * npx + ix);
                }
            }
        }

        let hx = 1.0 / nx as f64;
        let hy = if dim == 2 { 1.0 / ny as f64 } else { 1.0 };
        let t: Vec<f64> = rule.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let w: Vec<f64> = rule.weights.iter().map(|w| 0.5 * w).collect();
        let tables: Vec<(Vec<f64>, Vec<f64>)> = t.iter().map(|&ti| lagrange_1d(p, ti)).collect();
        let nq = quad_order;
        let (n_local, nq_cell) = if dim == 2 { ((p + 1) * (p + 1), nq * nq) } else { (p + 1, nq) };
        let mut val = vec![0.0; n_local * nq_cell];
        let mut gx = vec![0.0; n_local * nq_cell];
        let mut gy = vec![0.0; n_local * nq_cell];
        let mut local_w = vec![0.0; nq_cell];
        let mut local_t = vec![[0.0; 2]; nq_cell];
        for q in 0..nq_cell {
            let (qx, qy) = (q % nq, q / nq);
            local_t[q] = [t[qx], if dim == 2 { t[qy] } else { 0.0 }];
            local_w[q] = w[qx] * if dim == 2 { w[qy] } else { 1.0 } * hx * hy;
            for l in 0..n_local {
                let (a, b) = (l % (p + 1), l / (p + 1));
                let (vx, dx) = (tables[qx].0[a], tables[qx].1[a]);
                if dim == 2 {
                    let (vy, dy) = (tables[qy].0[b], tables[qy].1[b]);
                    val[l * nq_cell + q] = vx * vy;
                    gx[l * nq_cell + q] = dx * vy / hx;
                    gy[l * nq_cell + q] = vx * dy / hy;
                } else {
                    val[l * nq_cell + q] = vx;
                    gx[l * nq_cell + q] = dx / hx;
                }
            }
        }
        let n_cells = nx * ny;
        let mut quad_points = Vec::with_capacity(n_cells * nq_cell);
        let mut quad_weights = Vec::with_capacity(n_cells * nq_cell);
        for c in 0..n_cells {
            let (cx, cy) = (c % nx, c / nx);
            for q in 0..nq_cell {
                let x = (cx as f64 + local_t[q][0]) * hx;
                let y = if dim == 2 { (cy as f64 + local_t[q][1]) * hy } else { 0.0 };
                quad_points.push([x, y]);
                quad_weights.push(local_w[q]);
            }
        }
        Ok(Self {
            dim,
            nx,
            ny,
            p,
            quad_order,
            hx,
            hy,
            npx,
            npy,
            dof_of_node,
            node_of_dof,
            n_local,
            nq_cell,
            val,
            gx,
            gy,
            quad_points,
            quad_weights,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.npx * self.npy
    }

    pub fn n_dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn nq_cell(&self) -> usize {
        self.nq_cell
    }

    pub fn n_quad(&self) -> usize {
        self.quad_points.len()
    }

    pub fn quad_points(&self) -> &[[f64; 2]] {
        &self.quad_points
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Coordinates of global node `n`.
    pub fn node_coords(&self, n: usize) -> [f64; 2] {
        let (ix, iy) = (n % self.npx, n / self.npx);
        let x = ix as f64 / (self.npx - 1) as f64;
        let y = if self.dim == 2 { iy as f64 / (self.npy - 1) as f64 } else { 0.0 };
        [x, y]
    }

    pub fn dof_of_node(&self, n: usize) -> Option<usize> {
        self.dof_of_node[n]
    }

    pub fn node_of_dof(&self, d: usize) -> usize {
        self.node_of_dof[d]
    }

    /// Half-bandwidth of any matrix assembled on the interior degrees of freedom.
    pub fn bandwidth(&self) -> usize {
        let inner = self.npx - 2;
        if self.dim == 2 {
            self.p * inner + self.p
        } else {
            self.p
        }
    }

    /// Global node numbers of cell `c` in local order.
    pub fn cell_nodes(&self, c: usize) -> Vec<usize> {
        let (cx, cy) = (c % self.nx, c / self.nx);
        let p = self.p;
        (0..self.n_local)
            .map(|l| {
                let (a, b) = (l % (p + 1), l / (p + 1));
                let iy = if self.dim == 2 { cy * p + b } else { 0 };
                iy * self.npx + cx * p + a
            })
            .collect()
    }

    /// Interior DOF numbers of cell `c` (`None` on the boundary) in local order.
    pub fn cell_dofs(&self, c: usize) -> Vec<Option<usize>> {
        self.cell_nodes(c).into_iter().map(|n| self.dof_of_node[n]).collect()
    }

    /// Reference tables `(value, d/dx, d/dy)` of local basis `l` at local point `q`.
    #[inline]
    pub fn basis(&self, l: usize, q: usize) -> (f64, f64, f64) {
        let k = l * self.nq_cell + q;
        (self.val[k], self.gx[k], self.gy[k])
    }

    pub fn nodal_from_dofs(&self, dofs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_nodes()];
        for (d, &n) in self.node_of_dof.iter().enumerate() {
            out[n] = dofs[d];
        }
        out
    }

    pub fn dofs_from_nodal(&self, nodal: &[f64]) -> Vec<f64> {
        self.node_of_dof.iter().map(|&n| nodal[n]).collect()
    }

    /// Nodal interpolant of `f`, zeroed on the boundary.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.n_nodes()).map(|n| if self.dof_of_node[n].is_some() { f(self.node_coords(n)) } else { 0.0 }).collect()
    }

    /// Nodal interpolant of `f` including boundary nodes (not an element of `X`).
    pub fn interpolate_all(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.n_nodes()).map(|n| f(self.node_coords(n))).collect()
    }

    /// Values of a nodal field at every quadrature point.
    pub fn values_at_quadrature(&self, nodal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_quad()];
        for c in 0..self.n_cells() {
            let nodes = self.cell_nodes(c);
            let base = c * self.nq_cell;
            for (l, &n) in nodes.iter().enumerate() {
                let coef = nodal[n];
                if coef == 0.0 {
                    continue;
                }
                let tab = &self.val[l * self.nq_cell..(l + 1) * self.nq_cell];
                for (o, v) in out[base..base + self.nq_cell].iter_mut().zip(tab) {
                    *o += coef * v;
                }
            }
        }
        out
    }

    /// Physical gradient components of a nodal field at every quadrature point.
    pub fn gradients_at_quadrature(&self, nodal: &[f64]) -> [Vec<f64>; 2] {
        let mut gx = vec![0.0; self.n_quad()];
        let mut gy = vec![0.0; self.n_quad()];
        for c in 0..self.n_cells() {
            let nodes = self.cell_nodes(c);
            let base = c * self.nq_cell;
            for (l, &n) in nodes.iter().enumerate() {
                let coef = nodal[n];
                if coef == 0.0 {
                    continue;
                }
                for q in 0..self.nq_cell {
                    let k = l * self.nq_cell + q;
                    gx[base + q] += coef * self.gx[k];
                    gy[base + q] += coef * self.gy[k];
                }
            }
        }
        [gx, gy]
    }

    /// Locates the owning cell of `x` and its reference coordinates. Points on a
    /// shared face belong to the lower-index cell.
    fn locate(&self, x: [f64; 2]) -> Result<(usize, [f64; 2]), FemError> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if !inside(x[0]) || (self.dim == 2 && !inside(x[1])) {
            return Err(FemError::PointOutsideDomain(x));
        }
        let cell_1d = |v: f64, n: usize, h: f64| -> (usize, f64) {
            let k = ((v / h).ceil() as isize - 1).clamp(0, n as isize - 1) as usize;
            (k, (v - k as f64 * h) / h)
        };
        let (cx, tx) = cell_1d(x[0], self.nx, self.hx);
        let (cy, ty) = if self.dim == 2 { cell_1d(x[1], self.ny, self.hy) } else { (0, 0.0) };
        Ok((cy * self.nx + cx, [tx, ty]))
    }

    /// Exact evaluation of a nodal field at arbitrary points of the closed domain.
    pub fn eval_fields_at_points(&self, nodal: &[f64], points: &[[f64; 2]]) -> Result<Vec<f64>, FemError> {
        points
            .iter()
            .map(|&x| {
                let (c, t) = self.locate(x)?;
                let (vx, _) = lagrange_1d(self.p, t[0]);
                let vy = if self.dim == 2 { lagrange_1d(self.p, t[1]).0 } else { vec![1.0] };
                let nodes = self.cell_nodes(c);
                Ok(nodes
                    .iter()
                    .enumerate()
                    .map(|(l, &n)| {
                        let (a, b) = (l % (self.p + 1), l / (self.p + 1));
                        nodal[n] * vx[a] * vy[b]
                    })
                    .sum())
            })
            .collect()
    }

    /// `(u, v)_X = ∫ ∇u · ∇v` by quadrature.
    pub fn x_inner_product(&self, u: &[f64], v: &[f64]) -> f64 {
        let gu = self.gradients_at_quadrature(u);
        let gv = self.gradients_at_quadrature(v);
        let mut s = 0.0;
        for q in 0..self.n_quad() {
            s += self.quad_weights[q] * (gu[0][q] * gv[0][q] + gu[1][q] * gv[1][q]);
        }
        s
    }

    /// `∫ u v` by quadrature.
    pub fn l2_inner_product(&self, u: &[f64], v: &[f64]) -> f64 {
        let a = self.values_at_quadrature(u);
        let b = self.values_at_quadrature(v);
        a.iter().zip(&b).zip(&self.quad_weights).map(|((x, y), w)| w * x * y).sum()
    }
}
