//! Error, effectivity and speedup metrics, and the drivers that regenerate the
//! benchmark tables as CSV.

mod table;

pub use table::{emit_table, parse_table, write_series, Table};

use std::time::Instant;

use thiserror::Error;

use crate::cases::{CaseDefinition, Target};
use crate::greedy::{GreedyConfig, GreedyError, GreedyState, InterpStudy1d, RomGreedy};
use crate::interp::{candidate_grid_1d, error_estimator, interpolate_and_error, InterpError, RankPolicy};
use crate::mesh_fem::{fom_solve_continuation, x_norm, AffineOperators, FESpace, FemError, NewtonConfig};
use crate::rom::{
    offline_assemble, online_gn_reference, online_solve, reduce_affine, OnlineConfig, RomError, RomSolution, Scheme,
};
use crate::snapshots_rb::{compute_snapshots, orthonormalize_rb, FomCache, RBSpace, RbError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no reference solution for test point {0}")]
    MissingReference(usize),
    #[error("reports cover different parameter sets or sizes")]
    MismatchedSets,
    #[error("incomplete report: {0}")]
    IncompleteReport(String),
    #[error(transparent)]
    Rom(#[from] RomError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Rb(#[from] RbError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Greedy(#[from] GreedyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

/// `n × n` grid of cell centres over a 2D parameter box.
pub fn centered_grid(bounds: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
    (0..n).flat_map(|i| (0..n).map(move |j| vec![at(bounds[0], i), at(bounds[1], j)])).collect()
}

/// `n × n` grid including the box corners.
pub fn corner_grid(bounds: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    (0..n).flat_map(|i| (0..n).map(move |j| vec![at(bounds[0], i), at(bounds[1], j)])).collect()
}

/// The four corners of the box followed by its centre.
pub fn corners_and_center(bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let (a, b) = (bounds[0], bounds[1]);
    vec![
        vec![a.0, b.0],
        vec![a.1, b.0],
        vec![a.0, b.1],
        vec![a.1, b.1],
        vec![0.5 * (a.0 + a.1), 0.5 * (b.0 + b.1)],
    ]
}

#[derive(Debug, Clone)]
pub struct FomReference {
    pub mu: Vec<f64>,
    pub nodal: Vec<f64>,
    pub output: f64,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub label: String,
    pub n: usize,
    pub mus: Vec<Vec<f64>>,
    /// `||u(μ) − u_N(μ)||_X`.
    pub err_u: Vec<f64>,
    /// `|s(μ) − s_N(μ)|`.
    pub err_s: Vec<f64>,
    pub iterations: Vec<usize>,
}

impl MetricsReport {
    pub fn mean_u(&self) -> f64 {
        mean(&self.err_u)
    }

    pub fn mean_s(&self) -> f64 {
        mean(&self.err_s)
    }
}

/// Compares reduced solutions against the FOM references, one per test point.
pub fn evaluate_errors<F>(
    space: &FESpace,
    ops: &AffineOperators,
    rb: &RBSpace,
    reference: &[FomReference],
    label: &str,
    solve: F,
) -> Result<MetricsReport, BenchError>
where
    F: Fn(&[f64]) -> Result<RomSolution, RomError> + Sync,
{
    if reference.is_empty() {
        return Err(BenchError::MissingReference(0));
    }
    let one = |r: &FomReference| -> Result<(f64, f64, usize), BenchError> {
        let sol = solve(&r.mu)?;
        let diff: Vec<f64> = r.nodal.iter().zip(rb.reconstruct(&sol.alpha)).map(|(a, b)| a - b).collect();
        Ok((x_norm(ops, &space.dofs_from_nodal(&diff)), (r.output - sol.output).abs(), sol.iterations))
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<_> = {
        use rayon::prelude::*;
        reference.par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<_> = reference.iter().map(one).collect();
    let mut report = MetricsReport {
        label: label.to_string(),
        n: rb.dim(),
        mus: reference.iter().map(|r| r.mu.clone()).collect(),
        err_u: Vec::new(),
        err_s: Vec::new(),
        iterations: Vec::new(),
    };
    for row in rows {
        let (u, s, it) = row?;
        report.err_u.push(u);
        report.err_s.push(s);
        report.iterations.push(it);
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct Effectivities {
    pub eta_u: Vec<f64>,
    pub eta_s: Vec<f64>,
    pub mean_u: f64,
    pub mean_s: f64,
    /// Points dropped because the reference error was below `1e-14`.
    pub excluded_u: usize,
    pub excluded_s: usize,
}

pub const EFFECTIVITY_FLOOR: f64 = 1e-14;

/// Per-point ratios of `method` errors to `gn` errors and their means.
pub fn evaluate_effectivities(method: &MetricsReport, gn: &MetricsReport) -> Result<Effectivities, BenchError> {
    if method.mus != gn.mus || method.n != gn.n {
        return Err(BenchError::MismatchedSets);
    }
    let ratios = |a: &[f64], b: &[f64]| -> (Vec<f64>, usize) {
        let kept: Vec<f64> = a.iter().zip(b).filter(|(_, d)| **d >= EFFECTIVITY_FLOOR).map(|(n, d)| n / d).collect();
        let dropped = a.len() - kept.len();
        (kept, dropped)
    };
    let (eta_u, excluded_u) = ratios(&method.err_u, &gn.err_u);
    let (eta_s, excluded_s) = ratios(&method.err_s, &gn.err_s);
    if eta_u.is_empty() || eta_s.is_empty() {
        return Err(BenchError::IncompleteReport("every reference error is below the floor".into()));
    }
    Ok(Effectivities { mean_u: mean(&eta_u), mean_s: mean(&eta_s), eta_u, eta_s, excluded_u, excluded_s })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Speedup {
    pub fom_seconds: f64,
    pub rom_seconds: f64,
    pub ratio: f64,
}

/// Median wall time of `reps` calls after one warm-up call.
pub fn median_time<E>(reps: usize, mut f: impl FnMut() -> Result<(), E>) -> Result<f64, E> {
    f()?;
    let mut t = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        f()?;
        t.push(start.elapsed().as_secs_f64());
    }
    Ok(median(&t))
}

/// Median FOM time over median reduced-solve time, summed over `mus`.
pub fn measure_speedup<E1, E2>(
    mus: &[Vec<f64>],
    reps: usize,
    mut fom: impl FnMut(&[f64]) -> Result<(), E1>,
    mut rom: impl FnMut(&[f64]) -> Result<(), E2>,
) -> Result<Speedup, BenchError>
where
    BenchError: From<E1> + From<E2>,
{
    let reps = reps.max(3);
    let (mut tf, mut tr) = (0.0, 0.0);
    for mu in mus {
        tf += median_time(reps, || fom(mu))?;
        tr += median_time(reps, || rom(mu))?;
    }
    Ok(Speedup { fom_seconds: tf, rom_seconds: tr, ratio: tf / tr })
}

/// Settings of the one-dimensional interpolation study.
#[derive(Debug, Clone)]
pub struct Study1d {
    pub case: CaseDefinition,
    pub n_candidates: usize,
    pub training: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
    pub s_init: Vec<Vec<f64>>,
}

impl Study1d {
    pub fn new(case: CaseDefinition) -> Self {
        let (lo, hi) = case.bounds[0];
        let line = |n: usize| (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect::<Vec<_>>();
        Study1d { n_candidates: 1000, training: line(100), test: line(200), s_init: vec![vec![lo], vec![0.5 * (lo + hi)], vec![hi]], case }
    }

    pub fn study(&self, order: usize, m_mult: usize, p_mult: usize, policy: RankPolicy) -> InterpStudy1d {
        let (candidates, weights) = candidate_grid_1d(self.n_candidates, 0.0, 2.0);
        InterpStudy1d { candidates, weights, target: Target::G, order, m_mult, p_mult, policy }
    }

    /// The Table 1 greedy run: SOEIM with `M = 6N`, `P = N`.
    pub fn greedy(&self, tol: f64, n_max: usize) -> Result<GreedyState, BenchError> {
        let st = self.study(2, 6, 1, RankPolicy::KeepP);
        Ok(st.greedy(&self.case, &self.s_init, &self.training, GreedyConfig { tol, n_max })?)
    }

    /// Test-set interpolation errors and estimates for one sample.
    pub fn row(&self, study: &InterpStudy1d, sample: &[Vec<f64>]) -> Result<InterpRow, BenchError> {
        let sys = study.system(&self.case, sample)?;
        let mut errs = Vec::with_capacity(self.test.len());
        let mut ests = Vec::with_capacity(self.test.len());
        for mu in &self.test {
            let target = study.target_values(&self.case, mu)?;
            let (_, err) = interpolate_and_error(&sys, &target, sys.m);
            let at: Vec<f64> = sys.points.iter().map(|&i| target[i]).collect();
            errs.push(err);
            ests.push(error_estimator(&sys, &at, sys.m, sys.p).estimate);
        }
        let eff: Vec<f64> = ests.iter().zip(&errs).filter(|(_, e)| **e > 0.0).map(|(a, e)| a / e).collect();
        Ok(InterpRow {
            n: sample.len(),
            m: sys.m,
            p: sys.p,
            max_err: errs.iter().cloned().fold(0.0, f64::max),
            mean_err: mean(&errs),
            mean_est: mean(&ests),
            mean_eff: mean(&eff),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpRow {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub max_err: f64,
    pub mean_err: f64,
    pub mean_est: f64,
    pub mean_eff: f64,
}

/// Table 1: the points the greedy appended, with their selection estimate.
pub fn table1(state: &GreedyState) -> Table {
    let n0 = state.initial_len();
    let rows = state
        .selected
        .iter()
        .enumerate()
        .map(|(k, &i)| vec![(n0 + k + 1) as f64, state.training[i][0], state.log[k].max_estimate])
        .collect();
    Table::new("1", "greedy selections: sample index n, mu_n, estimate at selection", &["n", "mu", "estimate"], rows)
}

/// Tables 2 and 3: mean estimate and mean effectivity for each `M / N` in `m_mults`.
pub fn table_estimates(
    study: &Study1d,
    order: usize,
    m_mults: &[usize],
    ns: &[usize],
    sample: &[Vec<f64>],
) -> Result<Table, BenchError> {
    let mut columns = vec!["N".to_string()];
    for k in m_mults {
        columns.push(format!("est_mean_M{k}N"));
        columns.push(format!("eta_mean_M{k}N"));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let mut row = vec![n as f64];
        for &k in m_mults {
            let r = study.row(&study.study(order, k, 1, RankPolicy::KeepP), &sample[..n])?;
            row.push(r.mean_est);
            row.push(r.mean_eff);
        }
        rows.push(row);
    }
    let id = if order == 1 { "2" } else { "3" };
    let comment = format!("order-{order} interpolation, P = N: mean estimate and mean effectivity over the test set");
    Ok(Table { id: id.into(), comment, columns, rows })
}

/// Reduced-model benchmarks on a 2D case.
pub struct Bench2d<'a> {
    pub space: &'a FESpace,
    pub case: &'a CaseDefinition,
    pub ops: &'a AffineOperators,
    pub cache: &'a FomCache,
    pub newton: NewtonConfig,
    pub online: OnlineConfig,
}

/// Reports of every scheme at one `N`, keyed by scheme, GN last.
pub struct SchemeReports {
    pub n: usize,
    pub reports: Vec<(Scheme, MetricsReport)>,
}

impl SchemeReports {
    pub fn get(&self, s: Scheme) -> Option<&MetricsReport> {
        self.reports.iter().find(|(k, _)| *k == s).map(|(_, r)| r)
    }
}

impl Bench2d<'_> {
    pub fn greedy(&self, s_init: &[Vec<f64>], training: &[Vec<f64>], cfg: GreedyConfig) -> Result<GreedyState, BenchError> {
        let g = RomGreedy {
            space: self.space,
            case: self.case,
            ops: self.ops,
            spec: Scheme::GnSoeim.spec(),
            newton: self.newton,
            online: self.online,
            cache: self.cache,
        };
        Ok(g.run(s_init, training, cfg)?)
    }

    pub fn references(&self, mus: &[Vec<f64>]) -> Result<Vec<FomReference>, BenchError> {
        let set = compute_snapshots(self.space, self.case, self.ops, mus, self.newton, self.cache)?;
        Ok(set
            .columns
            .into_iter()
            .zip(mus)
            .map(|(nodal, mu)| FomReference {
                output: crate::mesh_fem::fom_output(self.space, self.ops, &nodal),
                nodal,
                mu: mu.clone(),
            })
            .collect())
    }

    pub fn rb(&self, sample: &[Vec<f64>]) -> Result<(RBSpace, crate::snapshots_rb::SnapshotSet), BenchError> {
        let snaps = compute_snapshots(self.space, self.case, self.ops, sample, self.newton, self.cache)?;
        Ok((orthonormalize_rb(self.space, self.ops, &snaps.columns)?, snaps))
    }

    /// Error reports of `schemes` (GN included when listed) on `sample`.
    pub fn reports(&self, sample: &[Vec<f64>], schemes: &[Scheme], refs: &[FomReference]) -> Result<SchemeReports, BenchError> {
        let (rb, snaps) = self.rb(sample)?;
        let mut reports = Vec::new();
        for &s in schemes {
            let report = if s == Scheme::Gn {
                let red = reduce_affine(self.space, self.ops, &rb);
                evaluate_errors(self.space, self.ops, &rb, refs, s.as_str(), |mu| {
                    online_gn_reference(self.space, self.case, &rb, &red, mu, self.online)
                })?
            } else {
                let rom = offline_assemble(self.space, self.case, self.ops, &rb, &snaps, &s.spec())?;
                evaluate_errors(self.space, self.ops, &rb, refs, s.as_str(), |mu| online_solve(&rom, self.case, mu, self.online))?
            };
            reports.push((s, report));
        }
        Ok(SchemeReports { n: sample.len(), reports })
    }

    /// Mean solution and output effectivities of the hyperreduced schemes
    /// against GN (Tables 4 and 6).
    pub fn table_effectivities(&self, id: &str, all: &[SchemeReports]) -> Result<Table, BenchError> {
        let schemes = [Scheme::EimGn, Scheme::FoeimGn, Scheme::SoeimGn, Scheme::GnSoeim];
        let mut columns = vec!["N".to_string()];
        for s in schemes {
            columns.push(format!("{s} eta_u"));
            columns.push(format!("{s} eta_s"));
        }
        let mut rows = Vec::new();
        for r in all {
            let gn = r.get(Scheme::Gn).ok_or_else(|| BenchError::IncompleteReport("GN reference missing".into()))?;
            let mut row = vec![r.n as f64];
            for s in schemes {
                let m = r.get(s).ok_or_else(|| BenchError::IncompleteReport(format!("{s} missing")))?;
                let e = evaluate_effectivities(m, gn)?;
                row.push(e.mean_u);
                row.push(e.mean_s);
            }
            rows.push(row);
        }
        let comment = format!("{}: mean effectivities relative to GN", self.case.name.as_str());
        Ok(Table { id: id.into(), comment, columns, rows })
    }

    /// FOM time over online time for every scheme (Tables 5 and 7).
    pub fn table_speedup(&self, id: &str, sample: &[Vec<f64>], ns: &[usize], mus: &[Vec<f64>], reps: usize) -> Result<Table, BenchError> {
        let order = [Scheme::Gn, Scheme::EimGn, Scheme::FoeimGn, Scheme::SoeimGn, Scheme::GnSoeim];
        let mut columns = vec!["N".to_string()];
        columns.extend(order.iter().map(|s| s.as_str().to_string()));
        let mut rows = Vec::new();
        for &n in ns {
            let (rb, snaps) = self.rb(&sample[..n])?;
            let red = reduce_affine(self.space, self.ops, &rb);
            let mut row = vec![n as f64];
            for s in order {
                let fom = |mu: &[f64]| fom_solve_continuation(self.space, self.case, self.ops, mu, self.newton).map(|_| ());
                let sp = if s == Scheme::Gn {
                    measure_speedup(mus, reps, fom, |mu| {
                        online_gn_reference(self.space, self.case, &rb, &red, mu, self.online).map(|_| ())
                    })?
                } else {
                    let rom = offline_assemble(self.space, self.case, self.ops, &rb, &snaps, &s.spec())?;
                    measure_speedup(mus, reps, fom, |mu| online_solve(&rom, self.case, mu, self.online).map(|_| ()))?
                };
                row.push(sp.ratio);
            }
            rows.push(row);
        }
        let comment = format!("{}: FOM wall time over online wall time (medians)", self.case.name.as_str());
        Ok(Table { id: id.into(), comment, columns, rows })
    }
}
