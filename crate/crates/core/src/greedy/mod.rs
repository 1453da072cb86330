//! Greedy enrichment of the parameter sample driven by the interpolation error
//! estimator over a training set.

use std::time::Instant;

use thiserror::Error;

use crate::cases::{analytic_solution_1d, CaseDefinition, Target};
use crate::interp::{
    build_system, error_estimator, pod_modes, taylor_snapshots, InterpError, InterpolationSystem, RankPolicy,
};
use crate::mesh_fem::{AffineOperators, FESpace, NewtonConfig};
use crate::rom::{offline_assemble, online_solve, residual_estimate, OnlineConfig, RomError, RomOperators, SchemeSpec};
use crate::snapshots_rb::{compute_snapshots, orthonormalize_rb, FomCache};

#[derive(Debug, Error)]
pub enum GreedyError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Rom(#[from] RomError),
    #[error("{0}")]
    Solver(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyConfig {
    pub tol: f64,
    pub n_max: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxSize,
    TrainingExhausted,
}

#[derive(Debug, Clone)]
pub struct GreedyIteration {
    /// Sample size the sweep was run with.
    pub n: usize,
    /// Estimate at every training point; points already in the sample are `None`.
    pub estimates: Vec<Option<f64>>,
    pub argmax: Option<usize>,
    pub max_estimate: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct GreedyState {
    pub sample: Vec<Vec<f64>>,
    pub training: Vec<Vec<f64>>,
    /// Training indices appended to the initial sample, in order.
    pub selected: Vec<usize>,
    pub log: Vec<GreedyIteration>,
    pub stop: StopReason,
}

impl GreedyState {
    pub fn initial_len(&self) -> usize {
        self.sample.len() - self.selected.len()
    }

    /// `iteration,N,mu_1..,max_estimate,wall_time` rows; `mu` is the point the
    /// iteration selected (empty on the terminating sweep if nothing was added).
    pub fn log_csv(&self) -> String {
        let np = self.training.first().map_or(0, |m| m.len());
        let mut out = String::from("iteration,N");
        for d in 0..np {
            out.push_str(&format!(",mu_{}", d + 1));
        }
        out.push_str(",max_estimate,wall_time\n");
        for (it, row) in self.log.iter().enumerate() {
            out.push_str(&format!("{},{}", it + 1, row.n));
            for d in 0..np {
                match row.argmax.filter(|_| it < self.selected.len()) {
                    Some(i) => out.push_str(&format!(",{:.6e}", self.training[i][d])),
                    None => out.push(','),
                }
            }
            out.push_str(&format!(",{:.6e},{:.6e}\n", row.max_estimate, row.wall_time));
        }
        out
    }
}

/// Algorithm driver. `sweep(sample, todo)` returns the estimate at every
/// training index in `todo`. The sample grows by the training point with the
/// largest estimate (lowest index on ties) until that estimate is within `tol`
/// or the sample reaches `n_max`.
pub fn greedy_sample<F>(
    s_init: &[Vec<f64>],
    training: &[Vec<f64>],
    cfg: GreedyConfig,
    mut sweep: F,
) -> Result<GreedyState, GreedyError>
where
    F: FnMut(&[Vec<f64>], &[usize]) -> Result<Vec<f64>, GreedyError>,
{
    if training.is_empty() {
        return Err(GreedyError::EmptyTraining);
    }
    let mut sample = s_init.to_vec();
    let mut selected = Vec::new();
    let mut log = Vec::new();
    let stop = loop {
        let start = Instant::now();
        let todo: Vec<usize> = (0..training.len()).filter(|&i| !sample.contains(&training[i])).collect();
        if todo.is_empty() {
            break StopReason::TrainingExhausted;
        }
        let est = sweep(&sample, &todo)?;
        let mut estimates = vec![None; training.len()];
        let (mut best, mut arg) = (f64::NEG_INFINITY, todo[0]);
        for (&i, &e) in todo.iter().zip(&est) {
            estimates[i] = Some(e);
            if e > best || (best.is_nan() && !e.is_nan()) {
                best = e;
                arg = i;
            }
        }
        log.push(GreedyIteration {
            n: sample.len(),
            estimates,
            argmax: Some(arg),
            max_estimate: best,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if best <= cfg.tol {
            break StopReason::Tolerance;
        }
        if sample.len() >= cfg.n_max {
            break StopReason::MaxSize;
        }
        sample.push(training[arg].clone());
        selected.push(arg);
    };
    Ok(GreedyState { sample, training: training.to_vec(), selected, log, stop })
}

/// Setup for the one-dimensional interpolation study where `u(x, μ)` is known in
/// closed form and no reduced model is involved.
#[derive(Debug, Clone)]
pub struct InterpStudy1d {
    pub candidates: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub target: Target,
    pub order: usize,
    pub m_mult: usize,
    pub p_mult: usize,
    pub policy: RankPolicy,
}

impl InterpStudy1d {
    pub fn field(&self, mu: f64) -> Vec<f64> {
        self.candidates.iter().map(|x| analytic_solution_1d(x[0], mu)).collect()
    }

    /// Interpolation system for `target` built from the snapshots at `sample`.
    pub fn system(&self, case: &CaseDefinition, sample: &[Vec<f64>]) -> Result<InterpolationSystem, InterpError> {
        let n = sample.len();
        let zeta: Vec<Vec<f64>> = sample.iter().map(|m| self.field(m[0])).collect();
        let snaps = taylor_snapshots(case, self.target, self.order, &zeta, sample)?;
        let (m, p) = (self.m_mult * n, self.p_mult * n);
        let pod = pod_modes(&snaps, &self.weights, m + p)?;
        build_system(&pod, m, p, &self.candidates, self.policy)
    }

    /// Target values at the candidates for parameter `mu`.
    pub fn target_values(&self, case: &CaseDefinition, mu: &[f64]) -> Result<Vec<f64>, InterpError> {
        self.field(mu[0])
            .iter()
            .map(|&u| {
                case.eval_target(self.target, u, mu, Default::default())
                    .map_err(|e| InterpError::DerivativeUnavailable(e.to_string()))
            })
            .collect()
    }

    /// Greedy run with the closed-form solution evaluated at the `M + P` points.
    pub fn greedy(
        &self,
        case: &CaseDefinition,
        s_init: &[Vec<f64>],
        training: &[Vec<f64>],
        cfg: GreedyConfig,
    ) -> Result<GreedyState, GreedyError> {
        greedy_sample(s_init, training, cfg, |sample, todo| {
            let sys = self.system(case, sample)?;
            todo.iter()
                .map(|&i| {
                    let mu = &training[i];
                    let vals: Result<Vec<f64>, _> = sys
                        .coords
                        .iter()
                        .map(|y| case.eval_target(self.target, analytic_solution_1d(y[0], mu[0]), mu, Default::default()))
                        .collect();
                    let vals = vals.map_err(|e| GreedyError::Solver(e.to_string()))?;
                    Ok(error_estimator(&sys, &vals, sys.m, sys.p).estimate)
                })
                .collect()
        })
    }
}

/// Reduced-model greedy over a 2D training grid: each sweep rebuilds the
/// operators on the current sample (FOM solves come from `cache`), solves the
/// reduced system at every training point and scores it by the largest
/// residual-interpolation estimate. A point where the online Newton fails
/// scores `+inf` and is therefore selected next.
pub struct RomGreedy<'a> {
    pub space: &'a FESpace,
    pub case: &'a CaseDefinition,
    pub ops: &'a AffineOperators,
    pub spec: SchemeSpec,
    pub newton: NewtonConfig,
    pub online: OnlineConfig,
    pub cache: &'a FomCache,
}

impl RomGreedy<'_> {
    pub fn build(&self, sample: &[Vec<f64>]) -> Result<RomOperators, GreedyError> {
        let snaps = compute_snapshots(self.space, self.case, self.ops, sample, self.newton, self.cache)
            .map_err(RomError::from)?;
        let rb = orthonormalize_rb(self.space, self.ops, &snaps.columns).map_err(RomError::from)?;
        Ok(offline_assemble(self.space, self.case, self.ops, &rb, &snaps, &self.spec)?)
    }

    fn score(&self, rom: &RomOperators, mu: &[f64]) -> Result<f64, GreedyError> {
        match online_solve(rom, self.case, mu, self.online) {
            Ok(sol) => Ok(residual_estimate(rom, self.case, mu, &sol.alpha)?),
            Err(RomError::NewtonDiverged { .. } | RomError::Numerics(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e.into()),
        }
    }

    pub fn run(&self, s_init: &[Vec<f64>], training: &[Vec<f64>], cfg: GreedyConfig) -> Result<GreedyState, GreedyError> {
        greedy_sample(s_init, training, cfg, |sample, todo| {
            let rom = self.build(sample)?;
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                todo.par_iter().map(|&i| self.score(&rom, &training[i])).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                todo.iter().map(|&i| self.score(&rom, &training[i])).collect()
            }
        })
    }
}
