//! WebAssembly bindings for the interpolation explorer in `www/index.html`.
//!
//! Every export returns a JSON document so the page needs no generated types.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use hyperrom::bench::Study1d;
use hyperrom::cases::{case, CaseName};
use hyperrom::greedy::{GreedyConfig, InterpStudy1d};
use hyperrom::interp::{error_estimator, interpolate_and_error, RankPolicy};

/// Candidate grid size; coarser than the benchmark's 1000 points to stay interactive.
const CANDIDATES: usize = 400;

#[derive(Debug, Serialize)]
pub struct Interpolation {
    pub x: Vec<f64>,
    pub target: Vec<f64>,
    pub interpolant: Vec<f64>,
    pub points: Vec<f64>,
    pub m: usize,
    pub p: usize,
    pub error: f64,
    pub estimate: f64,
}

#[derive(Debug, Serialize)]
pub struct GreedyRun {
    pub sample: Vec<f64>,
    pub n: Vec<usize>,
    pub max_estimate: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ErrorCurve {
    pub n: Vec<usize>,
    pub eim: Vec<f64>,
    pub foeim: Vec<f64>,
    pub soeim: Vec<f64>,
}

fn study() -> Study1d {
    Study1d { n_candidates: CANDIDATES, ..Study1d::new(case(CaseName::Analytic1d)) }
}

/// `M` multiplier per Taylor order, as in the benchmark tables.
fn m_mult(order: usize) -> usize {
    [1, 3, 6][order]
}

fn uniform_sample(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| vec![10.0 * i as f64 / (n - 1).max(1) as f64]).collect()
}

fn check(order: usize, n: usize) -> Result<(), String> {
    if order > 2 {
        return Err(format!("order {order} is not 0, 1 or 2"));
    }
    if !(2..=16).contains(&n) {
        return Err(format!("N = {n} outside 2..=16"));
    }
    Ok(())
}

fn system_for(st: &InterpStudy1d, n: usize) -> Result<hyperrom::interp::InterpolationSystem, String> {
    st.system(&case(CaseName::Analytic1d), &uniform_sample(n)).map_err(|e| e.to_string())
}

/// Interpolates `g(u(·; μ); μ)` from `N` uniformly spaced snapshots.
pub fn interpolation(mu: f64, order: usize, n: usize) -> Result<Interpolation, String> {
    check(order, n)?;
    if !(0.0..=10.0).contains(&mu) {
        return Err(format!("mu = {mu} outside [0, 10]"));
    }
    let s = study();
    let st = s.study(order, m_mult(order), 1, RankPolicy::KeepM);
    let sys = system_for(&st, n)?;
    let target = st.target_values(&s.case, &[mu]).map_err(|e| e.to_string())?;
    let (interpolant, error) = interpolate_and_error(&sys, &target, sys.m);
    let at: Vec<f64> = sys.points.iter().map(|&i| target[i]).collect();
    Ok(Interpolation {
        x: st.candidates.iter().map(|c| c[0]).collect(),
        points: sys.points[..sys.m].iter().map(|&i| st.candidates[i][0]).collect(),
        estimate: error_estimator(&sys, &at, sys.m, sys.p).estimate,
        m: sys.m,
        p: sys.p,
        target,
        interpolant,
        error,
    })
}

/// Greedy sampling from `{0, 5, 10}` over 100 training points up to `n_max`.
pub fn greedy_run(order: usize, n_max: usize) -> Result<GreedyRun, String> {
    check(order, n_max)?;
    let s = study();
    let st = s.study(order, m_mult(order), 1, RankPolicy::KeepP);
    let state = st
        .greedy(&s.case, &s.s_init, &s.training, GreedyConfig { tol: 0.0, n_max: n_max.max(s.s_init.len()) })
        .map_err(|e| e.to_string())?;
    Ok(GreedyRun {
        sample: state.sample.iter().map(|m| m[0]).collect(),
        n: state.log.iter().map(|r| r.n).collect(),
        max_estimate: state.log.iter().map(|r| r.max_estimate).collect(),
    })
}

/// Mean test-set interpolation error against `N` for each Taylor order.
pub fn error_curve(n_max: usize) -> Result<ErrorCurve, String> {
    check(0, n_max)?;
    let mut s = study();
    s.test = (0..40).map(|i| vec![10.0 * (i as f64 + 0.5) / 40.0]).collect();
    let ns: Vec<usize> = (2..=n_max).collect();
    let mut curves = [Vec::new(), Vec::new(), Vec::new()];
    for (order, curve) in curves.iter_mut().enumerate() {
        let st = s.study(order, m_mult(order), 0, RankPolicy::KeepM);
        for &n in &ns {
            curve.push(s.row(&st, &uniform_sample(n)).map_err(|e| e.to_string())?.mean_err);
        }
    }
    let [eim, foeim, soeim] = curves;
    Ok(ErrorCurve { n: ns, eim, foeim, soeim })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn interpolate(mu: f64, order: usize, n: usize) -> Result<String, JsError> {
    to_js(interpolation(mu, order, n))
}

#[wasm_bindgen]
pub fn greedy(order: usize, n_max: usize) -> Result<String, JsError> {
    to_js(greedy_run(order, n_max))
}

#[wasm_bindgen]
pub fn convergence(n_max: usize) -> Result<String, JsError> {
    to_js(error_curve(n_max))
}
