//! Command-line front end: run configuration and the offline, solve, greedy,
//! bench and interp-study workflows.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::{
    centered_grid, corner_grid, corners_and_center, emit_table, table1, table_estimates, write_series, Bench2d,
    BenchError, Study1d, Table,
};
use crate::cases::{case, CaseDefinition, CaseName};
use crate::greedy::{GreedyConfig, GreedyError, RomGreedy};
use crate::interp::RankPolicy;
use crate::mesh_fem::{assemble_affine, build_fe_space, AffineOperators, FESpace, FemError, NewtonConfig};
use crate::rom::{
    load_artifacts, offline_assemble, online_solve, residual_estimate, save_artifacts, OnlineConfig, RomError, Scheme,
    SchemeSpec,
};
use crate::snapshots_rb::{FomCache, RbError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown configuration key: {0}")]
    UnknownKey(String),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid grid at `{key}`: {reason}")]
    InvalidGrid { key: String, reason: String },
    #[error("out of domain at `{key}`: {reason}")]
    OutOfDomain { key: String, reason: String },
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration errors, 3 for divergence, 4 for artifact mismatch.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::UnknownKey(_) | CliError::Parse(_) | CliError::InvalidGrid { .. } | CliError::OutOfDomain { .. } => 2,
            CliError::Diverged(_) => 3,
            CliError::ArtifactMismatch(_) => 4,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

fn from_fem(e: FemError) -> CliError {
    match e {
        FemError::NewtonDiverged { .. } => CliError::Diverged(e.to_string()),
        other => CliError::Failed(other.to_string()),
    }
}

impl From<FemError> for CliError {
    fn from(e: FemError) -> Self {
        from_fem(e)
    }
}

impl From<RbError> for CliError {
    fn from(e: RbError) -> Self {
        match e {
            RbError::Fem(f) => from_fem(f),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<RomError> for CliError {
    fn from(e: RomError) -> Self {
        match e {
            RomError::NewtonDiverged { .. } => CliError::Diverged(e.to_string()),
            RomError::ArtifactMismatch(m) => CliError::ArtifactMismatch(m),
            RomError::Fem(f) => from_fem(f),
            RomError::Rb(r) => r.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<GreedyError> for CliError {
    fn from(e: GreedyError) -> Self {
        match e {
            GreedyError::Rom(r) => r.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Rom(r) => r.into(),
            BenchError::Fem(f) => from_fem(f),
            BenchError::Rb(r) => r.into(),
            BenchError::Greedy(g) => g.into(),
            BenchError::Io(io) => CliError::Io(io),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub p: usize,
    /// Gauss points per direction; `p + 2` when absent.
    pub quad_order: Option<usize>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { nx: 16, ny: 16, p: 2, quad_order: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol: 1e-10, max_iter: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    /// Greedy starting points; the box corners and centre (2D) or the
    /// endpoints and midpoint (1D) when absent.
    pub initial: Option<Vec<Vec<f64>>>,
    /// Explicit reduced-basis sample for `offline`; the greedy picks one when absent.
    pub points: Option<Vec<Vec<f64>>>,
    /// Training points per axis; 15 in 2D, 100 in 1D when absent.
    pub training: Option<usize>,
    /// Test points per axis; 10 in 2D, 200 in 1D when absent.
    pub test: Option<usize>,
    pub greedy_tol: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { initial: None, points: None, training: None, test: None, greedy_tol: 0.0 }
    }
}

/// Everything a run needs. Every field has a default, so `{}` is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub case: CaseName,
    pub mesh: MeshConfig,
    pub scheme: Scheme,
    pub n: usize,
    /// Overrides of the scheme's `M / N` and `P / N` multipliers.
    pub residual_mult: Option<usize>,
    pub jacobian_mult: Option<usize>,
    pub p_mult: Option<usize>,
    pub newton: Tolerances,
    pub online: Tolerances,
    pub sample: SampleConfig,
    /// Relative paths are resolved against `--out`.
    pub artifact_dir: PathBuf,
    /// Recorded for provenance; every workflow is deterministic.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: CaseName::Elliptic2d,
            mesh: MeshConfig::default(),
            scheme: Scheme::GnSoeim,
            n: 10,
            residual_mult: None,
            jacobian_mult: None,
            p_mult: None,
            newton: Tolerances::default(),
            online: Tolerances::default(),
            sample: SampleConfig::default(),
            artifact_dir: PathBuf::from("artifacts"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn spec(&self) -> SchemeSpec {
        let mut s = self.scheme.spec();
        if let Some(m) = self.residual_mult {
            s.residual_mult = m;
        }
        if let Some(m) = self.jacobian_mult {
            s.jacobian_mult = m;
        }
        if let Some(p) = self.p_mult {
            s.p_mult = p;
        }
        s
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig { tol: self.newton.tol, max_iter: self.newton.max_iter }
    }

    pub fn online(&self) -> OnlineConfig {
        OnlineConfig { tol: self.online.tol, max_iter: self.online.max_iter }
    }

    fn is_1d(&self) -> bool {
        case(self.case).dim == 1
    }

    pub fn training_per_axis(&self) -> usize {
        self.sample.training.unwrap_or(if self.is_1d() { 100 } else { 15 })
    }

    pub fn test_per_axis(&self) -> usize {
        self.sample.test.unwrap_or(if self.is_1d() { 200 } else { 10 })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let grid = |key: &str, reason: &str| Err(CliError::InvalidGrid { key: key.into(), reason: reason.into() });
        if self.mesh.nx == 0 {
            return grid("mesh.nx", "must be at least 1");
        }
        if self.mesh.ny == 0 {
            return grid("mesh.ny", "must be at least 1");
        }
        if !(1..=3).contains(&self.mesh.p) {
            return grid("mesh.p", "degree must be 1, 2 or 3");
        }
        if self.mesh.quad_order == Some(0) {
            return grid("mesh.quad_order", "must be at least 1");
        }
        if self.training_per_axis() < 2 {
            return grid("sample.training", "needs at least 2 points per axis");
        }
        if self.test_per_axis() == 0 {
            return grid("sample.test", "must be at least 1");
        }
        let domain = |key: &str, reason: String| Err(CliError::OutOfDomain { key: key.into(), reason });
        if self.n == 0 {
            return domain("n", "must be at least 1".into());
        }
        for (key, t) in [("newton.tol", self.newton.tol), ("online.tol", self.online.tol)] {
            if !(t > 0.0) {
                return domain(key, format!("{t} is not positive"));
            }
        }
        if !(self.sample.greedy_tol >= 0.0) {
            return domain("sample.greedy_tol", "must be non-negative".into());
        }
        let c = case(self.case);
        for (name, list) in [("sample.initial", &self.sample.initial), ("sample.points", &self.sample.points)] {
            for (i, mu) in list.iter().flatten().enumerate() {
                check_mu(&c, mu).map_err(|reason| CliError::OutOfDomain { key: format!("{name}[{i}]"), reason })?;
            }
        }
        Ok(())
    }
}

fn check_mu(c: &CaseDefinition, mu: &[f64]) -> Result<(), String> {
    if mu.len() != c.n_params() {
        return Err(format!("expected {} parameters, got {}", c.n_params(), mu.len()));
    }
    if !c.contains(mu) {
        return Err(format!("{mu:?} lies outside {:?}", c.bounds));
    }
    Ok(())
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub case: Option<CaseName>,
    pub scheme: Option<Scheme>,
    pub n: Option<usize>,
    pub full_scale: bool,
}

/// Reads `path` (an empty file means all defaults), applies `overrides` and validates.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
            parse_config_str(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = overrides.case {
        cfg.case = c;
    }
    if let Some(s) = overrides.scheme {
        cfg.scheme = s;
    }
    if let Some(n) = overrides.n {
        cfg.n = n;
    }
    if overrides.full_scale {
        cfg.mesh = MeshConfig { nx: 32, ny: 32, p: 3, quad_order: None };
        if !cfg.is_1d() {
            cfg.sample.test = Some(30);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if msg.starts_with("unknown field") {
            CliError::UnknownKey(msg)
        } else {
            CliError::Parse(msg)
        }
    })
}

#[derive(Debug, Parser)]
#[command(name = "hyperrom", version, about = "Hyperreduced reduced-basis models for nonlinear elliptic problems")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub case: Option<String>,
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Reduced-basis dimension.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Output directory for tables, series, artifacts and the config echo.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for parameter sweeps; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// 32x32 p=3 mesh and the 900-point test grid.
    #[arg(long, global = true)]
    pub full_scale: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a reduced model and write its artifacts.
    Offline,
    /// One online solve from saved artifacts.
    Solve {
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<f64>,
    },
    /// Greedy parameter sampling driven by the interpolation error estimate.
    Greedy,
    /// Regenerate one of the benchmark tables.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
        table: u8,
    },
    /// The one-dimensional interpolation study without a reduced model.
    InterpStudy,
}

impl Cli {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let case = match &self.case {
            Some(c) => Some(c.parse::<CaseName>().map_err(|e| CliError::Parse(e.to_string()))?),
            None => None,
        };
        let scheme = match &self.scheme {
            Some(s) => Some(s.parse::<Scheme>().map_err(CliError::Parse)?),
            None => None,
        };
        Ok(Overrides { case, scheme, n: self.n, full_scale: self.full_scale })
    }
}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    cache: FomCache,
}

struct Model {
    space: FESpace,
    case: CaseDefinition,
    ops: AffineOperators,
}

impl Run {
    fn model(&self, case_name: CaseName) -> Result<Model, CliError> {
        let c = case(case_name);
        if c.dim != 2 {
            return Err(CliError::OutOfDomain {
                key: "case".into(),
                reason: format!("{} has no finite-element model; use interp-study or bench --table 1..3", c.name.as_str()),
            });
        }
        let m = &self.cfg.mesh;
        let space = build_fe_space(2, m.nx, m.ny, m.p, m.quad_order.unwrap_or(m.p + 2))?;
        let ops = assemble_affine(&space, &c)?;
        Ok(Model { space, case: c, ops })
    }

    fn bench<'a>(&'a self, m: &'a Model) -> Bench2d<'a> {
        Bench2d {
            space: &m.space,
            case: &m.case,
            ops: &m.ops,
            cache: &self.cache,
            newton: self.cfg.newton(),
            online: self.cfg.online(),
        }
    }

    fn reduced_spec(&self) -> Result<SchemeSpec, CliError> {
        if self.cfg.scheme == Scheme::Gn {
            return Err(CliError::OutOfDomain {
                key: "scheme".into(),
                reason: "GN keeps the full quadrature and has no artifacts; pick a hyperreduced scheme".into(),
            });
        }
        Ok(self.cfg.spec())
    }

    fn initial(&self, c: &CaseDefinition) -> Vec<Vec<f64>> {
        self.cfg.sample.initial.clone().unwrap_or_else(|| corners_and_center(&c.bounds))
    }

    fn artifact_dir(&self) -> PathBuf {
        self.out.join(&self.cfg.artifact_dir)
    }

    fn write_table(&self, t: &Table, case_name: CaseName) -> Result<PathBuf, CliError> {
        let path = self.out.join(format!("table_{}_{}.csv", t.id, case_name.as_str()));
        fs::write(&path, emit_table(t)?)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    fn series(&self, name: &str, xs: &[f64], ys: &[f64]) -> Result<(), CliError> {
        write_series(&self.out.join("plots"), name, xs, ys)?;
        Ok(())
    }

    fn offline(&self) -> Result<(), CliError> {
        let spec = self.reduced_spec()?;
        let m = self.model(self.cfg.case)?;
        let b = self.bench(&m);
        let sample = match &self.cfg.sample.points {
            Some(p) => {
                if p.len() < self.cfg.n {
                    return Err(CliError::OutOfDomain {
                        key: "sample.points".into(),
                        reason: format!("{} points given for n = {}", p.len(), self.cfg.n),
                    });
                }
                p[..self.cfg.n].to_vec()
            }
            None => {
                let g = RomGreedy {
                    space: &m.space,
                    case: &m.case,
                    ops: &m.ops,
                    spec,
                    newton: self.cfg.newton(),
                    online: self.cfg.online(),
                    cache: &self.cache,
                };
                let training = corner_grid(&m.case.bounds, self.cfg.training_per_axis());
                g.run(&self.initial(&m.case), &training, GreedyConfig { tol: 0.0, n_max: self.cfg.n })?.sample
            }
        };
        let (rb, snaps) = b.rb(&sample)?;
        let rom = offline_assemble(&m.space, &m.case, &m.ops, &rb, &snaps, &spec)?;
        let dir = self.artifact_dir();
        let meta = save_artifacts(&rom, &dir)?;
        fs::write(dir.join("sample.json"), serde_json::to_string_pretty(&sample).map_err(|e| CliError::Failed(e.to_string()))?)?;
        println!("wrote {} files to {} (N = {})", meta.hashes.len() + 1, dir.display(), rom.n);
        Ok(())
    }

    fn solve(&self, mu: &[f64]) -> Result<(), CliError> {
        let rom = load_artifacts(&self.artifact_dir())?;
        if rom.case != self.cfg.case {
            return Err(CliError::ArtifactMismatch(format!(
                "artifacts are for {}, the configuration asks for {}",
                rom.case.as_str(),
                self.cfg.case.as_str()
            )));
        }
        let c = case(rom.case);
        check_mu(&c, mu).map_err(|reason| CliError::OutOfDomain { key: "--mu".into(), reason })?;
        let sol = online_solve(&rom, &c, mu, self.cfg.online())?;
        println!("s_N = {:.12e}", sol.output);
        println!("iterations = {}", sol.iterations);
        if let Some(est) = residual_estimate(&rom, &c, mu, &sol.alpha).ok().filter(|e| e.is_finite()) {
            println!("residual interpolation estimate = {est:.6e}");
        }
        Ok(())
    }

    fn greedy(&self) -> Result<(), CliError> {
        let c = case(self.cfg.case);
        let state = if c.dim == 1 {
            Study1d::new(c.clone()).greedy(self.cfg.sample.greedy_tol, self.cfg.n)?
        } else {
            let spec = self.reduced_spec()?;
            let m = self.model(self.cfg.case)?;
            let g = RomGreedy {
                space: &m.space,
                case: &m.case,
                ops: &m.ops,
                spec,
                newton: self.cfg.newton(),
                online: self.cfg.online(),
                cache: &self.cache,
            };
            let training = corner_grid(&c.bounds, self.cfg.training_per_axis());
            g.run(&self.initial(&c), &training, GreedyConfig { tol: self.cfg.sample.greedy_tol, n_max: self.cfg.n })?
        };
        let path = self.out.join(format!("greedy_{}.csv", c.name.as_str()));
        fs::write(&path, state.log_csv())?;
        let xs: Vec<f64> = state.log.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = state.log.iter().map(|r| r.max_estimate).collect();
        self.series(&format!("greedy_estimate_{}", c.name.as_str()), &xs, &ys)?;
        println!("wrote {} (N = {}, stop: {:?})", path.display(), state.sample.len(), state.stop);
        Ok(())
    }

    fn bench_table(&self, id: u8) -> Result<(), CliError> {
        match id {
            1..=3 => self.tables_1d(id),
            _ => self.tables_2d(id),
        }
    }

    fn tables_1d(&self, id: u8) -> Result<(), CliError> {
        let study = Study1d::new(case(CaseName::Analytic1d));
        if id == 1 {
            let state = study.greedy(1e-3, 22)?;
            self.write_table(&table1(&state), CaseName::Analytic1d)?;
            return Ok(());
        }
        let ns = [4, 7, 10, 13, 16, 19];
        let sample = study.greedy(0.0, 19)?.sample;
        let (order, mults) = if id == 2 { (1, [1, 2, 3]) } else { (2, [2, 4, 6]) };
        let t = table_estimates(&study, order, &mults, &ns, &sample)?;
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        for k in mults {
            let ys = t.column(&format!("est_mean_M{k}N")).unwrap_or_default();
            self.series(&format!("estimate_vs_n_order{order}_M{k}N"), &xs, &ys)?;
        }
        self.write_table(&t, CaseName::Analytic1d)?;
        Ok(())
    }

    fn tables_2d(&self, id: u8) -> Result<(), CliError> {
        let name = if id <= 5 { CaseName::Elliptic2d } else { CaseName::Cdr2d };
        let m = self.model(name)?;
        let b = self.bench(&m);
        let ns: &[usize] = if self.cfg.mesh.nx >= 32 { &[4, 8, 12, 16, 20] } else { &[4, 8, 12] };
        let n_max = *ns.last().unwrap();
        let training = corner_grid(&m.case.bounds, self.cfg.training_per_axis());
        let sample = b.greedy(&corners_and_center(&m.case.bounds), &training, GreedyConfig { tol: 0.0, n_max })?.sample;
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let t = if id == 4 || id == 6 {
            let refs = b.references(&centered_grid(&m.case.bounds, self.cfg.test_per_axis()))?;
            let all = ns.iter().map(|&n| b.reports(&sample[..n], &Scheme::ALL, &refs)).collect::<Result<Vec<_>, _>>()?;
            for s in Scheme::ALL {
                let ys: Vec<f64> = all.iter().map(|r| r.get(s).map_or(f64::NAN, |x| x.mean_u())).collect();
                self.series(&format!("error_vs_n_{}_{}", name.as_str(), s.as_str()), &xs, &ys)?;
            }
            b.table_effectivities(&id.to_string(), &all)?
        } else {
            let mus = centered_grid(&m.case.bounds, 3);
            timing_pool(|| b.table_speedup(&id.to_string(), &sample, ns, &mus, 3))?
        };
        self.write_table(&t, name)?;
        Ok(())
    }

    fn interp_study(&self) -> Result<(), CliError> {
        let study = Study1d::new(case(CaseName::Analytic1d));
        let sample = study.greedy(0.0, 19)?.sample;
        let ns: Vec<usize> = (study.s_init.len()..=19).collect();
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let mut rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        for (label, order, mult) in [("EIM", 0, 1), ("FOEIM", 1, 3), ("SOEIM", 2, 6)] {
            let st = study.study(order, mult, 0, RankPolicy::KeepM);
            let mut errs = Vec::with_capacity(ns.len());
            for &n in &ns {
                errs.push(study.row(&st, &sample[..n])?.mean_err);
            }
            self.series(&format!("interp_error_vs_n_{label}"), &xs, &errs)?;
            rows.iter_mut().zip(&errs).for_each(|(r, e)| r.push(*e));
        }
        let t = Table::new(
            "interp",
            "mean interpolation error over the test set, P = 0",
            &["N", "EIM M=N", "FOEIM M=3N", "SOEIM M=6N"],
            rows,
        );
        self.write_table(&t, CaseName::Analytic1d)?;
        Ok(())
    }
}

/// Runs `f` on one thread so timings are not disturbed by sweeps.
fn timing_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(1).build() {
        return pool.install(f);
    }
    f()
}

/// Parses the configuration, echoes it to `--out` and runs the subcommand.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = parse_config(cli.config.as_deref(), &cli.overrides()?)?;
    #[cfg(feature = "parallel")]
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| CliError::Failed(e.to_string()))?;
    }
    fs::create_dir_all(&cli.out)?;
    let echo = serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Failed(e.to_string()))?;
    fs::write(cli.out.join("config.json"), &echo)?;
    eprintln!("effective config: {}", serde_json::to_string(&cfg).map_err(|e| CliError::Failed(e.to_string()))?);
    let r = Run { cfg, out: cli.out, cache: FomCache::from_env() };
    match cli.command {
        Command::Offline => r.offline(),
        Command::Solve { mu } => r.solve(&mu),
        Command::Greedy => r.greedy(),
        Command::Bench { table } => r.bench_table(table),
        Command::InterpStudy => r.interp_study(),
    }
}
