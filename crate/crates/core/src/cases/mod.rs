//! The three benchmark problems: a closed-form 1D interpolation study, a nonlinear
//! elliptic problem and a convection-diffusion-reaction problem.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CaseError {
    #[error("unknown case `{0}` (expected analytic1d, elliptic2d or cdr2d)")]
    UnknownCase(String),
    #[error("derivative order {0} exceeds the supported total order 3")]
    OrderTooHigh(usize),
    #[error("case {case} has no nonlinear term {which}")]
    NoSuchTerm { case: &'static str, which: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseName {
    Analytic1d,
    Elliptic2d,
    Cdr2d,
}

impl CaseName {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::Analytic1d => "analytic1d",
            CaseName::Elliptic2d => "elliptic2d",
            CaseName::Cdr2d => "cdr2d",
        }
    }
}

impl std::str::FromStr for CaseName {
    type Err = CaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic1d" => Ok(CaseName::Analytic1d),
            "elliptic2d" => Ok(CaseName::Elliptic2d),
            "cdr2d" => Ok(CaseName::Cdr2d),
            other => Err(CaseError::UnknownCase(other.to_string())),
        }
    }
}

/// Which nonlinear function: the scalar reaction term `g` or component `d` of the
/// flux `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    G,
    F(usize),
}

/// A function to be interpolated: a nonlinear term, or its derivative in `u`
/// when `du` is 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Target {
    pub term: Term,
    pub du: usize,
}

impl Target {
    pub const G: Target = Target { term: Term::G, du: 0 };
    pub const GU: Target = Target { term: Term::G, du: 1 };

    pub fn f(d: usize) -> Self {
        Target { term: Term::F(d), du: 0 }
    }

    pub fn fu(d: usize) -> Self {
        Target { term: Term::F(d), du: 1 }
    }

    /// Short tag used in artifact names, e.g. `g`, `gu`, `f1`, `f2u`.
    pub fn tag(&self) -> String {
        let base = match self.term {
            Term::G => "g".to_string(),
            Term::F(d) => format!("f{}", d + 1),
        };
        if self.du == 1 {
            format!("{base}u")
        } else {
            base
        }
    }

    /// Inverse of [`Target::tag`].
    pub fn from_tag(tag: &str) -> Option<Self> {
        let (base, du) = match tag.strip_suffix('u') {
            Some(b) => (b, 1),
            None => (tag, 0),
        };
        let term = match base {
            "g" => Term::G,
            _ => Term::F(base.strip_prefix('f')?.parse::<usize>().ok()?.checked_sub(1)?),
        };
        Some(Target { term, du })
    }
}

/// Multi-index of a partial derivative: `u` order and one order per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Order {
    pub du: usize,
    pub dmu: [usize; 2],
}

impl Order {
    pub const fn new(du: usize, dmu: [usize; 2]) -> Self {
        Order { du, dmu }
    }

    pub fn total(&self) -> usize {
        self.du + self.dmu[0] + self.dmu[1]
    }
}

/// Affine bilinear forms available to cases; all three benchmarks only use the
/// Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BilinearForm {
    Laplacian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDefinition {
    pub name: CaseName,
    pub dim: usize,
    /// Parameter box, one `(lo, hi)` per component.
    pub bounds: Vec<(f64, f64)>,
    pub affine: Vec<BilinearForm>,
    pub has_g: bool,
    /// Number of flux components carrying a nonlinear term (0 or `dim`).
    pub n_flux: usize,
    /// Whether the solution is available in closed form (no PDE solve).
    pub closed_form: bool,
}

pub fn get_case(name: &str) -> Result<CaseDefinition, CaseError> {
    Ok(case(name.parse()?))
}

pub fn case(name: CaseName) -> CaseDefinition {
    match name {
        CaseName::Analytic1d => CaseDefinition {
            name,
            dim: 1,
            bounds: vec![(0.0, 10.0)],
            affine: vec![],
            has_g: true,
            n_flux: 0,
            closed_form: true,
        },
        CaseName::Elliptic2d => CaseDefinition {
            name,
            dim: 2,
            bounds: vec![(1.0, 2.0 * PI), (1.0, 2.0 * PI)],
            affine: vec![BilinearForm::Laplacian],
            has_g: true,
            n_flux: 0,
            closed_form: false,
        },
        CaseName::Cdr2d => CaseDefinition {
            name,
            dim: 2,
            bounds: vec![(0.0, 20.0), (0.0, 20.0)],
            affine: vec![BilinearForm::Laplacian],
            has_g: true,
            n_flux: 2,
            closed_form: false,
        },
    }
}

/// `h(s) = exp(sin s)` and its first three derivatives.
fn exp_sin(s: f64, k: usize) -> f64 {
    let (sn, cs) = s.sin_cos();
    let h = sn.exp();
    match k {
        0 => h,
        1 => cs * h,
        2 => (cs * cs - sn) * h,
        3 => (cs * cs * cs - 3.0 * sn * cs - cs) * h,
        _ => unreachable!("order checked by caller"),
    }
}

impl CaseDefinition {
    pub fn n_params(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, mu: &[f64]) -> bool {
        mu.len() == self.n_params() && mu.iter().zip(&self.bounds).all(|(&m, &(lo, hi))| m >= lo && m <= hi)
    }

    pub fn theta(&self, _mu: &[f64]) -> Vec<f64> {
        vec![1.0; self.affine.len()]
    }

    /// Every interpolation target the case needs: `g` and each flux component,
    /// optionally followed by their `u` derivatives.
    pub fn targets(&self, with_derivatives: bool) -> Vec<Target> {
        let mut out = Vec::new();
        if self.has_g {
            out.push(Target::G);
        }
        out.extend((0..self.n_flux).map(Target::f));
        if with_derivatives {
            if self.has_g {
                out.push(Target::GU);
            }
            out.extend((0..self.n_flux).map(Target::fu));
        }
        out
    }

    /// Right-hand side source `s(x)` of the load functional `l(v) = ∫ s v`.
    pub fn source(&self, x: [f64; 2]) -> f64 {
        match self.name {
            CaseName::Elliptic2d => 100.0 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
            _ => 0.0,
        }
    }

    /// Partial derivative of `term` at `(u, mu)`.
    pub fn eval(&self, term: Term, u: f64, mu: &[f64], order: Order) -> Result<f64, CaseError> {
        if order.total() > 3 {
            return Err(CaseError::OrderTooHigh(order.total()));
        }
        let Order { du, dmu } = order;
        match (self.name, term) {
            (CaseName::Analytic1d, Term::G) => {
                if dmu != [0, 0] {
                    return Ok(0.0);
                }
                let w = 1.0 + u;
                Ok(match du {
                    0 => 1.0 - 1.0 / (w * w),
                    1 => 2.0 / w.powi(3),
                    2 => -6.0 / w.powi(4),
                    _ => 24.0 / w.powi(5),
                })
            }
            (CaseName::Elliptic2d, Term::G) => {
                let (m1, m2) = (mu[0], mu[1]);
                let (a, b, c) = (du, dmu[1], dmu[0]);
                if c > 1 {
                    return Ok(0.0);
                }
                let s = m2 * u;
                let h = |k| exp_sin(s, k);
                let core = match (a, b) {
                    (a, 0) => m2.powi(a as i32) * h(a),
                    (0, b) => u.powi(b as i32) * h(b),
                    (1, 1) => h(1) + s * h(2),
                    (2, 1) => 2.0 * m2 * h(2) + m2 * m2 * u * h(3),
                    (1, 2) => 2.0 * u * h(2) + m2 * u * u * h(3),
                    _ => unreachable!("total order <= 3"),
                };
                Ok(if c == 1 { core } else { m1 * core })
            }
            (CaseName::Cdr2d, Term::G) => {
                if dmu != [0, 0] {
                    return Ok(0.0);
                }
                let k = 2.0 * PI;
                Ok(-k * k.powi(du as i32) * exp_sin(k * u, du))
            }
            (CaseName::Cdr2d, Term::F(d)) if d < 2 => {
                let other = 1 - d;
                if dmu[other] > 0 || dmu[d] > 1 {
                    return Ok(0.0);
                }
                let m = if dmu[d] == 1 { 1.0 } else { mu[d] };
                Ok(match du {
                    0 => -m * u * u,
                    1 => -2.0 * m * u,
                    2 => -2.0 * m,
                    _ => 0.0,
                })
            }
            (_, t) => Err(CaseError::NoSuchTerm { case: self.name.as_str(), which: format!("{t:?}") }),
        }
    }

    /// Value of a target (a term or its `u` derivative) with extra derivatives `order`.
    pub fn eval_target(&self, target: Target, u: f64, mu: &[f64], order: Order) -> Result<f64, CaseError> {
        self.eval(target.term, u, mu, Order::new(order.du + target.du, order.dmu))
    }
}

/// Closed-form solution of the 1D study on `[0, 2] x [0, 10]`.
pub fn analytic_solution_1d(x: f64, mu: f64) -> f64 {
    let m1 = mu + 1.0;
    let e = 0.5 * m1.ln() - 31.25 + 125.0 * x * x / m1;
    // beyond ~709 the exponential overflows; the quotient is then x / (m1 * e^e)
    if e > 700.0 {
        return x / m1 * (-e).exp();
    }
    x / (m1 * (1.0 + e.exp()))
}
