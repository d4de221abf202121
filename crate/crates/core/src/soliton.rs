//! Soliton residuals `R = ½ L_X g − ½ q − φ g`, the named product
//! examples, and the Berger-sphere parameter search.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{named, CatalogError, Chart, FactorSpec};
use crate::curvature::{norm_sq_sym2, CurvatureError, CurvaturePack, Geometry};
use crate::expr::{EvalError, Expr, Params};
use crate::jet::{Jet, JetError};
use crate::product::{self, FactorCurvature, FactorRole, ProductError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolitonError {
    #[error("{what} requires dimension {expected}, manifold has {got}")]
    Dimension { what: &'static str, expected: usize, got: usize },
    #[error("vector field has {got} components, manifold dimension is {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("custom q needs {expected} entries, got {got}")]
    QLength { expected: usize, got: usize },
    #[error("unknown example '{0}'")]
    UnknownExample(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

type Result<T> = std::result::Result<T, SolitonError>;

/// The soliton field: components of `X`, or a potential with `X = ∇f`.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Zero,
    Vector(Vec<Expr>),
    Potential(Expr),
}

/// Right-hand side scale: constant `λ` or function `φ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Scale {
    Constant(f64),
    Function(Expr),
    /// `λ + ΔS/24`, the extended form of the dimension-4 equation.
    BachShifted(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum QSelector {
    /// `B + (1/12) ΔS g`
    BachFlow,
    Bach,
    Ricci,
    /// `q := L_X g − 2 φ g`
    Constructed,
    Zero,
    /// Row-major `n × n` entries.
    Custom(Vec<Expr>),
}

impl QSelector {
    pub fn name(&self) -> &'static str {
        match self {
            QSelector::BachFlow => "bach_flow",
            QSelector::Bach => "bach",
            QSelector::Ricci => "ricci",
            QSelector::Constructed => "constructed",
            QSelector::Zero => "zero",
            QSelector::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonData {
    pub field: Field,
    pub scale: Scale,
    pub q: QSelector,
}

impl SolitonData {
    pub fn gradient(f: Expr, lambda: f64) -> SolitonData {
        SolitonData {
            field: Field::Potential(f),
            scale: Scale::Constant(lambda),
            q: QSelector::BachFlow,
        }
    }

    pub fn is_gradient(&self) -> bool {
        matches!(self.field, Field::Potential(_))
    }

    pub fn is_extended(&self) -> bool {
        !matches!(self.scale, Scale::Constant(_))
    }
}

/// Residual norms `|R|_g` at each point and their supremum.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub points: usize,
    pub sup_norm: f64,
    pub worst_point: Vec<f64>,
    pub norms: Vec<f64>,
}

impl ResidualReport {
    fn from_norms(points: &[Vec<f64>], norms: Vec<f64>) -> ResidualReport {
        let mut worst = 0;
        for (i, v) in norms.iter().enumerate() {
            if *v > norms[worst] || v.is_nan() {
                worst = i;
            }
        }
        ResidualReport {
            points: points.len(),
            sup_norm: norms
                .iter()
                .cloned()
                .fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) }),
            worst_point: points.get(worst).cloned().unwrap_or_default(),
            norms,
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.sup_norm <= tol
    }
}

fn field_jets(geo: &Geometry, chart: &Chart, field: &Field, p: &[f64]) -> Result<Option<Vec<Jet>>> {
    let shape = geo.metric().shape();
    let none = Params::new();
    match field {
        Field::Zero => Ok(None),
        Field::Vector(xs) => {
            if xs.len() != chart.dim() {
                return Err(SolitonError::FieldLength {
                    expected: chart.dim(),
                    got: xs.len(),
                });
            }
            Ok(Some(
                xs.iter()
                    .map(|e| e.eval_jet(p, &none, shape))
                    .collect::<std::result::Result<_, _>>()?,
            ))
        }
        Field::Potential(f) => Ok(Some(geo.gradient(&f.eval_jet(p, &none, shape)?)?)),
    }
}

/// `L_X g` at the point as values.
pub fn lie_metric_at(chart: &Chart, field: &Field, p: &[f64]) -> Result<Tensor<f64>> {
    let geo = chart.geometry(p)?;
    lie_metric(&geo, chart, field, p)
}

fn lie_metric(geo: &Geometry, chart: &Chart, field: &Field, p: &[f64]) -> Result<Tensor<f64>> {
    let n = chart.dim();
    match field_jets(geo, chart, field, p)? {
        None => Ok(Tensor::zeros(n, 2)),
        Some(x) => Ok(geo.lie_derivative_metric(&x)?.map(|j| j.value())),
    }
}

/// Residual tensor `½ L_X g − ½ q − φ g` at one point.
pub fn residual_tensor(chart: &Chart, sd: &SolitonData, p: &[f64]) -> Result<Tensor<f64>> {
    let geo = chart.geometry(p)?;
    let n = chart.dim();
    let lie = lie_metric(&geo, chart, &sd.field, p)?;
    let g = geo.metric().g_value();
    let none = Params::new();
    let needs_pack = matches!(sd.q, QSelector::BachFlow | QSelector::Bach | QSelector::Ricci) || matches!(sd.scale, Scale::BachShifted(_));
    let pack = if needs_pack { Some(CurvaturePack::compute(&geo)?) } else { None };
    let bach_dim = |what| {
        if n == 4 {
            Ok(())
        } else {
            Err(SolitonError::Dimension { what, expected: 4, got: n })
        }
    };
    let phi = match &sd.scale {
        Scale::Constant(l) => *l,
        Scale::Function(e) => e.eval(p, &none)?,
        Scale::BachShifted(l) => {
            bach_dim("extended Bach soliton")?;
            l + pack.as_ref().expect("pack").lap_scalar / 24.0
        }
    };
    let q = match &sd.q {
        QSelector::BachFlow => {
            bach_dim("Bach flow tensor")?;
            pack.as_ref().expect("pack").bach_flow_value()?
        }
        QSelector::Bach => {
            bach_dim("Bach tensor")?;
            pack.as_ref().expect("pack").bach_value()?.clone()
        }
        QSelector::Ricci => pack.as_ref().expect("pack").ricci_value(),
        QSelector::Constructed => lie.zip_map(&g, |l, g| l - 2.0 * phi * g),
        QSelector::Zero => Tensor::zeros(n, 2),
        QSelector::Custom(es) => {
            if es.len() != n * n {
                return Err(SolitonError::QLength {
                    expected: n * n,
                    got: es.len(),
                });
            }
            let v = es.iter().map(|e| e.eval(p, &none)).collect::<std::result::Result<Vec<_>, _>>()?;
            Tensor::from_vec(n, 2, v)
        }
    };
    Ok(Tensor::from_fn(n, 2, |ix| 0.5 * lie.at(ix) - 0.5 * q.at(ix) - phi * g.at(ix)))
}

/// Sup of the metric norm of the residual over `points`.
pub fn extended_q_residual(chart: &Chart, sd: &SolitonData, points: &[Vec<f64>]) -> Result<ResidualReport> {
    let norms = points
        .par_iter()
        .map(|p| {
            let r = residual_tensor(chart, sd, p)?;
            let gi = crate::curvature::invert_values(&chart.metric_values(p)?);
            Ok(norm_sq_sym2(&r, &gi).max(0.0).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ResidualReport::from_norms(points, norms))
}

/// `½ L_X g = ½ (B + (1/12) ΔS g) + λ g` in dimension four.
pub fn bach_soliton_residual(chart: &Chart, field: Field, lambda: f64, points: &[Vec<f64>]) -> Result<ResidualReport> {
    if chart.dim() != 4 {
        return Err(SolitonError::Dimension {
            what: "Bach soliton",
            expected: 4,
            got: chart.dim(),
        });
    }
    let sd = SolitonData {
        field,
        scale: Scale::Constant(lambda),
        q: QSelector::BachFlow,
    };
    extended_q_residual(chart, &sd, points)
}

/// Largest pointwise difference between the `λ` form and the extended
/// form `q = B`, `φ = λ + ΔS/24`.
pub fn extended_form_gap(chart: &Chart, field: &Field, lambda: f64, points: &[Vec<f64>]) -> Result<f64> {
    let a = SolitonData {
        field: field.clone(),
        scale: Scale::Constant(lambda),
        q: QSelector::BachFlow,
    };
    let b = SolitonData {
        field: field.clone(),
        scale: Scale::BachShifted(lambda),
        q: QSelector::Bach,
    };
    let gaps = points
        .par_iter()
        .map(|p| Ok(residual_tensor(chart, &a, p)?.max_abs_diff(&residual_tensor(chart, &b, p)?)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// A named soliton candidate.
#[derive(Debug, Clone)]
pub struct Example {
    pub name: &'static str,
    pub description: &'static str,
    pub chart: Chart,
    pub data: SolitonData,
}

pub const EXAMPLE_NAMES: [&str; 6] = [
    "ho-r2s2",
    "ho-r2h2",
    "berger-line",
    "s4-trivial",
    "ho-r2s2-rescaled",
    "ho-r2h2-rescaled",
];

fn flat_factor_example(name: &'static str, description: &'static str, other: FactorSpec, coef: f64, lambda: f64) -> Result<Example> {
    let chart = named::product(name, vec![named::plane(), other]);
    let f = chart.parse(&format!("{coef:?}*(x^2 + y^2)"))?;
    Ok(Example {
        name,
        description,
        chart,
        data: SolitonData::gradient(f, lambda),
    })
}

pub fn example(name: &str) -> Result<Example> {
    let h2 = || FactorSpec::new("hyperbolic_2");
    match name {
        "ho-r2s2" => flat_factor_example(
            "ho-r2s2",
            "R^2 x S^2(1), f = |x|^2/6, lambda = 1/6",
            named::sphere(2, 1.0),
            1.0 / 6.0,
            1.0 / 6.0,
        ),
        "ho-r2h2" => flat_factor_example("ho-r2h2", "R^2 x H^2(-1), f = |x|^2/6, lambda = 1/6", h2(), 1.0 / 6.0, 1.0 / 6.0),
        "ho-r2s2-rescaled" => flat_factor_example(
            "ho-r2s2-rescaled",
            "R^2 x S^2(1), f = -|x|^2/12, lambda = -1/12",
            named::sphere(2, 1.0),
            -1.0 / 12.0,
            -1.0 / 12.0,
        ),
        "ho-r2h2-rescaled" => flat_factor_example(
            "ho-r2h2-rescaled",
            "R^2 x H^2(-1), f = -|x|^2/12, lambda = -1/12",
            h2(),
            -1.0 / 12.0,
            -1.0 / 12.0,
        ),
        "s4-trivial" => Ok(Example {
            name: "s4-trivial",
            description: "round S^4, X = 0, lambda = 0",
            chart: named::single(named::sphere(4, 1.0)),
            data: SolitonData {
                field: Field::Zero,
                scale: Scale::Constant(0.0),
                q: QSelector::BachFlow,
            },
        }),
        "berger-line" => {
            let BergerOutcome::Root(sol) = solve_berger_soliton(DEFAULT_BERGER_INTERVAL, &BergerControls::default())? else {
                return Err(SolitonError::UnknownExample("berger-line (no root in default interval)".into()));
            };
            let chart = line_cross(named::berger(sol.a));
            let f = profile_potential(&chart, sol.lambda, 0.0, 0.0)?;
            Ok(Example {
                name: "berger-line",
                description: "R x SU(2) with the non-round Berger root, f = 2 lambda t^2",
                chart,
                data: SolitonData::gradient(f, sol.lambda),
            })
        }
        other => Err(SolitonError::UnknownExample(other.to_string())),
    }
}

fn line_cross(n: FactorSpec) -> Chart {
    named::product("line_cross", vec![FactorSpec::new("line"), n])
}

fn profile_potential(chart: &Chart, lambda: f64, a: f64, b: f64) -> Result<Expr> {
    let t = &chart.coord_names()[0];
    Ok(chart.parse(&format!("{:?}*{t}^2 + {a:?}*{t} + {b:?}", 2.0 * lambda))?)
}

/// Profile checks on `ℝ × N³` for `f = 2λt² + at + b`.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub lambda: f64,
    pub lambda_from_invariants: f64,
    /// `d²f/dt² − 4λ`, largest over points.
    pub second_derivative_gap: f64,
    /// `div X − ΔS/6 − 4λ`, largest over points.
    pub traced_gap: f64,
    pub soliton: ResidualReport,
}

pub fn line_profile_check(
    n_factor: FactorSpec,
    lambda: f64,
    a: f64,
    b: f64,
    points: usize,
    seed: u64,
    constancy_tol: f64,
) -> Result<ProfileReport> {
    let n_chart = named::single(n_factor.clone());
    if n_chart.dim() != 3 {
        return Err(SolitonError::Dimension {
            what: "line-cross profile check",
            expected: 3,
            got: n_chart.dim(),
        });
    }
    let lam_inv = product::rn3_lambda_checked(&n_chart, &n_chart.sample_points(32, seed), constancy_tol)?;
    let chart = line_cross(n_factor);
    let f = profile_potential(&chart, lambda, a, b)?;
    let pts = chart.sample_points(points, seed);
    let none = Params::new();
    let gaps = pts
        .par_iter()
        .map(|p| {
            let geo = chart.geometry(p)?;
            let fj = f.eval_jet(p, &none, geo.metric().shape())?;
            let d2 = fj.partial_of(&[2, 0, 0, 0])?;
            let pack = CurvaturePack::compute(&geo)?;
            let div = geo.divergence_vector(&geo.gradient(&fj)?)?.value();
            Ok(((d2 - 4.0 * lambda).abs(), (div - pack.lap_scalar / 6.0 - 4.0 * lambda).abs()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let soliton = bach_soliton_residual(&chart, Field::Potential(f), lambda, &pts)?;
    Ok(ProfileReport {
        lambda,
        lambda_from_invariants: lam_inv,
        second_derivative_gap: gaps.iter().map(|g| g.0).fold(0.0, f64::max),
        traced_gap: gaps.iter().map(|g| g.1).fold(0.0, f64::max),
        soliton,
    })
}

pub const DEFAULT_BERGER_INTERVAL: (f64, f64) = (0.3, 0.9);

/// Fixed interior point of the Euler chart used for the signed residual.
const BERGER_PROBE: [f64; 3] = [0.7, 1.1, 0.4];

#[derive(Debug, Clone)]
pub struct BergerControls {
    pub bisection_width: f64,
    pub root_tol: f64,
    pub max_secant: usize,
    pub points: usize,
    pub seed: u64,
    pub constancy_tol: f64,
}

impl Default for BergerControls {
    fn default() -> Self {
        BergerControls {
            bisection_width: 1e-6,
            root_tol: 1e-12,
            max_secant: 30,
            points: 200,
            seed: 7,
            constancy_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BergerSolution {
    pub a: f64,
    pub lambda: f64,
    pub signed_residual: f64,
    pub evaluations: usize,
    pub profile: ProfileReport,
}

#[derive(Debug, Clone, Serialize)]
pub enum BergerOutcome {
    Root(BergerSolution),
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

/// Eigenvalues of `g⁻¹ E` for symmetric `E` (Cholesky, then cyclic Jacobi).
pub fn metric_eigenvalues(e: &Tensor<f64>, g: &Tensor<f64>) -> Vec<f64> {
    let n = g.dim();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g.at(&[i, j]);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = if i == j { s.sqrt() } else { s / l[j * n + j] };
        }
    }
    // M = L⁻¹ E L⁻ᵀ, columns by forward substitution
    let solve = |b: &[f64]| {
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x
    };
    let mut y = vec![0.0; n * n];
    for c in 0..n {
        let col: Vec<f64> = (0..n).map(|r| e.at(&[r, c])).collect();
        let x = solve(&col);
        for r in 0..n {
            y[r * n + c] = x[r];
        }
    }
    let mut m = vec![0.0; n * n];
    for r in 0..n {
        let row: Vec<f64> = (0..n).map(|c| y[r * n + c]).collect();
        let x = solve(&row);
        for c in 0..n {
            m[r * n + c] = x[c];
        }
    }
    for _ in 0..50 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k * n + p], m[k * n + q]);
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p * n + k], m[q * n + k]);
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

/// Signed dominant eigenvalue of the line-soliton condition tensor on the
/// Berger sphere with parameter `a`. The tensor is invariant and trace-free
/// with eigenvalues `(e, −e/2, −e/2)`, so the dominant one keeps its sign.
pub fn berger_signed_residual(a: f64) -> Result<f64> {
    let chart = named::single(named::berger(a));
    let fc = FactorCurvature::at(&chart, &BERGER_PROBE, FactorRole::ThreeManifold)?;
    let e = product::line_soliton_condition(&fc)?;
    let ev = metric_eigenvalues(&e, &fc.g);
    Ok(ev.into_iter().fold(0.0, |acc: f64, v| if v.abs() > acc.abs() { v } else { acc }))
}

/// Bisection to `bisection_width`, then secant polish.
pub fn solve_berger_soliton(interval: (f64, f64), ctl: &BergerControls) -> Result<BergerOutcome> {
    let (mut lo, mut hi) = if interval.0 <= interval.1 {
        interval
    } else {
        (interval.1, interval.0)
    };
    let mut f_lo = berger_signed_residual(lo)?;
    let mut f_hi = berger_signed_residual(hi)?;
    let mut evals = 2;
    if !(f_lo * f_hi < 0.0) {
        return Ok(BergerOutcome::NoBracket {
            lo: interval.0,
            hi: interval.1,
            f_lo,
            f_hi,
        });
    }
    while hi - lo > ctl.bisection_width {
        let mid = 0.5 * (lo + hi);
        let fm = berger_signed_residual(mid)?;
        evals += 1;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            f_lo = 0.0;
            f_hi = 0.0;
            break;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    let (mut x0, mut f0, mut x1, mut f1) = (lo, f_lo, hi, f_hi);
    for _ in 0..ctl.max_secant {
        if f1 == f0 || (x1 - x0).abs() < ctl.root_tol {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(x2 > interval.0.min(interval.1) && x2 < interval.0.max(interval.1)) {
            break;
        }
        let f2 = berger_signed_residual(x2)?;
        evals += 1;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
    }
    let (a, fa) = if f1.abs() <= f0.abs() { (x1, f1) } else { (x0, f0) };
    let n_chart = named::single(named::berger(a));
    let lambda = product::rn3_lambda_checked(&n_chart, &n_chart.sample_points(32, ctl.seed), ctl.constancy_tol)?;
    let profile = line_profile_check(named::berger(a), lambda, 0.0, 0.0, ctl.points, ctl.seed, ctl.constancy_tol)?;
    Ok(BergerOutcome::Root(BergerSolution {
        a,
        lambda,
        signed_residual: fa,
        evaluations: evals,
        profile,
    }))
}

/// `C = X − (1/3)∇S` on `K² × L²` and its block decomposition
/// `½ L_C g = ρ₁ g_K + ρ₂ g_L + (trace-free and mixed parts)`.
#[derive(Debug, Clone, Serialize)]
pub struct CFieldReport {
    pub c: Vec<f64>,
    pub rho1: f64,
    pub rho2: f64,
    /// Metric norm of the mixed block of `½ L_C g`.
    pub off_block: f64,
    /// Metric norm of the trace-free parts of the diagonal blocks.
    pub trace_free: f64,
}

pub fn surface_c_field(chart: &Chart, field: &Field, p: &[f64]) -> Result<CFieldReport> {
    if chart.dim() != 4 || chart.blocks().len() != 2 || chart.blocks()[0].len() != 2 {
        return Err(SolitonError::Dimension {
            what: "surface product C-field",
            expected: 4,
            got: chart.dim(),
        });
    }
    let geo = chart.geometry(p)?;
    let n = 4;
    let shape = geo.metric().shape();
    let x = field_jets(&geo, chart, field, p)?.unwrap_or_else(|| vec![shape.zero(); n]);
    let pack = CurvaturePack::compute(&geo)?;
    let grad = geo.gradient(&pack.scalar)?;
    let c: Vec<Jet> = (0..n).map(|i| x[i].at_most(1) - grad[i] * (1.0 / 3.0)).collect();
    let half = geo.lie_derivative_metric(&c)?.map(|j| 0.5 * j.value());
    let g = geo.metric().g_value();
    let gi = geo.metric().ginv_value();
    let in_k = |i: usize| i < 2;
    let block_trace = |k: bool| {
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                if in_k(i) == k && in_k(j) == k {
                    t += gi.at(&[i, j]) * half.at(&[i, j]);
                }
            }
        }
        t / 2.0
    };
    let (rho1, rho2) = (block_trace(true), block_trace(false));
    let mixed = Tensor::from_fn(n, 2, |ix| if in_k(ix[0]) != in_k(ix[1]) { half.at(ix) } else { 0.0 });
    let tf = Tensor::from_fn(n, 2, |ix| {
        if in_k(ix[0]) != in_k(ix[1]) {
            0.0
        } else {
            let rho = if in_k(ix[0]) { rho1 } else { rho2 };
            half.at(ix) - rho * g.at(ix)
        }
    });
    Ok(CFieldReport {
        c: c.iter().map(|j| j.value()).collect(),
        rho1,
        rho2,
        off_block: norm_sq_sym2(&mixed, &gi).max(0.0).sqrt(),
        trace_free: norm_sq_sym2(&tf, &gi).max(0.0).sqrt(),
    })
}

/// The two expressions for `φ` when `K` has constant curvature and the
/// `K`-part of `C` vanishes: `(φ from the K-block, φ of the closed form)`.
pub fn compact_factor_phi(k: &FactorCurvature, l: &FactorCurvature) -> (f64, f64) {
    let (sk, sl) = (k.scalar, l.scalar);
    let from_block = (k.lap_scalar - 0.5 * l.lap_scalar + 0.25 * (sk * sk - sl * sl)) / 3.0;
    let closed = -(l.lap_scalar + 0.5 * sl * sl) / 6.0 + sk * sk / 12.0;
    (from_block, closed)
}

/// Largest mixed-block and largest overall `|Hess f|` entry over points.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitReport {
    pub mixed_max: f64,
    pub hess_max: f64,
}

pub fn splitting_spotcheck(chart: &Chart, f: &Expr, points: &[Vec<f64>]) -> Result<SplitReport> {
    let blocks = chart.blocks().to_vec();
    let none = Params::new();
    let parts = points
        .par_iter()
        .map(|p| {
            let geo = chart.geometry(p)?;
            let h = geo.hessian(&f.eval_jet(p, &none, geo.metric().shape())?)?.map(|j| j.value());
            let block_of = |i: usize| blocks.iter().position(|b| b.contains(&i));
            let mut mixed: f64 = 0.0;
            for i in 0..chart.dim() {
                for j in 0..chart.dim() {
                    if block_of(i) != block_of(j) {
                        mixed = mixed.max(h.at(&[i, j]).abs());
                    }
                }
            }
            Ok((mixed, h.max_abs()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(SplitReport {
        mixed_max: parts.iter().map(|p| p.0).fold(0.0, f64::max),
        hess_max: parts.iter().map(|p| p.1).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::named::*;

    fn pts(c: &Chart, n: usize) -> Vec<Vec<f64>> {
        c.sample_points(n, 11)
    }

    #[test]
    fn killing_field_has_zero_residual() {
        let s2 = single(sphere(2, 1.0));
        let sd = SolitonData {
            field: Field::Vector(vec![s2.parse("0").unwrap(), s2.parse("1").unwrap()]),
            scale: Scale::Constant(0.0),
            q: QSelector::Zero,
        };
        assert!(extended_q_residual(&s2, &sd, &pts(&s2, 40)).unwrap().sup_norm < 1e-12);
    }

    #[test]
    fn constructed_q_closes_exactly() {
        let c = single(FactorSpec::new("random_metric").param("dim", 3).param("seed", 4));
        let sd = SolitonData {
            field: Field::Vector(vec![
                c.parse("sin(x1) + cos(x2)").unwrap(),
                c.parse("cos(x0)*sin(x2)").unwrap(),
                c.parse("0.3*sin(x0 + x1)").unwrap(),
            ]),
            scale: Scale::Function(c.parse("cos(x0 - x2)").unwrap()),
            q: QSelector::Constructed,
        };
        assert!(extended_q_residual(&c, &sd, &pts(&c, 30)).unwrap().sup_norm < 1e-13);
    }

    #[test]
    fn conformal_gradient_on_sphere() {
        let s2 = single(sphere(2, 1.0));
        let sd = SolitonData {
            field: Field::Potential(s2.parse("cos(theta)").unwrap()),
            scale: Scale::Function(s2.parse("-cos(theta)").unwrap()),
            q: QSelector::Zero,
        };
        assert!(extended_q_residual(&s2, &sd, &pts(&s2, 50)).unwrap().sup_norm < 1e-12);
    }

    #[test]
    fn round_s4_is_trivial() {
        let ex = example("s4-trivial").unwrap();
        let r = extended_q_residual(&ex.chart, &ex.data, &pts(&ex.chart, 20)).unwrap();
        assert!(r.sup_norm < 1e-9, "{}", r.sup_norm);
    }

    #[test]
    fn rescaled_flat_factor_solitons() {
        for name in ["ho-r2s2-rescaled", "ho-r2h2-rescaled"] {
            let ex = example(name).unwrap();
            let r = extended_q_residual(&ex.chart, &ex.data, &pts(&ex.chart, 30)).unwrap();
            assert!(r.sup_norm < 1e-9, "{name}: {}", r.sup_norm);
        }
        // the stated normalization leaves ∓1/4 g on each block
        let ex = example("ho-r2s2").unwrap();
        let r = extended_q_residual(&ex.chart, &ex.data, &pts(&ex.chart, 10)).unwrap();
        assert!((r.sup_norm - 0.5).abs() < 1e-9, "{}", r.sup_norm);
    }

    #[test]
    fn extended_form_agrees() {
        let ex = example("ho-r2s2-rescaled").unwrap();
        let gap = extended_form_gap(&ex.chart, &ex.data.field, -1.0 / 12.0, &pts(&ex.chart, 10)).unwrap();
        assert!(gap < 1e-12);
        let c = single(FactorSpec::new("random_metric").param("dim", 4).param("seed", 2));
        let f = Field::Potential(c.parse("sin(x0)*cos(x3)").unwrap());
        assert!(extended_form_gap(&c, &f, 0.3, &pts(&c, 3)).unwrap() < 1e-12);
    }

    #[test]
    fn berger_root() {
        let out = solve_berger_soliton(
            DEFAULT_BERGER_INTERVAL,
            &BergerControls {
                points: 40,
                ..Default::default()
            },
        )
        .unwrap();
        let BergerOutcome::Root(sol) = out else { panic!("no root") };
        assert!((sol.a - 0.5).abs() < 1e-10, "{}", sol.a);
        assert!((sol.lambda + 0.25).abs() < 1e-9);
        assert!(sol.profile.soliton.sup_norm < 1e-7);
        assert!(sol.profile.traced_gap < 1e-8);
        assert!(matches!(
            solve_berger_soliton((1.2, 3.0), &BergerControls::default()).unwrap(),
            BergerOutcome::NoBracket { .. }
        ));
        assert!(berger_signed_residual(1.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_of_diagonal_pair() {
        let g = Tensor::from_vec(2, 2, vec![4.0, 0.0, 0.0, 1.0]);
        let e = Tensor::from_vec(2, 2, vec![8.0, 0.0, 0.0, -3.0]);
        let mut ev = metric_eigenvalues(&e, &g);
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 3.0).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn c_field_and_splitting() {
        let p = product("s2xs2", vec![sphere(2, 1.0), sphere(2, 1.0)]);
        let pt = [0.9, 0.3, 1.7, 2.0];
        let r = surface_c_field(&p, &Field::Zero, &pt).unwrap();
        assert!(r.c.iter().all(|c| c.abs() < 1e-12) && r.rho1.abs() < 1e-12);
        let kill = Field::Vector(["0", "1", "0", "0"].iter().map(|s| p.parse(s).unwrap()).collect());
        let r = surface_c_field(&p, &kill, &pt).unwrap();
        assert!((r.c[1] - 1.0).abs() < 1e-12 && r.rho1.abs() < 1e-12 && r.trace_free < 1e-12);
        let conf = Field::Potential(p.parse("cos(theta_1)").unwrap());
        let r = surface_c_field(&p, &conf, &pt).unwrap();
        assert!((r.rho1 + pt[0].cos()).abs() < 1e-12 && r.off_block < 1e-12 && r.trace_free < 1e-12);

        let sx = product("s2xr2", vec![sphere(2, 1.0), plane()]);
        let q = pts(&sx, 20);
        let split = splitting_spotcheck(&sx, &sx.parse("cos(theta) + x^2").unwrap(), &q).unwrap();
        assert!(split.mixed_max < 1e-13 && split.hess_max > 0.1);
        let mixed = splitting_spotcheck(&sx, &sx.parse("cos(theta)*x").unwrap(), &q).unwrap();
        assert!(mixed.mixed_max > 1e-3);
        let konst = splitting_spotcheck(&sx, &sx.parse("3").unwrap(), &q).unwrap();
        assert_eq!(konst.hess_max, 0.0);
    }

    #[test]
    fn compact_factor_phi_forms_agree() {
        let k = FactorCurvature::at(&single(sphere(2, 1.0)), &[1.0, 0.2], FactorRole::SurfaceK).unwrap();
        let lc = single(conformal_sphere("0.2*cos(theta)"));
        let l = FactorCurvature::at(&lc, &[0.7, 0.4], FactorRole::SurfaceL).unwrap();
        let (a, b) = compact_factor_phi(&k, &l);
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn dimension_errors() {
        let s2 = single(sphere(2, 1.0));
        assert!(matches!(
            bach_soliton_residual(&s2, Field::Zero, 0.0, &pts(&s2, 2)),
            Err(SolitonError::Dimension { .. })
        ));
        assert!(matches!(example("nope"), Err(SolitonError::UnknownExample(_))));
    }
}
