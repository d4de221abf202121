//! Pointwise and integral identities for vector fields, symmetric tensors
//! and solitons, evaluated with jets and quadrature.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{CatalogError, Chart};
use crate::curvature::{norm_sq_sym2, CurvatureError, CurvaturePack, Geometry};
use crate::expr::{EvalError, Expr, Params};
use crate::fd::{directional, Stencil};
use crate::jet::{Jet, JetError, Shape};
use crate::product::Spread;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentityError {
    #[error("expected {expected} expressions, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("{what} requires dimension {requirement}, manifold has {dim}")]
    Dimension {
        what: &'static str,
        requirement: &'static str,
        dim: usize,
    },
    #[error("vector field is not conformal: trace-free part of L_X g is {defect:e} (tolerance {tol:e})")]
    NotConformal { defect: f64, tol: f64 },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

type Result<T> = std::result::Result<T, IdentityError>;

/// Both sides of a scalar identity at a point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalarCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl ScalarCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    pub fn scale(&self) -> f64 {
        self.lhs.abs().max(self.rhs.abs())
    }

    /// Residual relative to `max(scale, 1)`.
    pub fn relative(&self) -> f64 {
        self.residual() / self.scale().max(1.0)
    }
}

/// Both sides of a covector identity at a point.
#[derive(Debug, Clone, Serialize)]
pub struct CovectorCheck {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl CovectorCheck {
    pub fn residual(&self) -> f64 {
        self.lhs.iter().zip(&self.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self) -> f64 {
        self.lhs.iter().chain(&self.rhs).map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn relative(&self) -> f64 {
        self.residual() / self.scale().max(1.0)
    }
}

fn arity(es: &[Expr], n: usize) -> Result<()> {
    if es.len() == n {
        Ok(())
    } else {
        Err(IdentityError::Arity {
            expected: n,
            got: es.len(),
        })
    }
}

fn jets(es: &[Expr], p: &[f64], shape: Shape) -> Result<Vec<Jet>> {
    let none = Params::new();
    Ok(es
        .iter()
        .map(|e| e.eval_jet(p, &none, shape))
        .collect::<std::result::Result<_, _>>()?)
}

fn jet(e: &Expr, p: &[f64], shape: Shape) -> Result<Jet> {
    Ok(e.eval_jet(p, &Params::new(), shape)?)
}

fn sym2(es: &[Expr], p: &[f64], shape: Shape) -> Result<Tensor<Jet>> {
    let n = shape.dim();
    arity(es, n * n)?;
    let v = jets(es, p, shape)?;
    Ok(Tensor::from_fn(n, 2, |ix| (v[ix[0] * n + ix[1]] + v[ix[1] * n + ix[0]]) * 0.5))
}

fn pairing(w: &[Jet], x: &[Jet]) -> Jet {
    let k = w.iter().chain(x).map(|j| j.order()).min().unwrap_or(0);
    w.iter()
        .zip(x)
        .fold(w[0].shape().with_order(k).expect("order").zero(), |acc, (a, b)| {
            acc + a.at_most(k) * b.at_most(k)
        })
}

fn geometry(chart: &Chart, p: &[f64], order: usize) -> Result<Geometry> {
    Ok(Geometry::new(chart.metric_jet(p, order)?)?)
}

/// `⟨L_X g, T⟩ = 2 div(i_X T) − 2 (div T)(X)` for symmetric `T`.
pub fn lie_pairing_pointwise(chart: &Chart, t: &[Expr], x: &[Expr], p: &[f64]) -> Result<ScalarCheck> {
    let geo = chart.geometry(p)?;
    let shape = geo.metric().shape();
    arity(x, chart.dim())?;
    let tj = sym2(t, p, shape)?;
    let xj = jets(x, p, shape)?;
    let lie = geo.lie_derivative_metric(&xj)?;
    let lhs = geo.inner_sym2(&lie, &tj).value();
    let ixt = geo.contract_vector(&tj, &xj);
    let div_ixt = geo.divergence_vector(&geo.raise(&ixt))?.value();
    let div_t = geo.divergence_sym2(&tj)?;
    let rhs = 2.0 * div_ixt - 2.0 * pairing(&div_t, &xj).value();
    Ok(ScalarCheck { lhs, rhs })
}

/// `div(L_X g) = div(q̊) + (2/n) d(div X)` with `q = L_X g − 2 φ g`.
pub fn div_lie_identity(chart: &Chart, x: &[Expr], phi: &Expr, p: &[f64]) -> Result<CovectorCheck> {
    let geo = chart.geometry(p)?;
    let shape = geo.metric().shape();
    let n = chart.dim();
    arity(x, n)?;
    let xj = jets(x, p, shape)?;
    let phij = jet(phi, p, shape)?;
    let lie = geo.lie_derivative_metric(&xj)?;
    let g = geo.metric().g().clone();
    let q = Tensor::from_fn(n, 2, |ix| {
        let l = *lie.get(ix);
        l - phij.at_most(l.order()) * g.get(ix).at_most(l.order()) * 2.0
    });
    let qo = geo.trace_free(&q);
    let lhs: Vec<f64> = geo.divergence_sym2(&lie)?.iter().map(|j| j.value()).collect();
    let div_qo = geo.divergence_sym2(&qo)?;
    let d_div = geo.differential(&geo.divergence_vector(&xj)?)?;
    let rhs = (0..n).map(|j| div_qo[j].value() + 2.0 / n as f64 * d_div[j].value()).collect();
    Ok(CovectorCheck { lhs, rhs })
}

/// Metric norm of the trace-free part of `L_X g`.
pub fn conformal_defect(chart: &Chart, x: &[Expr], p: &[f64]) -> Result<f64> {
    let geo = geometry(chart, p, 2)?;
    arity(x, chart.dim())?;
    let xj = jets(x, p, geo.metric().shape())?;
    let tf = geo.trace_free(&geo.lie_derivative_metric(&xj)?).map(|j| j.value());
    Ok(geo.norm_sq_values(&tf).max(0.0).sqrt())
}

/// `X(S) = −2σS − 2(n−1)Δσ`, `σ = div X / n`, for conformal `X`.
pub fn yano_pointwise(chart: &Chart, x: &[Expr], p: &[f64], conformal_tol: f64) -> Result<ScalarCheck> {
    let defect = conformal_defect(chart, x, p)?;
    if !(defect <= conformal_tol) {
        return Err(IdentityError::NotConformal {
            defect,
            tol: conformal_tol,
        });
    }
    let geo = chart.geometry(p)?;
    let n = chart.dim() as f64;
    let xj = jets(x, p, geo.metric().shape())?;
    let pack = CurvaturePack::compute(&geo)?;
    let sigma = geo.divergence_vector(&xj)? * (1.0 / n);
    let lap_sigma = geo.laplacian(&sigma)?.value();
    let ds = geo.differential(&pack.scalar)?;
    let lhs = pairing(&ds, &xj).value();
    let rhs = -2.0 * sigma.value() * pack.scalar_value() - 2.0 * (n - 1.0) * lap_sigma;
    Ok(ScalarCheck { lhs, rhs })
}

/// `div(Hess h) = Ric(∇h) + d(Δh)`
pub fn bochner_pointwise(chart: &Chart, h: &Expr, p: &[f64]) -> Result<CovectorCheck> {
    let geo = chart.geometry(p)?;
    let n = chart.dim();
    let hj = jet(h, p, geo.metric().shape())?;
    let lhs: Vec<f64> = geo.divergence_sym2(&geo.hessian(&hj)?)?.iter().map(|j| j.value()).collect();
    let pack = CurvaturePack::compute(&geo)?;
    let ric = pack.ricci_value();
    let grad: Vec<f64> = geo.gradient(&hj)?.iter().map(|j| j.value()).collect();
    let d_lap = geo.differential(&geo.laplacian(&hj)?)?;
    let rhs = (0..n)
        .map(|j| (0..n).map(|i| ric.at(&[i, j]) * grad[i]).sum::<f64>() + d_lap[j].value())
        .collect();
    Ok(CovectorCheck { lhs, rhs })
}

/// Imbalance of an integral identity and the size of its largest term.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegralBalance {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

impl IntegralBalance {
    fn new(lhs: f64, rhs: f64, terms: &[f64]) -> IntegralBalance {
        IntegralBalance {
            lhs,
            rhs,
            scale: terms.iter().map(|t| t.abs()).fold(0.0, f64::max),
        }
    }

    pub fn imbalance(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    /// Imbalance over the largest term, floored at 1.
    pub fn relative(&self) -> f64 {
        self.imbalance() / self.scale.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolitonIntegrals {
    /// `∫(φ tr q + (tr q)²/(2n) + (div q)(X)) = −½ ∫‖q̊‖²`
    pub first: IntegralBalance,
    /// `∫(div q̊)(X) = −½ ∫‖L̊_X g‖²`
    pub second: IntegralBalance,
    pub nodes: usize,
}

/// The two integral identities for constructed data `q = L_X g − 2 φ g`.
pub fn soliton_integrals(chart: &Chart, x: &[Expr], phi: &Expr, refine: usize) -> Result<SolitonIntegrals> {
    let n = chart.dim();
    arity(x, n)?;
    let quad = chart.quadrature(refine)?;
    let nf = n as f64;
    let vals = quad.integrate_many(7, |p| {
        let geo = geometry(chart, p, 3)?;
        let shape = geo.metric().shape();
        let xj = jets(x, p, shape)?;
        let phij = jet(phi, p, shape)?;
        let lie = geo.lie_derivative_metric(&xj)?;
        let g = geo.metric().g().clone();
        let q = Tensor::from_fn(n, 2, |ix| {
            let l = *lie.get(ix);
            l - phij.at_most(l.order()) * g.get(ix).at_most(l.order()) * 2.0
        });
        let qo = geo.trace_free(&q);
        let tr = geo.trace(&q).value();
        let div_q = geo.divergence_sym2(&q)?;
        let div_qo = geo.divergence_sym2(&qo)?;
        let gi = geo.metric().ginv_value();
        let qo_v = qo.map(|j| j.value());
        let lo_v = geo.trace_free(&lie).map(|j| j.value());
        Ok::<_, IdentityError>(vec![
            phij.value() * tr,
            tr * tr / (2.0 * nf),
            pairing(&div_q, &xj).value(),
            -0.5 * norm_sq_sym2(&qo_v, &gi),
            pairing(&div_qo, &xj).value(),
            -0.5 * norm_sq_sym2(&lo_v, &gi),
            0.0,
        ])
    })?;
    Ok(SolitonIntegrals {
        first: IntegralBalance::new(vals[0] + vals[1] + vals[2], vals[3], &vals[0..4]),
        second: IntegralBalance::new(vals[4], vals[5], &vals[4..6]),
        nodes: quad.len(),
    })
}

/// The symmetric tensor in the conformal-field integral formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceTensor {
    Ricci,
    /// `S g`
    ScalarMetric,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConformalIntegral {
    /// `∫ X(tr q)`
    pub integral: f64,
    /// `∫ |S|`
    pub abs_scalar: f64,
    /// Sup over interior nodes of `|div q − ½ d tr q|`.
    pub bianchi_defect: f64,
    /// Sup over interior nodes of the trace-free part of `L_X g`.
    pub conformal_defect: f64,
    pub nodes: usize,
}

/// Whether `p` lies in the chart's sample box, away from coordinate
/// singularities where jet arithmetic loses digits.
fn interior(chart: &Chart, p: &[f64]) -> bool {
    chart.sample_box().iter().zip(p).all(|((lo, hi), x)| *lo <= *x && *x <= *hi)
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

/// `∫ L_X tr(q) dvol` for conformal `X` and `q` with `div q = ½ ∇ tr q`.
pub fn bourguignon_ezin(chart: &Chart, x: &[Expr], q: TraceTensor, refine: usize) -> Result<ConformalIntegral> {
    let n = chart.dim();
    arity(x, n)?;
    let nf = n as f64;
    let quad = chart.quadrature(refine)?;
    let per_node = |p: &[f64]| -> Result<[f64; 4]> {
        let geo = chart.geometry(p)?;
        let xj = jets(x, p, geo.metric().shape())?;
        let pack = CurvaturePack::compute(&geo)?;
        let ds = geo.differential(&pack.scalar)?;
        let xs = pairing(&ds, &xj).value();
        let (integrand, bianchi) = match q {
            TraceTensor::Ricci => (xs, sup(pack.bianchi_defect().into_iter().map(f64::abs))),
            TraceTensor::ScalarMetric => (nf * xs, sup(ds.iter().map(|d| ((1.0 - nf / 2.0) * d.value()).abs()))),
        };
        let tf = geo.trace_free(&geo.lie_derivative_metric(&xj)?).map(|j| j.value());
        let conf = geo.norm_sq_values(&tf).max(0.0).sqrt();
        let (bianchi, conf) = if interior(chart, p) { (bianchi, conf) } else { (0.0, 0.0) };
        Ok([integrand, pack.scalar_value().abs(), bianchi, conf])
    };
    let rows: Vec<[f64; 4]> = {
        use rayon::prelude::*;
        quad.nodes.par_iter().map(|p| per_node(p)).collect::<Result<_>>()?
    };
    let weighted = |k: usize| {
        let t: Vec<f64> = rows.iter().zip(&quad.weights).map(|(r, w)| r[k] * w).collect();
        crate::quadrature::pairwise_sum(&t)
    };
    Ok(ConformalIntegral {
        integral: weighted(0),
        abs_scalar: weighted(1),
        bianchi_defect: sup(rows.iter().map(|r| r[2])),
        conformal_defect: sup(rows.iter().map(|r| r[3])),
        nodes: quad.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConformalVerdict {
    /// The integral vanishes and `X` is conformal.
    Conformal,
    /// The integral does not vanish.
    NotConformal,
    /// The integral vanishes but `X` is not conformal.
    Contradiction,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceFreeIntegral {
    /// `∫(‖q̊‖² + ((n−2)/n) X(tr q))`
    pub integral: f64,
    pub scale: f64,
    pub bianchi_defect: f64,
    pub conformal_defect: f64,
    pub verdict: ConformalVerdict,
}

/// The trace-free integral for constructed data, with the conformality
/// conclusion it forces.
pub fn trace_free_integral(
    chart: &Chart,
    x: &[Expr],
    phi: &Expr,
    refine: usize,
    integral_tol: f64,
    conformal_tol: f64,
) -> Result<TraceFreeIntegral> {
    let n = chart.dim();
    arity(x, n)?;
    let nf = n as f64;
    let quad = chart.quadrature(refine)?;
    let rows: Vec<[f64; 4]> = {
        use rayon::prelude::*;
        quad.nodes
            .par_iter()
            .map(|p| {
                let geo = chart.geometry(p)?;
                let shape = geo.metric().shape();
                let xj = jets(x, p, shape)?;
                let phij = jet(phi, p, shape)?;
                let lie = geo.lie_derivative_metric(&xj)?;
                let g = geo.metric().g().clone();
                let q = Tensor::from_fn(n, 2, |ix| {
                    let l = *lie.get(ix);
                    l - phij.at_most(l.order()) * g.get(ix).at_most(l.order()) * 2.0
                });
                let qo = geo.trace_free(&q).map(|j| j.value());
                let tr = geo.trace(&q);
                let dtr = geo.differential(&tr)?;
                let div_q = geo.divergence_sym2(&q)?;
                let bianchi = sup((0..n).map(|j| (div_q[j].value() - 0.5 * dtr[j].value()).abs()));
                let a = geo.norm_sq_values(&qo);
                let b = (nf - 2.0) / nf * pairing(&dtr, &xj).value();
                let tf = geo.trace_free(&lie).map(|j| j.value());
                let conf = geo.norm_sq_values(&tf).max(0.0).sqrt();
                let (bianchi, conf) = if interior(chart, p) { (bianchi, conf) } else { (0.0, 0.0) };
                Ok([a + b, a.abs() + b.abs(), bianchi, conf])
            })
            .collect::<Result<_>>()?
    };
    let weighted = |k: usize| {
        let t: Vec<f64> = rows.iter().zip(&quad.weights).map(|(r, w)| r[k] * w).collect();
        crate::quadrature::pairwise_sum(&t)
    };
    let integral = weighted(0);
    let scale = weighted(1);
    let conformal = sup(rows.iter().map(|r| r[3]));
    let vanishes = integral.abs() <= integral_tol * scale.max(1.0);
    let verdict = match (vanishes, conformal <= conformal_tol) {
        (true, true) => ConformalVerdict::Conformal,
        (true, false) => ConformalVerdict::Contradiction,
        (false, _) => ConformalVerdict::NotConformal,
    };
    Ok(TraceFreeIntegral {
        integral,
        scale,
        bianchi_defect: sup(rows.iter().map(|r| r[2])),
        conformal_defect: conformal,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub enum SurfaceRigidity {
    /// `c = ΔS + S²/3` is not constant; nothing further is concluded.
    HypothesisRejected {
        c: Spread,
    },
    Verified(SurfaceRigidityChecks),
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceRigidityChecks {
    pub c: Spread,
    /// Sup over sample points of `|∇(S²) + 3∇ΔS|`.
    pub gradient_gap: f64,
    /// `∫‖Hess S‖² = ¼ ∫(ΔS)²`
    pub hessian_integral: IntegralBalance,
    /// Smallest `‖Hess S‖² − (ΔS)²/2` over samples and interior nodes.
    pub cauchy_schwarz_margin: f64,
    pub lap_scalar_sup: f64,
    pub scalar: Spread,
}

/// Scalar-curvature quantities of a surface at a point: `S, ΔS, ‖Hess S‖², |∇S|²`.
fn surface_scalars(chart: &Chart, p: &[f64]) -> Result<[f64; 4]> {
    let pack = chart.curvature(p)?;
    let h = &pack.hess_scalar;
    let gs = &pack.grad_scalar;
    let gi = &pack.ginv;
    let mut grad2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            grad2 += gi.at(&[i, j]) * gs[i] * gs[j];
        }
    }
    Ok([pack.scalar_value(), pack.lap_scalar, norm_sq_sym2(h, gi), grad2])
}

/// `∫‖Hess S‖² = ∫(ΔS)² − ½∫S|∇S|²`, valid on every closed surface.
pub fn surface_hessian_integral(chart: &Chart, refine: usize) -> Result<IntegralBalance> {
    let quad = chart.quadrature(refine)?;
    let v = quad.integrate_many(3, |p| {
        let [s, lap, h2, g2] = surface_scalars(chart, p)?;
        Ok::<_, IdentityError>(vec![h2, lap * lap, -0.5 * s * g2])
    })?;
    Ok(IntegralBalance::new(v[0], v[1] + v[2], &v))
}

/// Rigidity chain for a closed surface with constant `c = ΔS + S²/3`.
pub fn surface_rigidity(chart: &Chart, refine: usize, samples: usize, seed: u64, constancy_tol: f64) -> Result<SurfaceRigidity> {
    if chart.dim() != 2 {
        return Err(IdentityError::Dimension {
            what: "surface rigidity",
            requirement: "2",
            dim: chart.dim(),
        });
    }
    let quad = chart.quadrature(refine)?;
    let mut pts = chart.sample_points(samples, seed);
    pts.extend(quad.nodes.iter().filter(|p| interior(chart, p)).cloned());
    let rows: Vec<[f64; 4]> = {
        use rayon::prelude::*;
        pts.par_iter().map(|p| surface_scalars(chart, p)).collect::<Result<_>>()?
    };
    let c = Spread::of(rows.iter().map(|r| r[1] + r[0] * r[0] / 3.0));
    let cscale = c.max.abs().max(c.min.abs()).max(1.0);
    if c.width() > constancy_tol * cscale {
        return Ok(SurfaceRigidity::HypothesisRejected { c });
    }
    let sample_pts = &pts[..samples];
    let mut gradient_gap: f64 = 0.0;
    for p in sample_pts {
        let pack = chart.curvature(p)?;
        let mut err = None;
        let d_lap: Vec<f64> = (0..2)
            .map(|m| {
                directional(
                    |q| match chart.curvature(q) {
                        Ok(pk) => vec![pk.lap_scalar],
                        Err(e) => {
                            err.get_or_insert(e);
                            vec![0.0]
                        }
                    },
                    p,
                    m,
                    Stencil::Sixth,
                    0.02,
                )[0]
            })
            .collect();
        if let Some(e) = err {
            return Err(e.into());
        }
        let s = pack.scalar_value();
        for m in 0..2 {
            gradient_gap = gradient_gap.max((2.0 * s * pack.grad_scalar[m] + 3.0 * d_lap[m]).abs());
        }
    }
    let v = quad.integrate_many(2, |p| {
        let [_, lap, h2, _] = surface_scalars(chart, p)?;
        Ok::<_, IdentityError>(vec![h2, 0.25 * lap * lap])
    })?;
    Ok(SurfaceRigidity::Verified(SurfaceRigidityChecks {
        c,
        gradient_gap,
        hessian_integral: IntegralBalance::new(v[0], v[1], &v),
        cauchy_schwarz_margin: rows.iter().map(|r| r[2] - 0.5 * r[1] * r[1]).fold(f64::INFINITY, f64::min),
        lap_scalar_sup: sup(rows.iter().map(|r| r[1].abs())),
        scalar: Spread::of(rows.iter().map(|r| r[0])),
    }))
}

/// Smallest `‖Hess S‖² − (ΔS)²/2` over points of a surface.
pub fn cauchy_schwarz_margin(chart: &Chart, points: &[Vec<f64>]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for p in points {
        let [_, lap, h2, _] = surface_scalars(chart, p)?;
        m = m.min(h2 - 0.5 * lap * lap);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::named::*;
    use crate::catalog::FactorSpec;

    fn exprs(c: &Chart, v: &[&str]) -> Vec<Expr> {
        v.iter().map(|s| c.parse(s).unwrap()).collect()
    }

    #[test]
    fn lie_pairing_with_metric_is_twice_divergence() {
        let c = single(FactorSpec::new("random_metric").param("dim", 3).param("seed", 5));
        let x = exprs(&c, &["sin(x1)", "cos(x0 + x2)", "0.5*sin(x0)*cos(x1)"]);
        let p = [0.3, 1.2, 2.0];
        // T = g: the identity reads 2 div X = 2 div X
        let g: Vec<Expr> = c.metric_exprs().to_vec();
        let r = lie_pairing_pointwise(&c, &g, &x, &p).unwrap();
        assert!(r.relative() < 1e-10);
        let geo = c.geometry(&p).unwrap();
        let xj = jets(&x, &p, geo.metric().shape()).unwrap();
        let div = geo.divergence_vector(&xj).unwrap().value();
        assert!((r.lhs - 2.0 * div).abs() < 1e-10);
        let t = exprs(
            &c,
            &["cos(x0)", "sin(x2)", "0", "sin(x2)", "1", "cos(x1)", "0", "cos(x1)", "exp(sin(x0))"],
        );
        assert!(lie_pairing_pointwise(&c, &t, &x, &p).unwrap().relative() < 1e-10);
    }

    #[test]
    fn killing_field_pairing_vanishes() {
        let s2 = single(sphere(2, 1.0));
        let x = exprs(&s2, &["0", "1"]);
        let t = exprs(&s2, &["cos(phi)", "sin(theta)", "sin(theta)", "cos(theta)^2"]);
        let r = lie_pairing_pointwise(&s2, &t, &x, &[1.0, 0.4]).unwrap();
        assert!(r.lhs.abs() < 1e-13 && r.rhs.abs() < 1e-12);
    }

    #[test]
    fn yano_on_round_and_conformal_spheres() {
        let s2 = single(sphere(2, 1.0));
        let x = exprs(&s2, &["-sin(theta)", "0"]);
        let r = yano_pointwise(&s2, &x, &[0.8, 0.1], 1e-9).unwrap();
        assert!(r.lhs.abs() < 1e-13 && r.rhs.abs() < 1e-12);
        let cs = single(conformal_sphere("0.2*cos(theta)"));
        let x = exprs(&cs, &["-sin(theta)", "0"]);
        let r = yano_pointwise(&cs, &x, &[0.8, 0.1], 1e-9).unwrap();
        assert!(r.relative() < 1e-10 && r.scale() > 1e-3);
        let bad = exprs(&cs, &["sin(theta)^2", "0"]);
        assert!(matches!(
            yano_pointwise(&cs, &bad, &[0.8, 0.1], 1e-9),
            Err(IdentityError::NotConformal { .. })
        ));
    }

    #[test]
    fn bochner_on_sphere_and_random_surface() {
        let s2 = single(sphere(2, 1.0));
        let r = bochner_pointwise(&s2, &s2.parse("cos(theta)").unwrap(), &[1.1, 0.2]).unwrap();
        // Hess cos θ = −cos θ g, so div Hess = sin θ dθ; Ric(∇h) = −sin θ dθ; dΔh = 2 sin θ dθ
        assert!((r.lhs[0] - (1.1f64).sin()).abs() < 1e-12 && r.residual() < 1e-12);
        let c = single(FactorSpec::new("random_metric").param("dim", 2).param("seed", 9));
        let r = bochner_pointwise(&c, &c.parse("sin(x0)*cos(2*x1) + x0").unwrap(), &[0.4, 2.2]).unwrap();
        assert!(r.relative() < 1e-10);
        let r = bochner_pointwise(&c, &c.parse("3").unwrap(), &[0.4, 2.2]).unwrap();
        assert_eq!(r.scale(), 0.0);
    }

    #[test]
    fn div_lie_identity_holds() {
        let c = single(FactorSpec::new("random_metric").param("dim", 4).param("seed", 3));
        let x = exprs(&c, &["sin(x1)", "cos(x3)", "sin(x0 + x2)", "0.2"]);
        let r = div_lie_identity(&c, &x, &c.parse("cos(x2)").unwrap(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(r.relative() < 1e-10);
    }

    #[test]
    fn sphere_integrals_closed_form() {
        let s2 = single(sphere(2, 1.0));
        let x = exprs(&s2, &["-sin(theta)", "0"]);
        let r = soliton_integrals(&s2, &x, &s2.parse("0.3*cos(theta)").unwrap(), 1).unwrap();
        // q = −2.6 cos θ g: φ tr q + (tr q)²/4 integrates to −1.56·4π/3 + 6.76·4π/3 ... and
        // the divergence term cancels it exactly
        let pi = std::f64::consts::PI;
        let a = 0.3 * -5.2 * 4.0 * pi / 3.0 + 5.2 * 5.2 / 4.0 * 4.0 * pi / 3.0;
        assert!((r.first.lhs - r.first.rhs).abs() < 1e-12);
        assert!(r.first.scale >= a.abs() - 1e-9);
        assert!(r.first.rhs.abs() < 1e-14 && r.second.lhs.abs() < 1e-12);
    }

    #[test]
    fn conformal_integrals() {
        let cs = single(conformal_sphere("0.2*cos(theta)"));
        let x = exprs(&cs, &["-sin(theta)", "0"]);
        let r = bourguignon_ezin(&cs, &x, TraceTensor::Ricci, 1).unwrap();
        assert!(r.integral.abs() < 1e-9 * r.abs_scalar, "{r:?}");
        assert!(r.conformal_defect < 1e-9 && r.bianchi_defect < 1e-9, "{r:?}");
        let r = bourguignon_ezin(&cs, &x, TraceTensor::ScalarMetric, 1).unwrap();
        assert!(r.integral.abs() < 1e-9 * r.abs_scalar && r.bianchi_defect < 1e-9);
    }

    #[test]
    fn trace_free_integral_verdicts() {
        let s2 = single(sphere(2, 1.0));
        let x = exprs(&s2, &["-sin(theta)", "0"]);
        let r = trace_free_integral(&s2, &x, &s2.parse("0.3*cos(theta)").unwrap(), 1, 1e-7, 1e-9).unwrap();
        assert_eq!(r.verdict, ConformalVerdict::Conformal);
        assert!(r.bianchi_defect < 1e-10);
        let bad = exprs(&s2, &["sin(theta)^3", "0"]);
        let r = trace_free_integral(&s2, &bad, &s2.parse("0").unwrap(), 1, 1e-7, 1e-9).unwrap();
        assert_eq!(r.verdict, ConformalVerdict::NotConformal);
        assert!(r.integral > 0.1);
    }

    #[test]
    fn rigidity_chain_on_closed_surfaces() {
        let s2 = single(sphere(2, 1.0));
        let SurfaceRigidity::Verified(v) = surface_rigidity(&s2, 1, 10, 1, 1e-8).unwrap() else {
            panic!("{:?}", surface_rigidity(&s2, 1, 10, 1, 1e-8))
        };
        assert!((v.scalar.min - 2.0).abs() < 1e-10 && v.lap_scalar_sup < 1e-9);
        let t = single(torus(&[1.0, 2.0]));
        assert!(matches!(
            surface_rigidity(&t, 1, 10, 1, 1e-8).unwrap(),
            SurfaceRigidity::Verified(_)
        ));
        let cs = single(conformal_sphere("0.2*cos(theta)"));
        assert!(matches!(
            surface_rigidity(&cs, 1, 10, 1, 1e-8).unwrap(),
            SurfaceRigidity::HypothesisRejected { .. }
        ));
        for k in 1..4 {
            eprintln!("{k} {:?}", surface_hessian_integral(&cs, k).unwrap().relative());
        }
        let b = surface_hessian_integral(&cs, 1).unwrap();
        assert!(b.relative() < 1e-9, "{b:?}");
        assert!(cauchy_schwarz_margin(&cs, &cs.sample_points(20, 4)).unwrap() >= -1e-12);
    }
}
