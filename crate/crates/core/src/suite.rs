//! The acceptance suite: every criterion as a list of report checks, plus
//! runners for single identity and soliton cases.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::{self, named, CatalogError, Chart, FactorSpec, ManifoldSpec};
use crate::corpus;
use crate::curvature::{divergence_by_differences, trace_values, CurvatureError, CurvaturePack, Geometry};
use crate::documents::{DocumentError, IdentityCase, SolitonCase, TraceChoice};
use crate::expr::{Expr, Params};
use crate::identity::{self, ConformalVerdict, IdentityError, SurfaceRigidity, TraceTensor};
use crate::ode::{self, OdeControls, OdeError, ScanConfig};
use crate::oracle::{Oracle, DEFAULT_STEP};
use crate::product::{self, FactorCurvature, FactorRole, ProductError};
use crate::report::{Check, Relation, Report};
use crate::soliton::{self, BergerControls, BergerOutcome, Field, SolitonData, SolitonError};
use crate::tolerances::Tolerances;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Soliton(#[from] SolitonError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error("unknown criterion {0} (1..=10)")]
    UnknownCriterion(u8),
    #[error("unknown identity id '{0}'")]
    UnknownIdentity(String),
}

type Result<T> = std::result::Result<T, SuiteError>;

fn curvature_numerical(e: &CurvatureError) -> bool {
    matches!(
        e,
        CurvatureError::Jet(_) | CurvatureError::NotPositiveDefinite { .. } | CurvatureError::NotSymmetric { .. }
    )
}

fn catalog_numerical(e: &CatalogError) -> bool {
    match e {
        CatalogError::Eval(_) | CatalogError::NotPositiveDefinite(_) => true,
        CatalogError::Curvature(c) => curvature_numerical(c),
        _ => false,
    }
}

impl SuiteError {
    /// Failures of the numerics (singular metric, domain errors, ...) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            SuiteError::Catalog(e) | SuiteError::Document(DocumentError::Catalog(e)) => catalog_numerical(e),
            SuiteError::Curvature(e) => curvature_numerical(e),
            SuiteError::Soliton(e) => match e {
                SolitonError::Catalog(c) => catalog_numerical(c),
                SolitonError::Curvature(c) => curvature_numerical(c),
                SolitonError::Eval(_) | SolitonError::Jet(_) => true,
                SolitonError::Product(ProductError::Catalog(c)) => catalog_numerical(c),
                SolitonError::Product(ProductError::Curvature(c)) => curvature_numerical(c),
                _ => false,
            },
            SuiteError::Identity(e) => match e {
                IdentityError::Catalog(c) => catalog_numerical(c),
                IdentityError::Curvature(c) => curvature_numerical(c),
                IdentityError::Eval(_) | IdentityError::Jet(_) => true,
                _ => false,
            },
            SuiteError::Product(e) => match e {
                ProductError::Catalog(c) => catalog_numerical(c),
                ProductError::Curvature(c) => curvature_numerical(c),
                _ => false,
            },
            _ => false,
        }
    }
}

/// Step for differencing the Bach tensor when checking its divergence.
pub const BACH_DIVERGENCE_STEP: f64 = 0.02;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Multiplier on every quadrature node count.
    pub resolution: usize,
    pub oracle_points: usize,
    pub bach_points: usize,
    pub soliton_points: usize,
    pub identity_points: usize,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 7,
            resolution: 1,
            oracle_points: 2,
            bach_points: 2,
            soliton_points: 200,
            identity_points: 50,
            tolerances: Tolerances::default(),
        }
    }
}

impl SuiteConfig {
    pub fn echo(&self) -> Value {
        json!({
            "seed": self.seed,
            "resolution": self.resolution,
            "oracle_points": self.oracle_points,
            "bach_points": self.bach_points,
            "soliton_points": self.soliton_points,
            "identity_points": self.identity_points,
            "tolerances": self.tolerances.entries(),
        })
    }
}

/// `max |a − b| / max(max |b|, 1)`
pub fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, |m: f64, d| if d.is_nan() { f64::NAN } else { m.max(d) });
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    diff / scale
}

fn worst(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter()
        .fold(0.0, |m: f64, d| if d.is_nan() || m.is_nan() { f64::NAN } else { m.max(d) })
}

fn build(spec: &ManifoldSpec) -> Result<Chart> {
    Ok(catalog::build(spec)?)
}

fn seed_for(cfg: &SuiteConfig, k: u64) -> u64 {
    cfg.seed.wrapping_mul(1_000_003).wrapping_add(k)
}

pub fn criterion(k: u8, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    match k {
        1 => oracle_agreement(cfg),
        2 => bach_properties(cfg),
        3 => product_formulas(cfg),
        4 => ho_solitons(cfg),
        5 => berger_soliton(cfg),
        6 => soliton_integrals(cfg),
        7 => conformal_fields(cfg),
        8 => surface_machinery(cfg),
        9 => ode_corroboration(cfg),
        10 => sign_laws(cfg),
        other => Err(SuiteError::UnknownCriterion(other)),
    }
}

/// Criteria 1 to 10 followed by the informational checks.
pub fn run_all(cfg: &SuiteConfig) -> Result<Report> {
    let mut checks = Vec::new();
    for k in 1..=10 {
        checks.extend(criterion(k, cfg)?);
    }
    checks.extend(informational(cfg)?);
    Ok(Report::new(cfg.echo(), checks))
}

/// Named value tensors from the jet pipeline and from the oracle.
fn curvature_pairs(pack: &CurvaturePack, o: &crate::oracle::OracleCurvature) -> Vec<(&'static str, Vec<f64>, Vec<f64>)> {
    let mut v = vec![
        (
            "christoffel",
            pack.christoffel_value().data().to_vec(),
            o.christoffel.data().to_vec(),
        ),
        ("riemann", pack.riemann_value().data().to_vec(), o.riemann.data().to_vec()),
        ("ricci", pack.ricci_value().data().to_vec(), o.ricci.data().to_vec()),
        ("scalar", vec![pack.scalar_value()], vec![o.scalar]),
        ("grad_scalar", pack.grad_scalar.clone(), o.grad_scalar.clone()),
        ("hess_scalar", pack.hess_scalar.data().to_vec(), o.hess_scalar.data().to_vec()),
        ("lap_scalar", vec![pack.lap_scalar], vec![o.lap_scalar]),
        ("nabla_ricci", pack.nabla_ricci.data().to_vec(), o.nabla_ricci.data().to_vec()),
        ("lap_ricci", pack.lap_ricci.data().to_vec(), o.lap_ricci.data().to_vec()),
    ];
    let opt = |a: Option<Vec<f64>>, b: &Option<crate::tensor::Tensor<f64>>| a.zip(b.as_ref().map(|t| t.data().to_vec()));
    let extra = [
        ("schouten", opt(pack.schouten_value().ok().map(|t| t.data().to_vec()), &o.schouten)),
        ("cotton", opt(pack.cotton.as_ref().map(|t| t.data().to_vec()), &o.cotton)),
        ("weyl", opt(pack.weyl.as_ref().map(|t| t.data().to_vec()), &o.weyl)),
        ("bach", opt(pack.bach.as_ref().map(|t| t.data().to_vec()), &o.bach)),
    ];
    for (name, pair) in extra {
        if let Some((a, b)) = pair {
            v.push((name, a, b));
        }
    }
    v
}

fn oracle_agreement(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let tol = cfg.tolerances.oracle_agreement;
    let mut jobs = Vec::new();
    for (m, spec) in corpus::oracle_metrics().into_iter().enumerate() {
        let chart = build(&spec)?;
        for p in chart.sample_points(cfg.oracle_points, seed_for(cfg, m as u64)) {
            jobs.push((m, spec.clone(), p));
        }
    }
    let gaps = jobs
        .par_iter()
        .map(|(_, spec, p)| {
            let chart = build(spec)?;
            let pack = chart.curvature(p)?;
            let metric = |x: &[f64]| {
                chart
                    .metric_values(x)
                    .map(|t| t.data().to_vec())
                    .unwrap_or_else(|_| vec![f64::NAN; chart.dim() * chart.dim()])
            };
            let oc = Oracle::new(&metric, chart.dim(), DEFAULT_STEP).curvature(p);
            Ok(curvature_pairs(&pack, &oc)
                .into_iter()
                .map(|(n, a, b)| (n, relative_gap(&a, &b)))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for (m, spec) in corpus::oracle_metrics().into_iter().enumerate() {
        let rows: Vec<&Vec<(&str, f64)>> = jobs.iter().zip(&gaps).filter(|(j, _)| j.0 == m).map(|(_, g)| g).collect();
        let points: Vec<&Vec<f64>> = jobs.iter().filter(|j| j.0 == m).map(|j| &j.2).collect();
        for (q, (name, _)) in rows[0].iter().enumerate() {
            let value = worst(rows.iter().map(|r| r[q].1));
            checks.push(Check::residual(
                format!("c1.oracle.{}.{name}", spec.name),
                "curvature pipeline vs finite differences",
                &json!({"manifold": spec, "points": points, "quantity": name, "step": DEFAULT_STEP}),
                value,
                tol,
            ));
        }
    }
    Ok(checks)
}

fn conformal_pack(chart: &Chart, u: &Expr, p: &[f64]) -> Result<(CurvaturePack, f64)> {
    let m = chart.metric_jet(p, 4)?;
    let uj = u.eval_jet(p, &Params::new(), m.shape()).map_err(CatalogError::from)?;
    let geo = Geometry::new(m.conformal(&uj)?)?;
    Ok((CurvaturePack::compute(&geo)?, uj.value()))
}

fn bach_properties(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let us = corpus::conformal_factors(4);
    let mut checks = Vec::new();
    for (m, spec) in corpus::four_metrics().into_iter().enumerate() {
        let chart = build(&spec)?;
        let pts = chart.sample_points(cfg.bach_points, seed_for(cfg, 100 + m as u64));
        let uexprs: Vec<Expr> = us.iter().map(|u| chart.parse(u)).collect::<std::result::Result<_, _>>()?;
        let rows = pts
            .par_iter()
            .map(|p| {
                let pack = chart.curvature(p)?;
                let b = pack.bach_value()?.clone();
                let tr = trace_values(&b, &pack.ginv).abs();
                let div = divergence_by_differences(
                    |q| chart.curvature(q).map(|pk| pk.bach.expect("dimension four")),
                    p,
                    &pack.ginv,
                    &pack.christoffel_value(),
                    BACH_DIVERGENCE_STEP,
                )?;
                let conf = uexprs
                    .iter()
                    .map(|u| {
                        let (pc, uv) = conformal_pack(&chart, u, p)?;
                        let lhs = pc.bach_value()?.data().to_vec();
                        let rhs: Vec<f64> = b.data().iter().map(|x| x * (-2.0 * uv).exp()).collect();
                        Ok(relative_gap(&lhs, &rhs))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((tr, worst(div.iter().map(|d| d.abs())), conf))
            })
            .collect::<Result<Vec<_>>>()?;
        let inputs = json!({"manifold": spec, "points": pts});
        checks.push(Check::residual(
            format!("c2.bach_trace.{}", spec.name),
            "Bach tensor is trace-free",
            &inputs,
            worst(rows.iter().map(|r| r.0)),
            t.bach_trace,
        ));
        checks.push(Check::residual(
            format!("c2.bach_divergence.{}", spec.name),
            "Bach tensor is divergence-free",
            &json!({"manifold": spec, "points": pts, "step": BACH_DIVERGENCE_STEP}),
            worst(rows.iter().map(|r| r.1)),
            t.bach_divergence,
        ));
        for (k, u) in us.iter().enumerate() {
            checks.push(Check::residual(
                format!("c2.bach_conformal.{}.u{k}", spec.name),
                "Bach tensor has conformal weight -2",
                &json!({"manifold": spec, "points": pts, "u": u}),
                worst(rows.iter().map(|r| r.2[k])),
                t.conformal_invariance,
            ));
        }
    }
    Ok(checks)
}

fn line_families() -> Vec<(String, FactorSpec)> {
    let mut v: Vec<(String, FactorSpec)> = [0.6, 1.3, 2.0].iter().map(|a| (format!("berger_{a}"), named::berger(*a))).collect();
    for s in [31usize, 32] {
        v.push((
            format!("random_metric_3_{s}"),
            FactorSpec::new("random_metric").param("dim", 3).param("seed", s),
        ));
    }
    v
}

fn surface_families() -> Vec<(String, FactorSpec, FactorSpec)> {
    let u = corpus::sphere_conformal_factors();
    let rnd = |s: usize| FactorSpec::new("random_metric").param("dim", 2).param("seed", s);
    vec![
        ("s2_x_r2".into(), named::sphere(2, 1.0), named::plane()),
        ("s2_x_h2".into(), named::sphere(2, 1.0), FactorSpec::new("hyperbolic_2")),
        ("cs2_x_s2r2".into(), named::conformal_sphere(&u[0]), named::sphere(2, 2.0)),
        ("rnd_x_rnd".into(), rnd(33), rnd(34)),
        ("cs2_x_rnd".into(), named::conformal_sphere(&u[1]), rnd(35)),
    ]
}

/// Closed-form and pipeline Bach tensors on a two-factor product.
fn product_pair(
    first: &FactorSpec,
    second: &FactorSpec,
    p: &[f64],
    closed: impl Fn(&FactorCurvature, &FactorCurvature) -> std::result::Result<crate::tensor::Tensor<f64>, ProductError>,
    roles: (FactorRole, FactorRole),
) -> Result<f64> {
    let a = named::single(first.clone());
    let b = named::single(second.clone());
    let prod = catalog::build(&ManifoldSpec::product("pair", vec![first.clone(), second.clone()]))?;
    let (pa, pb) = p.split_at(a.dim());
    let fa = FactorCurvature::at(&a, pa, roles.0)?;
    let fb = FactorCurvature::at(&b, pb, roles.1)?;
    let c = closed(&fa, &fb)?;
    let pipe = prod.curvature(p)?.bach_value()?.clone();
    Ok(relative_gap(c.data(), pipe.data()))
}

fn product_points(first: &FactorSpec, second: &FactorSpec, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let prod = catalog::build(&ManifoldSpec::product("pair", vec![first.clone(), second.clone()]))?;
    Ok(prod.sample_points(count, seed))
}

fn product_formulas(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let tol = cfg.tolerances.product_formula;
    let mut checks = Vec::new();
    let line = FactorSpec::new("line");
    for (k, (name, n)) in line_families().into_iter().enumerate() {
        let pts = product_points(&line, &n, 3, seed_for(cfg, 200 + k as u64))?;
        let gaps = pts
            .par_iter()
            .map(|p| {
                product_pair(
                    &line,
                    &n,
                    p,
                    |_, f| Ok(product::bach_line_cross_3(f)?.assemble()),
                    (FactorRole::Line, FactorRole::ThreeManifold),
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        checks.push(Check::residual(
            format!("c3.line_cross.{name}"),
            "product Bach components: line x three-manifold",
            &json!({"factor": n, "points": pts}),
            worst(gaps),
            tol,
        ));
    }
    for (k, (name, a, b)) in surface_families().into_iter().enumerate() {
        let pts = product_points(&a, &b, 3, seed_for(cfg, 300 + k as u64))?;
        let gaps = pts
            .par_iter()
            .map(|p| {
                product_pair(
                    &a,
                    &b,
                    p,
                    |x, y| Ok(product::bach_surface_product(x, y)?.assemble()),
                    (FactorRole::SurfaceK, FactorRole::SurfaceL),
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        checks.push(Check::residual(
            format!("c3.surface_product.{name}"),
            "product Bach components: surface x surface, printed normalization",
            &json!({"factors": [a, b], "points": pts}),
            worst(gaps),
            tol,
        ));
    }
    Ok(checks)
}

fn soliton_example_check(id: String, anchor: &str, name: &str, points: usize, seed: u64, tol: f64) -> Result<Check> {
    let ex = soliton::example(name)?;
    let pts = ex.chart.sample_points(points, seed);
    let r = soliton::extended_q_residual(&ex.chart, &ex.data, &pts)?;
    Ok(Check::residual(
        id,
        anchor,
        &json!({"example": name, "points": points, "seed": seed}),
        r.sup_norm,
        tol,
    ))
}

fn ho_solitons(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    ["ho-r2s2", "ho-r2h2"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            soliton_example_check(
                format!("c4.{name}"),
                "Bach soliton: gradient product examples",
                name,
                cfg.soliton_points,
                seed_for(cfg, 400 + k as u64),
                cfg.tolerances.ho_residual,
            )
        })
        .collect()
}

fn berger_soliton(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let ctl = BergerControls {
        points: cfg.soliton_points,
        seed: seed_for(cfg, 500),
        constancy_tol: t.constancy,
        root_tol: t.root,
        ..BergerControls::default()
    };
    let anchor = "Bach soliton: line x Berger sphere";
    let interval = soliton::DEFAULT_BERGER_INTERVAL;
    let inputs = json!({"interval": [interval.0, interval.1], "points": ctl.points, "seed": ctl.seed});
    let mut checks = Vec::new();
    match soliton::solve_berger_soliton(interval, &ctl)? {
        BergerOutcome::Root(sol) => {
            checks.push(
                Check::new(
                    "c5.berger.root_is_non_round",
                    anchor,
                    &inputs,
                    (sol.a - 1.0).abs(),
                    Relation::AtLeast,
                    0.05,
                    0.0,
                )
                .with_note(format!("a = {:.12}", sol.a)),
            );
            checks.push(Check::residual(
                "c5.berger.condition_at_root",
                anchor,
                &inputs,
                sol.signed_residual.abs(),
                t.root.max(1e-10),
            ));
            checks.push(
                Check::residual(
                    "c5.berger.soliton_residual",
                    anchor,
                    &inputs,
                    sol.profile.soliton.sup_norm,
                    t.soliton_residual,
                )
                .with_note(format!("lambda = {:.12}", sol.lambda)),
            );
        }
        BergerOutcome::NoBracket { .. } => checks.push(Check::flag("c5.berger.root_found", anchor, &inputs, false)),
    }
    let round = soliton::line_profile_check(named::berger(1.0), 0.0, 0.0, 0.0, ctl.points, ctl.seed, t.constancy)?;
    let rin = json!({"a": 1.0, "lambda": 0.0, "points": ctl.points, "seed": ctl.seed});
    checks.push(Check::new(
        "c5.berger_round.lambda",
        anchor,
        &rin,
        round.lambda_from_invariants,
        Relation::Within,
        0.0,
        t.sign_zero,
    ));
    checks.push(Check::residual(
        "c5.berger_round.soliton_residual",
        anchor,
        &rin,
        round.soliton.sup_norm,
        t.soliton_residual,
    ));
    Ok(checks)
}

fn integral_checks(
    prefix: &str,
    anchor: &str,
    inputs: &Value,
    base: identity::IntegralBalance,
    fine: identity::IntegralBalance,
    t: &Tolerances,
) -> Vec<Check> {
    let floor = t.roundoff_floor * base.scale.max(1.0);
    let target = (base.imbalance() / t.integral_shrink).max(floor);
    vec![
        Check::residual(format!("{prefix}.balance"), anchor, inputs, base.relative(), t.integral_identity),
        Check::residual(
            format!("{prefix}.balance_doubled"),
            anchor,
            inputs,
            fine.relative(),
            t.integral_identity,
        ),
        Check::new(
            format!("{prefix}.shrink"),
            anchor,
            inputs,
            fine.imbalance() / target,
            Relation::AtMost,
            1.0,
            0.0,
        )
        .with_note(format!("imbalance {:.3e} -> {:.3e}", base.imbalance(), fine.imbalance())),
    ]
}

fn soliton_integrals(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let mut checks = Vec::new();
    for case in corpus::soliton_integral_cases() {
        let chart = build(&case.manifold)?;
        let x: Vec<Expr> = case.x.iter().map(|e| chart.parse(e)).collect::<std::result::Result<_, _>>()?;
        let phi = chart.parse(&case.phi)?;
        let a = identity::soliton_integrals(&chart, &x, &phi, cfg.resolution)?;
        let b = identity::soliton_integrals(&chart, &x, &phi, 2 * cfg.resolution)?;
        let inputs = json!({"case": case, "resolution": cfg.resolution});
        checks.extend(integral_checks(
            &format!("c6.{}.trace_integral", case.label),
            "soliton integral identity with trace terms",
            &inputs,
            a.first,
            b.first,
            t,
        ));
        checks.extend(integral_checks(
            &format!("c6.{}.divergence_integral", case.label),
            "soliton integral identity for the trace-free part",
            &inputs,
            a.second,
            b.second,
            t,
        ));
    }
    Ok(checks)
}

fn sphere_frame_fields(chart: &Chart) -> Result<Vec<Vec<Expr>>> {
    Ok(corpus::SPHERE_FRAME
        .iter()
        .map(|v| v.iter().map(|e| chart.parse(e)).collect::<std::result::Result<Vec<_>, _>>())
        .collect::<std::result::Result<_, _>>()?)
}

fn conformal_fields(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let mut checks = Vec::new();
    for (k, u) in corpus::sphere_conformal_factors().iter().enumerate() {
        let spec = ManifoldSpec::single(&format!("conformal_s2_{k}"), named::conformal_sphere(u));
        let chart = build(&spec)?;
        let pts = chart.sample_points(cfg.identity_points, seed_for(cfg, 700 + k as u64));
        for (f, x) in sphere_frame_fields(&chart)?.iter().enumerate() {
            let field: Vec<&str> = corpus::SPHERE_FRAME[f].to_vec();
            let inputs = json!({"manifold": spec, "X": field, "points": pts});
            let yano = pts
                .par_iter()
                .map(|p| Ok(identity::yano_pointwise(&chart, x, p, t.conformality)?.relative()))
                .collect::<Result<Vec<f64>>>()?;
            checks.push(Check::residual(
                format!("c7.yano.{}.field{f}", spec.name),
                "Yano identity for conformal fields",
                &inputs,
                worst(yano),
                t.pointwise_identity,
            ));
            for q in [TraceTensor::Ricci, TraceTensor::ScalarMetric] {
                let r = identity::bourguignon_ezin(&chart, x, q, cfg.resolution)?;
                let qn = match q {
                    TraceTensor::Ricci => "ricci",
                    TraceTensor::ScalarMetric => "scalar_metric",
                };
                let inputs = json!({"manifold": spec, "X": field, "q": qn, "resolution": cfg.resolution});
                checks.push(
                    Check::residual(
                        format!("c7.conformal_integral.{}.field{f}.{qn}", spec.name),
                        "integral of X(tr q) for conformal X",
                        &inputs,
                        r.integral.abs() / r.abs_scalar,
                        t.kazdan_warner,
                    )
                    .with_note(format!(
                        "hypothesis defects: bianchi {:.2e}, conformal {:.2e}",
                        r.bianchi_defect, r.conformal_defect
                    )),
                );
            }
        }
    }
    Ok(checks)
}

fn bochner_cases() -> Vec<(ManifoldSpec, String)> {
    let mut v = Vec::new();
    for (k, u) in corpus::sphere_conformal_factors().iter().enumerate() {
        v.push((
            ManifoldSpec::single(&format!("conformal_s2_{k}"), named::conformal_sphere(u)),
            corpus::sphere_scalar(800 + k as u64),
        ));
    }
    for (d, s) in [(2, 51u64), (3, 52), (4, 53)] {
        let coords: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        v.push((corpus::random(d, s), corpus::trig_scalar(&coords, 3, 900 + s)));
    }
    v
}

fn surface_machinery(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let mut checks = Vec::new();
    for (spec, h) in bochner_cases() {
        let chart = build(&spec)?;
        let he = chart.parse(&h)?;
        let pts = chart.sample_points(cfg.identity_points, seed_for(cfg, 810));
        let r = pts
            .par_iter()
            .map(|p| Ok(identity::bochner_pointwise(&chart, &he, p)?.relative()))
            .collect::<Result<Vec<f64>>>()?;
        checks.push(Check::residual(
            format!("c8.bochner.{}", spec.name),
            "Bochner identity div Hess h = Ric(grad h) + d(lap h)",
            &json!({"manifold": spec, "h": h, "points": pts}),
            worst(r),
            t.pointwise_identity,
        ));
    }
    for (k, spec) in corpus::surfaces().into_iter().enumerate() {
        let chart = build(&spec)?;
        let seed = seed_for(cfg, 820 + k as u64);
        let inputs = json!({"manifold": spec, "resolution": cfg.resolution, "samples": cfg.identity_points, "seed": seed});
        let anchor = "surface rigidity under constant c = lap S + S^2/3";
        let expect_rejection = spec.name.starts_with("conformal");
        match identity::surface_rigidity(&chart, cfg.resolution, cfg.identity_points, seed, t.constancy)? {
            SurfaceRigidity::HypothesisRejected { c } => {
                checks.push(
                    Check::flag(format!("c8.rigidity.{}.hypothesis", spec.name), anchor, &inputs, expect_rejection)
                        .with_note(format!("c in [{:.6}, {:.6}], rejected", c.min, c.max)),
                );
            }
            SurfaceRigidity::Verified(v) => {
                checks.push(Check::flag(
                    format!("c8.rigidity.{}.hypothesis", spec.name),
                    anchor,
                    &inputs,
                    !expect_rejection,
                ));
                let gscale = v.scalar.max.abs().max(v.scalar.min.abs()).max(1.0);
                checks.push(Check::residual(
                    format!("c8.rigidity.{}.gradient_relation", spec.name),
                    anchor,
                    &inputs,
                    v.gradient_gap / gscale,
                    t.pointwise_identity,
                ));
                checks.push(Check::residual(
                    format!("c8.rigidity.{}.hessian_integral", spec.name),
                    anchor,
                    &inputs,
                    v.hessian_integral.relative(),
                    t.integral_identity,
                ));
                checks.push(Check::new(
                    format!("c8.rigidity.{}.cauchy_schwarz", spec.name),
                    anchor,
                    &inputs,
                    v.cauchy_schwarz_margin,
                    Relation::AtLeast,
                    0.0,
                    t.pointwise_identity,
                ));
                checks.push(Check::residual(
                    format!("c8.rigidity.{}.lap_scalar_vanishes", spec.name),
                    anchor,
                    &inputs,
                    v.lap_scalar_sup,
                    t.pointwise_identity,
                ));
            }
        }
        let b = identity::surface_hessian_integral(&chart, cfg.resolution)?;
        checks.push(Check::residual(
            format!("c8.hessian_integral_general.{}", spec.name),
            "integral Hess S identity on closed surfaces",
            &inputs,
            b.relative(),
            t.integral_identity,
        ));
        let pts = chart.sample_points(cfg.identity_points, seed);
        let margin = identity::cauchy_schwarz_margin(&chart, &pts)?;
        checks.push(Check::new(
            format!("c8.cauchy_schwarz.{}", spec.name),
            "pointwise bound |Hess S|^2 >= (lap S)^2/2",
            &inputs,
            margin,
            Relation::AtLeast,
            0.0,
            t.pointwise_identity,
        ));
    }
    Ok(checks)
}

fn ode_corroboration(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let anchor = "rotationally symmetric profiles with constant c";
    let scan_cfg = ScanConfig {
        controls: OdeControls {
            rtol: t.ode_rtol,
            cap_tol: t.ode_cap,
            ..OdeControls::default()
        },
        ..ScanConfig::default()
    };
    let table = ode::scan(&scan_cfg, t.ode_s_range)?;
    let sin = json!({"scan": scan_cfg});
    let mut checks = vec![
        Check::residual("c9.scan.closed_are_round", anchor, &sin, table.max_closed_s_range, t.ode_s_range).with_note(format!(
            "{} closed of {} cells",
            table.closed,
            table.rows.len()
        )),
        Check::residual(
            "c9.scan.step_failures",
            anchor,
            &sin,
            table.rows.iter().filter(|r| r.class == ode::Classification::StepFailure).count() as f64,
            0.0,
        ),
    ];
    for r in [1.0, 2.0] {
        let s0 = 2.0 / (r * r);
        let c = s0 * s0 / 3.0;
        let inputs = json!({"s0": s0, "c": c, "controls": scan_cfg.controls});
        let tr = ode::integrate_profile(s0, c, &scan_cfg.controls, true)?;
        let o = &tr.outcome;
        checks.push(Check::flag(
            format!("c9.round_r{r}.closed"),
            anchor,
            &inputs,
            o.class == ode::Classification::Closed,
        ));
        checks.push(Check::new(
            format!("c9.round_r{r}.closure_time"),
            anchor,
            &inputs,
            o.t_close.unwrap_or(f64::NAN),
            Relation::Within,
            std::f64::consts::PI * r,
            t.ode_closure_time,
        ));
        checks.push(Check::residual(
            format!("c9.round_r{r}.trajectory"),
            anchor,
            &inputs,
            ode::round_profile_error(&tr, r, scan_cfg.controls.epsilon),
            t.ode_trajectory,
        ));
        checks.push(Check::residual(
            format!("c9.round_r{r}.s_range"),
            anchor,
            &inputs,
            o.s_range(),
            t.ode_s_range,
        ));
        let half = OdeControls {
            rtol: scan_cfg.controls.rtol / 2.0,
            atol: scan_cfg.controls.atol / 2.0,
            ..scan_cfg.controls
        };
        let th = ode::integrate_profile(s0, c, &half, false)?.outcome.t_close.unwrap_or(f64::NAN);
        checks.push(Check::residual(
            format!("c9.round_r{r}.halved_tolerance"),
            anchor,
            &inputs,
            (th - o.t_close.unwrap_or(f64::NAN)).abs(),
            t.ode_halving,
        ));
    }
    Ok(checks)
}

fn sign_laws(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let mut checks = Vec::new();
    for (k, spec) in corpus::three_manifolds().into_iter().enumerate() {
        let chart = build(&spec)?;
        let pts = chart.sample_points(10, seed_for(cfg, 1000 + k as u64));
        let fcs = pts
            .iter()
            .map(|p| FactorCurvature::at(&chart, p, FactorRole::ThreeManifold))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let s1: Vec<f64> = fcs.iter().map(product::s1n3_lambda).collect::<std::result::Result<_, _>>()?;
        let rn: Vec<f64> = fcs.iter().map(product::rn3_lambda).collect::<std::result::Result<_, _>>()?;
        let einstein = worst(fcs.iter().map(|f| f.einstein_residual()));
        let is_einstein = einstein <= t.einstein;
        let inputs = json!({"manifold": spec, "points": pts});
        let anchor = "sign laws for the soliton constant on circle and line products";
        let s1_min = s1.iter().cloned().fold(f64::INFINITY, f64::min);
        let rn_max = rn.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            format!("c10.{}.circle_lambda_nonnegative", spec.name),
            anchor,
            &inputs,
            s1_min,
            Relation::AtLeast,
            0.0,
            t.sign_zero,
        ));
        checks.push(Check::new(
            format!("c10.{}.line_lambda_nonpositive", spec.name),
            anchor,
            &inputs,
            rn_max,
            Relation::AtMost,
            0.0,
            t.sign_zero,
        ));
        let s1_zero = worst(s1.iter().map(|v| v.abs())) <= t.sign_zero;
        let rn_zero = worst(rn.iter().map(|v| v.abs())) <= t.sign_zero;
        checks.push(
            Check::flag(
                format!("c10.{}.vanishing_iff_einstein", spec.name),
                anchor,
                &inputs,
                s1_zero == is_einstein && rn_zero == is_einstein,
            )
            .with_note(format!("einstein residual {einstein:.3e}")),
        );
    }
    Ok(checks)
}

/// Checks that document conventions; never counted as failures.
pub fn informational(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let mut checks = Vec::new();
    for (k, (name, a, b)) in surface_families().into_iter().enumerate() {
        let pts = product_points(&a, &b, 3, seed_for(cfg, 300 + k as u64))?;
        let gaps = pts
            .par_iter()
            .map(|p| {
                product_pair(
                    &a,
                    &b,
                    p,
                    |x, y| Ok(product::surface_product_standard(x, y)?.assemble()),
                    (FactorRole::SurfaceK, FactorRole::SurfaceL),
                )
            })
            .collect::<Result<Vec<f64>>>()?;
        checks.push(
            Check::residual(
                format!("info.surface_product_standard.{name}"),
                "surface x surface components at -1/2 of the printed normalization",
                &json!({"factors": [a, b], "points": pts}),
                worst(gaps),
                t.product_formula,
            )
            .informational(),
        );
    }
    for (k, name) in ["ho-r2s2-rescaled", "ho-r2h2-rescaled", "s4-trivial"].iter().enumerate() {
        let n = if *name == "s4-trivial" { 20 } else { cfg.soliton_points };
        checks.push(
            soliton_example_check(
                format!("info.{name}"),
                "Bach soliton in the standard normalization",
                name,
                n,
                seed_for(cfg, 1100 + k as u64),
                t.ho_residual,
            )?
            .informational(),
        );
    }
    let ex = soliton::example("ho-r2s2-rescaled")?;
    let pts = ex.chart.sample_points(20, seed_for(cfg, 1200));
    let gap = soliton::extended_form_gap(&ex.chart, &ex.data.field, -1.0 / 12.0, &pts)?;
    checks.push(
        Check::residual(
            "info.extended_form_gap.ho-r2s2-rescaled",
            "constant and extended forms of the Bach soliton agree",
            &json!({"example": ex.name, "points": pts}),
            gap,
            t.soliton_residual,
        )
        .informational(),
    );
    if let Field::Potential(f) = &ex.data.field {
        let s = soliton::splitting_spotcheck(&ex.chart, f, &pts)?;
        checks.push(
            Check::residual(
                "info.splitting.ho-r2s2-rescaled",
                "potential Hessian splits along the product",
                &json!({"example": ex.name, "points": pts}),
                s.mixed_max,
                t.pointwise_identity,
            )
            .informational(),
        );
    }
    let k = FactorCurvature::at(&named::single(named::sphere(2, 1.0)), &[1.0, 0.3], FactorRole::SurfaceK)?;
    let cs = named::single(named::conformal_sphere(&corpus::sphere_conformal_factors()[0]));
    let l = FactorCurvature::at(&cs, &[0.8, 1.9], FactorRole::SurfaceL)?;
    let (from_block, closed) = soliton::compact_factor_phi(&k, &l);
    checks.push(
        Check::new(
            "info.compact_factor_phi",
            "phi from the compact-factor block vs its closed form",
            &json!({"K": "round_sphere", "L": cs.name()}),
            from_block,
            Relation::Within,
            closed,
            t.pointwise_identity,
        )
        .informational(),
    );
    let s2 = named::single(named::sphere(2, 1.0));
    let x = sphere_frame_fields(&s2)?;
    let phi = s2.parse("0.3*cos(theta)")?;
    let r = identity::trace_free_integral(&s2, &x[2], &phi, cfg.resolution, t.integral_identity, t.conformality)?;
    checks.push(
        Check::flag(
            "info.trace_free_integral.conformal_gradient",
            "trace-free integral forces conformality",
            &json!({"X": corpus::SPHERE_FRAME[2]}),
            r.verdict == ConformalVerdict::Conformal,
        )
        .informational(),
    );
    Ok(checks)
}

/// Checks for one identity case.
pub fn identity_checks(id: &str, case: &IdentityCase, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let t = &cfg.tolerances;
    let chart = case.manifold.build()?;
    let inputs = json!({"identity": id, "case": case, "resolution": cfg.resolution, "seed": cfg.seed});
    let pts = chart.sample_points(case.points.unwrap_or(cfg.identity_points), cfg.seed);
    let pointwise = |vals: Vec<f64>, name: &str| {
        Check::residual(
            format!("identity.{id}.{name}"),
            id.to_string(),
            &inputs,
            worst(vals),
            t.pointwise_identity,
        )
    };
    let checks = match id {
        "lie-pairing" => {
            let (x, tt) = (case.field(&chart)?, case.tensor(&chart)?);
            let v = pts
                .par_iter()
                .map(|p| Ok(identity::lie_pairing_pointwise(&chart, &tt, &x, p)?.relative()))
                .collect::<Result<Vec<_>>>()?;
            let x2 = case.field(&chart)?;
            let phi = case.phi(&chart)?;
            let w = pts
                .par_iter()
                .map(|p| Ok(identity::div_lie_identity(&chart, &x2, &phi, p)?.relative()))
                .collect::<Result<Vec<_>>>()?;
            vec![pointwise(v, "pairing"), pointwise(w, "divergence_of_lie_derivative")]
        }
        "soliton-integrals" => {
            let (x, phi) = (case.field(&chart)?, case.phi(&chart)?);
            let a = identity::soliton_integrals(&chart, &x, &phi, cfg.resolution)?;
            let b = identity::soliton_integrals(&chart, &x, &phi, 2 * cfg.resolution)?;
            let mut c = integral_checks(&format!("identity.{id}.trace_integral"), id, &inputs, a.first, b.first, t);
            c.extend(integral_checks(
                &format!("identity.{id}.divergence_integral"),
                id,
                &inputs,
                a.second,
                b.second,
                t,
            ));
            c
        }
        "yano" => {
            let x = case.field(&chart)?;
            let v = pts
                .par_iter()
                .map(|p| Ok(identity::yano_pointwise(&chart, &x, p, t.conformality)?.relative()))
                .collect::<Result<Vec<_>>>()?;
            vec![pointwise(v, "yano")]
        }
        "conformal-integral" => {
            let x = case.field(&chart)?;
            let q = match case.q.unwrap_or(TraceChoice::Ricci) {
                TraceChoice::Ricci => TraceTensor::Ricci,
                TraceChoice::ScalarMetric => TraceTensor::ScalarMetric,
            };
            let r = identity::bourguignon_ezin(&chart, &x, q, cfg.resolution)?;
            vec![
                Check::residual(
                    format!("identity.{id}.integral"),
                    id,
                    &inputs,
                    r.integral.abs() / r.abs_scalar.max(f64::MIN_POSITIVE),
                    t.kazdan_warner,
                ),
                Check::residual(
                    format!("identity.{id}.bianchi_hypothesis"),
                    id,
                    &inputs,
                    r.bianchi_defect,
                    t.bianchi,
                ),
                Check::residual(
                    format!("identity.{id}.conformal_hypothesis"),
                    id,
                    &inputs,
                    r.conformal_defect,
                    t.conformality,
                ),
            ]
        }
        "trace-free-integral" => {
            let (x, phi) = (case.field(&chart)?, case.phi(&chart)?);
            let r = identity::trace_free_integral(&chart, &x, &phi, cfg.resolution, t.integral_identity, t.conformality)?;
            vec![
                Check::residual(
                    format!("identity.{id}.bianchi_hypothesis"),
                    id,
                    &inputs,
                    r.bianchi_defect,
                    t.bianchi,
                ),
                Check::flag(
                    format!("identity.{id}.consistent"),
                    id,
                    &inputs,
                    r.verdict != ConformalVerdict::Contradiction,
                )
                .with_note(format!(
                    "verdict {:?}, integral {:.3e}, conformal defect {:.3e}",
                    r.verdict, r.integral, r.conformal_defect
                )),
            ]
        }
        "bochner" => {
            let h = case.function(&chart)?;
            let v = pts
                .par_iter()
                .map(|p| Ok(identity::bochner_pointwise(&chart, &h, p)?.relative()))
                .collect::<Result<Vec<_>>>()?;
            vec![pointwise(v, "bochner")]
        }
        "surface-rigidity" => {
            let mut c = Vec::new();
            match identity::surface_rigidity(&chart, cfg.resolution, pts.len(), cfg.seed, t.constancy)? {
                SurfaceRigidity::HypothesisRejected { c: sp } => {
                    c.push(
                        Check::flag(format!("identity.{id}.hypothesis"), id, &inputs, false)
                            .informational()
                            .with_note(format!("c in [{:.6}, {:.6}], hypothesis rejected", sp.min, sp.max)),
                    );
                }
                SurfaceRigidity::Verified(v) => {
                    c.push(Check::residual(
                        format!("identity.{id}.hessian_integral"),
                        id,
                        &inputs,
                        v.hessian_integral.relative(),
                        t.integral_identity,
                    ));
                    c.push(Check::new(
                        format!("identity.{id}.cauchy_schwarz"),
                        id,
                        &inputs,
                        v.cauchy_schwarz_margin,
                        Relation::AtLeast,
                        0.0,
                        t.pointwise_identity,
                    ));
                    c.push(Check::residual(
                        format!("identity.{id}.lap_scalar_vanishes"),
                        id,
                        &inputs,
                        v.lap_scalar_sup,
                        t.pointwise_identity,
                    ));
                }
            }
            let b = identity::surface_hessian_integral(&chart, cfg.resolution)?;
            c.push(Check::residual(
                format!("identity.{id}.hessian_integral_general"),
                id,
                &inputs,
                b.relative(),
                t.integral_identity,
            ));
            c
        }
        other => return Err(SuiteError::UnknownIdentity(other.to_string())),
    };
    Ok(checks)
}

/// Residual check for a soliton case document.
pub fn soliton_case_checks(label: &str, case: &SolitonCase, cfg: &SuiteConfig, tol: f64) -> Result<Vec<Check>> {
    let (chart, sd): (Chart, SolitonData) = case.resolve()?;
    let pts = chart.sample_points(case.points.unwrap_or(cfg.soliton_points), cfg.seed);
    let r = soliton::extended_q_residual(&chart, &sd, &pts)?;
    let inputs = json!({"case": case, "seed": cfg.seed, "points": pts.len()});
    Ok(vec![Check::residual(
        format!("soliton.{label}"),
        "soliton residual",
        &inputs,
        r.sup_norm,
        tol,
    )
    .with_note(format!("worst point {:?}", r.worst_point))])
}

/// Residual check for a named example.
pub fn soliton_example_checks(name: &str, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let tol = if name.starts_with("ho-") {
        cfg.tolerances.ho_residual
    } else {
        cfg.tolerances.soliton_residual
    };
    Ok(vec![soliton_example_check(
        format!("soliton.{name}"),
        "soliton residual",
        name,
        cfg.soliton_points,
        cfg.seed,
        tol,
    )?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteConfig {
        SuiteConfig {
            oracle_points: 1,
            bach_points: 1,
            soliton_points: 10,
            identity_points: 5,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn relative_gap_uses_unit_floor() {
        assert_eq!(relative_gap(&[1.5], &[0.5]), 1.0);
        assert_eq!(relative_gap(&[21.0], &[20.0]), 0.05);
        assert!(relative_gap(&[f64::NAN], &[1.0]).is_nan());
    }

    #[test]
    fn line_products_and_sign_laws_pass() {
        let cfg = quick();
        for c in product_formulas(&cfg).unwrap().iter().filter(|c| c.check_id.contains("line_cross")) {
            assert!(c.pass, "{c:?}");
        }
        for c in sign_laws(&cfg).unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn identity_cases_run() {
        let cfg = quick();
        for id in crate::documents::IDENTITY_IDS {
            let case = crate::documents::default_identity_case(id).unwrap();
            let checks = identity_checks(id, &case, &cfg).unwrap();
            assert!(!checks.is_empty());
            for c in checks {
                assert!(c.pass, "{c:?}");
            }
        }
        assert!(matches!(criterion(11, &cfg), Err(SuiteError::UnknownCriterion(11))));
    }
}
