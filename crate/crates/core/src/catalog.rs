//! Manifold charts: named examples, products and quadrature.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::curvature::{CurvatureError, CurvaturePack, Geometry, MetricJet};
use crate::expr::{parse, EvalError, Expr, Params, ParseError, Scope};
use crate::jet::Shape;
use crate::quadrature::{Quadrature, Rule1D};
use crate::sample::halton_box;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown manifold '{0}'")]
    UnknownName(String),
    #[error("unknown factor kind '{0}'")]
    UnknownKind(String),
    #[error("{kind}: parameter '{name}': {reason}")]
    BadParam { kind: String, name: String, reason: String },
    #[error("{context}: {source}")]
    Parse { context: String, source: ParseError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("'{0}' is not compact; integration needs a closed manifold")]
    NonCompact(String),
    #[error("metric is not positive definite at node {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("manifold spec has no factors")]
    Empty,
    #[error("dimension {0} exceeds the supported maximum of 4")]
    TooLarge(usize),
}

type Result<T> = std::result::Result<T, CatalogError>;

/// One factor of a manifold-spec document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    /// Quadrature nodes per coordinate name.
    #[serde(default)]
    pub resolution: BTreeMap<String, usize>,
}

/// Manifold-spec document: an ordered product of factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub name: String,
    pub factors: Vec<FactorSpec>,
}

impl FactorSpec {
    pub fn new(kind: &str) -> FactorSpec {
        FactorSpec {
            kind: kind.to_string(),
            params: BTreeMap::new(),
            resolution: BTreeMap::new(),
        }
    }

    pub fn param(mut self, name: &str, v: impl Into<Value>) -> FactorSpec {
        self.params.insert(name.to_string(), v.into());
        self
    }

    pub fn nodes(mut self, coord: &str, n: usize) -> FactorSpec {
        self.resolution.insert(coord.to_string(), n);
        self
    }
}

impl ManifoldSpec {
    pub fn single(name: &str, f: FactorSpec) -> ManifoldSpec {
        ManifoldSpec {
            name: name.to_string(),
            factors: vec![f],
        }
    }

    pub fn product(name: &str, fs: Vec<FactorSpec>) -> ManifoldSpec {
        ManifoldSpec {
            name: name.to_string(),
            factors: fs,
        }
    }
}

/// A coordinate chart with metric expressions, sampling box and (for
/// closed manifolds) a quadrature rule.
#[derive(Debug, Clone)]
pub struct Chart {
    name: String,
    coords: Vec<String>,
    metric: Vec<Expr>,
    rules: Option<Vec<Rule1D>>,
    sample_box: Vec<(f64, f64)>,
    volume: Option<f64>,
    blocks: Vec<Range<usize>>,
    factors: Vec<Chart>,
}

struct ChartBuilder {
    name: String,
    coords: Vec<String>,
    entries: Vec<String>,
    rules: Option<Vec<Rule1D>>,
    sample_box: Vec<(f64, f64)>,
    volume: Option<f64>,
    params: Params,
}

impl ChartBuilder {
    fn build(self) -> Result<Chart> {
        let n = self.coords.len();
        let names: Vec<String> = self.params.keys().cloned().collect();
        let scope = Scope {
            coords: self.coords.clone(),
            params: names,
        };
        let mut metric = Vec::with_capacity(n * n);
        for (k, text) in self.entries.iter().enumerate() {
            let e = parse(text, &scope).map_err(|source| CatalogError::Parse {
                context: format!("{} metric entry ({},{})", self.name, k / n, k % n),
                source,
            })?;
            metric.push(e.bind(&self.params));
        }
        Ok(Chart {
            name: self.name,
            coords: self.coords,
            metric,
            rules: self.rules,
            sample_box: self.sample_box,
            volume: self.volume,
            blocks: vec![0..n],
            factors: Vec::new(),
        })
    }
}

fn diag(entries: &[&str]) -> Vec<String> {
    let n = entries.len();
    let mut v = vec!["0".to_string(); n * n];
    for (i, e) in entries.iter().enumerate() {
        v[i * n + i] = e.to_string();
    }
    v
}

const POLAR_MARGIN: f64 = 0.15;

struct ParamReader<'a> {
    kind: &'a str,
    params: &'a BTreeMap<String, Value>,
    allowed: &'a [&'a str],
}

impl<'a> ParamReader<'a> {
    fn new(kind: &'a str, params: &'a BTreeMap<String, Value>, allowed: &'a [&'a str]) -> Result<Self> {
        for k in params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(CatalogError::BadParam {
                    kind: kind.into(),
                    name: k.clone(),
                    reason: format!("unknown parameter (allowed: {})", allowed.join(", ")),
                });
            }
        }
        Ok(ParamReader { kind, params, allowed })
    }

    fn bad(&self, name: &str, reason: &str) -> CatalogError {
        CatalogError::BadParam {
            kind: self.kind.into(),
            name: name.into(),
            reason: reason.into(),
        }
    }

    fn f64(&self, name: &str, default: f64) -> Result<f64> {
        debug_assert!(self.allowed.contains(&name));
        match self.params.get(name) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| self.bad(name, "expected a number")),
        }
    }

    fn positive(&self, name: &str, default: f64) -> Result<f64> {
        let v = self.f64(name, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(name, "must be positive"))
        }
    }

    fn usize(&self, name: &str, default: usize) -> Result<usize> {
        match self.params.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| self.bad(name, "expected a non-negative integer")),
        }
    }

    fn string(&self, name: &str, default: &str) -> Result<String> {
        match self.params.get(name) {
            None => Ok(default.to_string()),
            Some(v) => v.as_str().map(str::to_string).ok_or_else(|| self.bad(name, "expected a string")),
        }
    }

    fn bool(&self, name: &str, default: bool) -> Result<bool> {
        match self.params.get(name) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| self.bad(name, "expected a boolean")),
        }
    }

    fn list_f64(&self, name: &str) -> Result<Option<Vec<f64>>> {
        match self.params.get(name) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| self.bad(name, "expected numbers")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.bad(name, "expected a list of numbers")),
        }
    }
}

/// Left-invariant Berger metric `diag(a², 1, 1)` on SU(2) in Euler angles.
///
/// With `ω1 = −sin β cos γ dα + sin γ dβ`, `ω2 = sin β sin γ dα + cos γ dβ`,
/// `ω3 = cos β dα + dγ` the metric is `(a² ω1² + ω2² + ω3²)/4`; at `a = 1`
/// this is the unit round 3-sphere.
fn berger_entries(scale: &str) -> Vec<String> {
    let s = |e: &str| format!("{scale}*({e})/4");
    vec![
        s("a^2*sin(beta)^2*cos(gamma)^2 + sin(beta)^2*sin(gamma)^2 + cos(beta)^2"),
        s("(1 - a^2)*sin(beta)*sin(gamma)*cos(gamma)"),
        s("cos(beta)"),
        s("(1 - a^2)*sin(beta)*sin(gamma)*cos(gamma)"),
        s("a^2*sin(gamma)^2 + cos(gamma)^2"),
        "0".into(),
        s("cos(beta)"),
        "0".into(),
        s("1"),
    ]
}

fn euler_rules(n: [usize; 3]) -> Vec<Rule1D> {
    vec![
        Rule1D::Periodic {
            lo: 0.0,
            hi: 2.0 * PI,
            n: n[0],
        },
        Rule1D::Polar { n: n[1] },
        Rule1D::Periodic {
            lo: 0.0,
            hi: 4.0 * PI,
            n: n[2],
        },
    ]
}

fn euler_box() -> Vec<(f64, f64)> {
    vec![(0.0, 2.0 * PI), (POLAR_MARGIN, PI - POLAR_MARGIN), (0.0, 4.0 * PI)]
}

/// Upper end of the random phase range. Seeded corpora depend on it.
#[allow(clippy::approx_constant)]
const PHASE_MAX: f64 = 6.28;

/// Deterministic analytic metric on the torus `[0, 2π)^n`, diagonally
/// dominant so it is positive definite everywhere.
pub fn random_metric_entries(n: usize, seed: u64) -> Vec<String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let wave = |rng: &mut rand_chacha::ChaCha8Rng| -> String {
        let ks: Vec<i32> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
        let phase: f64 = rng.gen_range(0.0..PHASE_MAX);
        let arg: Vec<String> = ks
            .iter()
            .enumerate()
            .filter(|(_, k)| **k != 0)
            .map(|(i, k)| format!("{k}*x{i}"))
            .collect();
        let arg = if arg.is_empty() { "x0".to_string() } else { arg.join(" + ") };
        format!("({arg} + {phase:.3})")
    };
    let mut e = vec![String::new(); n * n];
    let off = 0.12 / n as f64;
    for i in 0..n {
        let base: f64 = rng.gen_range(0.8..1.3);
        let amp: f64 = rng.gen_range(0.1..0.3);
        let w1 = wave(&mut rng);
        let w2 = wave(&mut rng);
        e[i * n + i] = format!("{base:.3} + {amp:.3}*sin{w1}^2 + 0.1*exp(cos{w2})");
        for j in i + 1..n {
            let c: f64 = rng.gen_range(-1.0..1.0);
            let w = wave(&mut rng);
            let s = format!("{:.3}*cos{w}", off * c);
            e[i * n + j] = s.clone();
            e[j * n + i] = s;
        }
    }
    e
}

fn factor_chart(f: &FactorSpec) -> Result<Chart> {
    let kind = f.kind.as_str();
    let mut params = Params::new();
    let mut b = match kind {
        "euclidean" | "line" => {
            let r = ParamReader::new(kind, &f.params, &["dim", "extent"])?;
            let n = if kind == "line" { r.usize("dim", 1)? } else { r.usize("dim", 2)? };
            if !(1..=4).contains(&n) {
                return Err(r.bad("dim", "must be 1..=4"));
            }
            let ext = r.positive("extent", 1.0)?;
            let names: &[&str] = match n {
                1 => &["t"],
                2 => &["x", "y"],
                3 => &["x", "y", "z"],
                _ => &["x", "y", "z", "w"],
            };
            ChartBuilder {
                name: if n == 1 { "line".into() } else { format!("euclidean({n})") },
                coords: names.iter().map(|s| s.to_string()).collect(),
                entries: diag(&vec!["1"; n]),
                rules: None,
                sample_box: vec![(-ext, ext); n],
                volume: None,
                params: Params::new(),
            }
        }
        "circle" => {
            let r = ParamReader::new(kind, &f.params, &["length"])?;
            let l = r.positive("length", 2.0 * PI)?;
            ChartBuilder {
                name: "circle".into(),
                coords: vec!["s".into()],
                entries: diag(&["1"]),
                rules: Some(vec![Rule1D::Periodic { lo: 0.0, hi: l, n: 16 }]),
                sample_box: vec![(0.0, l)],
                volume: Some(l),
                params: Params::new(),
            }
        }
        "flat_torus" => {
            let r = ParamReader::new(kind, &f.params, &["lengths"])?;
            let ls = r.list_f64("lengths")?.unwrap_or(vec![2.0 * PI, 2.0 * PI]);
            if ls.is_empty() || ls.len() > 4 || ls.iter().any(|l| !(*l > 0.0)) {
                return Err(r.bad("lengths", "need 1..=4 positive lengths"));
            }
            let n = ls.len();
            let names = ["x", "y", "z", "w"];
            ChartBuilder {
                name: format!("flat_torus({n})"),
                coords: names[..n].iter().map(|s| s.to_string()).collect(),
                entries: diag(&vec!["1"; n]),
                rules: Some(ls.iter().map(|&l| Rule1D::Periodic { lo: 0.0, hi: l, n: 32 }).collect()),
                sample_box: ls.iter().map(|&l| (0.0, l)).collect(),
                volume: Some(ls.iter().product()),
                params: Params::new(),
            }
        }
        "round_sphere" => {
            let r = ParamReader::new(kind, &f.params, &["dim", "r"])?;
            let n = r.usize("dim", 2)?;
            let rad = r.positive("r", 1.0)?;
            params.insert("r".into(), rad);
            match n {
                2 => ChartBuilder {
                    name: "round_sphere(2)".into(),
                    coords: vec!["theta".into(), "phi".into()],
                    entries: diag(&["r^2", "r^2*sin(theta)^2"]),
                    rules: Some(vec![
                        Rule1D::Polar { n: 32 },
                        Rule1D::Periodic {
                            lo: 0.0,
                            hi: 2.0 * PI,
                            n: 32,
                        },
                    ]),
                    sample_box: vec![(POLAR_MARGIN, PI - POLAR_MARGIN), (0.0, 2.0 * PI)],
                    volume: Some(4.0 * PI * rad * rad),
                    params,
                },
                3 => {
                    params.insert("a".into(), 1.0);
                    ChartBuilder {
                        name: "round_sphere(3)".into(),
                        coords: vec!["alpha".into(), "beta".into(), "gamma".into()],
                        entries: berger_entries("r^2"),
                        rules: Some(euler_rules([12, 16, 24])),
                        sample_box: euler_box(),
                        volume: Some(2.0 * PI * PI * rad.powi(3)),
                        params,
                    }
                }
                4 => ChartBuilder {
                    name: "round_sphere(4)".into(),
                    coords: vec!["psi1".into(), "psi2".into(), "psi3".into(), "phi".into()],
                    entries: diag(&[
                        "r^2",
                        "r^2*sin(psi1)^2",
                        "r^2*sin(psi1)^2*sin(psi2)^2",
                        "r^2*sin(psi1)^2*sin(psi2)^2*sin(psi3)^2",
                    ]),
                    rules: Some(vec![
                        Rule1D::Gauss { lo: 0.0, hi: PI, n: 16 },
                        Rule1D::Gauss { lo: 0.0, hi: PI, n: 16 },
                        Rule1D::Gauss { lo: 0.0, hi: PI, n: 16 },
                        Rule1D::Periodic {
                            lo: 0.0,
                            hi: 2.0 * PI,
                            n: 8,
                        },
                    ]),
                    sample_box: vec![
                        (POLAR_MARGIN, PI - POLAR_MARGIN),
                        (POLAR_MARGIN, PI - POLAR_MARGIN),
                        (POLAR_MARGIN, PI - POLAR_MARGIN),
                        (0.0, 2.0 * PI),
                    ],
                    volume: Some(8.0 * PI * PI / 3.0 * rad.powi(4)),
                    params,
                },
                _ => return Err(r.bad("dim", "round_sphere supports dim 2, 3 or 4")),
            }
        }
        "hyperbolic_2" => {
            let r = ParamReader::new(kind, &f.params, &["r"])?;
            params.insert("r".into(), r.positive("r", 1.0)?);
            ChartBuilder {
                name: "hyperbolic_2".into(),
                coords: vec!["u".into(), "v".into()],
                entries: diag(&["r^2/v^2", "r^2/v^2"]),
                rules: None,
                sample_box: vec![(-1.0, 1.0), (0.5, 2.0)],
                volume: None,
                params,
            }
        }
        "berger_sphere" => {
            let r = ParamReader::new(kind, &f.params, &["a"])?;
            let a = r.positive("a", 1.0)?;
            params.insert("a".into(), a);
            ChartBuilder {
                name: "berger_sphere".into(),
                coords: vec!["alpha".into(), "beta".into(), "gamma".into()],
                entries: berger_entries("1"),
                rules: Some(euler_rules([12, 16, 24])),
                sample_box: euler_box(),
                volume: Some(2.0 * PI * PI * a),
                params,
            }
        }
        "surface_of_revolution" => {
            let r = ParamReader::new(kind, &f.params, &["rho", "t_min", "t_max", "closed"])?;
            let rho = r.string("rho", "sin(t)")?;
            let t0 = r.f64("t_min", 0.0)?;
            let t1 = r.f64("t_max", PI)?;
            if !(t1 > t0) {
                return Err(r.bad("t_max", "must exceed t_min"));
            }
            let closed = r.bool("closed", true)?;
            let margin = POLAR_MARGIN * (t1 - t0) / PI;
            ChartBuilder {
                name: "surface_of_revolution".into(),
                coords: vec!["t".into(), "theta".into()],
                entries: diag(&["1", &format!("({rho})^2")]),
                rules: closed.then(|| {
                    vec![
                        Rule1D::Gauss { lo: t0, hi: t1, n: 32 },
                        Rule1D::Periodic {
                            lo: 0.0,
                            hi: 2.0 * PI,
                            n: 32,
                        },
                    ]
                }),
                sample_box: vec![(t0 + margin, t1 - margin), (0.0, 2.0 * PI)],
                volume: None,
                params,
            }
        }
        "conformal_round_sphere" => {
            let r = ParamReader::new(kind, &f.params, &["u"])?;
            let u = r.string("u", "0")?;
            ChartBuilder {
                name: "conformal_round_sphere".into(),
                coords: vec!["theta".into(), "phi".into()],
                entries: diag(&[&format!("exp(2*({u}))"), &format!("exp(2*({u}))*sin(theta)^2")]),
                rules: Some(vec![
                    Rule1D::Polar { n: 32 },
                    Rule1D::Periodic {
                        lo: 0.0,
                        hi: 2.0 * PI,
                        n: 32,
                    },
                ]),
                sample_box: vec![(POLAR_MARGIN, PI - POLAR_MARGIN), (0.0, 2.0 * PI)],
                volume: None,
                params,
            }
        }
        "random_metric" => {
            let r = ParamReader::new(kind, &f.params, &["dim", "seed"])?;
            let n = r.usize("dim", 3)?;
            if !(1..=4).contains(&n) {
                return Err(r.bad("dim", "must be 1..=4"));
            }
            let seed = r.usize("seed", 0)? as u64;
            ChartBuilder {
                name: format!("random_metric({n},{seed})"),
                coords: (0..n).map(|i| format!("x{i}")).collect(),
                entries: random_metric_entries(n, seed),
                rules: Some(
                    (0..n)
                        .map(|_| Rule1D::Periodic {
                            lo: 0.0,
                            hi: 2.0 * PI,
                            n: 16,
                        })
                        .collect(),
                ),
                sample_box: vec![(0.0, 2.0 * PI); n],
                volume: None,
                params,
            }
        }
        "custom" => return custom_chart(f),
        other => return Err(CatalogError::UnknownKind(other.to_string())),
    };
    apply_resolution(&mut b.rules, &b.coords, &f.resolution, kind)?;
    b.build()
}

fn apply_resolution(rules: &mut Option<Vec<Rule1D>>, coords: &[String], res: &BTreeMap<String, usize>, kind: &str) -> Result<()> {
    for (name, &n) in res {
        let i = coords.iter().position(|c| c == name).ok_or_else(|| CatalogError::BadParam {
            kind: kind.into(),
            name: format!("resolution.{name}"),
            reason: "no such coordinate".into(),
        })?;
        if n == 0 {
            return Err(CatalogError::BadParam {
                kind: kind.into(),
                name: format!("resolution.{name}"),
                reason: "must be positive".into(),
            });
        }
        if let Some(r) = rules.as_mut() {
            r[i] = r[i].with_nodes(n);
        }
    }
    Ok(())
}

/// Explicit chart: `coords`, `metric` (rows of expression strings),
/// `box`, optional `periodic`, `compact` and `values` for parameters.
fn custom_chart(f: &FactorSpec) -> Result<Chart> {
    let kind = "custom";
    let r = ParamReader::new(kind, &f.params, &["coords", "metric", "box", "periodic", "compact", "values"])?;
    let coords: Vec<String> = match f.params.get("coords") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(|| r.bad("coords", "expected strings")))
            .collect::<Result<_>>()?,
        _ => return Err(r.bad("coords", "required list of coordinate names")),
    };
    let n = coords.len();
    if !(1..=4).contains(&n) {
        return Err(r.bad("coords", "need 1..=4 coordinates"));
    }
    let rows = match f.params.get("metric") {
        Some(Value::Array(rows)) if rows.len() == n => rows,
        _ => return Err(r.bad("metric", "required n×n list of expression strings")),
    };
    let mut entries = Vec::with_capacity(n * n);
    for row in rows {
        match row {
            Value::Array(cells) if cells.len() == n => {
                for c in cells {
                    entries.push(match c {
                        Value::String(s) => s.clone(),
                        Value::Number(x) => x.to_string(),
                        _ => return Err(r.bad("metric", "entries must be strings or numbers")),
                    });
                }
            }
            _ => return Err(r.bad("metric", "each row needs n entries")),
        }
    }
    let bx: Vec<(f64, f64)> = match f.params.get("box") {
        Some(Value::Array(a)) if a.len() == n => a
            .iter()
            .map(|iv| match iv {
                Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
                    (Some(lo), Some(hi)) if hi > lo => Ok((lo, hi)),
                    _ => Err(r.bad("box", "intervals need lo < hi")),
                },
                _ => Err(r.bad("box", "each interval is [lo, hi]")),
            })
            .collect::<Result<_>>()?,
        _ => return Err(r.bad("box", "required list of n intervals")),
    };
    let periodic: Vec<bool> = match f.params.get("periodic") {
        None => vec![false; n],
        Some(Value::Array(a)) if a.len() == n => a
            .iter()
            .map(|v| v.as_bool().ok_or_else(|| r.bad("periodic", "expected booleans")))
            .collect::<Result<_>>()?,
        _ => return Err(r.bad("periodic", "expected n booleans")),
    };
    let compact = r.bool("compact", false)?;
    let mut params = Params::new();
    if let Some(v) = f.params.get("values") {
        let Value::Object(m) = v else {
            return Err(r.bad("values", "expected an object of numbers"));
        };
        for (k, x) in m {
            params.insert(k.clone(), x.as_f64().ok_or_else(|| r.bad("values", "expected numbers"))?);
        }
    }
    let mut rules = compact.then(|| {
        bx.iter()
            .zip(&periodic)
            .map(|(&(lo, hi), &p)| {
                if p {
                    Rule1D::Periodic { lo, hi, n: 32 }
                } else {
                    Rule1D::Gauss { lo, hi, n: 32 }
                }
            })
            .collect()
    });
    apply_resolution(&mut rules, &coords, &f.resolution, kind)?;
    ChartBuilder {
        name: "custom".into(),
        coords,
        entries,
        rules,
        sample_box: bx,
        volume: None,
        params,
    }
    .build()
}

/// Build a manifold from its spec document.
pub fn build(spec: &ManifoldSpec) -> Result<Chart> {
    if spec.factors.is_empty() {
        return Err(CatalogError::Empty);
    }
    let charts = spec.factors.iter().map(factor_chart).collect::<Result<Vec<_>>>()?;
    let mut c = if charts.len() == 1 {
        charts.into_iter().next().expect("one")
    } else {
        Chart::product(&spec.name, charts)?
    };
    c.name = spec.name.clone();
    Ok(c)
}

impl Chart {
    /// Riemannian product with block-diagonal metric; coordinate names that
    /// collide get a `_k` suffix (1-based factor index).
    pub fn product(name: &str, factors: Vec<Chart>) -> Result<Chart> {
        let n: usize = factors.iter().map(|f| f.dim()).sum();
        if n > 4 {
            return Err(CatalogError::TooLarge(n));
        }
        let mut coords = Vec::with_capacity(n);
        for (k, f) in factors.iter().enumerate() {
            for c in &f.coords {
                let clash = factors.iter().enumerate().any(|(j, g)| j != k && g.coords.contains(c));
                coords.push(if clash { format!("{c}_{}", k + 1) } else { c.clone() });
            }
        }
        let mut metric = vec![Expr::Num(0.0); n * n];
        let mut blocks = Vec::new();
        let mut off = 0;
        for f in &factors {
            let m = f.dim();
            for i in 0..m {
                for j in 0..m {
                    metric[(off + i) * n + off + j] = f.metric[i * m + j].shift_vars(off);
                }
            }
            blocks.push(off..off + m);
            off += m;
        }
        let rules = factors
            .iter()
            .map(|f| f.rules.clone())
            .collect::<Option<Vec<_>>>()
            .map(|v| v.concat());
        let volume = factors.iter().map(|f| f.volume).product::<Option<f64>>();
        Ok(Chart {
            name: name.to_string(),
            coords,
            metric,
            rules,
            sample_box: factors.iter().flat_map(|f| f.sample_box.clone()).collect(),
            volume,
            blocks,
            factors,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coords
    }

    pub fn scope(&self) -> Scope {
        Scope {
            coords: self.coords.clone(),
            params: Vec::new(),
        }
    }

    /// Parse an expression in this chart's coordinates.
    pub fn parse(&self, text: &str) -> Result<Expr> {
        parse(text, &self.scope()).map_err(|source| CatalogError::Parse {
            context: format!("expression '{text}'"),
            source,
        })
    }

    pub fn metric_exprs(&self) -> &[Expr] {
        &self.metric
    }

    /// Coordinate ranges of the product factors (a single block otherwise).
    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Factor charts of a product; empty for a single chart.
    pub fn factors(&self) -> &[Chart] {
        &self.factors
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    pub fn closed_form_volume(&self) -> Option<f64> {
        self.volume
    }

    pub fn is_compact(&self) -> bool {
        self.rules.is_some()
    }

    pub fn rules(&self) -> Option<&[Rule1D]> {
        self.rules.as_deref()
    }

    pub fn metric_values(&self, p: &[f64]) -> Result<Tensor<f64>> {
        let none = Params::new();
        let n = self.dim();
        let v = self
            .metric
            .iter()
            .map(|e| e.eval(p, &none))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Tensor::from_vec(n, 2, v))
    }

    pub fn metric_jet(&self, p: &[f64], order: usize) -> Result<MetricJet> {
        let n = self.dim();
        let shape = Shape::new(n, order).map_err(CurvatureError::from)?;
        let none = Params::new();
        MetricJet::from_fn::<CatalogError>(shape, |i, j| Ok(self.metric[i * n + j].eval_jet(p, &none, shape)?))
    }

    pub fn geometry(&self, p: &[f64]) -> Result<Geometry> {
        Ok(Geometry::new(self.metric_jet(p, 4)?)?)
    }

    pub fn curvature(&self, p: &[f64]) -> Result<CurvaturePack> {
        Ok(CurvaturePack::compute(&self.geometry(p)?)?)
    }

    /// Tensor-product quadrature; `refine` multiplies every node count.
    pub fn quadrature(&self, refine: usize) -> Result<Quadrature> {
        let rules = self.rules.as_ref().ok_or_else(|| CatalogError::NonCompact(self.name.clone()))?;
        let rules: Vec<Rule1D> = rules.iter().map(|r| r.with_nodes(r.len() * refine.max(1))).collect();
        Quadrature::tensor_product(&rules, |x| {
            let m = self.metric_jet(x, 0).map_err(|e| match e {
                CatalogError::Curvature(CurvatureError::NotPositiveDefinite { .. }) => CatalogError::NotPositiveDefinite(x.to_vec()),
                e => e,
            })?;
            Ok(m.volume_density())
        })
    }

    /// Deterministic interior sample points.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        halton_box(&self.sample_box, count, seed)
    }
}

/// A named catalog example.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub dim: usize,
    pub params: Vec<(&'static str, Value)>,
    pub volume_formula: Option<&'static str>,
    pub spec: ManifoldSpec,
}

fn entry(
    name: &'static str,
    description: &'static str,
    dim: usize,
    params: Vec<(&'static str, Value)>,
    volume_formula: Option<&'static str>,
    factors: Vec<FactorSpec>,
) -> CatalogEntry {
    CatalogEntry {
        name,
        description,
        dim,
        params,
        volume_formula,
        spec: ManifoldSpec::product(name, factors),
    }
}

/// All named examples with default parameters.
pub fn catalog() -> Vec<CatalogEntry> {
    use serde_json::json;
    let sphere2 = || FactorSpec::new("round_sphere").param("dim", 2).param("r", 1.0);
    let plane = || FactorSpec::new("euclidean").param("dim", 2);
    let berger = || FactorSpec::new("berger_sphere").param("a", 1.0);
    vec![
        entry(
            "euclidean",
            "flat R^n, chart only",
            2,
            vec![("dim", json!(2)), ("extent", json!(1.0))],
            None,
            vec![plane()],
        ),
        entry(
            "line",
            "the real line R with coordinate t",
            1,
            vec![("extent", json!(1.0))],
            None,
            vec![FactorSpec::new("line")],
        ),
        entry(
            "circle",
            "S^1 of the given length",
            1,
            vec![("length", json!(2.0 * PI))],
            Some("length"),
            vec![FactorSpec::new("circle")],
        ),
        entry(
            "flat_torus",
            "flat torus with side lengths",
            2,
            vec![("lengths", json!([2.0 * PI, 2.0 * PI]))],
            Some("product of lengths"),
            vec![FactorSpec::new("flat_torus")],
        ),
        entry(
            "round_sphere",
            "round sphere of radius r (dim 2: theta, phi; dim 3: Euler angles; dim 4: hyperspherical)",
            2,
            vec![("dim", json!(2)), ("r", json!(1.0))],
            Some("4 pi r^2 (dim 2), 2 pi^2 r^3 (dim 3), 8 pi^2 r^4 / 3 (dim 4)"),
            vec![sphere2()],
        ),
        entry(
            "hyperbolic_2",
            "hyperbolic plane of curvature -1/r^2, half-plane chart, chart only",
            2,
            vec![("r", json!(1.0))],
            None,
            vec![FactorSpec::new("hyperbolic_2")],
        ),
        entry(
            "berger_sphere",
            "SU(2) with left-invariant metric diag(a^2,1,1), Euler-angle chart",
            3,
            vec![("a", json!(1.0))],
            Some("2 pi^2 a"),
            vec![berger()],
        ),
        entry(
            "surface_of_revolution",
            "dt^2 + rho(t)^2 dtheta^2",
            2,
            vec![
                ("rho", json!("sin(t)")),
                ("t_min", json!(0.0)),
                ("t_max", json!(PI)),
                ("closed", json!(true)),
            ],
            None,
            vec![FactorSpec::new("surface_of_revolution")],
        ),
        entry(
            "conformal_round_sphere",
            "exp(2u) times the unit round 2-sphere",
            2,
            vec![("u", json!("0"))],
            None,
            vec![FactorSpec::new("conformal_round_sphere")],
        ),
        entry(
            "random_metric",
            "deterministic analytic metric on the torus [0, 2pi)^n",
            3,
            vec![("dim", json!(3)), ("seed", json!(0))],
            None,
            vec![FactorSpec::new("random_metric")],
        ),
        entry("r2_x_s2", "R^2 x S^2(1)", 4, vec![], None, vec![plane(), sphere2()]),
        entry(
            "r2_x_h2",
            "R^2 x H^2(-1)",
            4,
            vec![],
            None,
            vec![plane(), FactorSpec::new("hyperbolic_2")],
        ),
        entry(
            "r_x_berger",
            "R x SU(2) with a Berger metric",
            4,
            vec![("a", json!(1.0))],
            None,
            vec![FactorSpec::new("line"), berger()],
        ),
        entry(
            "s1_x_berger",
            "S^1 x SU(2) with a Berger metric",
            4,
            vec![("a", json!(1.0))],
            Some("2 pi x 2 pi^2 a"),
            vec![FactorSpec::new("circle"), berger()],
        ),
        entry("s2_x_s2", "S^2(1) x S^2(1)", 4, vec![], Some("16 pi^2"), vec![sphere2(), sphere2()]),
        entry(
            "s1_x_s3",
            "S^1 x S^3(1)",
            4,
            vec![],
            Some("4 pi^3"),
            vec![FactorSpec::new("circle"), FactorSpec::new("round_sphere").param("dim", 3)],
        ),
        entry(
            "k2_x_l2",
            "product of two conformally round spheres",
            4,
            vec![],
            None,
            vec![FactorSpec::new("conformal_round_sphere"), FactorSpec::new("conformal_round_sphere")],
        ),
    ]
}

pub fn lookup(name: &str) -> Result<CatalogEntry> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownName(name.to_string()))
}

/// Convenience constructors used throughout the checks.
pub mod named {
    use super::*;

    pub fn single(f: FactorSpec) -> Chart {
        let name = f.kind.clone();
        build(&ManifoldSpec::single(&name, f)).expect("catalog factor")
    }

    pub fn product(name: &str, fs: Vec<FactorSpec>) -> Chart {
        build(&ManifoldSpec::product(name, fs)).expect("catalog product")
    }

    pub fn sphere(dim: usize, r: f64) -> FactorSpec {
        FactorSpec::new("round_sphere").param("dim", dim).param("r", r)
    }

    pub fn plane() -> FactorSpec {
        FactorSpec::new("euclidean").param("dim", 2)
    }

    pub fn berger(a: f64) -> FactorSpec {
        FactorSpec::new("berger_sphere").param("a", a)
    }

    pub fn conformal_sphere(u: &str) -> FactorSpec {
        FactorSpec::new("conformal_round_sphere").param("u", u)
    }

    pub fn torus(lengths: &[f64]) -> FactorSpec {
        FactorSpec::new("flat_torus").param("lengths", lengths.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::named::*;
    use super::*;
    use std::convert::Infallible;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn catalog_volumes() {
        let s2 = single(sphere(2, 1.0));
        let v = s2.quadrature(1).unwrap().volume();
        assert!((v - 4.0 * PI).abs() < 1e-9, "{v}");
        let t = single(torus(&[2.0 * PI, 2.0 * PI]));
        assert!(rel(t.quadrature(1).unwrap().volume(), 4.0 * PI * PI) < 1e-12);
        let s3 = single(sphere(3, 1.0));
        assert!(rel(s3.quadrature(1).unwrap().volume(), 2.0 * PI * PI) < 1e-9);
        let s4 = single(sphere(4, 1.3));
        assert!(rel(s4.quadrature(1).unwrap().volume(), s4.closed_form_volume().unwrap()) < 1e-9);
        for a in [0.5, 1.7] {
            let b = single(berger(a));
            assert!(rel(b.quadrature(1).unwrap().volume(), 2.0 * PI * PI * a) < 1e-9);
        }
    }

    #[test]
    fn doubling_resolution_keeps_volumes() {
        for c in [single(sphere(2, 1.0)), single(berger(1.4)), single(sphere(3, 0.8))] {
            let v1 = c.quadrature(1).unwrap().volume();
            let v2 = c.quadrature(2).unwrap().volume();
            assert!((v1 - v2).abs() <= 1e-10 * v1, "{}: {v1} {v2}", c.name());
        }
    }

    #[test]
    fn product_volumes_multiply() {
        let p = product("s2xs2", vec![sphere(2, 1.0), sphere(2, 0.7)]);
        let q = p.quadrature(1).unwrap();
        let want = 4.0 * PI * 4.0 * PI * 0.49;
        assert!(rel(q.volume(), want) < 1e-9);
        assert!(rel(p.closed_form_volume().unwrap(), want) < 1e-15);
        let p = product("s1xs3", vec![FactorSpec::new("circle"), sphere(3, 1.0)]);
        assert!(rel(p.quadrature(1).unwrap().volume(), 4.0 * PI.powi(3)) < 1e-9);
    }

    #[test]
    fn sphere_integrals() {
        let q = single(sphere(2, 1.0)).quadrature(1).unwrap();
        let z = q.integrate(|x| Ok::<_, Infallible>(x[0].cos())).unwrap();
        assert!(z.abs() < 1e-12);
        let z2 = q.integrate(|x| Ok::<_, Infallible>(x[0].cos().powi(2))).unwrap();
        assert!((z2 - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn class_function_on_berger_matches_sphere() {
        // the trace of an SU(2) element is 2 cos(β/2) cos((α+γ)/2), a class
        // function; its integral scales with the Haar volume a
        let f = |x: &[f64]| Ok::<_, Infallible>(((x[1] / 2.0).cos() * ((x[0] + x[2]) / 2.0).cos()).powi(2));
        let s3 = single(sphere(3, 1.0)).quadrature(1).unwrap().integrate(f).unwrap();
        for a in [0.6, 1.8] {
            let b = single(berger(a)).quadrature(1).unwrap().integrate(f).unwrap();
            assert!(rel(b, a * s3) < 1e-9, "{b} vs {}", a * s3);
        }
        // the unit sphere value is π² (mean of cos²(ψ) over S³ is 1/2... times the
        // trace normalization): ∫ (tr/2)² = Vol/4
        assert!(rel(s3, PI * PI / 2.0) < 1e-9);
    }

    #[test]
    fn berger_curvature() {
        let c = single(berger(1.0));
        let pack = c.curvature(&[0.3, 1.1, 2.0]).unwrap();
        assert!((pack.scalar_value() - 6.0).abs() < 1e-10);
        assert!((pack.ricci_norm_sq - 12.0).abs() < 1e-9);
        for a in [0.5, 1.5] {
            let pack = single(berger(a)).curvature(&[0.3, 1.1, 2.0]).unwrap();
            let a2 = a * a;
            assert!((pack.scalar_value() - (8.0 - 2.0 * a2)).abs() < 1e-10);
            let want = 4.0 * a2 * a2 + 2.0 * (4.0 - 2.0 * a2).powi(2);
            assert!((pack.ricci_norm_sq - want).abs() < 1e-9);
        }
    }

    #[test]
    fn surface_of_revolution_sine_profile() {
        let c = single(FactorSpec::new("surface_of_revolution").param("rho", "sin(t)"));
        for p in c.sample_points(5, 1) {
            assert!((c.curvature(&p).unwrap().scalar_value() - 2.0).abs() < 1e-11);
        }
    }

    #[test]
    fn conformal_sphere_with_zero_factor_is_round() {
        let a = single(conformal_sphere("0"));
        let b = single(sphere(2, 1.0));
        let p = [0.8, 1.9];
        let (pa, pb) = (a.curvature(&p).unwrap(), b.curvature(&p).unwrap());
        assert_eq!(pa.ricci_value(), pb.ricci_value());
        assert_eq!(pa.scalar_value(), pb.scalar_value());
    }

    #[test]
    fn hyperbolic_has_no_quadrature() {
        let h = single(FactorSpec::new("hyperbolic_2"));
        assert!(matches!(h.quadrature(1), Err(CatalogError::NonCompact(_))));
        let s = h.curvature(&[0.2, 1.3]).unwrap().scalar_value();
        assert!((s + 2.0).abs() < 1e-12);
    }

    #[test]
    fn product_coordinates_and_blocks() {
        let p = product("r2xr2", vec![plane(), plane()]);
        assert_eq!(p.coord_names(), &["x_1", "y_1", "x_2", "y_2"]);
        let p = product("r2xs2", vec![plane(), sphere(2, 1.0)]);
        assert_eq!(p.coord_names(), &["x", "y", "theta", "phi"]);
        assert_eq!(p.blocks(), &[0..2, 2..4]);
        let g = p.metric_values(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(g.at(&[0, 2]), 0.0);
        assert!((g.at(&[3, 3]) - (1.0f64).sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn spec_errors() {
        assert!(matches!(lookup("nope"), Err(CatalogError::UnknownName(_))));
        let bad = ManifoldSpec::single("x", FactorSpec::new("klein_bottle"));
        assert!(matches!(build(&bad), Err(CatalogError::UnknownKind(_))));
        let bad = ManifoldSpec::single("x", FactorSpec::new("round_sphere").param("radius", 2.0));
        assert!(matches!(build(&bad), Err(CatalogError::BadParam { .. })));
        let bad = ManifoldSpec::single("x", sphere(2, 1.0).nodes("psi", 4));
        assert!(matches!(build(&bad), Err(CatalogError::BadParam { .. })));
        let json = r#"{"name": "s", "factors": [{"kind": "circle"}], "extra": 1}"#;
        assert!(serde_json::from_str::<ManifoldSpec>(json).is_err());
        let neg = ManifoldSpec::single(
            "neg",
            FactorSpec::new("custom")
                .param("coords", serde_json::json!(["x"]))
                .param("metric", serde_json::json!([["cos(x)"]]))
                .param("box", serde_json::json!([[0.0, 6.0]]))
                .param("compact", true),
        );
        let c = build(&neg).unwrap();
        assert!(matches!(c.quadrature(1), Err(CatalogError::NotPositiveDefinite(_))));
    }

    #[test]
    fn random_metric_is_positive_definite_on_nodes() {
        for seed in 0..3 {
            let c = single(FactorSpec::new("random_metric").param("dim", 4).param("seed", seed));
            let q = c.quadrature(1).unwrap();
            assert!(q.weights.iter().all(|w| *w > 0.0));
        }
    }
}
