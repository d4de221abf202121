//! `bachcheck` command line.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or input error,
//! 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use bachcheck::catalog::{self, Chart};
use bachcheck::documents::{self, IdentityCase, ManifoldRef, SolitonCase};
use bachcheck::ode::{self, Classification, ScanConfig};
use bachcheck::report::{Check, Report};
use bachcheck::soliton::{self, BergerControls, BergerOutcome};
use bachcheck::suite::{self, SuiteConfig, SuiteError};
use bachcheck::tensor::Tensor;

#[derive(Parser)]
#[command(
    name = "bachcheck",
    version,
    about = "Curvature, Bach-soliton and identity checks on coordinate charts"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every sampled point set.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Multiplier on quadrature node counts.
    #[arg(long, global = true, default_value_t = 1)]
    resolution: usize,
    /// Tolerance override, NAME=VALUE. Repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Named manifolds and soliton examples.
    Catalog {
        #[command(subcommand)]
        action: CatalogCmd,
    },
    /// Dump the curvature pack at a point.
    Curvature {
        /// Catalog name, manifold JSON file, or inline JSON.
        #[arg(long)]
        manifold: String,
        /// Coordinates as name=value pairs, e.g. theta=1.0,phi=0.5.
        #[arg(long)]
        point: String,
    },
    /// Run identity or soliton checks.
    Check {
        #[command(subcommand)]
        what: CheckCmd,
    },
    /// Root finders.
    Solve {
        #[command(subcommand)]
        what: SolveCmd,
    },
    /// Rotationally symmetric profile ODE.
    Ode {
        #[command(subcommand)]
        what: OdeCmd,
    },
    /// The acceptance suite.
    Suite {
        #[command(subcommand)]
        what: SuiteCmd,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    List,
    Show { name: String },
}

#[derive(Subcommand)]
enum CheckCmd {
    Identity {
        #[arg(long)]
        id: String,
        /// Identity case JSON file; a built-in case is used when omitted.
        #[arg(long)]
        case: Option<PathBuf>,
    },
    Soliton {
        #[arg(long, conflicts_with = "case", required_unless_present = "case")]
        example: Option<String>,
        /// Soliton case JSON file.
        #[arg(long)]
        case: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Non-round Bach soliton on the line times a Berger sphere.
    Berger {
        #[arg(long, value_name = "A,B")]
        interval: Option<String>,
    },
}

#[derive(Subcommand)]
enum OdeCmd {
    Scan {
        /// Scan configuration JSON; the default 41x41 grid when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// csv or json; defaults from the --out extension, else csv.
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Subcommand)]
enum SuiteCmd {
    All {
        /// Run a single criterion (1..=10).
        #[arg(long)]
        criterion: Option<u8>,
    },
}

/// Error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

impl From<SuiteError> for Failure {
    fn from(e: SuiteError) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

macro_rules! suite_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                SuiteError::from(e).into()
            }
        }
    )*};
}
suite_from!(
    catalog::CatalogError,
    documents::DocumentError,
    soliton::SolitonError,
    ode::OdeError,
    bachcheck::curvature::CurvatureError
);

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn suite_config(c: &Common) -> Result<SuiteConfig, Failure> {
    if c.resolution == 0 {
        return Err(usage("--resolution must be at least 1"));
    }
    let mut cfg = SuiteConfig {
        seed: c.seed,
        resolution: c.resolution,
        ..SuiteConfig::default()
    };
    for t in &c.tol {
        let (name, value) = t
            .split_once('=')
            .ok_or_else(|| usage(format!("--tol expects NAME=VALUE, got '{t}'")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| usage(format!("--tol {name}: '{value}' is not a number")))?;
        cfg.tolerances = cfg.tolerances.with_override(name.trim(), v).map_err(|e| usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn emit_report(c: &Common, config: Value, checks: Vec<Check>) -> Outcome {
    let r = Report::new(config, checks);
    emit(&c.out, &r.to_json())?;
    Ok(if r.all_passed() { 0 } else { 1 })
}

fn run(cli: Cli) -> Outcome {
    let c = &cli.common;
    match &cli.command {
        Command::Catalog { action } => catalog_cmd(c, action),
        Command::Curvature { manifold, point } => curvature_cmd(c, manifold, point),
        Command::Check { what } => {
            let cfg = suite_config(c)?;
            match what {
                CheckCmd::Identity { id, case } => {
                    let case = match case {
                        Some(p) => IdentityCase::from_json(&read(p)?)?,
                        None => documents::default_identity_case(id)?,
                    };
                    let checks = suite::identity_checks(id, &case, &cfg)?;
                    emit_report(
                        c,
                        json!({"command": "check identity", "id": id, "case": case, "suite": cfg.echo()}),
                        checks,
                    )
                }
                CheckCmd::Soliton { example, case } => {
                    let (label, checks) = match (example, case) {
                        (Some(name), _) => (name.clone(), suite::soliton_example_checks(name, &cfg)?),
                        (None, Some(p)) => {
                            let case = SolitonCase::from_json(&read(p)?)?;
                            let label = p
                                .file_stem()
                                .map(|s| s.to_string_lossy().into_owned())
                                .unwrap_or_else(|| "case".into());
                            let checks = suite::soliton_case_checks(&label, &case, &cfg, cfg.tolerances.soliton_residual)?;
                            (label, checks)
                        }
                        (None, None) => return Err(usage("give --example or --case")),
                    };
                    emit_report(c, json!({"command": "check soliton", "case": label, "suite": cfg.echo()}), checks)
                }
            }
        }
        Command::Solve {
            what: SolveCmd::Berger { interval },
        } => berger_cmd(c, interval.as_deref()),
        Command::Ode {
            what: OdeCmd::Scan { config, format },
        } => ode_cmd(c, config.as_deref(), format.as_deref()),
        Command::Suite {
            what: SuiteCmd::All { criterion },
        } => {
            let cfg = suite_config(c)?;
            let r = match criterion {
                Some(k) => Report::new(cfg.echo(), suite::criterion(*k, &cfg)?),
                None => suite::run_all(&cfg)?,
            };
            emit(&c.out, &r.to_json())?;
            eprintln!(
                "{} checks: {} passed, {} failed, {} informational",
                r.summary.total, r.summary.passed, r.summary.failed, r.summary.informational
            );
            Ok(if r.all_passed() { 0 } else { 1 })
        }
    }
}

fn catalog_cmd(c: &Common, action: &CatalogCmd) -> Outcome {
    match action {
        CatalogCmd::List => {
            let mut s = String::from("manifolds:\n");
            for e in catalog::catalog() {
                s.push_str(&format!("  {:<24} dim {}  {}\n", e.name, e.dim, e.description));
            }
            s.push_str("soliton examples:\n");
            for n in soliton::EXAMPLE_NAMES {
                let ex = soliton::example(n)?;
                s.push_str(&format!("  {:<24} dim {}  {}\n", n, ex.chart.dim(), ex.description));
            }
            emit(&c.out, &s)?;
        }
        CatalogCmd::Show { name } => {
            let v = match catalog::lookup(name) {
                Ok(e) => {
                    let chart = catalog::build(&e.spec)?;
                    json!({
                        "name": e.name,
                        "description": e.description,
                        "dim": e.dim,
                        "params": e.params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<serde_json::Map<_, _>>(),
                        "volume_formula": e.volume_formula,
                        "coordinates": chart.coord_names(),
                        "compact": chart.is_compact(),
                        "spec": e.spec,
                    })
                }
                Err(_) if soliton::EXAMPLE_NAMES.contains(&name.as_str()) => {
                    let ex = soliton::example(name)?;
                    json!({
                        "name": ex.name,
                        "description": ex.description,
                        "dim": ex.chart.dim(),
                        "coordinates": ex.chart.coord_names(),
                        "q": ex.data.q.name(),
                    })
                }
                Err(e) => return Err(SuiteError::from(e).into()),
            };
            emit(&c.out, &(serde_json::to_string_pretty(&v).expect("json") + "\n"))?;
        }
    }
    Ok(0)
}

fn manifold(arg: &str) -> Result<Chart, Failure> {
    let text;
    let r: ManifoldRef = if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).map_err(|e| usage(format!("manifold spec: {e}")))?
    } else if Path::new(arg).is_file() {
        text = read(Path::new(arg))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("{arg}: {e}")))?
    } else {
        ManifoldRef::Named(arg.to_string())
    };
    Ok(r.build()?)
}

fn parse_point(chart: &Chart, text: &str) -> Result<Vec<f64>, Failure> {
    let names = chart.coord_names();
    let mut p = vec![None; names.len()];
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("point entry '{part}' is not name=value")))?;
        let i = names
            .iter()
            .position(|n| n == k.trim())
            .ok_or_else(|| usage(format!("unknown coordinate '{}' (coordinates: {})", k.trim(), names.join(", "))))?;
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("coordinate {k}: '{v}' is not a number")))?;
        p[i] = Some(x);
    }
    p.iter()
        .zip(names)
        .map(|(x, n)| x.ok_or_else(|| usage(format!("missing coordinate '{n}'"))))
        .collect()
}

fn values(t: &Tensor<f64>) -> Value {
    json!(t.data())
}

fn curvature_cmd(c: &Common, manifold_arg: &str, point: &str) -> Outcome {
    let chart = manifold(manifold_arg)?;
    let p = parse_point(&chart, point)?;
    let pack = chart.curvature(&p)?;
    let opt = |t: Option<&Tensor<f64>>| t.map(values).unwrap_or(Value::Null);
    let v = json!({
        "manifold": chart.name(),
        "coordinates": chart.coord_names(),
        "point": p,
        "layout": "row-major components; christoffel [k,i,j] = Gamma^k_ij; riemann [i,j,k,l] = Rm_ijkl; nabla_ricci [m,i,j]; cotton [k,i,j]",
        "metric": values(&pack.g),
        "inverse_metric": values(&pack.ginv),
        "christoffel": values(&pack.christoffel_value()),
        "riemann": values(&pack.riemann_value()),
        "ricci": values(&pack.ricci_value()),
        "scalar": pack.scalar_value(),
        "grad_scalar": pack.grad_scalar,
        "hess_scalar": values(&pack.hess_scalar),
        "lap_scalar": pack.lap_scalar,
        "nabla_ricci": values(&pack.nabla_ricci),
        "lap_ricci": values(&pack.lap_ricci),
        "ricci_norm_sq": pack.ricci_norm_sq,
        "schouten": pack.schouten_value().ok().as_ref().map(values).unwrap_or(Value::Null),
        "cotton": opt(pack.cotton.as_ref()),
        "weyl": opt(pack.weyl.as_ref()),
        "bach": opt(pack.bach.as_ref()),
    });
    emit(&c.out, &(serde_json::to_string_pretty(&v).expect("json") + "\n"))?;
    Ok(0)
}

fn parse_interval(s: &str) -> Result<(f64, f64), Failure> {
    let bad = || usage(format!("--interval expects A,B with A < B, got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a.is_finite() && b.is_finite() && a > 0.0 && a < b {
        Ok((a, b))
    } else {
        Err(bad())
    }
}

fn berger_cmd(c: &Common, interval: Option<&str>) -> Outcome {
    let cfg = suite_config(c)?;
    let iv = interval
        .map(parse_interval)
        .transpose()?
        .unwrap_or(soliton::DEFAULT_BERGER_INTERVAL);
    let ctl = BergerControls {
        seed: cfg.seed,
        root_tol: cfg.tolerances.root,
        constancy_tol: cfg.tolerances.constancy,
        ..BergerControls::default()
    };
    let outcome = soliton::solve_berger_soliton(iv, &ctl)?;
    let (code, v) = match &outcome {
        BergerOutcome::Root(s) => {
            let ok = s.profile.soliton.sup_norm <= cfg.tolerances.soliton_residual;
            (
                if ok { 0 } else { 1 },
                json!({"interval": [iv.0, iv.1], "outcome": "root", "solution": s, "residual_within_tolerance": ok}),
            )
        }
        BergerOutcome::NoBracket { .. } => (1, json!({"interval": [iv.0, iv.1], "outcome": "no_bracket", "detail": outcome})),
    };
    emit(&c.out, &(serde_json::to_string_pretty(&v).expect("json") + "\n"))?;
    Ok(code)
}

fn ode_cmd(c: &Common, config: Option<&Path>, format: Option<&str>) -> Outcome {
    let cfg = suite_config(c)?;
    let scan_cfg: ScanConfig = match config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => ScanConfig::default(),
    };
    let format = match format {
        Some(f) => f.to_string(),
        None => match c.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some("json") => "json".into(),
            _ => "csv".into(),
        },
    };
    let table = ode::scan(&scan_cfg, cfg.tolerances.ode_s_range)?;
    let text = match format.as_str() {
        "csv" => table.to_csv(),
        "json" => serde_json::to_string_pretty(&json!({"config": scan_cfg, "table": table})).expect("json") + "\n",
        other => return Err(usage(format!("unknown format '{other}' (csv, json)"))),
    };
    emit(&c.out, &text)?;
    let failures = table.rows.iter().filter(|r| r.class == Classification::StepFailure).count();
    eprintln!(
        "{} cells, {} closed, max closed S-range {:.3e}, {} step failures",
        table.rows.len(),
        table.closed,
        table.max_closed_s_range,
        failures
    );
    Ok(if failures > 0 {
        3
    } else if table.closed_are_round {
        0
    } else {
        1
    })
}
