//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use bachcheck::report::{Check, Report};
use bachcheck::suite::{self, SuiteConfig};
use bachcheck::tolerances::Tolerances;

/// Tolerances the criteria are judged with. Must equal the defaults.
const PINNED: [(&str, f64); 27] = [
    ("bach_divergence", 1e-6),
    ("bach_trace", 1e-8),
    ("bianchi", 1e-7),
    ("conformal_invariance", 1e-6),
    ("conformality", 1e-9),
    ("constancy", 1e-8),
    ("einstein", 1e-10),
    ("ho_residual", 1e-9),
    ("integral_identity", 1e-7),
    ("integral_shrink", 10.0),
    ("kazdan_warner", 1e-7),
    ("ode_cap", 1e-4),
    ("ode_closure_time", 1e-6),
    ("ode_halving", 1e-8),
    ("ode_rtol", 1e-10),
    ("ode_s_range", 1e-5),
    ("ode_trajectory", 1e-7),
    ("oracle_agreement", 1e-6),
    ("pointwise_identity", 1e-7),
    ("product_formula", 1e-8),
    ("riemann_symmetry", 1e-9),
    ("root", 1e-12),
    ("roundoff_floor", 1e-12),
    ("sign_zero", 1e-9),
    ("soliton_residual", 1e-7),
    ("volume_doubling", 1e-10),
    ("volume_product", 1e-9),
];

const TITLES: [&str; 11] = [
    "curvature pipeline vs finite-difference oracle",
    "Bach tensor trace-free, divergence-free, conformal weight -2",
    "closed-form product Bach components vs pipeline",
    "gradient Bach solitons on R2 x S2 and R2 x H2",
    "Bach soliton on R x Berger sphere",
    "soliton integral identities on S2 and T2",
    "Yano identity and conformal-field integral",
    "Bochner identity and surface rigidity chain",
    "profile ODE scan and round-cap closure",
    "sign laws on circle and line products",
    "byte-identical reports for a fixed seed",
];

fn line(k: usize, ok: bool, detail: &str, secs: f64) {
    println!(
        "criterion {k:>2} [{}] {} ({detail}; {secs:.1}s)",
        if ok { "PASS" } else { "FAIL" },
        TITLES[k - 1]
    );
}

fn summarize(checks: &[Check]) -> (bool, String) {
    let failed: Vec<&Check> = checks.iter().filter(|c| c.failed()).collect();
    let mut s = format!("{}/{} checks", checks.len() - failed.len(), checks.len());
    for c in failed.iter().take(4) {
        s.push_str(&format!("; {} = {:.3e}", c.check_id, c.value));
    }
    if failed.len() > 4 {
        s.push_str(&format!("; {} more failing", failed.len() - 4));
    }
    (failed.is_empty(), s)
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let defaults = Tolerances::default().entries();
    let pinned_ok = defaults.len() == PINNED.len() && PINNED.iter().all(|(k, v)| defaults.get(*k) == Some(v));
    println!("pinned tolerances match defaults: {pinned_ok}");
    let cfg = SuiteConfig::default();
    let mut all = Vec::new();
    let mut failures = usize::from(!pinned_ok);
    for k in 1..=10u8 {
        let t = Instant::now();
        match suite::criterion(k, &cfg) {
            Ok(checks) => {
                let (ok, detail) = summarize(&checks);
                line(k as usize, ok, &detail, t.elapsed().as_secs_f64());
                failures += usize::from(!ok);
                all.extend(checks);
            }
            Err(e) => {
                line(k as usize, false, &format!("error: {e}"), t.elapsed().as_secs_f64());
                failures += 1;
            }
        }
    }
    let t = Instant::now();
    let info = suite::informational(&cfg).expect("informational checks run");
    for c in &info {
        println!(
            "  info {} = {:.3e} [{}]",
            c.check_id,
            c.value,
            if c.pass { "holds" } else { "differs" }
        );
    }
    all.extend(info);
    let first = Report::new(cfg.echo(), all).to_json();
    let second = suite::run_all(&cfg).map(|r| r.to_json());
    let same = second.as_ref().map(|s| *s == first).unwrap_or(false);
    line(11, same, &format!("{} bytes", first.len()), t.elapsed().as_secs_f64());
    failures += usize::from(!same);
    println!("acceptance: {} of 11 criteria failed", failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
