use std::process::{Command, Output};

use serde_json::Value;

fn bachcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bachcheck"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn tmp(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("bachcheck-cli-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d.join(name)
}

#[test]
fn catalog_show_round_sphere() {
    let o = bachcheck(&["catalog", "show", "round_sphere"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["dim"], 2);
    assert_eq!(v["params"]["r"], 1.0);
    assert!(v["volume_formula"].as_str().unwrap().contains("4 pi r^2"));
    let list = String::from_utf8(bachcheck(&["catalog", "list"]).stdout).unwrap();
    for name in ["berger_sphere", "r2_x_s2", "ho-r2s2", "s4-trivial"] {
        assert!(list.contains(name), "{name}");
    }
}

#[test]
fn curvature_dump_of_unit_sphere() {
    let o = bachcheck(&["curvature", "--manifold", "round_sphere", "--point", "theta=1.1, phi=0.4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert!((v["scalar"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!(v["bach"].is_null());
    let o = bachcheck(&["curvature", "--manifold", "s2_x_s2", "--point", "theta=1,phi=2"]);
    assert_eq!(o.status.code(), Some(2), "missing coordinates is a usage error");
}

#[test]
fn soliton_examples() {
    let o = bachcheck(&["check", "soliton", "--example", "ho-r2s2-rescaled"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert_eq!(v["summary"]["failed"], 0);
    assert!(v["checks"][0]["value"].as_f64().unwrap() <= 1e-9);
    // The printed normalization differs from the standard Bach tensor by a
    // factor -2; the residual is 1/2 on the flat block.
    let o = bachcheck(&["check", "soliton", "--example", "ho-r2s2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!((json_out(&o)["checks"][0]["value"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn soliton_case_document() {
    let p = tmp("case.json");
    std::fs::write(
        &p,
        r#"{"manifold": "r2_x_s2", "f": "-(x^2 + y^2)/12", "lambda": -0.08333333333333333, "points": 20}"#,
    )
    .unwrap();
    let o = bachcheck(&["check", "soliton", "--case", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&p, r#"{"manifold": "r2_x_s2", "lamda": 1}"#).unwrap();
    assert_eq!(
        bachcheck(&["check", "soliton", "--case", p.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn identities_with_builtin_cases() {
    for id in ["lie-pairing", "yano", "bochner", "surface-rigidity"] {
        let o = bachcheck(&["check", "identity", "--id", id]);
        assert_eq!(o.status.code(), Some(0), "{id}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(bachcheck(&["check", "identity", "--id", "no-such"]).status.code(), Some(2));
}

#[test]
fn berger_root_and_no_bracket() {
    let o = bachcheck(&["solve", "berger"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    assert!((v["solution"]["a"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!((v["solution"]["lambda"].as_f64().unwrap() + 0.25).abs() < 1e-9);
    let o = bachcheck(&["solve", "berger", "--interval", "1.2,3.0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json_out(&o)["outcome"], "no_bracket");
    assert_eq!(bachcheck(&["solve", "berger", "--interval", "3,1"]).status.code(), Some(2));
}

#[test]
fn ode_scan_outputs() {
    let cfg = tmp("scan.json");
    std::fs::write(
        &cfg,
        r#"{"s0": {"min": 0, "max": 2, "count": 3}, "c": {"min": 0, "max": 1.3333333333333333, "count": 2}}"#,
    )
    .unwrap();
    let out = tmp("scan.csv");
    let o = bachcheck(&["ode", "scan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "S0,c,class,t_close,S_min,S_max");
    assert_eq!(lines.len(), 7);
    let round = lines.iter().find(|l| l.starts_with("2.000000,1.333333")).unwrap();
    assert!(round.contains(",Closed,"));
    let t: f64 = round.split(',').nth(3).unwrap().parse().unwrap();
    assert!((t - std::f64::consts::PI).abs() < 1e-6);
    let o = bachcheck(&["ode", "scan", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert_eq!(json_out(&o)["table"]["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn exit_code_taxonomy() {
    assert_eq!(bachcheck(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        bachcheck(&["--tol", "nope=1", "suite", "all", "--criterion", "10"]).status.code(),
        Some(2)
    );
    assert_eq!(
        bachcheck(&["curvature", "--manifold", "nowhere", "--point", "x=0"]).status.code(),
        Some(2)
    );
    let degenerate = r#"{"name": "d", "factors": [{"kind": "surface_of_revolution", "params": {"rho": "t - 1", "t_min": 0, "t_max": 3, "closed": false}}]}"#;
    assert_eq!(
        bachcheck(&["curvature", "--manifold", degenerate, "--point", "t=1,theta=0"])
            .status
            .code(),
        Some(3)
    );
    let cfg = tmp("fail.json");
    std::fs::write(
        &cfg,
        r#"{"s0": {"min": 2, "max": 2, "count": 1}, "c": {"min": 1, "max": 1, "count": 1}, "controls": {"max_steps": 5}}"#,
    )
    .unwrap();
    assert_eq!(
        bachcheck(&["ode", "scan", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(3)
    );
}

#[test]
fn suite_reports_are_byte_identical() {
    let a = bachcheck(&["--seed", "11", "suite", "all", "--criterion", "10"]);
    let b = bachcheck(&["--seed", "11", "suite", "all", "--criterion", "10"]);
    assert_eq!(a.status.code(), Some(0));
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    let c = bachcheck(&["--seed", "12", "suite", "all", "--criterion", "10"]);
    assert_ne!(a.stdout, c.stdout, "the seed reaches the sampled points");
}
