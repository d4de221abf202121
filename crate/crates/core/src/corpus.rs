//! Seeded random fields, functions and metrics used by the identity and
//! regression checks. Everything is returned as expression text so it can
//! be echoed into reports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::named::{berger, conformal_sphere, sphere, torus};
use crate::catalog::{FactorSpec, ManifoldSpec};

/// Upper end of the random phase range. Seeded corpora depend on it.
#[allow(clippy::approx_constant)]
const PHASE_MAX: f64 = 6.28;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coef(r: &mut ChaCha8Rng, amp: f64) -> f64 {
    (r.gen_range(-amp..amp) * 1000.0).round() / 1000.0
}

/// Random trigonometric polynomial in 2π-periodic coordinates.
pub fn trig_scalar(coords: &[String], terms: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let mut parts = vec![format!("{:.3}", coef(&mut r, 1.0))];
    for _ in 0..terms {
        let arg: Vec<String> = coords
            .iter()
            .filter_map(|c| {
                let k: i32 = r.gen_range(-2..=2);
                (k != 0).then(|| format!("{k}*{c}"))
            })
            .collect();
        let arg = if arg.is_empty() { coords[0].clone() } else { arg.join(" + ") };
        let (a, ph) = (coef(&mut r, 0.5), r.gen_range(0.0..PHASE_MAX));
        parts.push(format!("{a:.3}*cos({arg} + {ph:.3})"));
    }
    parts.join(" + ")
}

/// Random vector field with trigonometric components.
pub fn trig_field(coords: &[String], seed: u64) -> Vec<String> {
    (0..coords.len()).map(|i| trig_scalar(coords, 3, seed * 31 + i as u64)).collect()
}

/// Random symmetric 2-tensor with trigonometric entries, row major.
pub fn trig_sym2(coords: &[String], seed: u64) -> Vec<String> {
    let n = coords.len();
    let mut e = vec![String::new(); n * n];
    for i in 0..n {
        for j in i..n {
            let s = trig_scalar(coords, 2, seed * 97 + (i * n + j) as u64);
            e[i * n + j] = s.clone();
            e[j * n + i] = s;
        }
    }
    e
}

const X: &str = "sin(theta)*cos(phi)";
const Y: &str = "sin(theta)*sin(phi)";
const Z: &str = "cos(theta)";

/// Conformal gradients and Killing fields of the round 2-sphere in
/// `(theta, phi)` components.
pub const SPHERE_FRAME: [[&str; 2]; 6] = [
    ["cos(theta)*cos(phi)", "-sin(phi)/sin(theta)"],
    ["cos(theta)*sin(phi)", "cos(phi)/sin(theta)"],
    ["-sin(theta)", "0"],
    ["-sin(phi)", "-cos(theta)/sin(theta)*cos(phi)"],
    ["cos(phi)", "-cos(theta)/sin(theta)*sin(phi)"],
    ["0", "1"],
];

/// Random polynomial of degree at most 2 in the ambient coordinates of S².
pub fn sphere_scalar(seed: u64) -> String {
    let mut r = rng(seed);
    let mono = [
        "1".to_string(),
        X.into(),
        Y.into(),
        Z.into(),
        format!("({X})*({Y})"),
        format!("({Y})*({Z})"),
        format!("({Z})^2"),
    ];
    mono.iter()
        .map(|m| format!("{:.3}*{m}", coef(&mut r, 1.0)))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Random smooth vector field on the round 2-sphere: ambient-linear
/// combinations of [`SPHERE_FRAME`].
pub fn sphere_field(seed: u64) -> Vec<String> {
    let mut r = rng(seed ^ 0x5eed);
    let mut comps = [Vec::new(), Vec::new()];
    for v in SPHERE_FRAME {
        let a = format!(
            "({:.3} + {:.3}*{X} + {:.3}*{Y} + {:.3}*{Z})",
            coef(&mut r, 1.0),
            coef(&mut r, 0.5),
            coef(&mut r, 0.5),
            coef(&mut r, 0.5)
        );
        for k in 0..2 {
            if v[k] != "0" {
                comps[k].push(format!("{a}*({})", v[k]));
            }
        }
    }
    comps.iter().map(|c| c.join(" + ")).collect()
}

/// A vector field with its `φ`, tagged with the manifold it lives on.
#[derive(Debug, Clone, Serialize)]
pub struct FieldCase {
    pub label: String,
    pub manifold: ManifoldSpec,
    pub x: Vec<String>,
    pub phi: String,
}

/// Ten `(X, φ)` pairs: five on the round S², five on the flat square torus.
pub fn soliton_integral_cases() -> Vec<FieldCase> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let tc = vec!["x".to_string(), "y".to_string()];
    let mut out = Vec::new();
    for k in 0..5u64 {
        out.push(FieldCase {
            label: format!("s2-{k}"),
            manifold: ManifoldSpec::single("s2", sphere(2, 1.0)),
            x: sphere_field(100 + k),
            phi: sphere_scalar(200 + k),
        });
    }
    for k in 0..5u64 {
        out.push(FieldCase {
            label: format!("t2-{k}"),
            manifold: ManifoldSpec::single("t2", torus(&[two_pi, two_pi])),
            x: trig_field(&tc, 300 + k),
            phi: trig_scalar(&tc, 3, 400 + k),
        });
    }
    out
}

/// Random metrics of dimensions 2 to 4.
pub fn oracle_metrics() -> Vec<ManifoldSpec> {
    [(2, 11), (3, 12), (3, 13), (4, 14), (4, 15)]
        .iter()
        .map(|&(d, s)| random(d, s))
        .collect()
}

pub fn random(dim: usize, seed: u64) -> ManifoldSpec {
    ManifoldSpec::single(
        &format!("random_metric_{dim}_{seed}"),
        FactorSpec::new("random_metric").param("dim", dim).param("seed", seed as usize),
    )
}

/// Five random 4-metrics.
pub fn four_metrics() -> Vec<ManifoldSpec> {
    (0..5).map(|k| random(4, 40 + k)).collect()
}

/// Three small random conformal factors in `x0..x{n-1}`.
pub fn conformal_factors(dim: usize) -> Vec<String> {
    let coords: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    (0..3).map(|k| format!("0.3*({})", trig_scalar(&coords, 2, 700 + k))).collect()
}

/// Conformal factors `u` on the 2-sphere, for `exp(2u) g_round`.
pub fn sphere_conformal_factors() -> Vec<String> {
    vec![
        "0.2*cos(theta)".into(),
        "0.15*sin(theta)^2*cos(2*phi)".into(),
        format!("0.1*({X}) + 0.2*({Z})^2"),
    ]
}

/// Closed 3-manifolds with a mix of Einstein and non-Einstein metrics.
pub fn three_manifolds() -> Vec<ManifoldSpec> {
    let mut v = vec![
        ManifoldSpec::single("round_s3", sphere(3, 1.0)),
        ManifoldSpec::single("round_s3_r2", sphere(3, 2.0)),
        ManifoldSpec::single("flat_t3", torus(&[1.0, 2.0, 3.0])),
    ];
    for a in [0.5, 0.8, 1.5, 2.0] {
        v.push(ManifoldSpec::single(&format!("berger_{a}"), berger(a)));
    }
    v.push(random(3, 21));
    v
}

/// Closed surfaces for the rigidity chain; the conformal spheres have
/// non-constant `c` and must be rejected.
pub fn surfaces() -> Vec<ManifoldSpec> {
    let mut v = vec![
        ManifoldSpec::single("round_s2", sphere(2, 1.0)),
        ManifoldSpec::single("round_s2_r3", sphere(2, 3.0)),
        ManifoldSpec::single("flat_t2", torus(&[1.0, 2.5])),
    ];
    for (k, u) in sphere_conformal_factors().into_iter().enumerate() {
        v.push(ManifoldSpec::single(&format!("conformal_s2_{k}"), conformal_sphere(&u)));
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::build;

    #[test]
    fn cases_parse_and_are_deterministic() {
        let a = soliton_integral_cases();
        let b = soliton_integral_cases();
        assert_eq!(a.len(), 10);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.x, y.x);
            let c = build(&x.manifold).unwrap();
            for e in x.x.iter().chain([&x.phi]) {
                c.parse(e).unwrap();
            }
        }
        for m in oracle_metrics()
            .iter()
            .chain(&four_metrics())
            .chain(&three_manifolds())
            .chain(&surfaces())
        {
            build(m).unwrap();
        }
        let c = build(&four_metrics()[0]).unwrap();
        for u in conformal_factors(4) {
            c.parse(&u).unwrap();
        }
    }

    #[test]
    fn sphere_field_is_smooth_near_poles() {
        let c = build(&ManifoldSpec::single("s2", sphere(2, 1.0))).unwrap();
        let x: Vec<_> = sphere_field(3).iter().map(|e| c.parse(e).unwrap()).collect();
        // |X|² stays bounded as θ → 0
        for th in [1e-2, 1e-3, 1e-4] {
            let p = [th, 0.7];
            let g = c.metric_values(&p).unwrap();
            let v: Vec<f64> = x.iter().map(|e| e.eval(&p, &Default::default()).unwrap()).collect();
            let n2 = g.at(&[0, 0]) * v[0] * v[0] + g.at(&[1, 1]) * v[1] * v[1];
            assert!(n2 < 50.0, "{n2}");
        }
    }
}
