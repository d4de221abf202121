//! Property tests for the invariants the engines promise.

use proptest::prelude::*;

use bachcheck::catalog::{build, named, FactorSpec, ManifoldSpec};
use bachcheck::corpus;
use bachcheck::curvature::trace_values;
use bachcheck::identity;
use bachcheck::product::{self, FactorCurvature, FactorRole};
use bachcheck::report::digest;
use bachcheck::soliton::{self, Field, QSelector, Scale, SolitonData};

fn random_chart(dim: usize, seed: u64) -> bachcheck::catalog::Chart {
    build(&corpus::random(dim, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn riemann_symmetries_and_bianchi(dim in 2usize..=4, seed in 0u64..10_000, pseed in 0u64..1000) {
        let chart = random_chart(dim, seed);
        let p = &chart.sample_points(1, pseed)[0];
        let pack = chart.curvature(p).unwrap();
        let rm = pack.riemann_value();
        let scale = rm.data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let n = dim;
        let mut worst = 0.0f64;
        for i in 0..n { for j in 0..n { for k in 0..n { for l in 0..n {
            let r = rm.at(&[i, j, k, l]);
            worst = worst
                .max((r + rm.at(&[j, i, k, l])).abs())
                .max((r + rm.at(&[i, j, l, k])).abs())
                .max((r - rm.at(&[k, l, i, j])).abs())
                .max((r + rm.at(&[i, k, l, j]) + rm.at(&[i, l, j, k])).abs());
        }}}}
        prop_assert!(worst / scale <= 1e-9, "symmetry defect {}", worst / scale);
        let b = pack.bianchi_defect().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(b <= 1e-7, "bianchi defect {b}");
    }

    #[test]
    fn bach_is_trace_free(seed in 0u64..10_000, pseed in 0u64..1000) {
        let chart = random_chart(4, seed);
        let p = &chart.sample_points(1, pseed)[0];
        let pack = chart.curvature(p).unwrap();
        let tr = trace_values(pack.bach_value().unwrap(), &pack.ginv).abs();
        prop_assert!(tr <= 1e-8, "tr B = {tr}");
    }

    #[test]
    fn line_cross_formula_is_trace_free_and_lambda_signs(seed in 0u64..10_000, pseed in 0u64..1000) {
        let chart = random_chart(3, seed);
        let p = &chart.sample_points(1, pseed)[0];
        let fc = FactorCurvature::at(&chart, p, FactorRole::ThreeManifold).unwrap();
        let b = product::bach_line_cross_3(&fc).unwrap();
        let scale = b.assemble().data().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(b.trace(&fc.ginv).abs() / scale <= 1e-12);
        prop_assert!(product::s1n3_lambda(&fc).unwrap() >= 0.0);
        prop_assert!(product::rn3_lambda(&fc).unwrap() <= 0.0);
    }

    #[test]
    fn extended_form_matches_constant_form(lambda in -1.0f64..1.0, pseed in 0u64..1000) {
        let ex = soliton::example("ho-r2h2-rescaled").unwrap();
        let pts = ex.chart.sample_points(5, pseed);
        let gap = soliton::extended_form_gap(&ex.chart, &ex.data.field, lambda, &pts).unwrap();
        prop_assert!(gap <= 1e-12, "gap {gap}");
    }

    #[test]
    fn constructed_q_closes_and_integrals_balance(seed in 0u64..10_000) {
        let chart = named::single(named::sphere(2, 1.0));
        let x: Vec<_> = corpus::sphere_field(seed).iter().map(|e| chart.parse(e).unwrap()).collect();
        let phi = chart.parse(&corpus::sphere_scalar(seed + 1)).unwrap();
        let sd = SolitonData { field: Field::Vector(x.clone()), scale: Scale::Function(phi.clone()), q: QSelector::Constructed };
        let r = soliton::extended_q_residual(&chart, &sd, &chart.sample_points(5, seed)).unwrap();
        prop_assert!(r.sup_norm <= 1e-14, "residual {}", r.sup_norm);
        let s = identity::soliton_integrals(&chart, &x, &phi, 1).unwrap();
        prop_assert!(s.first.relative() <= 1e-7 && s.second.relative() <= 1e-7, "{:?}", s);
    }

    #[test]
    fn torus_volumes_are_exact_and_multiply(a in 0.5f64..5.0, b in 0.5f64..5.0, l in 0.5f64..5.0) {
        let t = build(&ManifoldSpec::single("t", named::torus(&[a, b]))).unwrap();
        let v1 = t.quadrature(1).unwrap().volume();
        let v2 = t.quadrature(2).unwrap().volume();
        prop_assert!((v1 - a * b).abs() <= 1e-10 * a * b);
        prop_assert!((v1 - v2).abs() <= 1e-10 * v1);
        let prod = build(&ManifoldSpec::product("t_x_s1", vec![named::torus(&[a, b]), FactorSpec::new("circle").param("length", l)])).unwrap();
        let vp = prod.quadrature(1).unwrap().volume();
        let expect = a * b * l;
        prop_assert!((vp - expect).abs() <= 1e-9 * expect);
    }

    #[test]
    fn digest_ignores_key_order(x in any::<i64>(), s in "[a-z]{0,8}") {
        let a = serde_json::json!({"x": x, "s": s});
        let b: serde_json::Value = serde_json::from_str(&format!(r#"{{"s": {}, "x": {}}}"#, serde_json::json!(s), x)).unwrap();
        prop_assert_eq!(digest(&a), digest(&b));
    }
}

#[test]
fn berger_haar_volume_matches_three_sphere() {
    for a in [0.5, 1.0, 1.7] {
        let c = named::single(named::berger(a));
        let v = c.quadrature(1).unwrap().volume();
        let expect = 2.0 * std::f64::consts::PI.powi(2) * a;
        assert!((v - expect).abs() <= 1e-10 * expect, "a = {a}: {v} vs {expect}");
    }
    let s3 = named::single(FactorSpec::new("round_sphere").param("dim", 3));
    let b1 = named::single(named::berger(1.0));
    let (vs, vb) = (s3.quadrature(1).unwrap().volume(), b1.quadrature(1).unwrap().volume());
    assert!((vs - vb).abs() <= 1e-10 * vs);
}
