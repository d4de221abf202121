//! Closed-form Bach components on products and the scalar relations they
//! imply, each evaluated from curvature of a single factor.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{CatalogError, Chart};
use crate::curvature::{norm_sq_sym2, CurvatureError};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProductError {
    #[error("{what} needs a {expected}-dimensional factor, got {got}")]
    FactorDim { what: &'static str, expected: usize, got: usize },
    #[error("{what} is not constant on the factor: spread {spread:e} exceeds {tol:e}")]
    NotConstant { what: &'static str, spread: f64, tol: f64 },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

type Result<T> = std::result::Result<T, ProductError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FactorRole {
    Line,
    ThreeManifold,
    SurfaceK,
    SurfaceL,
}

/// Curvature of one factor, computed with its own metric.
#[derive(Debug, Clone, Serialize)]
pub struct FactorCurvature {
    pub role: FactorRole,
    pub dim: usize,
    pub g: Tensor<f64>,
    pub ginv: Tensor<f64>,
    pub scalar: f64,
    pub ricci: Tensor<f64>,
    pub hess_scalar: Tensor<f64>,
    pub lap_scalar: f64,
    pub lap_ricci: Tensor<f64>,
    pub ricci_sq: Tensor<f64>,
    pub ricci_norm_sq: f64,
}

impl FactorCurvature {
    pub fn at(chart: &Chart, point: &[f64], role: FactorRole) -> Result<FactorCurvature> {
        let n = chart.dim();
        if n == 1 {
            return Ok(FactorCurvature {
                role,
                dim: 1,
                g: chart.metric_values(point)?,
                ginv: crate::curvature::invert_values(&chart.metric_values(point)?),
                scalar: 0.0,
                ricci: Tensor::zeros(1, 2),
                hess_scalar: Tensor::zeros(1, 2),
                lap_scalar: 0.0,
                lap_ricci: Tensor::zeros(1, 2),
                ricci_sq: Tensor::zeros(1, 2),
                ricci_norm_sq: 0.0,
            });
        }
        let pack = chart.curvature(point)?;
        Ok(FactorCurvature {
            role,
            dim: n,
            scalar: pack.scalar_value(),
            ricci: pack.ricci_value(),
            g: pack.g,
            ginv: pack.ginv,
            hess_scalar: pack.hess_scalar,
            lap_scalar: pack.lap_scalar,
            lap_ricci: pack.lap_ricci,
            ricci_sq: pack.ricci_sq,
            ricci_norm_sq: pack.ricci_norm_sq,
        })
    }

    fn require(&self, what: &'static str, dim: usize) -> Result<()> {
        if self.dim == dim {
            Ok(())
        } else {
            Err(ProductError::FactorDim {
                what,
                expected: dim,
                got: self.dim,
            })
        }
    }

    /// `|Ric − (S/n) g|²`
    pub fn einstein_residual(&self) -> f64 {
        let s = self.scalar / self.dim as f64;
        let t = self.ricci.zip_map(&self.g, |r, g| r - s * g);
        norm_sq_sym2(&t, &self.ginv)
    }
}

/// Bach components on `ℝ × N³` (or `S¹ × N³`); the line direction is `t`.
#[derive(Debug, Clone, Serialize)]
pub struct LineCross3Bach {
    pub b_tt: f64,
    pub b_ty: [f64; 3],
    pub b_yz: Tensor<f64>,
}

impl LineCross3Bach {
    /// Assemble as a 4-tensor with `t` first.
    pub fn assemble(&self) -> Tensor<f64> {
        Tensor::from_fn(4, 2, |ix| match (ix[0], ix[1]) {
            (0, 0) => self.b_tt,
            (0, j) | (j, 0) => self.b_ty[j - 1],
            (i, j) => self.b_yz.at(&[i - 1, j - 1]),
        })
    }

    /// `B_tt + tr_N B_YZ` for a unit-speed line.
    pub fn trace(&self, ginv_n: &Tensor<f64>) -> f64 {
        self.b_tt + crate::curvature::trace_values(&self.b_yz, ginv_n)
    }
}

pub fn bach_line_cross_3(fc: &FactorCurvature) -> Result<LineCross3Bach> {
    fc.require("line-cross-3 Bach formula", 3)?;
    let (s, lap, nr) = (fc.scalar, fc.lap_scalar, fc.ricci_norm_sq);
    let b_tt = -lap / 12.0 - 0.25 * (nr - s * s / 3.0);
    let coef = -lap / 12.0 + 0.75 * nr - 5.0 / 12.0 * s * s;
    let b_yz = Tensor::from_fn(3, 2, |ix| {
        0.5 * fc.lap_ricci.at(ix) - fc.hess_scalar.at(ix) / 6.0 - 2.0 * fc.ricci_sq.at(ix)
            + 7.0 / 6.0 * s * fc.ricci.at(ix)
            + coef * fc.g.at(ix)
    });
    Ok(LineCross3Bach {
        b_tt,
        b_ty: [0.0; 3],
        b_yz,
    })
}

/// Bach components on `K² × L²` as the closed-form display gives them.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceBach {
    pub b_k: Tensor<f64>,
    pub b_l: Tensor<f64>,
}

impl SurfaceBach {
    pub fn assemble(&self) -> Tensor<f64> {
        Tensor::from_fn(4, 2, |ix| match (ix[0] < 2, ix[1] < 2) {
            (true, true) => self.b_k.at(ix),
            (false, false) => self.b_l.at(&[ix[0] - 2, ix[1] - 2]),
            _ => 0.0,
        })
    }

    pub fn scaled(&self, c: f64) -> SurfaceBach {
        SurfaceBach {
            b_k: self.b_k.scale(c),
            b_l: self.b_l.scale(c),
        }
    }

    pub fn trace(&self, ginv_k: &Tensor<f64>, ginv_l: &Tensor<f64>) -> f64 {
        crate::curvature::trace_values(&self.b_k, ginv_k) + crate::curvature::trace_values(&self.b_l, ginv_l)
    }
}

fn surface_block(a: &FactorCurvature, b: &FactorCurvature) -> Tensor<f64> {
    let c = a.lap_scalar - 0.5 * b.lap_scalar + 0.25 * (a.scalar * a.scalar - b.scalar * b.scalar);
    Tensor::from_fn(2, 2, |ix| a.hess_scalar.at(ix) / 3.0 - c / 3.0 * a.g.at(ix))
}

/// The display for `K² × L²`. With the Bach tensor fixed by the line-cross-3
/// formula this display equals `−2 B`; see [`surface_product_standard`].
pub fn bach_surface_product(k: &FactorCurvature, l: &FactorCurvature) -> Result<SurfaceBach> {
    k.require("surface-product Bach formula (K)", 2)?;
    l.require("surface-product Bach formula (L)", 2)?;
    Ok(SurfaceBach {
        b_k: surface_block(k, l),
        b_l: surface_block(l, k),
    })
}

/// `−½` times the display, in the normalization used by the pipeline.
pub fn surface_product_standard(k: &FactorCurvature, l: &FactorCurvature) -> Result<SurfaceBach> {
    Ok(bach_surface_product(k, l)?.scaled(-0.5))
}

/// `λ = (|Ric_N|² − S_N²/3)/8` on `S¹ × N³`.
pub fn s1n3_lambda(fc: &FactorCurvature) -> Result<f64> {
    fc.require("S¹×N³ soliton constant", 3)?;
    Ok((fc.ricci_norm_sq - fc.scalar * fc.scalar / 3.0) / 8.0)
}

/// `λ = −(|Ric_N|² − S_N²/3)/24` on `ℝ × N³`.
pub fn rn3_lambda(fc: &FactorCurvature) -> Result<f64> {
    fc.require("ℝ×N³ soliton constant", 3)?;
    Ok(-(fc.ricci_norm_sq - fc.scalar * fc.scalar / 3.0) / 24.0)
}

/// `(1/8)ΔS − ((1/8)|Ric|² − (1/24)S² + 3λ)` with `λ` from [`rn3_lambda`].
pub fn rn3_trace_residual(fc: &FactorCurvature) -> Result<f64> {
    let lambda = rn3_lambda(fc)?;
    let s = fc.scalar;
    Ok(fc.lap_scalar / 8.0 - (fc.ricci_norm_sq / 8.0 - s * s / 24.0 + 3.0 * lambda))
}

/// `(1/4)ΔRic − Ric² + (7/12) S Ric + (1/3)(|Ric|² − (7/12) S²) g`
pub fn line_soliton_condition(fc: &FactorCurvature) -> Result<Tensor<f64>> {
    fc.require("three-manifold line-soliton condition", 3)?;
    let s = fc.scalar;
    let coef = (fc.ricci_norm_sq - 7.0 / 12.0 * s * s) / 3.0;
    Ok(Tensor::from_fn(3, 2, |ix| {
        0.25 * fc.lap_ricci.at(ix) - fc.ricci_sq.at(ix) + 7.0 / 12.0 * s * fc.ricci.at(ix) + coef * fc.g.at(ix)
    }))
}

/// `c = ΔS + S²/3` on a surface.
pub fn surface_c_invariant(fc: &FactorCurvature) -> Result<f64> {
    fc.require("surface invariant c", 2)?;
    Ok(fc.lap_scalar + fc.scalar * fc.scalar / 3.0)
}

/// Minimum and maximum of a scalar over points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Spread {
        values.into_iter().fold(
            Spread {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |s, v| Spread {
                min: s.min.min(v),
                max: s.max.max(v),
            },
        )
    }

    pub fn width(&self) -> f64 {
        if self.max >= self.min {
            self.max - self.min
        } else {
            0.0
        }
    }
}

/// Spread of `c` over points of a surface chart.
pub fn surface_c_spread(chart: &Chart, points: &[Vec<f64>]) -> Result<Spread> {
    let vals = points
        .iter()
        .map(|p| surface_c_invariant(&FactorCurvature::at(chart, p, FactorRole::SurfaceL)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spread::of(vals))
}

/// Spreads of `S` and `|Ric|²` over points of a 3-dimensional chart.
pub fn three_manifold_invariants(chart: &Chart, points: &[Vec<f64>]) -> Result<(Spread, Spread)> {
    let fcs = points
        .iter()
        .map(|p| FactorCurvature::at(chart, p, FactorRole::ThreeManifold))
        .collect::<Result<Vec<_>>>()?;
    if let Some(fc) = fcs.first() {
        fc.require("three-manifold invariants", 3)?;
    }
    Ok((
        Spread::of(fcs.iter().map(|f| f.scalar)),
        Spread::of(fcs.iter().map(|f| f.ricci_norm_sq)),
    ))
}

/// [`rn3_lambda`] after checking that `S` and `|Ric|²` are constant.
pub fn rn3_lambda_checked(chart: &Chart, points: &[Vec<f64>], tol: f64) -> Result<f64> {
    let (s, r) = three_manifold_invariants(chart, points)?;
    for (what, sp) in [("scalar curvature", s), ("|Ric|²", r)] {
        let scale = sp.max.abs().max(sp.min.abs()).max(1.0);
        if sp.width() > tol * scale {
            return Err(ProductError::NotConstant {
                what,
                spread: sp.width(),
                tol: tol * scale,
            });
        }
    }
    rn3_lambda(&FactorCurvature::at(chart, &points[0], FactorRole::ThreeManifold)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::named::*;
    use crate::catalog::FactorSpec;

    fn fc(chart: &Chart, p: &[f64], role: FactorRole) -> FactorCurvature {
        FactorCurvature::at(chart, p, role).unwrap()
    }

    #[test]
    fn round_three_sphere_line_cross() {
        let s3 = single(sphere(3, 1.0));
        let f = fc(&s3, &[0.4, 1.2, 2.0], FactorRole::ThreeManifold);
        assert!((f.scalar - 6.0).abs() < 1e-10);
        let b = bach_line_cross_3(&f).unwrap();
        assert!(b.b_tt.abs() < 1e-9);
        assert!(b.b_yz.max_abs() < 1e-8);
        assert!(s1n3_lambda(&f).unwrap().abs() < 1e-9);
        assert!(rn3_lambda(&f).unwrap().abs() < 1e-9);
        assert!(line_soliton_condition(&f).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn flat_torus_is_zero() {
        let t = single(torus(&[1.0, 2.0, 3.0]));
        let f = fc(&t, &[0.1, 0.2, 0.3], FactorRole::ThreeManifold);
        assert_eq!(bach_line_cross_3(&f).unwrap().assemble().max_abs(), 0.0);
        assert_eq!(s1n3_lambda(&f).unwrap(), 0.0);
    }

    #[test]
    fn line_cross_formula_matches_pipeline_on_berger() {
        for a in [0.6, 1.3] {
            let n = single(berger(a));
            let prod = product("rxb", vec![FactorSpec::new("line"), berger(a)]);
            let p = [0.2, 0.5, 1.1, 2.3];
            let f = fc(&n, &p[1..], FactorRole::ThreeManifold);
            let closed = bach_line_cross_3(&f).unwrap().assemble();
            let pipe = prod.curvature(&p).unwrap().bach.unwrap();
            let scale = pipe.max_abs().max(1.0);
            assert!(closed.max_abs_diff(&pipe) < 1e-8 * scale, "{closed:?} {pipe:?}");
            assert!(bach_line_cross_3(&f).unwrap().trace(&f.ginv).abs() < 1e-9);
        }
    }

    #[test]
    fn surface_products() {
        let s2 = single(sphere(2, 1.0));
        let r2 = single(plane());
        let h2 = single(FactorSpec::new("hyperbolic_2"));
        let k = fc(&s2, &[1.0, 0.3], FactorRole::SurfaceK);
        let l = fc(&r2, &[0.1, 0.2], FactorRole::SurfaceL);
        let b = bach_surface_product(&k, &l).unwrap();
        assert!((b.b_k.at(&[0, 0]) + 1.0 / 3.0).abs() < 1e-10);
        assert!((b.b_l.at(&[1, 1]) - 1.0 / 3.0).abs() < 1e-10);
        assert!(b.trace(&k.ginv, &l.ginv).abs() < 1e-10);
        let kk = bach_surface_product(&k, &k).unwrap();
        assert!(kk.assemble().max_abs() < 1e-10);
        let hl = fc(&h2, &[0.1, 1.2], FactorRole::SurfaceL);
        assert!(bach_surface_product(&k, &hl).unwrap().assemble().max_abs() < 1e-9);
    }

    #[test]
    fn berger_sign_laws_and_invariants() {
        for a in [0.5, 0.8, 1.5] {
            let n = single(berger(a));
            let f = fc(&n, &[0.3, 1.0, 0.7], FactorRole::ThreeManifold);
            let a2 = a * a;
            assert!((f.ricci_norm_sq - (4.0 * a2 * a2 + 2.0 * (4.0 - 2.0 * a2).powi(2))).abs() < 1e-9);
            assert!(s1n3_lambda(&f).unwrap() > 0.0);
            assert!(rn3_lambda(&f).unwrap() < 0.0);
            assert!(rn3_trace_residual(&f).unwrap().abs() < 1e-9);
            let pts = n.sample_points(20, 3);
            let lam = rn3_lambda_checked(&n, &pts, 1e-8).unwrap();
            assert!((lam - rn3_lambda(&f).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn c_invariant() {
        let s2 = single(sphere(2, 1.0));
        let f = fc(&s2, &[0.9, 0.1], FactorRole::SurfaceL);
        assert!((surface_c_invariant(&f).unwrap() - 4.0 / 3.0).abs() < 1e-10);
        let cs = single(conformal_sphere("0.2*cos(theta)"));
        let sp = surface_c_spread(&cs, &cs.sample_points(30, 2)).unwrap();
        assert!(sp.width() > 0.1);
    }

    #[test]
    fn dimension_errors() {
        let s2 = single(sphere(2, 1.0));
        let f = fc(&s2, &[0.9, 0.1], FactorRole::SurfaceL);
        assert!(matches!(bach_line_cross_3(&f), Err(ProductError::FactorDim { .. })));
        assert!(matches!(line_soliton_condition(&f), Err(ProductError::FactorDim { .. })));
        let cs = single(conformal_sphere("0.2*cos(theta)"));
        assert!(three_manifold_invariants(&cs, &cs.sample_points(3, 1)).is_err());
    }
}
