//! Default tolerances for every check. Overridable per run by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Pair and block symmetries of the Riemann tensor, first Bianchi.
    pub riemann_symmetry: f64,
    /// Contracted second Bianchi identity.
    pub bianchi: f64,
    pub bach_trace: f64,
    /// Divergence of the Bach tensor (uses differences of jet values).
    pub bach_divergence: f64,
    /// `B(e^{2u} g) = e^{-2u} B(g)`.
    pub conformal_invariance: f64,
    /// Jet pipeline against the finite-difference oracle, relative.
    pub oracle_agreement: f64,
    /// Closed-form product components against the pipeline.
    pub product_formula: f64,
    pub soliton_residual: f64,
    /// The flat-factor gradient soliton on surface products.
    pub ho_residual: f64,
    pub pointwise_identity: f64,
    /// Relative to the largest term.
    pub integral_identity: f64,
    /// Required shrink factor of an integral imbalance when resolution doubles.
    pub integral_shrink: f64,
    /// Relative imbalance below which doubling can no longer show a shrink.
    pub roundoff_floor: f64,
    /// Sup of the trace-free part of `L_X g`.
    pub conformality: f64,
    /// Relative to `∫|S|`.
    pub kazdan_warner: f64,
    /// Spread of a quantity that must be constant.
    pub constancy: f64,
    /// `|Ric − (S/n) g|²` below which a metric counts as Einstein.
    pub einstein: f64,
    /// `|λ|` below which a sign law counts as vanishing.
    pub sign_zero: f64,
    pub volume_doubling: f64,
    pub volume_product: f64,
    pub root: f64,
    pub ode_rtol: f64,
    pub ode_s_range: f64,
    pub ode_closure_time: f64,
    pub ode_trajectory: f64,
    pub ode_cap: f64,
    /// Closure-time change when the integrator tolerance is halved.
    pub ode_halving: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            riemann_symmetry: 1e-9,
            bianchi: 1e-7,
            bach_trace: 1e-8,
            bach_divergence: 1e-6,
            conformal_invariance: 1e-6,
            oracle_agreement: 1e-6,
            product_formula: 1e-8,
            soliton_residual: 1e-7,
            ho_residual: 1e-9,
            pointwise_identity: 1e-7,
            integral_identity: 1e-7,
            integral_shrink: 10.0,
            roundoff_floor: 1e-12,
            conformality: 1e-9,
            kazdan_warner: 1e-7,
            constancy: 1e-8,
            einstein: 1e-10,
            sign_zero: 1e-9,
            volume_doubling: 1e-10,
            volume_product: 1e-9,
            root: 1e-12,
            ode_rtol: 1e-10,
            ode_s_range: 1e-5,
            ode_closure_time: 1e-6,
            ode_trajectory: 1e-7,
            ode_cap: 1e-4,
            ode_halving: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToleranceError {
    #[error("unknown tolerance '{0}'")]
    Unknown(String),
    #[error("tolerance '{name}' must be a positive number, got {value}")]
    NotPositive { name: String, value: f64 },
}

impl Tolerances {
    /// Name/value pairs sorted by name.
    pub fn entries(&self) -> BTreeMap<String, f64> {
        let v = serde_json::to_value(self).expect("plain struct");
        v.as_object()
            .expect("object")
            .iter()
            .map(|(k, x)| (k.clone(), x.as_f64().expect("number")))
            .collect()
    }

    pub fn with_override(&self, name: &str, value: f64) -> Result<Tolerances, ToleranceError> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ToleranceError::NotPositive {
                name: name.to_string(),
                value,
            });
        }
        let mut v = serde_json::to_value(self).expect("plain struct");
        let obj = v.as_object_mut().expect("object");
        match obj.get_mut(name) {
            Some(slot) => *slot = serde_json::json!(value),
            None => return Err(ToleranceError::Unknown(name.to_string())),
        }
        Ok(serde_json::from_value(v).expect("same shape"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let t = Tolerances::default();
        let u = t.with_override("bach_trace", 1e-3).unwrap();
        assert_eq!(u.bach_trace, 1e-3);
        assert_eq!(u.bianchi, t.bianchi);
        assert!(matches!(t.with_override("nope", 1.0), Err(ToleranceError::Unknown(_))));
        assert!(t.with_override("bianchi", -1.0).is_err());
        assert_eq!(t.entries().len(), 27);
    }
}
