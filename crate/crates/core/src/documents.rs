//! JSON input documents: manifold references, soliton cases and identity
//! cases. Unknown fields are rejected everywhere.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{self, CatalogError, Chart, ManifoldSpec};
use crate::expr::Expr;
use crate::soliton::{Field, QSelector, Scale, SolitonData};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

type Result<T> = std::result::Result<T, DocumentError>;

/// A catalog name or an inline manifold spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifoldRef {
    Named(String),
    Spec(ManifoldSpec),
}

impl ManifoldRef {
    pub fn spec(&self) -> Result<ManifoldSpec> {
        match self {
            ManifoldRef::Named(n) => Ok(catalog::lookup(n)?.spec),
            ManifoldRef::Spec(s) => Ok(s.clone()),
        }
    }

    pub fn build(&self) -> Result<Chart> {
        Ok(catalog::build(&self.spec()?)?)
    }
}

fn parse_all(chart: &Chart, es: &[String]) -> Result<Vec<Expr>> {
    Ok(es.iter().map(|e| chart.parse(e)).collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QChoice {
    BachFlow,
    Bach,
    Ricci,
    Constructed,
    Zero,
    Custom(Vec<String>),
}

fn default_q() -> QChoice {
    QChoice::BachFlow
}

/// `½ L_X g = ½ q + φ g` data on a manifold.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonCase {
    pub manifold: ManifoldRef,
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default = "default_q")]
    pub q: QChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl SolitonCase {
    pub fn from_json(text: &str) -> Result<SolitonCase> {
        Ok(serde_json::from_str(text)?)
    }

    /// Build the chart and the parsed soliton data.
    pub fn resolve(&self) -> Result<(Chart, SolitonData)> {
        let chart = self.manifold.build()?;
        let field = match (&self.x, &self.f) {
            (Some(_), Some(_)) => return Err(DocumentError::Invalid("give either X or f, not both".into())),
            (Some(x), None) => Field::Vector(parse_all(&chart, x)?),
            (None, Some(f)) => Field::Potential(chart.parse(f)?),
            (None, None) => Field::Zero,
        };
        let scale = match (&self.phi, self.lambda) {
            (Some(_), Some(_)) => return Err(DocumentError::Invalid("give either phi or lambda, not both".into())),
            (Some(p), None) => Scale::Function(chart.parse(p)?),
            (None, l) => Scale::Constant(l.unwrap_or(0.0)),
        };
        let q = match &self.q {
            QChoice::BachFlow => QSelector::BachFlow,
            QChoice::Bach => QSelector::Bach,
            QChoice::Ricci => QSelector::Ricci,
            QChoice::Constructed => QSelector::Constructed,
            QChoice::Zero => QSelector::Zero,
            QChoice::Custom(es) => QSelector::Custom(parse_all(&chart, es)?),
        };
        Ok((chart, SolitonData { field, scale, q }))
    }
}

/// Identities the verifier knows by id.
pub const IDENTITY_IDS: [&str; 7] = [
    "lie-pairing",
    "soliton-integrals",
    "yano",
    "conformal-integral",
    "trace-free-integral",
    "bochner",
    "surface-rigidity",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceChoice {
    Ricci,
    ScalarMetric,
}

/// Inputs for one identity check. Which fields are used depends on the id.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCase {
    pub manifold: ManifoldRef,
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    /// Symmetric tensor, row major.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<TraceChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

impl IdentityCase {
    pub fn from_json(text: &str) -> Result<IdentityCase> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn field(&self, chart: &Chart) -> Result<Vec<Expr>> {
        parse_all(chart, self.x.as_ref().ok_or_else(|| missing("X"))?)
    }

    pub fn phi(&self, chart: &Chart) -> Result<Expr> {
        Ok(chart.parse(self.phi.as_deref().unwrap_or("0"))?)
    }

    pub fn tensor(&self, chart: &Chart) -> Result<Vec<Expr>> {
        parse_all(chart, self.t.as_ref().ok_or_else(|| missing("T"))?)
    }

    pub fn function(&self, chart: &Chart) -> Result<Expr> {
        Ok(chart.parse(self.h.as_deref().ok_or_else(|| missing("h"))?)?)
    }
}

fn missing(field: &str) -> DocumentError {
    DocumentError::Invalid(format!("identity case needs field '{field}'"))
}

fn sphere_case(x: &[&str]) -> IdentityCase {
    IdentityCase {
        manifold: ManifoldRef::Named("round_sphere".into()),
        x: Some(x.iter().map(|s| s.to_string()).collect()),
        phi: None,
        t: None,
        h: None,
        q: None,
        points: None,
    }
}

/// Built-in case used when no case document is given.
pub fn default_identity_case(id: &str) -> Result<IdentityCase> {
    let conformal = || {
        ManifoldRef::Spec(ManifoldSpec::single(
            "conformal_sphere",
            catalog::named::conformal_sphere("0.2*cos(theta)"),
        ))
    };
    let c = match id {
        "lie-pairing" => IdentityCase {
            t: Some(vec![
                "cos(phi)".into(),
                "sin(theta)".into(),
                "sin(theta)".into(),
                "cos(theta)^2".into(),
            ]),
            ..sphere_case(&["cos(theta)*cos(phi)", "-sin(phi)/sin(theta) + 0.3"])
        },
        "soliton-integrals" | "trace-free-integral" => IdentityCase {
            phi: Some("0.3*cos(theta)".into()),
            ..sphere_case(&["-sin(theta)", "0"])
        },
        "yano" | "conformal-integral" => IdentityCase {
            manifold: conformal(),
            q: Some(TraceChoice::Ricci),
            ..sphere_case(&["-sin(theta)", "0"])
        },
        "bochner" => IdentityCase {
            manifold: conformal(),
            x: None,
            h: Some("sin(theta)*cos(phi) + cos(theta)^2".into()),
            ..sphere_case(&[])
        },
        "surface-rigidity" => IdentityCase {
            x: None,
            ..sphere_case(&[])
        },
        other => {
            return Err(DocumentError::Invalid(format!(
                "unknown identity id '{other}' (known: {})",
                IDENTITY_IDS.join(", ")
            )))
        }
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soliton_case_round_trip() {
        let text = r#"{"manifold": "r2_x_s2", "f": "(x^2 + y^2)/6", "lambda": 0.1666, "q": "bach_flow"}"#;
        let c = SolitonCase::from_json(text).unwrap();
        let (chart, sd) = c.resolve().unwrap();
        assert_eq!(chart.dim(), 4);
        assert!(sd.is_gradient());
        let back = serde_json::to_string(&c).unwrap();
        assert!(SolitonCase::from_json(&back).is_ok());
        let custom = r#"{"manifold": {"name": "s2", "factors": [{"kind": "round_sphere"}]},
            "X": ["0", "1"], "phi": "0", "q": {"custom": ["0", "0", "0", "0"]}}"#;
        let (_, sd) = SolitonCase::from_json(custom).unwrap().resolve().unwrap();
        assert!(sd.is_extended());
    }

    #[test]
    fn rejects_unknown_and_conflicting_fields() {
        assert!(SolitonCase::from_json(r#"{"manifold": "r2_x_s2", "lamda": 1}"#).is_err());
        let both = SolitonCase::from_json(r#"{"manifold": "r2_x_s2", "f": "x", "X": ["0","0","0","0"]}"#).unwrap();
        assert!(matches!(both.resolve(), Err(DocumentError::Invalid(_))));
        let unknown = SolitonCase::from_json(r#"{"manifold": "no_such"}"#).unwrap();
        assert!(matches!(unknown.resolve(), Err(DocumentError::Catalog(_))));
        assert!(IdentityCase::from_json(r#"{"manifold": "round_sphere", "Y": []}"#).is_err());
    }

    #[test]
    fn default_cases_resolve() {
        for id in IDENTITY_IDS {
            let c = default_identity_case(id).unwrap();
            let chart = c.manifold.build().unwrap();
            if let Some(x) = &c.x {
                assert_eq!(parse_all(&chart, x).unwrap().len(), chart.dim());
            }
        }
        assert!(default_identity_case("no-such-identity").is_err());
    }
}
