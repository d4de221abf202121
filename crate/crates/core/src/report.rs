//! Machine-readable check records and reports.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// How `value` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value − expected| ≤ tolerance`
    Within,
    /// `value ≤ expected + tolerance`
    AtMost,
    /// `value ≥ expected − tolerance`
    AtLeast,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check_id: String,
    pub anchor: String,
    pub inputs_digest: String,
    pub value: f64,
    pub expected: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
    /// Informational checks are reported but never counted as failures.
    pub informational: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// SHA-256 of the compact JSON encoding of `inputs`.
pub fn digest(inputs: &Value) -> String {
    let bytes = serde_json::to_vec(inputs).expect("json");
    hex::encode(Sha256::digest(&bytes))
}

impl Check {
    pub fn new(
        id: impl Into<String>,
        anchor: impl Into<String>,
        inputs: &Value,
        value: f64,
        relation: Relation,
        expected: f64,
        tolerance: f64,
    ) -> Check {
        let pass = match relation {
            Relation::Within => (value - expected).abs() <= tolerance,
            Relation::AtMost => value <= expected + tolerance,
            Relation::AtLeast => value >= expected - tolerance,
        };
        Check {
            check_id: id.into(),
            anchor: anchor.into(),
            inputs_digest: digest(inputs),
            value,
            expected,
            relation,
            tolerance,
            pass,
            informational: false,
            note: None,
        }
    }

    /// `value ≤ tolerance` for a non-negative residual.
    pub fn residual(id: impl Into<String>, anchor: impl Into<String>, inputs: &Value, value: f64, tolerance: f64) -> Check {
        Check::new(id, anchor, inputs, value, Relation::AtMost, 0.0, tolerance)
    }

    /// A yes/no outcome recorded as 1 or 0.
    pub fn flag(id: impl Into<String>, anchor: impl Into<String>, inputs: &Value, ok: bool) -> Check {
        Check::new(id, anchor, inputs, if ok { 1.0 } else { 0.0 }, Relation::Within, 1.0, 0.0)
    }

    pub fn informational(mut self) -> Check {
        self.informational = true;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }

    pub fn failed(&self) -> bool {
        !self.pass && !self.informational
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub informational: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: Value, checks: Vec<Check>) -> Report {
        let informational = checks.iter().filter(|c| c.informational).count();
        let failed = checks.iter().filter(|c| c.failed()).count();
        Report {
            tool: "bachcheck".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            summary: Summary {
                total: checks.len(),
                passed: checks.len() - informational - failed,
                failed,
                informational,
            },
            checks,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("json");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn relations_and_summary() {
        let i = json!({"a": 1});
        assert!(Check::new("w", "x", &i, 1.05, Relation::Within, 1.0, 0.1).pass);
        assert!(!Check::new("m", "x", &i, 2.0, Relation::AtMost, 1.0, 0.5).pass);
        assert!(Check::new("l", "x", &i, -1e-12, Relation::AtLeast, 0.0, 1e-10).pass);
        assert!(!Check::residual("nan", "x", &i, f64::NAN, 1.0).pass);
        let bad = Check::residual("b", "x", &i, 3.0, 1.0);
        let r = Report::new(json!({}), vec![bad.clone(), bad.informational(), Check::flag("f", "x", &i, true)]);
        assert_eq!(
            r.summary,
            Summary {
                total: 3,
                passed: 1,
                failed: 1,
                informational: 1
            }
        );
        assert!(!r.all_passed());
    }

    #[test]
    fn digest_is_stable() {
        let d = digest(&json!({"x": [1, 2], "y": "z"}));
        assert_eq!(d.len(), 64);
        assert_eq!(d, digest(&json!({"y": "z", "x": [1, 2]})));
    }
}
