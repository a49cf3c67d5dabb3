//! Structured execution plans proposed by the actor and the critic's
//! verdicts on them.
//!
//! Agent output is free text; parsing extracts the first JSON object and
//! validates it field by field so that errors name the exact path that is
//! wrong.

mod critique;
mod extract;
mod schema;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use critique::{
    parse_critique, parse_critique_detailed, BlockingIssue, Critique, Decision, Dimension,
    ParsedCritique,
};
pub use extract::extract_json_object;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no JSON object found in agent output")]
    NoJson,
    #[error("schema violation at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("dataflow violation at step {step}: {reason}")]
    Dataflow { step: usize, reason: String },
}

impl ParseError {
    pub(crate) fn schema(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ParseError::Schema {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolStep {
    pub objective: String,
    pub tool_name: String,
    pub arguments: BTreeMap<String, Value>,
    pub expected_result: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_binding: Option<String>,
}

impl ToolStep {
    /// Arguments whose value is a `$binding` reference, as (parameter, binding).
    pub fn references(&self) -> impl Iterator<Item = (&str, &str)> {
        self.arguments
            .iter()
            .filter_map(|(k, v)| binding_reference(v).map(|b| (k.as_str(), b)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub trajectory_summary: String,
    pub tool_plan: Vec<ToolStep>,
    pub risks: Vec<String>,
    #[serde(default)]
    pub revision: u32,
}

impl Trajectory {
    /// Canonical compact JSON: sorted keys, no whitespace.
    pub fn render(&self) -> String {
        let value = serde_json::to_value(self).expect("trajectory serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn render_pretty(&self) -> String {
        let value = serde_json::to_value(self).expect("trajectory serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    /// Structural invariants enforced by [`parse_trajectory`]; useful for
    /// plans built in code.
    pub fn check(&self) -> Result<(), ParseError> {
        let value = serde_json::to_value(self).expect("trajectory serializes");
        schema::trajectory_from_value(&value).map(|_| ())
    }
}

/// Binding name if `value` is a `$name` reference.
pub fn binding_reference(value: &Value) -> Option<&str> {
    value.as_str().and_then(|s| s.strip_prefix('$'))
}

/// Identifier rule for output bindings: ASCII letter or underscore, then
/// letters, digits or underscores.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Extracts and validates a trajectory from raw agent output.
pub fn parse_trajectory(raw: &str) -> Result<Trajectory, ParseError> {
    let value = extract_json_object(raw).ok_or(ParseError::NoJson)?;
    schema::trajectory_from_value(&value)
}
