use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ToolDescriptor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Integer,
    Real,
    Boolean,
    String,
    Enum,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Integer => "integer",
            ParamKind::Real => "real",
            ParamKind::Boolean => "boolean",
            ParamKind::String => "string",
            ParamKind::Enum => "enum",
        })
    }
}

/// Inclusive numeric bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSpec {
    pub name: String,
    pub kind: ParamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<Vec<String>>,
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
    pub description: String,
}

impl ParameterSpec {
    /// Structural invariants; the error names the broken rule.
    pub(crate) fn check(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("empty parameter name".into());
        }
        if self.range.is_some() && self.allowed_values.is_some() {
            return Err("both range and allowed_values present".into());
        }
        if let Some(range) = self.range {
            if !matches!(self.kind, ParamKind::Integer | ParamKind::Real) {
                return Err(format!("range on non-numeric {} parameter", self.kind));
            }
            if range.min.is_nan() || range.max.is_nan() || range.min > range.max {
                return Err(format!("range min {} exceeds max {}", range.min, range.max));
            }
        }
        match (&self.kind, &self.allowed_values) {
            (ParamKind::Enum, None) => return Err("enum parameter without allowed_values".into()),
            (ParamKind::Enum, Some(v)) if v.is_empty() => {
                return Err("enum parameter with empty allowed_values".into())
            }
            (ParamKind::Enum, _) | (_, None) => {}
            (kind, Some(_)) => return Err(format!("allowed_values on {kind} parameter")),
        }
        if let Some(default) = &self.default {
            if self.required {
                return Err("required parameter with a default".into());
            }
            if let Some(issue) = self.check_value(default) {
                return Err(format!("default {default} fails its own constraint: {}", issue.1));
            }
        }
        Ok(())
    }

    /// Human-readable constraint, used in issues and documentation.
    pub fn constraint(&self) -> String {
        if let Some(r) = self.range {
            format!("{} in {r}", self.kind)
        } else if let Some(values) = &self.allowed_values {
            format!("one of {}", values.join("|"))
        } else if self.kind == ParamKind::String {
            "non-empty string".into()
        } else {
            self.kind.to_string()
        }
    }

    fn check_value(&self, value: &Value) -> Option<(ArgIssueKind, String)> {
        let mismatch = || Some((ArgIssueKind::TypeMismatch, format!("expected {}", self.kind)));
        let numeric = match self.kind {
            ParamKind::Integer => {
                if !(value.is_i64() || value.is_u64()) {
                    return mismatch();
                }
                value.as_f64()
            }
            ParamKind::Real => {
                if !value.is_number() {
                    return mismatch();
                }
                value.as_f64()
            }
            ParamKind::Boolean => {
                return (!value.is_boolean()).then(mismatch).flatten();
            }
            ParamKind::String => {
                return match value.as_str() {
                    None => mismatch(),
                    Some(s) if s.trim().is_empty() => {
                        Some((ArgIssueKind::OutOfRange, "non-empty string".into()))
                    }
                    Some(_) => None,
                };
            }
            ParamKind::Enum => {
                let Some(s) = value.as_str() else {
                    return mismatch();
                };
                let allowed = self.allowed_values.as_deref().unwrap_or_default();
                return (!allowed.iter().any(|a| a == s))
                    .then(|| (ArgIssueKind::OutOfRange, self.constraint()));
            }
        };
        match (numeric, self.range) {
            (Some(v), Some(r)) if !(r.min <= v && v <= r.max) => {
                Some((ArgIssueKind::OutOfRange, r.to_string()))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgIssueKind {
    Missing,
    Unknown,
    TypeMismatch,
    OutOfRange,
}

impl fmt::Display for ArgIssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArgIssueKind::Missing => "missing",
            ArgIssueKind::Unknown => "unknown",
            ArgIssueKind::TypeMismatch => "type-mismatch",
            ArgIssueKind::OutOfRange => "out-of-range",
        })
    }
}

/// One argument problem: which parameter, what went wrong, and the
/// constraint it violated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgIssue {
    pub parameter: String,
    pub kind: ArgIssueKind,
    pub constraint: String,
}

impl fmt::Display for ArgIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} parameter `{}` ({})", self.kind, self.parameter, self.constraint)
    }
}

/// Empty iff every required parameter is present, nothing unknown is
/// passed and every value fits its kind and range. Issues come in parameter
/// declaration order, followed by unknown arguments in name order.
pub fn validate_arguments(tool: &ToolDescriptor, args: &BTreeMap<String, Value>) -> Vec<ArgIssue> {
    let mut issues = Vec::new();
    for spec in &tool.parameters {
        match args.get(&spec.name) {
            None if spec.required => issues.push(ArgIssue {
                parameter: spec.name.clone(),
                kind: ArgIssueKind::Missing,
                constraint: "required".into(),
            }),
            None => {}
            Some(value) => {
                if let Some((kind, constraint)) = spec.check_value(value) {
                    issues.push(ArgIssue {
                        parameter: spec.name.clone(),
                        kind,
                        constraint,
                    });
                }
            }
        }
    }
    for name in args.keys() {
        if tool.parameter(name).is_none() {
            issues.push(ArgIssue {
                parameter: name.clone(),
                kind: ArgIssueKind::Unknown,
                constraint: format!("not a parameter of {}", tool.tool_name),
            });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Registry;
    use serde_json::json;

    fn args(v: Value) -> BTreeMap<String, Value> {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn out_of_range_fill_probability() {
        let r = Registry::bundled();
        let tool = r.get("gen_cellular_automata").unwrap();
        let issues = validate_arguments(tool, &args(json!({"fill_probability": 1.5})));
        assert_eq!(
            issues,
            vec![ArgIssue {
                parameter: "fill_probability".into(),
                kind: ArgIssueKind::OutOfRange,
                constraint: "[0, 1]".into()
            }]
        );
    }

    #[test]
    fn all_optional_tool_accepts_empty_args() {
        let r = Registry::bundled();
        let tool = r.get("gen_noise_region").unwrap();
        assert!(tool.parameters.iter().all(|p| !p.required));
        assert!(validate_arguments(tool, &BTreeMap::new()).is_empty());
    }

    #[test]
    fn unknown_argument() {
        let r = Registry::bundled();
        let tool = r.get("gen_noise_region").unwrap();
        let issues = validate_arguments(tool, &args(json!({"colour": "red"})));
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, ArgIssueKind::Unknown);
        assert_eq!(issues[0].parameter, "colour");
    }

    #[test]
    fn missing_and_type_mismatch() {
        let r = Registry::bundled();
        let tool = r.get("mod_morph").unwrap();
        let issues = validate_arguments(tool, &args(json!({"op": "erode", "radius": 1.5})));
        let kinds: Vec<_> = issues.iter().map(|i| (i.parameter.as_str(), i.kind)).collect();
        assert_eq!(
            kinds,
            vec![("grid", ArgIssueKind::Missing), ("radius", ArgIssueKind::TypeMismatch)]
        );
        let issues = validate_arguments(tool, &args(json!({"grid": "$g", "op": "melt"})));
        assert_eq!(issues[0].kind, ArgIssueKind::OutOfRange);
        assert_eq!(issues[0].constraint, "one of erode|dilate");
    }

    #[test]
    fn integers_reject_fractions_but_reals_accept_integers() {
        let r = Registry::bundled();
        let ca = r.get("gen_cellular_automata").unwrap();
        assert!(validate_arguments(ca, &args(json!({"fill_probability": 1}))).is_empty());
        let issues = validate_arguments(ca, &args(json!({"iterations": -1})));
        assert_eq!(issues[0].kind, ArgIssueKind::OutOfRange);
        assert_eq!(issues[0].constraint, "[0, 50]");
        let issues = validate_arguments(ca, &args(json!({"iterations": 2.0})));
        assert_eq!(issues[0].kind, ArgIssueKind::TypeMismatch);
    }

    #[test]
    fn empty_strings_rejected() {
        let r = Registry::bundled();
        let tool = r.get("add_layer").unwrap();
        let issues = validate_arguments(
            tool,
            &args(json!({"grid": "$g", "name": " ", "height_index": 0})),
        );
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].parameter, "name");
    }
}
