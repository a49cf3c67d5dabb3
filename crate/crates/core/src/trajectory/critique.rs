use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::extract::extract_json_object;
use super::schema::{field, object, optional, reject_unknown, string_list, text};
use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Approve,
    Revise,
}

/// Review dimension a blocking issue belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    ToolSelection,
    ParameterCorrectness,
    LogicSequence,
    GoalAlignment,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::ToolSelection,
        Dimension::ParameterCorrectness,
        Dimension::LogicSequence,
        Dimension::GoalAlignment,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::ToolSelection => "tool_selection",
            Dimension::ParameterCorrectness => "parameter_correctness",
            Dimension::LogicSequence => "logic_sequence",
            Dimension::GoalAlignment => "goal_alignment",
        }
    }

    fn parse(s: &str) -> Option<Dimension> {
        Dimension::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockingIssue {
    /// Offending step, or `None` for plan-wide issues.
    pub step_index: Option<usize>,
    pub dimension: Dimension,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction_suggestion: Option<String>,
}

/// A verdict on a trajectory. The decision is `approve` exactly when there
/// are no blocking issues; construction enforces this.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CritiqueRepr")]
pub struct Critique {
    decision: Decision,
    blocking_issues: Vec<BlockingIssue>,
    missing_information: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CritiqueRepr {
    decision: Decision,
    blocking_issues: Vec<BlockingIssue>,
    #[serde(default)]
    missing_information: Vec<String>,
}

impl TryFrom<CritiqueRepr> for Critique {
    type Error = String;

    fn try_from(r: CritiqueRepr) -> Result<Self, Self::Error> {
        let c = Critique::new(r.blocking_issues, r.missing_information);
        if c.decision != r.decision {
            return Err(format!(
                "decision {:?} inconsistent with {} blocking issues",
                r.decision,
                c.blocking_issues.len()
            ));
        }
        Ok(c)
    }
}

impl Critique {
    pub fn approve() -> Critique {
        Critique::new(Vec::new(), Vec::new())
    }

    /// Decision follows from `issues`; issues are stably ordered by step,
    /// plan-wide issues last.
    pub fn new(mut issues: Vec<BlockingIssue>, missing_information: Vec<String>) -> Critique {
        issues.sort_by_key(|i| i.step_index.unwrap_or(usize::MAX));
        Critique {
            decision: if issues.is_empty() {
                Decision::Approve
            } else {
                Decision::Revise
            },
            blocking_issues: issues,
            missing_information,
        }
    }

    pub fn decision(&self) -> Decision {
        self.decision
    }

    pub fn is_approved(&self) -> bool {
        self.decision == Decision::Approve
    }

    pub fn blocking_issues(&self) -> &[BlockingIssue] {
        &self.blocking_issues
    }

    pub fn missing_information(&self) -> &[String] {
        &self.missing_information
    }

    /// Canonical compact JSON for the actor's context.
    pub fn render(&self) -> String {
        let value = serde_json::to_value(self).expect("critique serializes");
        serde_json::to_string(&value).expect("value serializes")
    }
}

/// A parsed critique plus any normalizations applied to the raw output.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCritique {
    pub critique: Critique,
    pub warnings: Vec<String>,
}

pub fn parse_critique(raw: &str) -> Result<Critique, ParseError> {
    parse_critique_detailed(raw, None).map(|p| p.critique)
}

/// Parses a critique. With `plan_len`, step indices must address a step of
/// the reviewed plan.
///
/// `approve` with blocking issues is normalized to `revise`. `revise` with
/// only missing information turns each item into a plan-wide goal-alignment
/// issue; `revise` with nothing at all is rejected.
pub fn parse_critique_detailed(
    raw: &str,
    plan_len: Option<usize>,
) -> Result<ParsedCritique, ParseError> {
    let value = extract_json_object(raw).ok_or(ParseError::NoJson)?;
    let root = object(&value, "$")?;
    reject_unknown(root, "$", &["decision", "blocking_issues", "missing_information"])?;
    let decision = match field(root, "$", "decision")?.as_str() {
        Some("approve") => Decision::Approve,
        Some("revise") => Decision::Revise,
        _ => return Err(ParseError::schema("$.decision", "expected \"approve\" or \"revise\"")),
    };
    let issues_value = field(root, "$", "blocking_issues")?
        .as_array()
        .ok_or_else(|| ParseError::schema("$.blocking_issues", "expected array"))?;
    let mut issues = issues_value
        .iter()
        .enumerate()
        .map(|(i, v)| issue_from_value(v, &format!("$.blocking_issues[{i}]"), plan_len))
        .collect::<Result<Vec<_>, _>>()?;
    let missing = match optional(root, "missing_information") {
        None => Vec::new(),
        Some(v) => string_list(v, "$.missing_information")?,
    };

    let mut warnings = Vec::new();
    match decision {
        Decision::Approve if !issues.is_empty() => warnings.push(format!(
            "decision approve with {} blocking issues normalized to revise",
            issues.len()
        )),
        Decision::Revise if issues.is_empty() => {
            if missing.is_empty() {
                return Err(ParseError::schema(
                    "$.blocking_issues",
                    "revise requires at least one blocking issue or missing information item",
                ));
            }
            warnings.push("missing information promoted to blocking issues".into());
            issues = missing
                .iter()
                .map(|m| BlockingIssue {
                    step_index: None,
                    dimension: Dimension::GoalAlignment,
                    description: format!("missing information: {m}"),
                    correction_suggestion: None,
                })
                .collect();
        }
        _ => {}
    }
    Ok(ParsedCritique {
        critique: Critique::new(issues, missing),
        warnings,
    })
}

fn issue_from_value(
    value: &Value,
    path: &str,
    plan_len: Option<usize>,
) -> Result<BlockingIssue, ParseError> {
    let obj = object(value, path)?;
    reject_unknown(
        obj,
        path,
        &["step_index", "dimension", "description", "correction_suggestion"],
    )?;
    let step_index = match optional(obj, "step_index") {
        None => None,
        Some(v) => {
            let p = format!("{path}.step_index");
            let idx = v
                .as_u64()
                .ok_or_else(|| ParseError::schema(&p, "expected non-negative integer or null"))?
                as usize;
            if let Some(len) = plan_len {
                if idx >= len {
                    return Err(ParseError::schema(
                        p,
                        format!("step {idx} does not exist in a {len}-step plan"),
                    ));
                }
            }
            Some(idx)
        }
    };
    let dimension = field(obj, path, "dimension")?
        .as_str()
        .and_then(Dimension::parse)
        .ok_or_else(|| {
            ParseError::schema(
                format!("{path}.dimension"),
                "expected one of tool_selection|parameter_correctness|logic_sequence|goal_alignment",
            )
        })?;
    let description = text(field(obj, path, "description")?, &format!("{path}.description"))?;
    let correction_suggestion = match optional(obj, "correction_suggestion") {
        None => None,
        Some(v) => Some(
            v.as_str()
                .ok_or_else(|| ParseError::schema(format!("{path}.correction_suggestion"), "expected string"))?
                .to_string(),
        ),
    };
    Ok(BlockingIssue {
        step_index,
        dimension,
        description,
        correction_suggestion,
    })
}
