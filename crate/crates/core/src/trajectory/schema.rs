use std::collections::{BTreeMap, HashMap};

use serde_json::{Map, Value};

use super::{is_identifier, ParseError, ToolStep, Trajectory};

pub(crate) type Obj = Map<String, Value>;

pub(crate) fn object<'a>(value: &'a Value, path: &str) -> Result<&'a Obj, ParseError> {
    value
        .as_object()
        .ok_or_else(|| ParseError::schema(path, "expected object"))
}

pub(crate) fn reject_unknown(obj: &Obj, path: &str, allowed: &[&str]) -> Result<(), ParseError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ParseError::schema(format!("{path}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

pub(crate) fn field<'a>(obj: &'a Obj, path: &str, name: &str) -> Result<&'a Value, ParseError> {
    obj.get(name)
        .ok_or_else(|| ParseError::schema(format!("{path}.{name}"), "missing required field"))
}

pub(crate) fn text(value: &Value, path: &str) -> Result<String, ParseError> {
    match value.as_str() {
        None => Err(ParseError::schema(path, "expected string")),
        Some(s) if s.trim().is_empty() => Err(ParseError::schema(path, "must not be empty")),
        Some(s) => Ok(s.to_string()),
    }
}

pub(crate) fn string_list(value: &Value, path: &str) -> Result<Vec<String>, ParseError> {
    let items = value
        .as_array()
        .ok_or_else(|| ParseError::schema(path, "expected array"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| ParseError::schema(format!("{path}[{i}]"), "expected string"))
        })
        .collect()
}

pub(crate) fn optional<'a>(obj: &'a Obj, name: &str) -> Option<&'a Value> {
    obj.get(name).filter(|v| !v.is_null())
}

pub(crate) fn trajectory_from_value(value: &Value) -> Result<Trajectory, ParseError> {
    let root = object(value, "$")?;
    reject_unknown(root, "$", &["trajectory_summary", "tool_plan", "risks", "revision"])?;
    let trajectory_summary = text(field(root, "$", "trajectory_summary")?, "$.trajectory_summary")?;
    let plan = field(root, "$", "tool_plan")?
        .as_array()
        .ok_or_else(|| ParseError::schema("$.tool_plan", "expected array"))?;
    if plan.is_empty() {
        return Err(ParseError::schema("$.tool_plan", "must contain at least one step"));
    }
    let tool_plan = plan
        .iter()
        .enumerate()
        .map(|(i, v)| step_from_value(v, &format!("$.tool_plan[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let risks = string_list(field(root, "$", "risks")?, "$.risks")?;
    let revision = match optional(root, "revision") {
        None => 0,
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| ParseError::schema("$.revision", "expected non-negative integer"))?,
    };
    check_dataflow(&tool_plan)?;
    Ok(Trajectory {
        trajectory_summary,
        tool_plan,
        risks,
        revision,
    })
}

fn step_from_value(value: &Value, path: &str) -> Result<ToolStep, ParseError> {
    let obj = object(value, path)?;
    reject_unknown(
        obj,
        path,
        &["objective", "tool_name", "arguments", "expected_result", "output_binding"],
    )?;
    let objective = text(field(obj, path, "objective")?, &format!("{path}.objective"))?;
    let tool_name = text(field(obj, path, "tool_name")?, &format!("{path}.tool_name"))?;
    let arguments: BTreeMap<String, Value> = object(
        field(obj, path, "arguments")?,
        &format!("{path}.arguments"),
    )?
    .iter()
    .map(|(k, v)| (k.clone(), v.clone()))
    .collect();
    let expected_result = text(
        field(obj, path, "expected_result")?,
        &format!("{path}.expected_result"),
    )?;
    let output_binding = match optional(obj, "output_binding") {
        None => None,
        Some(v) => {
            let p = format!("{path}.output_binding");
            let name = v.as_str().ok_or_else(|| ParseError::schema(&p, "expected string"))?;
            if !is_identifier(name) {
                return Err(ParseError::schema(p, format!("`{name}` is not an identifier")));
            }
            Some(name.to_string())
        }
    };
    Ok(ToolStep {
        objective,
        tool_name,
        arguments,
        expected_result,
        output_binding,
    })
}

fn check_dataflow(plan: &[ToolStep]) -> Result<(), ParseError> {
    let mut defined: HashMap<&str, usize> = HashMap::new();
    for (i, step) in plan.iter().enumerate() {
        if let Some(name) = &step.output_binding {
            if let Some(first) = defined.get(name.as_str()) {
                return Err(ParseError::Dataflow {
                    step: i,
                    reason: format!("binding `{name}` already defined by step {first}"),
                });
            }
        }
        for (param, target) in step.references() {
            if !defined.contains_key(target) {
                let later = plan
                    .iter()
                    .skip(i)
                    .position(|s| s.output_binding.as_deref() == Some(target));
                let reason = match later {
                    Some(0) => format!("argument `{param}` references its own output `${target}`"),
                    Some(d) => format!(
                        "argument `{param}` references `${target}` defined later by step {}",
                        i + d
                    ),
                    None => format!("argument `{param}` references undefined binding `${target}`"),
                };
                return Err(ParseError::Dataflow { step: i, reason });
            }
        }
        if let Some(name) = &step.output_binding {
            defined.insert(name, i);
        }
    }
    Ok(())
}
