//! Static checks of a plan against the registry, without executing it.
//!
//! Covers tool selection, parameter correctness and logic/sequence. Goal
//! alignment needs judgement and is left to model-backed critics. A plan
//! with no issues here executes without step failures.

use std::collections::{HashMap, HashSet};

use serde_json::Value;

use crate::registry::{validate_arguments, OutputKind, Registry, ToolCategory, ToolDescriptor};
use crate::trajectory::{binding_reference, BlockingIssue, Dimension, ToolStep, Trajectory};

type Dims = (usize, usize);

#[derive(Clone, Copy)]
struct BindingInfo {
    kind: Option<OutputKind>,
    dims: Option<Dims>,
}

/// Layer descriptions a composer step adds: (name, height_index).
fn declared_layers(step: &ToolStep) -> Vec<(String, u32)> {
    let int = |name: &str, default: u64| {
        step.arguments
            .get(name)
            .map_or(Some(default), Value::as_u64)
            .and_then(|v| u32::try_from(v).ok())
    };
    match step.tool_name.as_str() {
        "build_height_layers" => match int("tiers", 3) {
            Some(tiers) => (0..tiers).map(|k| (format!("tier_{k}"), k)).collect(),
            None => Vec::new(),
        },
        "add_layer" => match (step.arguments.get("name").and_then(Value::as_str), int("height_index", u64::MAX)) {
            (Some(name), Some(h)) => vec![(name.to_string(), h)],
            _ => Vec::new(),
        },
        _ => Vec::new(),
    }
}

/// Output dimensions of a generator step, or `None` if the arguments do not
/// determine them.
fn generator_dims(tool: &ToolDescriptor, step: &ToolStep) -> Option<Dims> {
    let arg = |name: &str| -> Option<usize> {
        match step.arguments.get(name) {
            Some(v) => v.as_u64().map(|n| n as usize),
            None => tool.parameter(name)?.default.as_ref()?.as_u64().map(|n| n as usize),
        }
    };
    if step.tool_name == "gen_maze" {
        Some((2 * arg("columns")? + 1, 2 * arg("rows")? + 1))
    } else {
        Some((arg("width")?, arg("height")?))
    }
}

fn issue(step: usize, dimension: Dimension, description: String, suggestion: Option<String>) -> BlockingIssue {
    BlockingIssue {
        step_index: Some(step),
        dimension,
        description,
        correction_suggestion: suggestion,
    }
}

/// All blocking issues the registry alone can establish, in step order.
pub fn validate_plan(trajectory: &Trajectory, registry: &Registry) -> Vec<BlockingIssue> {
    let plan = &trajectory.tool_plan;
    let mut issues = Vec::new();
    let mut bindings: HashMap<&str, BindingInfo> = HashMap::new();
    let mut binding_owner: HashMap<&str, usize> = HashMap::new();
    for (i, step) in plan.iter().enumerate() {
        if let Some(b) = &step.output_binding {
            binding_owner.entry(b.as_str()).or_insert(i);
        }
    }
    let mut layer_names: HashMap<String, usize> = HashMap::new();
    let mut heights: HashSet<u32> = HashSet::new();
    let mut layer_dims: Option<Dims> = None;
    let mut seen_generator = false;

    for (i, step) in plan.iter().enumerate() {
        let mut out = BindingInfo { kind: None, dims: None };
        if let Some(b) = &step.output_binding {
            if bindings.contains_key(b.as_str()) {
                issues.push(issue(
                    i,
                    Dimension::LogicSequence,
                    format!("output binding `{b}` is already defined by an earlier step"),
                    Some("choose a new binding name".into()),
                ));
            }
        }
        let Some(tool) = registry.get(&step.tool_name) else {
            issues.push(issue(
                i,
                Dimension::ToolSelection,
                format!("tool `{}` is not in the registry", step.tool_name),
                Some(closest_tool(registry, &step.tool_name)),
            ));
            if let Some(b) = &step.output_binding {
                bindings.insert(b, out);
            }
            continue;
        };
        out.kind = Some(tool.produces);

        let arg_issues = validate_arguments(tool, &step.arguments);
        let flagged: HashSet<&str> = arg_issues.iter().map(|a| a.parameter.as_str()).collect();
        for a in &arg_issues {
            let suggestion = match tool.parameter(&a.parameter) {
                Some(spec) => format!("use {} for `{}`", spec.constraint(), a.parameter),
                None => format!("remove `{}`", a.parameter),
            };
            issues.push(issue(
                i,
                Dimension::ParameterCorrectness,
                format!("{}: {a}", step.tool_name),
                Some(suggestion),
            ));
        }

        match tool.category {
            ToolCategory::Generator => seen_generator = true,
            ToolCategory::Composer if !seen_generator => issues.push(issue(
                i,
                Dimension::LogicSequence,
                format!("composer `{}` runs before any generator", step.tool_name),
                Some("generate a grid first".into()),
            )),
            _ => {}
        }

        for (param, target) in step.references() {
            if tool.input(param).is_none() && tool.parameter(param).is_some() {
                issues.push(issue(
                    i,
                    Dimension::LogicSequence,
                    format!("`{param}` takes a literal value, not the binding `${target}`"),
                    None,
                ));
            }
        }

        let mut input_dims = None;
        for input in &tool.consumes {
            if flagged.contains(input.parameter.as_str()) {
                continue;
            }
            let Some(value) = step.arguments.get(&input.parameter) else {
                continue;
            };
            let Some(target) = binding_reference(value) else {
                issues.push(issue(
                    i,
                    Dimension::LogicSequence,
                    format!("`{}` must reference an earlier {} output as \"$name\"", input.parameter, input.kind),
                    None,
                ));
                continue;
            };
            match bindings.get(target) {
                None => {
                    let where_ = match binding_owner.get(target) {
                        Some(&j) => format!("is only produced by later step {j}"),
                        None => "is never defined".into(),
                    };
                    issues.push(issue(
                        i,
                        Dimension::LogicSequence,
                        format!("`{}` references `${target}`, which {where_}", input.parameter),
                        Some(format!("produce `{target}` before step {i}")),
                    ));
                }
                Some(info) => match info.kind {
                    Some(kind) if kind != input.kind => issues.push(issue(
                        i,
                        Dimension::LogicSequence,
                        format!("`{}` expects a {} but `${target}` is {kind}", input.parameter, input.kind),
                        None,
                    )),
                    _ => input_dims = input_dims.or(info.dims),
                },
            }
        }

        out.dims = match tool.category {
            ToolCategory::Generator if arg_issues.is_empty() => generator_dims(tool, step),
            ToolCategory::Generator => None,
            _ => input_dims,
        };

        if tool.produces == OutputKind::Layers && arg_issues.is_empty() {
            for (name, h) in declared_layers(step) {
                if let Some(j) = layer_names.get(&name) {
                    issues.push(issue(
                        i,
                        Dimension::LogicSequence,
                        format!("layer name `{name}` already created by step {j}"),
                        Some("use a unique layer name".into()),
                    ));
                }
                if !heights.insert(h) {
                    issues.push(issue(
                        i,
                        Dimension::LogicSequence,
                        format!("height index {h} of layer `{name}` is already taken"),
                        Some("use a unique height_index".into()),
                    ));
                }
                layer_names.entry(name).or_insert(i);
            }
            if let Some(d) = out.dims {
                match layer_dims {
                    Some(existing) if existing != d => issues.push(issue(
                        i,
                        Dimension::LogicSequence,
                        format!(
                            "layer size {}x{} differs from earlier layers ({}x{})",
                            d.0, d.1, existing.0, existing.1
                        ),
                        Some("derive every layer from grids of one size".into()),
                    )),
                    Some(_) => {}
                    None => layer_dims = Some(d),
                }
            }
        }

        if step.tool_name == "scatter" && arg_issues.is_empty() {
            if let Some(layer) = step.arguments.get("layer_name").and_then(Value::as_str) {
                if !layer_names.contains_key(layer) {
                    issues.push(issue(
                        i,
                        Dimension::LogicSequence,
                        format!("scatter layer `{layer}` is not created by an earlier step"),
                        Some("name a layer added before this step".into()),
                    ));
                } else if let (Some(d), Some(l)) = (out.dims, layer_dims) {
                    if d != l {
                        issues.push(issue(
                            i,
                            Dimension::LogicSequence,
                            format!("scatter target is {}x{} but layers are {}x{}", d.0, d.1, l.0, l.1),
                            None,
                        ));
                    }
                }
            }
        }

        if let Some(b) = &step.output_binding {
            bindings.entry(b).or_insert(out);
        }
    }
    issues
}

fn closest_tool(registry: &Registry, name: &str) -> String {
    let prefix: String = name.chars().take(4).collect();
    let candidates: Vec<&str> = registry
        .tools()
        .map(|t| t.tool_name.as_str())
        .filter(|t| t.starts_with(&prefix))
        .collect();
    if candidates.is_empty() {
        "use a registered tool".into()
    } else {
        format!("use one of: {}", candidates.join(", "))
    }
}
