//! Machine-readable documentation of every engine tool.
//!
//! The registry is a versioned JSON document. Loading it checks every
//! structural invariant and re-validates each bundled usage example, so the
//! documentation handed to agents cannot drift from what the validator
//! accepts.

mod params;
mod render;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use params::{validate_arguments, ArgIssue, ArgIssueKind, ParamKind, ParameterSpec, Range};
pub use render::{render_documentation, render_tool_reference, render_usage_examples};

pub const REGISTRY_VERSION: u32 = 1;

const BUNDLED: &str = include_str!("../../../../registry/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolCategory {
    Generator,
    Modifier,
    Composer,
}

/// Semantic kind of a value flowing between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Grid,
    Layers,
    Placements,
}

impl std::fmt::Display for OutputKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputKind::Grid => "grid",
            OutputKind::Layers => "layers",
            OutputKind::Placements => "placements",
        })
    }
}

/// A parameter that receives an earlier step's output through a `$binding`
/// reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub parameter: String,
    pub kind: OutputKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleStep {
    pub tool_name: String,
    pub arguments: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_binding: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsageExample {
    pub title: String,
    pub prompt_fragment: String,
    pub steps: Vec<ExampleStep>,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolDescriptor {
    pub tool_name: String,
    pub category: ToolCategory,
    pub description: String,
    pub parameters: Vec<ParameterSpec>,
    pub produces: OutputKind,
    #[serde(default)]
    pub consumes: Vec<InputSpec>,
    #[serde(default)]
    pub examples: Vec<UsageExample>,
}

impl ToolDescriptor {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn input(&self, parameter: &str) -> Option<&InputSpec> {
        self.consumes.iter().find(|i| i.parameter == parameter)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("registry parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("registry invariant violated{}: {message}", location(.tool, .parameter))]
    Invariant {
        tool: Option<String>,
        parameter: Option<String>,
        message: String,
    },
}

fn location(tool: &Option<String>, parameter: &Option<String>) -> String {
    match (tool, parameter) {
        (Some(t), Some(p)) => format!(" in tool `{t}`, parameter `{p}`"),
        (Some(t), None) => format!(" in tool `{t}`"),
        _ => String::new(),
    }
}

fn violation(tool: &str, parameter: Option<&str>, message: impl Into<String>) -> RegistryError {
    RegistryError::Invariant {
        tool: Some(tool.to_string()),
        parameter: parameter.map(str::to_string),
        message: message.into(),
    }
}

/// Immutable set of tool descriptors, keyed and ordered by tool name.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    tools: BTreeMap<String, ToolDescriptor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    registry_version: u32,
    tools: Vec<ToolDescriptor>,
}

impl Registry {
    /// The registry shipped with this crate.
    pub fn bundled() -> Registry {
        load_registry(BUNDLED).expect("bundled registry is valid")
    }

    pub fn empty() -> Registry {
        Registry {
            tools: BTreeMap::new(),
        }
    }

    pub fn get(&self, tool_name: &str) -> Option<&ToolDescriptor> {
        self.tools.get(tool_name)
    }

    /// Tools in alphabetical order.
    pub fn tools(&self) -> impl Iterator<Item = &ToolDescriptor> {
        self.tools.values()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }

    pub fn to_json(&self) -> String {
        let file = RegistryFile {
            registry_version: REGISTRY_VERSION,
            tools: self.tools.values().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("registry serialization is infallible")
    }
}

pub fn load_registry(source: &str) -> Result<Registry, RegistryError> {
    let file: RegistryFile = serde_json::from_str(source).map_err(|e| RegistryError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.registry_version != REGISTRY_VERSION {
        return Err(RegistryError::Invariant {
            tool: None,
            parameter: None,
            message: format!(
                "unsupported registry_version {} (expected {REGISTRY_VERSION})",
                file.registry_version
            ),
        });
    }

    let mut tools = BTreeMap::new();
    for tool in file.tools {
        check_tool(&tool)?;
        let name = tool.tool_name.clone();
        if tools.insert(name.clone(), tool).is_some() {
            return Err(violation(&name, None, "duplicate tool_name"));
        }
    }
    let registry = Registry { tools };
    for tool in registry.tools() {
        for example in &tool.examples {
            check_example(&registry, tool, example)?;
        }
    }
    Ok(registry)
}

fn check_tool(tool: &ToolDescriptor) -> Result<(), RegistryError> {
    let name = tool.tool_name.as_str();
    if name.is_empty() {
        return Err(RegistryError::Invariant {
            tool: None,
            parameter: None,
            message: "tool with empty tool_name".into(),
        });
    }
    let mut seen = HashSet::new();
    for spec in &tool.parameters {
        if !seen.insert(spec.name.as_str()) {
            return Err(violation(name, Some(&spec.name), "duplicate parameter name"));
        }
        spec.check().map_err(|m| violation(name, Some(&spec.name), m))?;
    }
    for input in &tool.consumes {
        match tool.parameter(&input.parameter) {
            Some(p) if p.kind == ParamKind::String && p.required => {}
            Some(_) => {
                return Err(violation(
                    name,
                    Some(&input.parameter),
                    "consumed input must be a required string parameter",
                ))
            }
            None => {
                return Err(violation(
                    name,
                    Some(&input.parameter),
                    "consumed input names no declared parameter",
                ))
            }
        }
    }
    Ok(())
}

fn check_example(
    registry: &Registry,
    owner: &ToolDescriptor,
    example: &UsageExample,
) -> Result<(), RegistryError> {
    for (i, step) in example.steps.iter().enumerate() {
        let Some(tool) = registry.get(&step.tool_name) else {
            return Err(violation(
                &owner.tool_name,
                None,
                format!(
                    "usage example `{}` step {i} uses unregistered tool `{}`",
                    example.title, step.tool_name
                ),
            ));
        };
        if let Some(issue) = validate_arguments(tool, &step.arguments).first() {
            return Err(violation(
                &owner.tool_name,
                Some(&issue.parameter),
                format!(
                    "usage example `{}` step {i} ({}): {issue}",
                    example.title, step.tool_name
                ),
            ));
        }
    }
    Ok(())
}
