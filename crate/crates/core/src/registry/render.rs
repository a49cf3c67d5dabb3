use std::fmt::Write;

use super::{ParamKind, Registry, ToolDescriptor, UsageExample};

/// Tool reference followed by usage examples.
pub fn render_documentation(registry: &Registry) -> String {
    let mut out = render_tool_reference(registry);
    let examples = render_usage_examples(registry);
    if !examples.is_empty() {
        out.push('\n');
        out.push_str(&examples);
    }
    out
}

/// One `## tool_name` section per tool, alphabetical.
pub fn render_tool_reference(registry: &Registry) -> String {
    let mut out = String::from(
        "# Tool reference\n\n\
         Generators create a grid from nothing, modifiers transform a grid, composers assemble \
         layers and placements into the final map. Pass an earlier step's output by setting its \
         `output_binding` and using \"$<binding>\" as the argument value.\n",
    );
    for tool in registry.tools() {
        out.push('\n');
        render_tool(&mut out, tool);
    }
    out
}

/// Every usage example attached to any tool, in tool order.
pub fn render_usage_examples(registry: &Registry) -> String {
    let examples: Vec<&UsageExample> = registry.tools().flat_map(|t| t.examples.iter()).collect();
    if examples.is_empty() {
        return String::new();
    }
    let mut out = String::from("# Usage examples\n");
    for example in examples {
        out.push('\n');
        render_example(&mut out, example);
    }
    out
}

fn category_name(tool: &ToolDescriptor) -> &'static str {
    match tool.category {
        super::ToolCategory::Generator => "generator",
        super::ToolCategory::Modifier => "modifier",
        super::ToolCategory::Composer => "composer",
    }
}

fn render_tool(out: &mut String, tool: &ToolDescriptor) {
    let _ = writeln!(out, "## {}\n", tool.tool_name);
    let _ = writeln!(out, "Category: {}. Produces: {}.", category_name(tool), tool.produces);
    if !tool.consumes.is_empty() {
        let inputs: Vec<String> = tool
            .consumes
            .iter()
            .map(|i| format!("`{}` ({} binding)", i.parameter, i.kind))
            .collect();
        let _ = writeln!(out, "Consumes: {}.", inputs.join(", "));
    }
    let _ = writeln!(out, "{}", tool.description);
    if tool.parameters.is_empty() {
        out.push_str("Parameters: none.\n");
        return;
    }
    out.push_str("Parameters:\n");
    for p in &tool.parameters {
        let mut facts = vec![p.kind.to_string()];
        facts.push(if p.required { "required".into() } else { "optional".into() });
        if let Some(r) = p.range {
            facts.push(format!("range {r}"));
        }
        if let Some(values) = &p.allowed_values {
            facts.push(format!("one of {}", values.join("|")));
        }
        if p.kind == ParamKind::String && tool.input(&p.name).is_none() {
            facts.push("non-empty".into());
        }
        if let Some(d) = &p.default {
            facts.push(format!("default {d}"));
        }
        let _ = writeln!(out, "- `{}` ({}): {}", p.name, facts.join(", "), p.description);
    }
}

fn render_example(out: &mut String, example: &UsageExample) {
    let _ = writeln!(out, "## Example: {}\n", example.title);
    let _ = writeln!(out, "Request: {}", example.prompt_fragment);
    out.push_str("Steps:\n");
    for (i, step) in example.steps.iter().enumerate() {
        let args = serde_json::to_string(&step.arguments).expect("arguments serialize");
        let _ = write!(out, "{i}. {} {args}", step.tool_name);
        if let Some(b) = &step.output_binding {
            let _ = write!(out, " -> ${b}");
        }
        out.push('\n');
    }
    if !example.note.is_empty() {
        let _ = writeln!(out, "Note: {}", example.note);
    }
}
