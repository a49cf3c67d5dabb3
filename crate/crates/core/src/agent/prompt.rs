//! Prompt templates with `{{slot}}` substitution and `{{#slot}}...{{/slot}}`
//! sections that render only when the slot is non-empty.
//!
//! Slot values are inserted verbatim and never re-scanned, so braces inside
//! a user prompt or a trajectory cannot expand into other slots.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::refine::ContextBuffer;
use crate::trajectory::Trajectory;

const ACTOR_TEMPLATE: &str = include_str!("../../../../prompts/actor.txt");
const CRITIC_TEMPLATE: &str = include_str!("../../../../prompts/critic.txt");

pub const ACTOR_SLOTS: &[&str] = &["docs", "examples", "user_prompt", "previous_trajectory", "critique"];
pub const CRITIC_SLOTS: &[&str] = &["docs", "examples", "user_prompt", "trajectory"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template must start with a [system] line and contain a [user] line")]
    MissingSections,
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("unbalanced section `{0}`")]
    Unbalanced(String),
    #[error("unterminated `{{{{` tag")]
    Unterminated,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Text(String),
    Slot(String),
    Section(String, Vec<Node>),
}

#[derive(Debug, Clone, PartialEq)]
struct Body(Vec<Node>);

impl Body {
    fn parse(source: &str, slots: &[&str]) -> Result<Body, TemplateError> {
        let mut stack: Vec<(String, Vec<Node>)> = vec![(String::new(), Vec::new())];
        let mut rest = source;
        while let Some(start) = rest.find("{{") {
            let text = &rest[..start];
            if !text.is_empty() {
                stack.last_mut().unwrap().1.push(Node::Text(text.to_string()));
            }
            let after = &rest[start + 2..];
            let end = after.find("}}").ok_or(TemplateError::Unterminated)?;
            let tag = after[..end].trim();
            rest = &after[end + 2..];
            let known = |name: &str| {
                if slots.contains(&name) {
                    Ok(name.to_string())
                } else {
                    Err(TemplateError::UnknownSlot(name.to_string()))
                }
            };
            if let Some(name) = tag.strip_prefix('#') {
                stack.push((known(name)?, Vec::new()));
            } else if let Some(name) = tag.strip_prefix('/') {
                let (open, nodes) = stack.pop().expect("stack never empty");
                if open != name || stack.is_empty() {
                    return Err(TemplateError::Unbalanced(name.to_string()));
                }
                stack.last_mut().unwrap().1.push(Node::Section(open, nodes));
            } else {
                let name = known(tag)?;
                stack.last_mut().unwrap().1.push(Node::Slot(name));
            }
        }
        if !rest.is_empty() {
            stack.last_mut().unwrap().1.push(Node::Text(rest.to_string()));
        }
        if stack.len() != 1 {
            return Err(TemplateError::Unbalanced(stack.pop().unwrap().0));
        }
        Ok(Body(stack.pop().unwrap().1))
    }

    fn render(&self, values: &BTreeMap<&str, String>) -> String {
        let mut out = String::new();
        render_nodes(&self.0, values, &mut out);
        out
    }
}

fn render_nodes(nodes: &[Node], values: &BTreeMap<&str, String>, out: &mut String) {
    for node in nodes {
        match node {
            Node::Text(t) => out.push_str(t),
            Node::Slot(name) => {
                if let Some(v) = values.get(name.as_str()) {
                    out.push_str(v);
                }
            }
            Node::Section(name, inner) => {
                if values.get(name.as_str()).is_some_and(|v| !v.is_empty()) {
                    render_nodes(inner, values, out);
                }
            }
        }
    }
}

/// A system/user message pair template.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    system: Body,
    user: Body,
}

impl PromptTemplate {
    /// Parses a template whose first line is `[system]` and which contains a
    /// `[user]` line separating the two messages.
    pub fn parse(source: &str, slots: &[&str]) -> Result<PromptTemplate, TemplateError> {
        let body = source
            .strip_prefix("[system]\n")
            .ok_or(TemplateError::MissingSections)?;
        let (system, user) = body
            .split_once("\n[user]\n")
            .ok_or(TemplateError::MissingSections)?;
        Ok(PromptTemplate {
            system: Body::parse(system, slots)?,
            user: Body::parse(user, slots)?,
        })
    }

    pub fn render(&self, values: &BTreeMap<&str, String>) -> RenderedPrompt {
        RenderedPrompt {
            system: self.system.render(values).trim_end().to_string(),
            user: self.user.render(values).trim_end().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    pub fn chars(&self) -> usize {
        self.system.chars().count() + self.user.chars().count()
    }
}

/// Actor and critic templates.
#[derive(Debug, Clone, PartialEq)]
pub struct Prompts {
    pub actor: PromptTemplate,
    pub critic: PromptTemplate,
}

impl Prompts {
    pub fn bundled() -> Prompts {
        Prompts {
            actor: PromptTemplate::parse(ACTOR_TEMPLATE, ACTOR_SLOTS).expect("bundled actor template"),
            critic: PromptTemplate::parse(CRITIC_TEMPLATE, CRITIC_SLOTS).expect("bundled critic template"),
        }
    }

    /// Actor input: resources, the user prompt, and at most one previous
    /// trajectory with its critique.
    pub fn actor_prompt(&self, context: &ContextBuffer) -> RenderedPrompt {
        let mut values = resource_values(context);
        if let Some(t) = context.current_trajectory() {
            values.insert("previous_trajectory", t.render_pretty());
        }
        if let Some(c) = context.latest_critique() {
            values.insert("critique", c.render());
        }
        self.actor.render(&values)
    }

    pub fn critic_prompt(&self, context: &ContextBuffer, trajectory: &Trajectory) -> RenderedPrompt {
        let mut values = resource_values(context);
        values.insert("trajectory", trajectory.render_pretty());
        self.critic.render(&values)
    }
}

fn resource_values(context: &ContextBuffer) -> BTreeMap<&'static str, String> {
    let mut values = BTreeMap::new();
    values.insert("user_prompt", context.user_prompt().to_string());
    if let Some(d) = context.docs() {
        values.insert("docs", d.to_string());
    }
    if let Some(e) = context.examples() {
        values.insert("examples", e.to_string());
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vals(pairs: &[(&'static str, &str)]) -> BTreeMap<&'static str, String> {
        pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
    }

    #[test]
    fn sections_and_slots() {
        let t = PromptTemplate::parse(
            "[system]\nA{{#docs}}<d>{{docs}}</d>{{/docs}}B\n[user]\n{{user_prompt}}",
            ACTOR_SLOTS,
        )
        .unwrap();
        let r = t.render(&vals(&[("user_prompt", "hi {{docs}}")]));
        assert_eq!(r.system, "AB");
        assert_eq!(r.user, "hi {{docs}}");
        let r = t.render(&vals(&[("user_prompt", "x"), ("docs", "D")]));
        assert_eq!(r.system, "A<d>D</d>B");
    }

    #[test]
    fn rejects_malformed_templates() {
        assert_eq!(PromptTemplate::parse("no sections", ACTOR_SLOTS), Err(TemplateError::MissingSections));
        assert_eq!(
            PromptTemplate::parse("[system]\n{{nope}}\n[user]\n", ACTOR_SLOTS),
            Err(TemplateError::UnknownSlot("nope".into()))
        );
        assert_eq!(
            PromptTemplate::parse("[system]\n{{#docs}}x\n[user]\n", ACTOR_SLOTS),
            Err(TemplateError::Unbalanced("docs".into()))
        );
        assert_eq!(
            PromptTemplate::parse("[system]\n{{docs\n[user]\n", ACTOR_SLOTS),
            Err(TemplateError::Unterminated)
        );
    }

    #[test]
    fn bundled_templates_parse() {
        Prompts::bundled();
    }
}
