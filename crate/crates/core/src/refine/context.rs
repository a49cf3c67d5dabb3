use crate::registry::{render_tool_reference, render_usage_examples, Registry};
use crate::trajectory::{Critique, Trajectory};

/// Everything an agent may see on a turn. Updating replaces the previous
/// trajectory and critique, so the context holds at most one of each no
/// matter how many rounds have run.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextBuffer {
    user_prompt: String,
    docs: Option<String>,
    examples: Option<String>,
    current_trajectory: Option<Trajectory>,
    latest_critique: Option<Critique>,
}

impl ContextBuffer {
    pub fn new(user_prompt: impl Into<String>, docs: Option<String>, examples: Option<String>) -> ContextBuffer {
        ContextBuffer {
            user_prompt: user_prompt.into(),
            docs,
            examples,
            current_trajectory: None,
            latest_critique: None,
        }
    }

    /// Context carrying the registry's tool reference and usage examples.
    pub fn with_resources(user_prompt: impl Into<String>, registry: &Registry) -> ContextBuffer {
        let examples = render_usage_examples(registry);
        ContextBuffer::new(
            user_prompt,
            Some(render_tool_reference(registry)),
            (!examples.is_empty()).then_some(examples),
        )
    }

    /// Context with the user prompt only.
    pub fn bare(user_prompt: impl Into<String>) -> ContextBuffer {
        ContextBuffer::new(user_prompt, None, None)
    }

    /// Replaces the stored trajectory and critique.
    pub fn update(&mut self, trajectory: Trajectory, critique: Critique) {
        self.current_trajectory = Some(trajectory);
        self.latest_critique = Some(critique);
    }

    pub fn user_prompt(&self) -> &str {
        &self.user_prompt
    }

    pub fn docs(&self) -> Option<&str> {
        self.docs.as_deref()
    }

    pub fn examples(&self) -> Option<&str> {
        self.examples.as_deref()
    }

    pub fn current_trajectory(&self) -> Option<&Trajectory> {
        self.current_trajectory.as_ref()
    }

    pub fn latest_critique(&self) -> Option<&Critique> {
        self.latest_critique.as_ref()
    }
}

/// Functional form of [`ContextBuffer::update`].
pub fn update_context(mut buffer: ContextBuffer, trajectory: Trajectory, critique: Critique) -> ContextBuffer {
    buffer.update(trajectory, critique);
    buffer
}
