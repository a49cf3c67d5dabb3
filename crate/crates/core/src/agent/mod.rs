//! Actor and critic agents and their backends.
//!
//! Agents are stateless between turns: everything an agent may see arrives
//! through the [`ContextBuffer`] handed to it.

mod llm;
mod prompt;
mod scripted;
mod validate;

use std::fmt;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::refine::ContextBuffer;
use crate::registry::Registry;
use crate::trajectory::{Critique, ParseError, Trajectory};

pub use llm::{ChatClient, ChatError, ChatMessage, ChatReply, LlmActor, LlmCritic, RetryPolicy};
pub use prompt::{PromptTemplate, Prompts, RenderedPrompt, TemplateError, ACTOR_SLOTS, CRITIC_SLOTS};
pub use scripted::{Exhaustion, ScriptedActor, ScriptedCritic, ScriptedTurn};
pub use validate::validate_plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Actor,
    Critic,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentRole::Actor => "actor",
            AgentRole::Critic => "critic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Llm,
    RuleBased,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub role: AgentRole,
    pub backend: BackendKind,
    pub temperature: f64,
    pub model_id: String,
    pub endpoint: String,
    pub max_output_tokens: u32,
}

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4o";

impl AgentConfig {
    pub fn actor() -> AgentConfig {
        AgentConfig {
            role: AgentRole::Actor,
            backend: BackendKind::Llm,
            temperature: 0.4,
            model_id: DEFAULT_MODEL.into(),
            endpoint: DEFAULT_ENDPOINT.into(),
            max_output_tokens: 2048,
        }
    }

    pub fn critic() -> AgentConfig {
        AgentConfig {
            role: AgentRole::Critic,
            temperature: 0.2,
            ..AgentConfig::actor()
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(AgentError::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(AgentError::Config("max_output_tokens must be positive".into()));
        }
        if self.backend == BackendKind::RuleBased && self.role == AgentRole::Actor {
            return Err(AgentError::Config("the rule-based backend can only review plans".into()));
        }
        if self.backend == BackendKind::Llm && self.endpoint.is_empty() {
            return Err(AgentError::Config("llm backend needs an endpoint".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub agent_role: AgentRole,
}

impl TokenUsage {
    pub fn zero(agent_role: AgentRole) -> TokenUsage {
        TokenUsage {
            prompt_tokens: 0,
            completion_tokens: 0,
            agent_role,
        }
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

/// Token totals split by role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageTotals {
    pub actor_prompt_tokens: u64,
    pub actor_completion_tokens: u64,
    pub critic_prompt_tokens: u64,
    pub critic_completion_tokens: u64,
}

impl UsageTotals {
    pub fn add(&mut self, usage: &TokenUsage) {
        match usage.agent_role {
            AgentRole::Actor => {
                self.actor_prompt_tokens += usage.prompt_tokens;
                self.actor_completion_tokens += usage.completion_tokens;
            }
            AgentRole::Critic => {
                self.critic_prompt_tokens += usage.prompt_tokens;
                self.critic_completion_tokens += usage.completion_tokens;
            }
        }
    }

    pub fn merge(&mut self, other: &UsageTotals) {
        self.actor_prompt_tokens += other.actor_prompt_tokens;
        self.actor_completion_tokens += other.actor_completion_tokens;
        self.critic_prompt_tokens += other.critic_prompt_tokens;
        self.critic_completion_tokens += other.critic_completion_tokens;
    }

    pub fn total(&self) -> u64 {
        self.actor_prompt_tokens
            + self.actor_completion_tokens
            + self.critic_prompt_tokens
            + self.critic_completion_tokens
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Chat(#[from] ChatError),
    #[error("output still unparseable after {attempts} attempts: {last_error}")]
    Unparseable { attempts: u32, last_error: ParseError },
    #[error("scripted {0} has no turns left")]
    ScriptExhausted(AgentRole),
    #[error("invalid agent configuration: {0}")]
    Config(String),
}

/// What the actor sees on one turn.
pub struct ActorTurn<'a> {
    pub context: &'a ContextBuffer,
    pub prompt: &'a RenderedPrompt,
}

/// What the critic sees on one turn.
pub struct CriticTurn<'a> {
    pub context: &'a ContextBuffer,
    pub trajectory: &'a Trajectory,
    pub registry: &'a Registry,
    pub prompt: &'a RenderedPrompt,
}

pub trait Actor: Send + Sync {
    fn propose(&self, turn: &ActorTurn<'_>) -> Result<(Trajectory, TokenUsage), AgentError>;
}

pub trait Critic: Send + Sync {
    fn review(&self, turn: &CriticTurn<'_>) -> Result<(Critique, TokenUsage), AgentError>;
}

/// Revision number for the next proposal given the current context.
pub fn next_revision(context: &ContextBuffer) -> u32 {
    context.current_trajectory().map_or(0, |t| t.revision + 1)
}

/// Deterministic critic that flags everything [`validate_plan`] finds.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleCritic;

impl Critic for RuleCritic {
    fn review(&self, turn: &CriticTurn<'_>) -> Result<(Critique, TokenUsage), AgentError> {
        let issues = validate_plan(turn.trajectory, turn.registry);
        Ok((Critique::new(issues, Vec::new()), TokenUsage::zero(AgentRole::Critic)))
    }
}
