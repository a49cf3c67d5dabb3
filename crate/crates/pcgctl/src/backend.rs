//! Agent construction per session round.

use pcg_core::agent::{
    Actor, AgentConfig, AgentError, BackendKind, ChatClient, Critic, LlmActor, LlmCritic, RetryPolicy, RuleCritic,
    ScriptedActor,
};
use pcg_core::eval::MapFamily;

use crate::session::SessionConfig;

pub struct Agents {
    pub actor: Box<dyn Actor>,
    pub critic: Option<Box<dyn Critic>>,
}

/// Builds the agents for one refinement round.
pub trait AgentFactory: Send + Sync {
    fn build(&self, config: &SessionConfig, prompt: &str, round: u32) -> Result<Agents, AgentError>;
}

/// Backends named in the session config. A scripted actor replays the
/// golden plan of the map family detected in the prompt; scripted and
/// rule-based critics both run the rule checks.
#[derive(Debug, Clone, Default)]
pub struct ConfiguredAgents {
    pub api_key: Option<String>,
    pub retry: RetryPolicy,
}

impl ConfiguredAgents {
    pub fn new(api_key: Option<String>) -> ConfiguredAgents {
        ConfiguredAgents {
            api_key,
            retry: RetryPolicy::default(),
        }
    }

    fn client(&self, config: &AgentConfig) -> Result<ChatClient, AgentError> {
        if self.api_key.is_none() {
            return Err(AgentError::Config(format!("the llm {} needs LLM_API_KEY", config.role)));
        }
        Ok(ChatClient::new(config.clone(), self.api_key.clone(), self.retry))
    }

    pub fn actor(&self, config: &AgentConfig, prompt: &str) -> Result<Box<dyn Actor>, AgentError> {
        config.validate()?;
        Ok(match config.backend {
            BackendKind::Scripted => Box::new(ScriptedActor::fixed(&MapFamily::detect(prompt).golden())),
            BackendKind::Llm => Box::new(LlmActor::new(self.client(config)?)),
            BackendKind::RuleBased => unreachable!("rejected by validate"),
        })
    }

    pub fn critic(&self, config: &AgentConfig) -> Result<Box<dyn Critic>, AgentError> {
        config.validate()?;
        Ok(match config.backend {
            BackendKind::Llm => Box::new(LlmCritic::new(self.client(config)?)),
            BackendKind::RuleBased | BackendKind::Scripted => Box::new(RuleCritic),
        })
    }
}

impl AgentFactory for ConfiguredAgents {
    fn build(&self, config: &SessionConfig, prompt: &str, _round: u32) -> Result<Agents, AgentError> {
        let actor = self.actor(&config.actor, prompt)?;
        let critic = if config.architecture.uses_critic() {
            Some(self.critic(&config.critic)?)
        } else {
            None
        };
        Ok(Agents { actor, critic })
    }
}
