//! Chat-completions backend over blocking HTTP.
//!
//! Speaks the widely used `{model, messages, temperature, max_tokens}`
//! request shape and reads `choices[0].message.content` plus `usage` from
//! the reply. Transient failures are retried with exponential backoff.

use std::fmt;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{next_revision, Actor, ActorTurn, AgentConfig, AgentError, AgentRole, Critic, CriticTurn, RenderedPrompt, TokenUsage};
use crate::trajectory::{parse_critique_detailed, parse_trajectory, Critique, ParseError, Trajectory};

/// Extra attempts granted when a reply does not parse.
const REPROMPTS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "system".into(), content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> ChatMessage {
        ChatMessage { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub content: String,
    pub usage: TokenUsage,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("endpoint rejected the credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("endpoint returned HTTP {status} after {attempts} attempts")]
    Server { status: u16, attempts: u32 },
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { message: String, attempts: u32 },
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff: Duration::from_secs(1),
            timeout: Duration::from_secs(120),
        }
    }
}

enum Attempt {
    Done(ChatReply),
    Retry(ChatError),
    Fatal(ChatError),
}

pub struct ChatClient {
    agent: ureq::Agent,
    config: AgentConfig,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl fmt::Debug for ChatClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChatClient")
            .field("endpoint", &self.config.endpoint)
            .field("model", &self.config.model_id)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("retry", &self.retry)
            .finish()
    }
}

impl ChatClient {
    pub fn new(config: AgentConfig, api_key: Option<String>, retry: RetryPolicy) -> ChatClient {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(retry.timeout))
            .build()
            .into();
        ChatClient { agent, config, api_key, retry }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn chat(&self, messages: &[ChatMessage]) -> Result<ChatReply, ChatError> {
        let body = json!({
            "model": self.config.model_id,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        });
        let mut backoff = self.retry.initial_backoff;
        let max = self.retry.max_attempts.max(1);
        for attempt in 1..=max {
            tracing::debug!(endpoint = %self.config.endpoint, role = %self.config.role, attempt, "chat request");
            match self.attempt(&body, attempt) {
                Attempt::Done(reply) => return Ok(reply),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) if attempt == max => return Err(e),
                Attempt::Retry(e) => {
                    tracing::warn!(attempt, error = %e, "chat request failed, retrying");
                    thread::sleep(backoff);
                    backoff = backoff.saturating_mul(2);
                }
            }
        }
        unreachable!("loop returns on the last attempt")
    }

    fn attempt(&self, body: &Value, attempts: u32) -> Attempt {
        let mut request = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match request.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(ChatError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(ChatError::Transport {
                    message: e.to_string(),
                    attempts,
                })
            }
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => return Attempt::Retry(ChatError::Timeout { attempts }),
            Err(e) => {
                return Attempt::Retry(ChatError::Transport {
                    message: e.to_string(),
                    attempts,
                })
            }
        };
        match status {
            200..=299 => match parse_reply(&text, self.config.role) {
                Ok((content, usage)) => Attempt::Done(ChatReply { content, usage, attempts }),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(ChatError::Auth { status }),
            429 => Attempt::Retry(ChatError::RateLimited { attempts }),
            500..=599 => Attempt::Retry(ChatError::Server { status, attempts }),
            _ => Attempt::Fatal(ChatError::Http {
                status,
                body: text.chars().take(200).collect(),
            }),
        }
    }
}

fn parse_reply(text: &str, role: AgentRole) -> Result<(String, TokenUsage), ChatError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ChatError::BadResponse(e.to_string()))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| ChatError::BadResponse("missing choices[0].message.content".into()))?
        .to_string();
    let count = |p: &str| v.pointer(p).and_then(Value::as_u64);
    let usage = match (count("/usage/prompt_tokens"), count("/usage/completion_tokens")) {
        (Some(p), Some(c)) => TokenUsage { prompt_tokens: p, completion_tokens: c, agent_role: role },
        _ => {
            tracing::warn!("completion response lacks usage; counting 0 tokens");
            TokenUsage::zero(role)
        }
    };
    Ok((content, usage))
}

fn reprompt(error: &ParseError) -> String {
    format!(
        "Your reply could not be used: {error}. Reply again with exactly one JSON object in the required shape and nothing else."
    )
}

/// Runs the conversation, re-prompting on parse failures.
fn converse<T>(
    client: &ChatClient,
    prompt: &RenderedPrompt,
    mut parse: impl FnMut(&str) -> Result<T, ParseError>,
) -> Result<(T, TokenUsage), AgentError> {
    let mut messages = vec![ChatMessage::system(&prompt.system), ChatMessage::user(&prompt.user)];
    let mut usage = TokenUsage::zero(client.config.role);
    let attempts = REPROMPTS + 1;
    for attempt in 1..=attempts {
        let reply = client.chat(&messages)?;
        usage += reply.usage;
        match parse(&reply.content) {
            Ok(value) => return Ok((value, usage)),
            Err(e) if attempt == attempts => {
                return Err(AgentError::Unparseable { attempts, last_error: e })
            }
            Err(e) => {
                tracing::warn!(attempt, error = %e, "unparseable agent output, re-prompting");
                messages.push(ChatMessage::assistant(reply.content));
                messages.push(ChatMessage::user(reprompt(&e)));
            }
        }
    }
    unreachable!("loop returns on the last attempt")
}

#[derive(Debug)]
pub struct LlmActor {
    client: ChatClient,
}

impl LlmActor {
    pub fn new(client: ChatClient) -> LlmActor {
        LlmActor { client }
    }
}

impl Actor for LlmActor {
    fn propose(&self, turn: &ActorTurn<'_>) -> Result<(Trajectory, TokenUsage), AgentError> {
        let (mut t, usage) = converse(&self.client, turn.prompt, parse_trajectory)?;
        t.revision = next_revision(turn.context);
        Ok((t, usage))
    }
}

#[derive(Debug)]
pub struct LlmCritic {
    client: ChatClient,
}

impl LlmCritic {
    pub fn new(client: ChatClient) -> LlmCritic {
        LlmCritic { client }
    }
}

impl Critic for LlmCritic {
    fn review(&self, turn: &CriticTurn<'_>) -> Result<(Critique, TokenUsage), AgentError> {
        let plan_len = turn.trajectory.tool_plan.len();
        converse(&self.client, turn.prompt, |raw| {
            let parsed = parse_critique_detailed(raw, Some(plan_len))?;
            for w in &parsed.warnings {
                tracing::warn!(warning = %w, "critique normalized");
            }
            Ok(parsed.critique)
        })
    }
}
