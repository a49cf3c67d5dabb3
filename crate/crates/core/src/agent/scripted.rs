//! Canned agents replaying recorded outputs, used for offline runs and tests.

use std::sync::atomic::{AtomicUsize, Ordering};

use super::{next_revision, Actor, ActorTurn, AgentError, AgentRole, Critic, CriticTurn, TokenUsage};
use crate::trajectory::{parse_critique_detailed, parse_trajectory, Critique, Trajectory};

/// One recorded agent reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedTurn {
    pub body: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl ScriptedTurn {
    pub fn new(body: impl Into<String>) -> ScriptedTurn {
        ScriptedTurn {
            body: body.into(),
            prompt_tokens: 0,
            completion_tokens: 0,
        }
    }

    pub fn with_usage(mut self, prompt_tokens: u64, completion_tokens: u64) -> ScriptedTurn {
        self.prompt_tokens = prompt_tokens;
        self.completion_tokens = completion_tokens;
        self
    }
}

/// Behaviour once every turn has been played.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exhaustion {
    Error,
    RepeatLast,
}

#[derive(Debug)]
struct Script {
    turns: Vec<ScriptedTurn>,
    cursor: AtomicUsize,
    exhaustion: Exhaustion,
    role: AgentRole,
}

impl Script {
    fn next(&self) -> Result<(&ScriptedTurn, TokenUsage), AgentError> {
        let i = self.cursor.fetch_add(1, Ordering::SeqCst);
        let turn = match (self.turns.get(i), self.exhaustion) {
            (Some(t), _) => t,
            (None, Exhaustion::RepeatLast) => self.turns.last().ok_or(AgentError::ScriptExhausted(self.role))?,
            (None, Exhaustion::Error) => return Err(AgentError::ScriptExhausted(self.role)),
        };
        let usage = TokenUsage {
            prompt_tokens: turn.prompt_tokens,
            completion_tokens: turn.completion_tokens,
            agent_role: self.role,
        };
        Ok((turn, usage))
    }
}

#[derive(Debug)]
pub struct ScriptedActor(Script);

impl ScriptedActor {
    pub fn new(turns: Vec<ScriptedTurn>, exhaustion: Exhaustion) -> ScriptedActor {
        ScriptedActor(Script {
            turns,
            cursor: AtomicUsize::new(0),
            exhaustion,
            role: AgentRole::Actor,
        })
    }

    /// Always proposes `trajectory`.
    pub fn fixed(trajectory: &Trajectory) -> ScriptedActor {
        ScriptedActor::new(vec![ScriptedTurn::new(trajectory.render())], Exhaustion::RepeatLast)
    }

    pub fn calls(&self) -> usize {
        self.0.cursor.load(Ordering::SeqCst)
    }
}

impl Actor for ScriptedActor {
    fn propose(&self, turn: &ActorTurn<'_>) -> Result<(Trajectory, TokenUsage), AgentError> {
        let (scripted, usage) = self.0.next()?;
        let mut t = parse_trajectory(&scripted.body).map_err(|e| AgentError::Unparseable {
            attempts: 1,
            last_error: e,
        })?;
        t.revision = next_revision(turn.context);
        Ok((t, usage))
    }
}

#[derive(Debug)]
pub struct ScriptedCritic(Script);

impl ScriptedCritic {
    pub fn new(turns: Vec<ScriptedTurn>, exhaustion: Exhaustion) -> ScriptedCritic {
        ScriptedCritic(Script {
            turns,
            cursor: AtomicUsize::new(0),
            exhaustion,
            role: AgentRole::Critic,
        })
    }

    pub fn calls(&self) -> usize {
        self.0.cursor.load(Ordering::SeqCst)
    }
}

impl Critic for ScriptedCritic {
    fn review(&self, turn: &CriticTurn<'_>) -> Result<(Critique, TokenUsage), AgentError> {
        let (scripted, usage) = self.0.next()?;
        let parsed = parse_critique_detailed(&scripted.body, Some(turn.trajectory.tool_plan.len()))
            .map_err(|e| AgentError::Unparseable {
                attempts: 1,
                last_error: e,
            })?;
        for w in &parsed.warnings {
            tracing::warn!(warning = %w, "scripted critique normalized");
        }
        Ok((parsed.critique, usage))
    }
}
