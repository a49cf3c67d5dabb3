//! Test doubles that record what agents were shown.

use std::sync::Mutex;

use pcg_core::agent::{Actor, ActorTurn, AgentError, Critic, CriticTurn, TokenUsage};
use pcg_core::trajectory::{Critique, Trajectory};

/// Wraps an actor and keeps every user prompt it received.
pub struct RecordingActor<A> {
    pub inner: A,
    pub prompts: Mutex<Vec<String>>,
}

impl<A> RecordingActor<A> {
    pub fn new(inner: A) -> Self {
        RecordingActor { inner, prompts: Mutex::new(Vec::new()) }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

impl<A: Actor> Actor for RecordingActor<A> {
    fn propose(&self, turn: &ActorTurn<'_>) -> Result<(Trajectory, TokenUsage), AgentError> {
        self.prompts.lock().unwrap().push(format!("{}\n{}", turn.prompt.system, turn.prompt.user));
        self.inner.propose(turn)
    }
}

/// Critic that answers `revise` until call `approve_at` (0-based), then
/// approves. `None` never approves.
pub struct CountingCritic {
    pub approve_at: Option<usize>,
    pub calls: Mutex<usize>,
}

impl CountingCritic {
    pub fn new(approve_at: Option<usize>) -> Self {
        CountingCritic { approve_at, calls: Mutex::new(0) }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl Critic for CountingCritic {
    fn review(&self, turn: &CriticTurn<'_>) -> Result<(Critique, TokenUsage), AgentError> {
        let mut calls = self.calls.lock().unwrap();
        let this = *calls;
        *calls += 1;
        let usage = TokenUsage { prompt_tokens: 100, completion_tokens: 10, agent_role: pcg_core::agent::AgentRole::Critic };
        if Some(this) == self.approve_at {
            return Ok((Critique::approve(), usage));
        }
        let issue = pcg_core::trajectory::BlockingIssue {
            step_index: Some(0),
            dimension: pcg_core::trajectory::Dimension::GoalAlignment,
            description: format!("round {this}: revision {} is not good enough", turn.trajectory.revision),
            correction_suggestion: Some("try again".into()),
        };
        Ok((Critique::new(vec![issue], vec![]), usage))
    }
}
