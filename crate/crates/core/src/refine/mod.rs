//! The actor-critic refinement loop.
//!
//! The actor proposes a trajectory; while the iteration budget lasts the
//! critic reviews it, and on `revise` the critique and the reviewed
//! trajectory replace the previous ones in the context before the actor
//! proposes again. The loop ends on approval, or after `K` reviews with the
//! last proposal as a best-effort result. Nothing is executed here.

mod context;
mod trace;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agent::{validate_plan, Actor, ActorTurn, AgentError, Critic, CriticTurn, Prompts, TokenUsage, UsageTotals};
use crate::registry::Registry;
use crate::trajectory::{BlockingIssue, Critique, Trajectory};

pub use context::{update_context, ContextBuffer};
pub use trace::{parse_trace_jsonl, trace_to_jsonl, TraceLine, TraceLog};

pub const DEFAULT_MAX_ITERATIONS: u32 = 10;

/// Agent configuration compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Actor and critic, both given documentation and examples.
    ActorCritic,
    /// Actor alone with documentation and examples.
    ActorWithResources,
    /// Actor alone with the user prompt only.
    ActorBare,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [
        Architecture::ActorCritic,
        Architecture::ActorWithResources,
        Architecture::ActorBare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::ActorCritic => "actor_critic",
            Architecture::ActorWithResources => "actor_with_resources",
            Architecture::ActorBare => "actor_bare",
        }
    }

    pub fn uses_critic(self) -> bool {
        self == Architecture::ActorCritic
    }

    pub fn includes_resources(self) -> bool {
        self != Architecture::ActorBare
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Approved,
    BestEffort,
    Aborted,
}

/// One proposal and, if it was reviewed, its critique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub revision: u32,
    pub trajectory_digest: String,
    pub trajectory: Trajectory,
    pub actor_usage: TokenUsage,
    pub actor_prompt_chars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critique: Option<Critique>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critic_usage: Option<TokenUsage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critic_prompt_chars: Option<usize>,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrace {
    pub session_id: String,
    pub iterations: Vec<IterationRecord>,
    pub outcome: Outcome,
    pub final_trajectory: Option<Trajectory>,
    /// Registry findings on the final trajectory; informational only.
    pub final_validation: Vec<BlockingIssue>,
    pub usage: UsageTotals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RefinementTrace {
    pub fn critic_calls(&self) -> usize {
        self.iterations.iter().filter(|r| r.critique.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOptions {
    pub max_iterations: u32,
    pub include_resources: bool,
    pub session_id: String,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            include_resources: true,
            session_id: String::new(),
        }
    }
}

/// Receives each iteration record as soon as it is final.
pub trait RefineObserver {
    fn on_iteration(&mut self, record: &IterationRecord);
}

impl<F: FnMut(&IterationRecord)> RefineObserver for F {
    fn on_iteration(&mut self, record: &IterationRecord) {
        self(record)
    }
}

/// Runs the loop with `K = max_iterations` critic reviews at most, full
/// resources and the bundled prompts.
pub fn refine(
    user_prompt: &str,
    registry: &Registry,
    actor: &dyn Actor,
    critic: &dyn Critic,
    max_iterations: u32,
) -> RefinementTrace {
    let options = RefineOptions {
        max_iterations,
        ..RefineOptions::default()
    };
    refine_with(user_prompt, registry, actor, Some(critic), &options, &Prompts::bundled(), &mut |_: &IterationRecord| {})
}

/// Full-control entry point. Without a critic the actor proposes once.
pub fn refine_with(
    user_prompt: &str,
    registry: &Registry,
    actor: &dyn Actor,
    critic: Option<&dyn Critic>,
    options: &RefineOptions,
    prompts: &Prompts,
    observer: &mut dyn RefineObserver,
) -> RefinementTrace {
    let mut buffer = if options.include_resources {
        ContextBuffer::with_resources(user_prompt, registry)
    } else {
        ContextBuffer::bare(user_prompt)
    };
    let budget = if critic.is_some() { options.max_iterations } else { 0 };
    let mut trace = RefinementTrace {
        session_id: options.session_id.clone(),
        iterations: Vec::new(),
        outcome: Outcome::Aborted,
        final_trajectory: None,
        final_validation: Vec::new(),
        usage: UsageTotals::default(),
        error: None,
    };

    let mut reviews = 0;
    let mut record = match propose(actor, prompts, &buffer) {
        Ok(r) => r,
        Err(e) => return abort(trace, registry, e),
    };
    trace.usage.add(&record.actor_usage);
    loop {
        let Some(critic) = critic.filter(|_| reviews < budget) else {
            observer.on_iteration(&record);
            trace.final_trajectory = Some(record.trajectory.clone());
            trace.iterations.push(record);
            trace.outcome = Outcome::BestEffort;
            break;
        };
        let started = Instant::now();
        let prompt = prompts.critic_prompt(&buffer, &record.trajectory);
        let turn = CriticTurn {
            context: &buffer,
            trajectory: &record.trajectory,
            registry,
            prompt: &prompt,
        };
        let reviewed = critic.review(&turn);
        reviews += 1;
        record.wall_time_ms += started.elapsed().as_millis() as u64;
        let (critique, usage) = match reviewed {
            Ok(r) => r,
            Err(e) => {
                observer.on_iteration(&record);
                trace.final_trajectory = Some(record.trajectory.clone());
                trace.iterations.push(record);
                return abort(trace, registry, e);
            }
        };
        trace.usage.add(&usage);
        record.critique = Some(critique.clone());
        record.critic_usage = Some(usage);
        record.critic_prompt_chars = Some(prompt.chars());
        observer.on_iteration(&record);
        let approved = critique.is_approved();
        let trajectory = record.trajectory.clone();
        trace.iterations.push(record);
        if approved {
            trace.final_trajectory = Some(trajectory);
            trace.outcome = Outcome::Approved;
            break;
        }
        buffer.update(trajectory.clone(), critique);
        record = match propose(actor, prompts, &buffer) {
            Ok(r) => r,
            Err(e) => {
                trace.final_trajectory = Some(trajectory);
                return abort(trace, registry, e);
            }
        };
        trace.usage.add(&record.actor_usage);
    }
    if let Some(t) = &trace.final_trajectory {
        trace.final_validation = validate_plan(t, registry);
    }
    trace
}

fn propose(actor: &dyn Actor, prompts: &Prompts, buffer: &ContextBuffer) -> Result<IterationRecord, AgentError> {
    let started = Instant::now();
    let prompt = prompts.actor_prompt(buffer);
    let (trajectory, actor_usage) = actor.propose(&ActorTurn { context: buffer, prompt: &prompt })?;
    Ok(IterationRecord {
        revision: trajectory.revision,
        trajectory_digest: trajectory.digest(),
        trajectory,
        actor_usage,
        actor_prompt_chars: prompt.chars(),
        critique: None,
        critic_usage: None,
        critic_prompt_chars: None,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

fn abort(mut trace: RefinementTrace, registry: &Registry, error: AgentError) -> RefinementTrace {
    tracing::warn!(session = %trace.session_id, error = %error, "refinement aborted");
    trace.outcome = Outcome::Aborted;
    trace.error = Some(error.to_string());
    if let Some(t) = &trace.final_trajectory {
        trace.final_validation = validate_plan(t, registry);
    }
    trace
}
