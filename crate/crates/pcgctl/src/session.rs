//! Session model and the blocking body of one refinement round.

use pcg_core::agent::{AgentConfig, BackendKind, UsageTotals};
use pcg_core::executor::{execute, ExecutionReport};
use pcg_core::refine::{
    refine_with, Architecture, IterationRecord, Outcome, RefineObserver, RefineOptions, RefinementTrace,
    DEFAULT_MAX_ITERATIONS,
};
use pcg_core::registry::Registry;
use pcg_core::agent::Prompts;
use pcg_engine::MapArtifact;
use serde::{Deserialize, Serialize};

use crate::backend::AgentFactory;

/// Upper bound accepted for `max_iterations`.
pub const MAX_ITERATIONS_LIMIT: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub actor: AgentConfig,
    pub critic: AgentConfig,
    pub max_iterations: u32,
    pub architecture: Architecture,
    /// Master seed for execution.
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            actor: AgentConfig::actor(),
            critic: AgentConfig::critic(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            architecture: Architecture::ActorCritic,
            seed: 0,
        }
    }
}

impl SessionConfig {
    /// Defaults with scripted actor and rule critic; needs no network.
    pub fn scripted() -> SessionConfig {
        let mut c = SessionConfig::default();
        c.actor.backend = BackendKind::Scripted;
        c.critic.backend = BackendKind::RuleBased;
        c
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_iterations > MAX_ITERATIONS_LIMIT {
            return Err(format!("max_iterations {} exceeds {MAX_ITERATIONS_LIMIT}", self.max_iterations));
        }
        self.actor.validate().map_err(|e| format!("actor: {e}"))?;
        self.critic.validate().map_err(|e| format!("critic: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Refining,
    Executing,
    Done,
    Failed,
}

impl Phase {
    pub fn in_flight(self) -> bool {
        matches!(self, Phase::Refining | Phase::Executing)
    }
}

/// Per-round status kept in `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    /// Accumulated request the round refined.
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    pub proposals: usize,
    pub critic_calls: usize,
    pub usage: UsageTotals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub execution: Option<ExecutionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RoundSummary {
    pub fn started(round: u32, prompt: String) -> RoundSummary {
        RoundSummary {
            round,
            prompt,
            outcome: None,
            proposals: 0,
            critic_calls: 0,
            usage: UsageTotals::default(),
            execution: None,
            error: None,
        }
    }
}

/// Everything in `meta.json`; also the body of `GET /sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionMeta {
    pub session_id: String,
    pub created_at_ms: u64,
    pub user_prompt: String,
    pub followups: Vec<String>,
    pub config: SessionConfig,
    pub phase: Phase,
    /// One entry per prompt: the first plus each follow-up.
    pub rounds: Vec<RoundSummary>,
    /// Round whose map is served by `GET /sessions/{id}/map`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_round: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SessionMeta {
    /// Request for the round about to start.
    pub fn current_prompt(&self) -> String {
        self.followups
            .iter()
            .fold(self.user_prompt.clone(), |p, f| pcg_core::eval::append_followup(&p, f))
    }

    pub fn rounds_consistent(&self) -> bool {
        self.rounds.len() == 1 + self.followups.len()
            && self.rounds.iter().enumerate().all(|(i, r)| r.round as usize == i)
    }
}

pub struct RoundResult {
    pub trace: RefinementTrace,
    pub execution: Option<ExecutionReport>,
    pub artifact: Option<MapArtifact>,
}

/// Hooks a round reports progress through.
pub trait RoundObserver {
    fn iteration(&mut self, record: &IterationRecord);
    /// Refinement finished; execution is about to start.
    fn refined(&mut self, trace: &RefinementTrace);
}

/// Refines `prompt`, then executes the final plan unless refinement aborted.
#[allow(clippy::too_many_arguments)]
pub fn run_round(
    session_id: &str,
    round: u32,
    prompt: &str,
    config: &SessionConfig,
    registry: &Registry,
    prompts: &Prompts,
    agents: &dyn AgentFactory,
    observer: &mut dyn RoundObserver,
) -> RoundResult {
    struct Forward<'a>(&'a mut dyn RoundObserver);
    impl RefineObserver for Forward<'_> {
        fn on_iteration(&mut self, record: &IterationRecord) {
            self.0.iteration(record);
        }
    }

    let trace = match agents.build(config, prompt, round) {
        Ok(built) => {
            let options = RefineOptions {
                max_iterations: config.max_iterations,
                include_resources: config.architecture.includes_resources(),
                session_id: session_id.to_string(),
            };
            refine_with(
                prompt,
                registry,
                built.actor.as_ref(),
                built.critic.as_deref(),
                &options,
                prompts,
                &mut Forward(observer),
            )
        }
        Err(e) => RefinementTrace {
            session_id: session_id.to_string(),
            iterations: Vec::new(),
            outcome: Outcome::Aborted,
            final_trajectory: None,
            final_validation: Vec::new(),
            usage: UsageTotals::default(),
            error: Some(e.to_string()),
        },
    };
    observer.refined(&trace);
    let (execution, artifact) = match (&trace.final_trajectory, trace.outcome) {
        (Some(plan), Outcome::Approved | Outcome::BestEffort) => {
            let mut report = execute(plan, registry, config.seed);
            let artifact = report.artifact.take();
            (Some(report), artifact)
        }
        _ => (None, None),
    };
    RoundResult { trace, execution, artifact }
}

/// Fills a round summary from its result and returns the session phase.
pub fn summarize(summary: &mut RoundSummary, result: &RoundResult) -> Phase {
    summary.outcome = Some(result.trace.outcome);
    summary.proposals = result.trace.iterations.len();
    summary.critic_calls = result.trace.critic_calls();
    summary.usage = result.trace.usage;
    summary.execution = result.execution.clone();
    summary.error = match (&result.trace.error, &result.execution) {
        (Some(e), _) => Some(e.clone()),
        (None, None) => Some("refinement produced no executable plan".into()),
        (None, Some(report)) => report.failure().map(|s| format!("step {} ({}) failed: {}", s.step_index, s.tool_name, s.diagnostics)),
    };
    if result.artifact.is_some() {
        Phase::Done
    } else {
        Phase::Failed
    }
}
