use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{evaluate, Constraint, ConstraintResult, MapFamily};
use crate::agent::{Actor, Critic, Prompts, UsageTotals};
use crate::executor::execute;
use crate::refine::{refine_with, Architecture, IterationRecord, Outcome, RefineOptions, RefinementTrace};
use crate::registry::Registry;
use crate::trajectory::{binding_reference, Trajectory};

/// Builds a fresh actor for a trial or round.
pub type ActorFactory<'a> = &'a (dyn Fn(u32) -> Box<dyn Actor> + Sync);
/// Builds a fresh critic for a trial or round.
pub type CriticFactory<'a> = &'a (dyn Fn(u32) -> Box<dyn Critic> + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Success,
    Failure,
}

/// Structural difference between a plan and a golden reference.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDiff {
    pub missing_tools: Vec<String>,
    pub extra_tools: Vec<String>,
    pub parameter_differences: usize,
}

/// Tool multiset difference, plus differing literal arguments between
/// same-tool steps paired in order. Binding references and seeds are
/// ignored.
pub fn plan_diff(candidate: &Trajectory, golden: &Trajectory) -> PlanDiff {
    let by_tool = |t: &Trajectory| {
        let mut m: BTreeMap<String, Vec<BTreeMap<String, Value>>> = BTreeMap::new();
        for s in &t.tool_plan {
            let literal = s
                .arguments
                .iter()
                .filter(|(k, v)| k.as_str() != "seed" && binding_reference(v).is_none())
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            m.entry(s.tool_name.clone()).or_default().push(literal);
        }
        m
    };
    let c = by_tool(candidate);
    let g = by_tool(golden);
    let mut diff = PlanDiff::default();
    for (tool, g_steps) in &g {
        let c_steps = c.get(tool).map_or(&[][..], Vec::as_slice);
        for _ in c_steps.len()..g_steps.len() {
            diff.missing_tools.push(tool.clone());
        }
        for (a, b) in c_steps.iter().zip(g_steps) {
            let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
            diff.parameter_differences += keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).count();
        }
    }
    for (tool, c_steps) in &c {
        let g_len = g.get(tool).map_or(0, Vec::len);
        for _ in g_len..c_steps.len() {
            diff.extra_tools.push(tool.clone());
        }
    }
    diff
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u32,
    pub seed: u64,
    pub outcome: TrialOutcome,
    pub refinement: Outcome,
    pub proposals: usize,
    pub critic_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    pub constraint_results: Vec<ConstraintResult>,
    pub failure_reasons: Vec<String>,
    pub mistakes: Vec<String>,
    pub usage: UsageTotals,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_diff: Option<PlanDiff>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_digest: Option<String>,
}

impl TrialRecord {
    pub fn objective_achieved(&self) -> bool {
        self.outcome == TrialOutcome::Success && self.mistakes.is_empty()
    }
}

/// Refines, executes and checks one request.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    trial: u32,
    prompt: &str,
    registry: &Registry,
    actor: &dyn Actor,
    critic: Option<&dyn Critic>,
    architecture: Architecture,
    max_iterations: u32,
    seed: u64,
    constraints: &[Constraint],
    golden: Option<&Trajectory>,
) -> (TrialRecord, RefinementTrace) {
    let options = RefineOptions {
        max_iterations,
        include_resources: architecture.includes_resources(),
        session_id: format!("trial-{trial}"),
    };
    let critic = critic.filter(|_| architecture.uses_critic());
    let trace = refine_with(prompt, registry, actor, critic, &options, &Prompts::bundled(), &mut |_: &IterationRecord| {});
    let mut record = TrialRecord {
        trial,
        seed,
        outcome: TrialOutcome::Failure,
        refinement: trace.outcome,
        proposals: trace.iterations.len(),
        critic_calls: trace.critic_calls(),
        failed_step: None,
        constraint_results: Vec::new(),
        failure_reasons: Vec::new(),
        mistakes: Vec::new(),
        usage: trace.usage,
        plan_diff: None,
        final_digest: None,
    };
    let Some(plan) = &trace.final_trajectory else {
        record.failure_reasons.push("refinement_aborted".into());
        return (record, trace);
    };
    record.final_digest = Some(plan.digest());
    record.plan_diff = golden.map(|g| plan_diff(plan, g));
    if trace.outcome == Outcome::Aborted {
        record.failure_reasons.push("refinement_aborted".into());
        return (record, trace);
    }
    let report = execute(plan, registry, seed);
    let Some(artifact) = report.artifact else {
        record.failed_step = report.failed_step;
        record.failure_reasons.push("execution_failed".into());
        return (record, trace);
    };
    record.constraint_results = evaluate(&artifact, constraints);
    for r in &record.constraint_results {
        if r.is_failure() {
            record.failure_reasons.push(r.constraint_id.clone());
        } else if r.is_mistake() {
            record.mistakes.push(r.constraint_id.clone());
        }
    }
    if record.failure_reasons.is_empty() {
        record.outcome = TrialOutcome::Success;
    }
    (record, trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOneConfig {
    pub architecture: Architecture,
    pub trials: u32,
    pub max_iterations: u32,
    pub seed_base: u64,
    pub prompt: String,
}

impl Default for ExperimentOneConfig {
    fn default() -> Self {
        ExperimentOneConfig {
            architecture: Architecture::ActorCritic,
            trials: 10,
            max_iterations: crate::refine::DEFAULT_MAX_ITERATIONS,
            seed_base: 0,
            prompt: MapFamily::MountainIsland.prompt().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOneReport {
    pub architecture: Architecture,
    pub trials: u32,
    pub successes: u32,
    /// Fraction of successful trials.
    pub success_rate: f64,
    /// Mean mistake count over successful trials; 0 when none succeeded.
    pub average_mistakes: f64,
    /// Failure reason counts over failed trials.
    pub failure_reasons: BTreeMap<String, u32>,
    /// Mistake counts over successful trials.
    pub mistake_reasons: BTreeMap<String, u32>,
    pub usage: UsageTotals,
    pub records: Vec<TrialRecord>,
}

impl ExperimentOneReport {
    pub fn from_records(architecture: Architecture, records: Vec<TrialRecord>) -> ExperimentOneReport {
        let trials = records.len() as u32;
        let successes = records.iter().filter(|r| r.outcome == TrialOutcome::Success).count() as u32;
        let mut failure_reasons = BTreeMap::new();
        let mut mistake_reasons = BTreeMap::new();
        let mut mistakes = 0usize;
        let mut usage = UsageTotals::default();
        for r in &records {
            usage.merge(&r.usage);
            match r.outcome {
                TrialOutcome::Failure => {
                    for reason in &r.failure_reasons {
                        *failure_reasons.entry(reason.clone()).or_insert(0) += 1;
                    }
                }
                TrialOutcome::Success => {
                    mistakes += r.mistakes.len();
                    for m in &r.mistakes {
                        *mistake_reasons.entry(m.clone()).or_insert(0) += 1;
                    }
                }
            }
        }
        ExperimentOneReport {
            architecture,
            trials,
            successes,
            success_rate: if trials == 0 { 0.0 } else { f64::from(successes) / f64::from(trials) },
            average_mistakes: if successes == 0 { 0.0 } else { mistakes as f64 / f64::from(successes) },
            failure_reasons,
            mistake_reasons,
            usage,
            records,
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "## {}\n", self.architecture.as_str());
        out.push_str("| metric | value |\n|---|---|\n");
        let _ = writeln!(out, "| trials | {} |", self.trials);
        let _ = writeln!(out, "| success rate | {:.0}% |", self.success_rate * 100.0);
        let _ = writeln!(out, "| average mistakes per successful run | {:.2} |", self.average_mistakes);
        let _ = writeln!(out, "| tokens (actor / critic) | {} / {} |",
            self.usage.actor_prompt_tokens + self.usage.actor_completion_tokens,
            self.usage.critic_prompt_tokens + self.usage.critic_completion_tokens);
        for (title, map) in [("failure reasons", &self.failure_reasons), ("mistakes", &self.mistake_reasons)] {
            let _ = writeln!(out, "\n{title}:");
            if map.is_empty() {
                out.push_str("- none\n");
            }
            for (k, v) in map {
                let _ = writeln!(out, "- {k}: {v}");
            }
        }
        out
    }
}

/// Runs `config.trials` independent trials; trial `i` executes with seed
/// `seed_base + i` and gets fresh agents from the factories.
pub fn run_experiment_one(
    config: &ExperimentOneConfig,
    registry: &Registry,
    actor: ActorFactory<'_>,
    critic: CriticFactory<'_>,
) -> ExperimentOneReport {
    let constraints = MapFamily::MountainIsland.constraints();
    let golden = MapFamily::MountainIsland.golden();
    let records = (0..config.trials)
        .map(|i| {
            let a = actor(i);
            let c = critic(i);
            let (record, _) = run_trial(
                i,
                &config.prompt,
                registry,
                a.as_ref(),
                Some(c.as_ref()),
                config.architecture,
                config.max_iterations,
                config.seed_base + u64::from(i),
                &constraints,
                Some(&golden),
            );
            tracing::info!(trial = i, outcome = ?record.outcome, "trial finished");
            record
        })
        .collect();
    ExperimentOneReport::from_records(config.architecture, records)
}

/// Supplies the designer's next prompt after an unsatisfying round.
pub trait FollowupSource {
    fn next_followup(&mut self, round: u32, results: &[ConstraintResult]) -> Option<String>;
}

/// Replays a fixed list of follow-ups.
#[derive(Debug, Clone, Default)]
pub struct ScriptedFollowups(pub std::collections::VecDeque<String>);

impl ScriptedFollowups {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> ScriptedFollowups {
        ScriptedFollowups(items.into_iter().map(Into::into).collect())
    }
}

impl FollowupSource for ScriptedFollowups {
    fn next_followup(&mut self, _round: u32, _results: &[ConstraintResult]) -> Option<String> {
        self.0.pop_front()
    }
}

/// Writes a follow-up naming every unmet constraint, up to `max_rounds`.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintFeedback {
    pub max_rounds: u32,
}

impl FollowupSource for ConstraintFeedback {
    fn next_followup(&mut self, round: u32, results: &[ConstraintResult]) -> Option<String> {
        if round + 1 >= self.max_rounds {
            return None;
        }
        let unmet: Vec<String> = results
            .iter()
            .filter(|r| !r.satisfied)
            .map(|r| format!("{} ({})", r.constraint_id, r.detail))
            .collect();
        if unmet.is_empty() {
            Some("The map could not be produced. Please fix the plan.".into())
        } else {
            Some(format!("The map is not right yet: {}.", unmet.join("; ")))
        }
    }
}

/// Request for the next round: the accumulated prompt with a follow-up
/// appended.
pub fn append_followup(prompt: &str, followup: &str) -> String {
    format!("{prompt}\n\nFollow-up: {followup}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub prompt: String,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTwoConfig {
    pub architecture: Architecture,
    pub family: MapFamily,
    pub max_iterations: u32,
    pub seed: u64,
    /// Upper bound on rounds, including the first prompt.
    pub max_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTwoRow {
    pub architecture: Architecture,
    pub family: MapFamily,
    pub achieved: bool,
    /// Prompts used, including the first; meaningful when achieved.
    pub prompts_required: u32,
    /// Token usage summed over every round.
    pub tokens_used: UsageTotals,
    pub rounds: Vec<RoundRecord>,
}

/// Runs one family under one architecture, feeding follow-ups until every
/// constraint holds or the follow-ups or round budget run out. A follow-up
/// is appended to the accumulated request.
pub fn run_experiment_two(
    config: &ExperimentTwoConfig,
    registry: &Registry,
    actor: ActorFactory<'_>,
    critic: CriticFactory<'_>,
    followups: &mut dyn FollowupSource,
) -> ExperimentTwoRow {
    let constraints = config.family.constraints();
    let golden = config.family.golden();
    let mut prompt = config.family.prompt().to_string();
    let mut rounds = Vec::new();
    let mut achieved = false;
    for round in 0..config.max_rounds.max(1) {
        let a = actor(round);
        let c = critic(round);
        let (record, _) = run_trial(
            round,
            &prompt,
            registry,
            a.as_ref(),
            Some(c.as_ref()),
            config.architecture,
            config.max_iterations,
            config.seed,
            &constraints,
            Some(&golden),
        );
        achieved = record.objective_achieved();
        let results = record.constraint_results.clone();
        rounds.push(RoundRecord { round, prompt: prompt.clone(), record });
        if achieved {
            break;
        }
        match followups.next_followup(round, &results) {
            Some(next) => prompt = append_followup(&prompt, &next),
            None => break,
        }
    }
    let mut tokens_used = UsageTotals::default();
    for r in &rounds {
        tokens_used.merge(&r.record.usage);
    }
    ExperimentTwoRow {
        architecture: config.architecture,
        family: config.family,
        achieved,
        prompts_required: rounds.len() as u32,
        tokens_used,
        rounds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTwoReport {
    pub rows: Vec<ExperimentTwoRow>,
}

impl ExperimentTwoReport {
    /// Two tables, prompts required and tokens used, with families as rows
    /// and architectures as columns.
    pub fn to_markdown(&self) -> String {
        let mut archs: Vec<Architecture> = Vec::new();
        let mut families: Vec<MapFamily> = Vec::new();
        for r in &self.rows {
            if !archs.contains(&r.architecture) {
                archs.push(r.architecture);
            }
            if !families.contains(&r.family) {
                families.push(r.family);
            }
        }
        let mut out = String::new();
        type Cell<'a> = &'a dyn Fn(&ExperimentTwoRow) -> String;
        let tables: [(&str, Cell); 2] = [
            ("Prompts required", &|r| {
                if r.achieved {
                    format!("{} prompt{}", r.prompts_required, if r.prompts_required == 1 { "" } else { "s" })
                } else {
                    format!("not achieved after {}", r.prompts_required)
                }
            }),
            ("Tokens used", &|r| r.tokens_used.total().to_string()),
        ];
        for (title, cell) in tables {
            let _ = writeln!(out, "### {title}\n");
            out.push_str("| family |");
            for a in &archs {
                let _ = write!(out, " {} |", a.as_str());
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(archs.len()));
            out.push('\n');
            for f in &families {
                let _ = write!(out, "| {f} |");
                for a in &archs {
                    let value = match self.rows.iter().find(|r| r.family == *f && r.architecture == *a) {
                        Some(r) => cell(r),
                        None => "-".into(),
                    };
                    let _ = write!(out, " {value} |");
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }
}
