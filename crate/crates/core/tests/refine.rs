mod support;

use pcg_core::agent::{
    Actor, AgentError, AgentRole, Critic, CriticTurn, Exhaustion, Prompts, RuleCritic, ScriptedActor, ScriptedCritic,
    ScriptedTurn, TokenUsage,
};
use pcg_core::eval::MapFamily;
use pcg_core::refine::{
    parse_trace_jsonl, refine, refine_with, trace_to_jsonl, ContextBuffer, IterationRecord, Outcome, RefineOptions,
};
use pcg_core::registry::Registry;
use pcg_core::trajectory::{parse_trajectory, Critique, Trajectory};
use proptest::prelude::*;
use support::agents::{CountingCritic, RecordingActor};

fn golden() -> Trajectory {
    MapFamily::MountainIsland.golden()
}

#[test]
fn approve_on_first_review() {
    let registry = Registry::bundled();
    let actor = ScriptedActor::fixed(&golden());
    let trace = refine("map", &registry, &actor, &RuleCritic, 10);
    assert_eq!(trace.outcome, Outcome::Approved);
    assert_eq!(trace.iterations.len(), 1);
    assert_eq!(trace.critic_calls(), 1);
    assert_eq!(trace.final_trajectory.as_ref().unwrap().tool_plan, golden().tool_plan);
    assert!(trace.final_validation.is_empty());
}

#[test]
fn never_approving_critic_runs_full_budget() {
    let registry = Registry::bundled();
    for k in [0u32, 1, 3, 10] {
        let actor = ScriptedActor::fixed(&golden());
        let critic = CountingCritic::new(None);
        let trace = refine("map", &registry, &actor, &critic, k);
        assert_eq!(actor.calls(), k as usize + 1, "K={k}");
        assert_eq!(critic.calls(), k as usize, "K={k}");
        assert_eq!(trace.iterations.len(), k as usize + 1);
        assert_eq!(trace.outcome, Outcome::BestEffort);
        let last = trace.iterations.last().unwrap();
        assert!(last.critique.is_none());
        assert_eq!(trace.final_trajectory.as_ref().unwrap().revision, k);
        assert_eq!(last.revision, k);
    }
}

#[test]
fn approval_at_review_j_stops_there() {
    let registry = Registry::bundled();
    for j in 0..6 {
        let actor = ScriptedActor::fixed(&golden());
        let critic = CountingCritic::new(Some(j));
        let trace = refine("map", &registry, &actor, &critic, 10);
        assert_eq!(trace.outcome, Outcome::Approved);
        assert_eq!(actor.calls(), j + 1);
        assert_eq!(critic.calls(), j + 1);
        assert_eq!(trace.final_trajectory.unwrap().revision, j as u32);
    }
}

#[test]
fn context_holds_only_latest_trajectory_and_critique() {
    let registry = Registry::bundled();
    let actor = RecordingActor::new(ScriptedActor::fixed(&golden()));
    let critic = CountingCritic::new(None);
    let trace = refine("a small island", &registry, &actor, &critic, 10);
    let prompts = actor.prompts();
    assert_eq!(prompts.len(), 11);
    assert_eq!(prompts[0].matches("<current_trajectory>").count(), 0);
    assert_eq!(prompts[0].matches("<latest_critique>").count(), 0);
    for (i, p) in prompts.iter().enumerate().skip(1) {
        assert_eq!(p.matches("<current_trajectory>").count(), 1, "prompt {i}");
        assert_eq!(p.matches("<latest_critique>").count(), 1, "prompt {i}");
        assert!(p.contains(&format!("round {}: revision {}", i - 1, i - 1)), "prompt {i} lacks its own critique");
        assert!(!p.contains(&format!("round {}:", i.saturating_sub(2))) || i < 2, "prompt {i} kept an older critique");
    }
    let lens: Vec<usize> = trace.iterations.iter().map(|r| r.actor_prompt_chars).collect();
    let (min, max) = (lens[1..].iter().min().unwrap(), lens[1..].iter().max().unwrap());
    assert!(max - min <= 8, "prompt size drifts: {lens:?}");
}

#[test]
fn revisions_increase_by_one() {
    let registry = Registry::bundled();
    let actor = ScriptedActor::fixed(&golden());
    let critic = CountingCritic::new(Some(4));
    let trace = refine("map", &registry, &actor, &critic, 10);
    let revs: Vec<u32> = trace.iterations.iter().map(|r| r.revision).collect();
    assert_eq!(revs, vec![0, 1, 2, 3, 4]);
}

#[test]
fn single_agent_architectures_propose_once() {
    let registry = Registry::bundled();
    for resources in [true, false] {
        let actor = RecordingActor::new(ScriptedActor::fixed(&golden()));
        let options = RefineOptions { max_iterations: 10, include_resources: resources, session_id: "s".into() };
        let trace = refine_with("map", &registry, &actor, None, &options, &Prompts::bundled(), &mut |_: &IterationRecord| {});
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(trace.critic_calls(), 0);
        assert_eq!(trace.outcome, Outcome::BestEffort);
        let p = &actor.prompts()[0];
        assert_eq!(p.contains("<documentation>"), resources);
        assert_eq!(p.contains("<usage_examples>"), resources);
    }
}

struct FailingCritic;

impl Critic for FailingCritic {
    fn review(&self, _turn: &CriticTurn<'_>) -> Result<(Critique, TokenUsage), AgentError> {
        Err(AgentError::ScriptExhausted(AgentRole::Critic))
    }
}

#[test]
fn agent_failures_abort_but_keep_progress() {
    let registry = Registry::bundled();
    let actor = ScriptedActor::fixed(&golden());
    let trace = refine("map", &registry, &actor, &FailingCritic, 10);
    assert_eq!(trace.outcome, Outcome::Aborted);
    assert_eq!(trace.iterations.len(), 1);
    assert!(trace.final_trajectory.is_some());
    assert!(trace.error.as_deref().unwrap().contains("no turns left"));

    let body = golden().render();
    let actor = ScriptedActor::new(vec![ScriptedTurn::new(body)], Exhaustion::Error);
    let critic = CountingCritic::new(None);
    let trace = refine("map", &registry, &actor, &critic, 5);
    assert_eq!(trace.outcome, Outcome::Aborted);
    assert_eq!(trace.iterations.len(), 1);
    assert!(trace.iterations[0].critique.is_some());
    assert_eq!(trace.final_trajectory.unwrap().revision, 0);
}

#[test]
fn rule_critic_drives_repair() {
    let registry = Registry::bundled();
    let bad = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/trajectories/invalid_unknown_tool.json")).unwrap();
    let actor = ScriptedActor::new(
        vec![ScriptedTurn::new(bad).with_usage(1000, 200), ScriptedTurn::new(golden().render()).with_usage(1500, 200)],
        Exhaustion::Error,
    );
    let trace = refine("map", &registry, &actor, &RuleCritic, 10);
    assert_eq!(trace.outcome, Outcome::Approved);
    assert_eq!(trace.iterations.len(), 2);
    let first = trace.iterations[0].critique.as_ref().unwrap();
    assert_eq!(first.blocking_issues()[0].step_index, Some(0));
    assert_eq!(trace.usage.actor_prompt_tokens, 2500);
    assert_eq!(trace.usage.critic_prompt_tokens, 0);
}

#[test]
fn scripted_critic_replays_fixture_critiques() {
    let registry = Registry::bundled();
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/critiques/");
    let read = |f: &str| std::fs::read_to_string(format!("{dir}{f}")).unwrap();
    let critic = ScriptedCritic::new(
        vec![ScriptedTurn::new(read("approve_with_issues.json")), ScriptedTurn::new(read("approve.json"))],
        Exhaustion::Error,
    );
    let actor = ScriptedActor::fixed(&golden());
    let trace = refine("map", &registry, &actor, &critic, 10);
    assert_eq!(trace.iterations.len(), 2);
    assert!(!trace.iterations[0].critique.as_ref().unwrap().is_approved());
    assert_eq!(trace.outcome, Outcome::Approved);
}

#[test]
fn trace_jsonl_round_trip_and_torn_tail() {
    let registry = Registry::bundled();
    let actor = ScriptedActor::fixed(&golden());
    let critic = CountingCritic::new(Some(2));
    let trace = refine("map", &registry, &actor, &critic, 10);
    let text = trace_to_jsonl(&trace, 0) + &trace_to_jsonl(&trace, 1);
    let log = parse_trace_jsonl(&text).unwrap();
    assert!(!log.truncated);
    assert_eq!(log.rounds.len(), 2);
    assert_eq!(log.rounds[1].1, trace);

    let cut = &text[..text.len() - 40];
    let log = parse_trace_jsonl(cut).unwrap();
    assert!(log.truncated);
    assert_eq!(log.rounds[1].1.iterations.len(), 3);
    assert_eq!(log.rounds[1].1.outcome, Outcome::Aborted);

    let corrupt = text.replacen("{\"kind\"", "{oops", 1);
    assert!(parse_trace_jsonl(&corrupt).is_err());
}

#[test]
fn observer_sees_every_record_in_order() {
    let registry = Registry::bundled();
    let actor = ScriptedActor::fixed(&golden());
    let critic = CountingCritic::new(Some(3));
    let mut seen = Vec::new();
    let trace = refine_with(
        "map",
        &registry,
        &actor,
        Some(&critic),
        &RefineOptions::default(),
        &Prompts::bundled(),
        &mut |r: &IterationRecord| seen.push(r.revision),
    );
    assert_eq!(seen, vec![0, 1, 2, 3]);
    assert_eq!(trace.iterations.len(), 4);
}

#[test]
fn context_update_replaces() {
    let t = golden();
    let mut c = ContextBuffer::bare("p");
    c.update(t.clone(), Critique::approve());
    let mut t2 = t.clone();
    t2.revision = 7;
    c.update(t2, Critique::approve());
    assert_eq!(c.current_trajectory().unwrap().revision, 7);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn call_counts_follow_the_budget(k in 0u32..12, approve in proptest::option::of(0usize..12)) {
        let registry = Registry::bundled();
        let actor = ScriptedActor::fixed(&golden());
        let critic = CountingCritic::new(approve);
        let trace = refine("map", &registry, &actor, &critic, k);
        let reviews = match approve {
            Some(j) if j < k as usize => j + 1,
            _ => k as usize,
        };
        prop_assert_eq!(critic.calls(), reviews);
        let proposals = if matches!(approve, Some(j) if j < k as usize) { reviews } else { k as usize + 1 };
        prop_assert_eq!(actor.calls(), proposals);
        prop_assert!(trace.iterations.len() <= k as usize + 1);
        prop_assert!(trace.critic_calls() <= k as usize);
        let approved = trace.outcome == Outcome::Approved;
        prop_assert_eq!(approved, matches!(approve, Some(j) if j < k as usize));
    }
}

#[test]
fn actor_trait_objects_are_shareable() {
    fn assert_send_sync<T: Send + Sync + ?Sized>() {}
    assert_send_sync::<dyn Actor>();
    assert_send_sync::<dyn Critic>();
    let _ = parse_trajectory(&golden().render()).unwrap();
}
