//! Proptest strategies for trajectories and critiques.

use pcg_core::trajectory::{BlockingIssue, Critique, Dimension, ToolStep, Trajectory};
use proptest::prelude::*;
use serde_json::Value;

pub fn text() -> impl Strategy<Value = String> {
    "\\PC{0,24}".prop_filter("non-blank", |s| !s.trim().is_empty())
}

pub fn leaf() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::from),
        any::<u64>().prop_map(Value::from),
        any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(Value::from),
        any::<bool>().prop_map(Value::from),
        "[^$]\\PC{0,12}".prop_map(Value::from),
        Just(Value::Null),
    ]
}

pub fn value() -> impl Strategy<Value = Value> {
    leaf().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Value::from),
            prop::collection::btree_map("[a-z]{1,4}", inner, 0..3)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

prop_compose! {
    pub fn raw_step()(
        objective in text(),
        tool_name in "[a-z_]{1,20}",
        arguments in prop::collection::btree_map("[a-z_]{1,10}", value(), 0..5),
        expected_result in text(),
        bound in any::<bool>(),
        reference in any::<Option<prop::sample::Index>>(),
    ) -> (ToolStep, bool, Option<prop::sample::Index>) {
        (ToolStep { objective, tool_name, arguments, expected_result, output_binding: None }, bound, reference)
    }
}

prop_compose! {
    pub fn trajectory()(
        summary in text(),
        raw in prop::collection::vec(raw_step(), 1..7),
        risks in prop::collection::vec("\\PC{0,20}", 0..4),
        revision in any::<u32>(),
    ) -> Trajectory {
        let mut bound: Vec<String> = Vec::new();
        let mut plan = Vec::new();
        for (i, (mut step, binds, reference)) in raw.into_iter().enumerate() {
            if let (Some(idx), false) = (reference, bound.is_empty()) {
                let target = idx.get(&bound).clone();
                step.arguments.insert("input".into(), Value::from(format!("${target}")));
            }
            if binds {
                let name = format!("out_{i}");
                bound.push(name.clone());
                step.output_binding = Some(name);
            }
            plan.push(step);
        }
        Trajectory { trajectory_summary: summary, tool_plan: plan, risks, revision }
    }
}

pub fn dimension() -> impl Strategy<Value = Dimension> {
    prop::sample::select(Dimension::ALL.to_vec())
}

prop_compose! {
    pub fn critique()(
        issues in prop::collection::vec(
            (proptest::option::of(0usize..20), dimension(), text(), proptest::option::of("\\PC{0,20}")),
            0..6,
        ),
        missing in prop::collection::vec("\\PC{0,20}", 0..3),
    ) -> Critique {
        let issues = issues
            .into_iter()
            .map(|(step_index, dimension, description, correction_suggestion)| BlockingIssue {
                step_index, dimension, description, correction_suggestion,
            })
            .collect();
        Critique::new(issues, missing)
    }
}
