//! Constraint checks on finished maps and the two benchmark experiments:
//! repeated single-request trials (success rate and mistakes), and
//! multi-family runs counting the prompts needed to reach the objective.

mod constraints;
mod experiments;
mod family;

pub use constraints::{
    check_layer_count, check_material_present, check_perfect_maze, check_scatter_off_land, check_scatter_on_top,
    check_single_landmass, evaluate, land_layer, Constraint, ConstraintResult, Severity,
};
pub use experiments::{
    append_followup, plan_diff, run_experiment_one, run_experiment_two, run_trial, ActorFactory, ConstraintFeedback, CriticFactory,
    ExperimentOneConfig, ExperimentOneReport, ExperimentTwoConfig, ExperimentTwoReport, ExperimentTwoRow,
    FollowupSource, PlanDiff, RoundRecord, ScriptedFollowups, TrialOutcome, TrialRecord,
};
pub use family::{MapFamily, MOUNTAIN_ISLAND_PROMPT};
