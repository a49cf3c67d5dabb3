//! Tool registry, plan model, agents, refinement loop, executor and
//! evaluation harness built on top of `pcg-engine`.

pub mod registry;
pub mod trajectory;
pub mod agent;
pub mod eval;
pub mod executor;
pub mod refine;
