//! Append-only JSON Lines form of refinement traces.
//!
//! Iteration lines are written as each record completes and an outcome line
//! closes the round, so a crash leaves every finished iteration on disk.

use serde::{Deserialize, Serialize};

use super::{IterationRecord, Outcome, RefinementTrace};
use crate::agent::UsageTotals;
use crate::trajectory::{BlockingIssue, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceLine {
    Iteration {
        session_id: String,
        round: u32,
        index: usize,
        record: IterationRecord,
    },
    Outcome {
        session_id: String,
        round: u32,
        outcome: Outcome,
        final_trajectory: Option<Trajectory>,
        final_validation: Vec<BlockingIssue>,
        usage: UsageTotals,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
}

impl TraceLine {
    pub fn outcome(trace: &RefinementTrace, round: u32) -> TraceLine {
        TraceLine::Outcome {
            session_id: trace.session_id.clone(),
            round,
            outcome: trace.outcome,
            final_trajectory: trace.final_trajectory.clone(),
            final_validation: trace.final_validation.clone(),
            usage: trace.usage,
            error: trace.error.clone(),
        }
    }

    /// One line, newline-terminated.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trace line serializes");
        s.push('\n');
        s
    }
}

/// Every line of a complete trace for one round.
pub fn trace_to_jsonl(trace: &RefinementTrace, round: u32) -> String {
    let mut out = String::new();
    for (index, record) in trace.iterations.iter().enumerate() {
        let line = TraceLine::Iteration {
            session_id: trace.session_id.clone(),
            round,
            index,
            record: record.clone(),
        };
        out.push_str(&line.to_line());
    }
    out.push_str(&TraceLine::outcome(trace, round).to_line());
    out
}

/// Traces recovered from a JSONL file, one per round in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLog {
    pub rounds: Vec<(u32, RefinementTrace)>,
    /// Whether an incomplete final line was dropped.
    pub truncated: bool,
}

/// Parses a trace file. An unterminated, unparseable last line is treated
/// as a torn write and dropped; any other bad line is an error. Rounds
/// without an outcome line come back as aborted.
pub fn parse_trace_jsonl(text: &str) -> Result<TraceLog, String> {
    let mut rounds: Vec<(u32, RefinementTrace, bool)> = Vec::new();
    let mut truncated = false;
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    for (n, raw) in lines.iter().enumerate() {
        let body = raw.trim_end_matches('\n');
        if body.trim().is_empty() {
            continue;
        }
        let line: TraceLine = match serde_json::from_str(body) {
            Ok(l) => l,
            Err(_) if n + 1 == lines.len() && !raw.ends_with('\n') => {
                truncated = true;
                break;
            }
            Err(e) => return Err(format!("trace line {}: {e}", n + 1)),
        };
        let (session_id, round) = match &line {
            TraceLine::Iteration { session_id, round, .. } | TraceLine::Outcome { session_id, round, .. } => {
                (session_id.clone(), *round)
            }
        };
        let idx = match rounds.iter().position(|(r, _, _)| *r == round) {
            Some(i) => i,
            None => {
                rounds.push((
                    round,
                    RefinementTrace {
                        session_id,
                        iterations: Vec::new(),
                        outcome: Outcome::Aborted,
                        final_trajectory: None,
                        final_validation: Vec::new(),
                        usage: UsageTotals::default(),
                        error: None,
                    },
                    false,
                ));
                rounds.len() - 1
            }
        };
        let (_, trace, closed) = &mut rounds[idx];
        match line {
            TraceLine::Iteration { record, .. } => trace.iterations.push(record),
            TraceLine::Outcome { outcome, final_trajectory, final_validation, usage, error, .. } => {
                trace.outcome = outcome;
                trace.final_trajectory = final_trajectory;
                trace.final_validation = final_validation;
                trace.usage = usage;
                trace.error = error;
                *closed = true;
            }
        }
    }
    Ok(TraceLog {
        rounds: rounds
            .into_iter()
            .map(|(r, mut t, closed)| {
                if !closed {
                    t.error = Some("round ended without an outcome record".into());
                    t.final_trajectory = t.iterations.last().map(|i| i.trajectory.clone());
                }
                (r, t)
            })
            .collect(),
        truncated,
    })
}
