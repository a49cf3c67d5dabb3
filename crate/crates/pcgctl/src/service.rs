//! Session state machine shared by the HTTP API and the CLI.
//!
//! Each round runs on its own thread. Session state sits behind a mutex and
//! every mutation persists `meta.json` before the lock is released, so
//! writes for one session never interleave.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex, MutexGuard, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use pcg_core::agent::{Prompts, UsageTotals};
use pcg_core::refine::{IterationRecord, Outcome, RefinementTrace, TraceLine};
use pcg_core::registry::Registry;
use pcg_core::trajectory::{BlockingIssue, Trajectory};
use serde::{Deserialize, Serialize};

use crate::backend::AgentFactory;
use crate::config::AgentPatch;
use crate::session::{run_round, summarize, Phase, RoundObserver, RoundSummary, SessionConfig, SessionMeta};
use crate::store::{Store, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("session `{id}` is {phase:?}; wait for the round to finish")]
    Busy { id: String, phase: Phase },
    #[error("invalid request")]
    Invalid(Vec<FieldError>),
    #[error("session `{0}` has no map yet")]
    MapNotReady(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Overrides accepted in `POST /sessions`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub max_iterations: Option<u32>,
    pub architecture: Option<pcg_core::refine::Architecture>,
    pub seed: Option<u64>,
    pub actor: Option<AgentPatch>,
    pub critic: Option<AgentPatch>,
}

impl ConfigPatch {
    pub fn apply(&self, base: &SessionConfig) -> Result<SessionConfig, Vec<FieldError>> {
        let mut c = base.clone();
        if let Some(v) = self.max_iterations {
            c.max_iterations = v;
        }
        if let Some(v) = self.architecture {
            c.architecture = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(p) = &self.actor {
            p.apply(&mut c.actor);
        }
        if let Some(p) = &self.critic {
            p.apply(&mut c.critic);
        }
        let mut errors = Vec::new();
        if c.max_iterations > crate::session::MAX_ITERATIONS_LIMIT {
            errors.push(FieldError {
                path: "$.config.max_iterations".into(),
                message: format!("must be at most {}", crate::session::MAX_ITERATIONS_LIMIT),
            });
        }
        for (name, agent) in [("actor", &c.actor), ("critic", &c.critic)] {
            if let Err(e) = agent.validate() {
                errors.push(FieldError {
                    path: format!("$.config.{name}"),
                    message: e.to_string(),
                });
            }
        }
        if errors.is_empty() {
            Ok(c)
        } else {
            Err(errors)
        }
    }
}

/// One round of `GET /sessions/{id}/trace`. `outcome` is absent while the
/// round is still refining.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrace {
    pub round: u32,
    pub prompt: String,
    pub outcome: Option<Outcome>,
    pub iterations: Vec<IterationRecord>,
    pub final_trajectory: Option<Trajectory>,
    pub final_validation: Vec<BlockingIssue>,
    pub usage: UsageTotals,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceView {
    pub session_id: String,
    pub rounds: Vec<RoundTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionListing {
    pub session_id: String,
    pub created_at_ms: u64,
    pub phase: Phase,
    pub rounds: usize,
    pub user_prompt: String,
}

struct SessionState {
    meta: SessionMeta,
    /// Finished rounds, indexed by round.
    traces: Vec<RefinementTrace>,
    /// Iterations of the round currently refining.
    live: Option<Vec<IterationRecord>>,
    map: Option<Arc<str>>,
}

struct Entry {
    state: Mutex<SessionState>,
    changed: Condvar,
}

impl Entry {
    fn lock(&self) -> MutexGuard<'_, SessionState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }
}

struct Inner {
    store: Store,
    registry: Registry,
    prompts: Prompts,
    agents: Arc<dyn AgentFactory>,
    defaults: SessionConfig,
    sessions: RwLock<BTreeMap<String, Arc<Entry>>>,
}

#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

const INTERRUPTED: &str = "interrupted by a service restart";

impl Service {
    /// Opens the store under `data_dir` and reloads every session. Rounds
    /// that were in flight when the previous process stopped are closed as
    /// failed.
    pub fn open(
        data_dir: &Path,
        registry: Registry,
        agents: Arc<dyn AgentFactory>,
        defaults: SessionConfig,
    ) -> Result<Service, StoreError> {
        let store = Store::open(data_dir)?;
        let mut sessions = BTreeMap::new();
        for id in store.list()? {
            match Self::recover(&store, &id) {
                Ok(state) => {
                    sessions.insert(
                        id,
                        Arc::new(Entry {
                            state: Mutex::new(state),
                            changed: Condvar::new(),
                        }),
                    );
                }
                Err(e) => tracing::error!(session = %id, error = %e, "skipping unreadable session"),
            }
        }
        tracing::info!(sessions = sessions.len(), dir = %data_dir.display(), "store opened");
        Ok(Service {
            inner: Arc::new(Inner {
                store,
                registry,
                prompts: Prompts::bundled(),
                agents,
                defaults,
                sessions: RwLock::new(sessions),
            }),
        })
    }

    fn recover(store: &Store, id: &str) -> Result<SessionState, StoreError> {
        let stored = store.load(id)?;
        let mut meta = stored.meta;
        let mut by_round: BTreeMap<u32, RefinementTrace> = stored.traces.rounds.into_iter().collect();
        let mut traces = Vec::new();
        let interrupted = meta.phase.in_flight();
        for summary in &mut meta.rounds {
            match by_round.remove(&summary.round) {
                Some(t) if summary.outcome.is_some() || !interrupted => traces.push(t),
                partial => {
                    // The round stopped before its outcome line; close it.
                    let mut t = partial.unwrap_or_else(|| RefinementTrace {
                        session_id: id.to_string(),
                        iterations: Vec::new(),
                        outcome: Outcome::Aborted,
                        final_trajectory: None,
                        final_validation: Vec::new(),
                        usage: UsageTotals::default(),
                        error: None,
                    });
                    t.outcome = Outcome::Aborted;
                    t.error = Some(INTERRUPTED.into());
                    store.append_trace(id, &TraceLine::outcome(&t, summary.round).to_line())?;
                    summary.outcome = Some(Outcome::Aborted);
                    summary.proposals = t.iterations.len();
                    summary.critic_calls = t.critic_calls();
                    summary.usage = t.usage;
                    traces.push(t);
                }
            }
        }
        if interrupted {
            if let Some(last) = meta.rounds.last_mut() {
                last.error = Some(INTERRUPTED.into());
            }
            meta.phase = Phase::Failed;
            meta.error = Some(INTERRUPTED.into());
            store.save_meta(&meta)?;
        }
        let map = match meta.map_round {
            Some(_) => stored.map.map(Arc::from),
            None => None,
        };
        Ok(SessionState {
            meta,
            traces,
            live: None,
            map,
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.inner.registry
    }

    pub fn defaults(&self) -> &SessionConfig {
        &self.inner.defaults
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, ServiceError> {
        self.inner
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    /// Persists a new session and starts its first round. Blocks on disk
    /// I/O.
    pub fn create_session(&self, prompt: &str, config: SessionConfig) -> Result<String, ServiceError> {
        let id = uuid::Uuid::now_v7().hyphenated().to_string();
        let meta = SessionMeta {
            session_id: id.clone(),
            created_at_ms: now_ms(),
            user_prompt: prompt.to_string(),
            followups: Vec::new(),
            config,
            phase: Phase::Refining,
            rounds: vec![RoundSummary::started(0, prompt.to_string())],
            map_round: None,
            error: None,
        };
        self.inner.store.save_meta(&meta)?;
        let entry = Arc::new(Entry {
            state: Mutex::new(SessionState {
                meta,
                traces: Vec::new(),
                live: Some(Vec::new()),
                map: None,
            }),
            changed: Condvar::new(),
        });
        self.inner
            .sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id.clone(), entry.clone());
        tracing::info!(session = %id, "session created");
        self.spawn_round(entry, 0);
        Ok(id)
    }

    /// Starts the next round with `prompt` appended. Blocks on disk I/O.
    pub fn followup(&self, id: &str, prompt: &str) -> Result<u32, ServiceError> {
        let entry = self.entry(id)?;
        let round = {
            let mut s = entry.lock();
            if s.meta.phase.in_flight() {
                return Err(ServiceError::Busy {
                    id: id.to_string(),
                    phase: s.meta.phase,
                });
            }
            let previous = s.meta.clone();
            s.meta.followups.push(prompt.to_string());
            let round = s.meta.rounds.len() as u32;
            let accumulated = s.meta.current_prompt();
            s.meta.rounds.push(RoundSummary::started(round, accumulated));
            s.meta.phase = Phase::Refining;
            s.meta.error = None;
            if let Err(e) = self.inner.store.save_meta(&s.meta) {
                s.meta = previous;
                return Err(e.into());
            }
            s.live = Some(Vec::new());
            round
        };
        entry.changed.notify_all();
        tracing::info!(session = %id, round, "follow-up round started");
        self.spawn_round(entry, round);
        Ok(round)
    }

    fn spawn_round(&self, entry: Arc<Entry>, round: u32) {
        let inner = self.inner.clone();
        std::thread::spawn(move || inner.round(&entry, round));
    }

    pub fn status(&self, id: &str) -> Result<SessionMeta, ServiceError> {
        Ok(self.entry(id)?.lock().meta.clone())
    }

    pub fn trace(&self, id: &str) -> Result<TraceView, ServiceError> {
        let entry = self.entry(id)?;
        let s = entry.lock();
        let mut rounds: Vec<RoundTrace> = s
            .traces
            .iter()
            .zip(&s.meta.rounds)
            .map(|(t, r)| RoundTrace {
                round: r.round,
                prompt: r.prompt.clone(),
                outcome: Some(t.outcome),
                iterations: t.iterations.clone(),
                final_trajectory: t.final_trajectory.clone(),
                final_validation: t.final_validation.clone(),
                usage: t.usage,
                error: t.error.clone(),
            })
            .collect();
        if let (Some(live), Some(r)) = (&s.live, s.meta.rounds.get(s.traces.len())) {
            let mut usage = UsageTotals::default();
            for it in live {
                usage.add(&it.actor_usage);
                if let Some(c) = &it.critic_usage {
                    usage.add(c);
                }
            }
            rounds.push(RoundTrace {
                round: r.round,
                prompt: r.prompt.clone(),
                outcome: None,
                iterations: live.clone(),
                final_trajectory: None,
                final_validation: Vec::new(),
                usage,
                error: None,
            });
        }
        Ok(TraceView {
            session_id: id.to_string(),
            rounds,
        })
    }

    /// Canonical JSON of the latest map.
    pub fn map(&self, id: &str) -> Result<Arc<str>, ServiceError> {
        self.entry(id)?
            .lock()
            .map
            .clone()
            .ok_or_else(|| ServiceError::MapNotReady(id.to_string()))
    }

    pub fn list(&self) -> Vec<SessionListing> {
        let sessions = self.inner.sessions.read().unwrap_or_else(|p| p.into_inner());
        sessions
            .values()
            .map(|e| {
                let s = e.lock();
                SessionListing {
                    session_id: s.meta.session_id.clone(),
                    created_at_ms: s.meta.created_at_ms,
                    phase: s.meta.phase,
                    rounds: s.meta.rounds.len(),
                    user_prompt: s.meta.user_prompt.clone(),
                }
            })
            .collect()
    }

    /// Blocks until the session is neither refining nor executing.
    pub fn wait_settled(&self, id: &str, timeout: Duration) -> Result<SessionMeta, ServiceError> {
        let entry = self.entry(id)?;
        let deadline = Instant::now() + timeout;
        let mut s = entry.lock();
        while s.meta.phase.in_flight() {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                break;
            }
            s = entry.changed.wait_timeout(s, left).unwrap_or_else(|p| p.into_inner()).0;
        }
        Ok(s.meta.clone())
    }
}

impl Inner {
    /// Applies `f` and persists the result while holding the lock.
    fn update(&self, entry: &Entry, f: impl FnOnce(&mut SessionState)) {
        let mut s = entry.lock();
        f(&mut s);
        if let Err(e) = self.store.save_meta(&s.meta) {
            tracing::error!(session = %s.meta.session_id, error = %e, "persisting session failed");
        }
        drop(s);
        entry.changed.notify_all();
    }

    fn round(&self, entry: &Entry, round: u32) {
        let (id, prompt, config) = {
            let s = entry.lock();
            (
                s.meta.session_id.clone(),
                s.meta.rounds[round as usize].prompt.clone(),
                s.meta.config.clone(),
            )
        };

        struct Observer<'a> {
            inner: &'a Inner,
            entry: &'a Entry,
            id: &'a str,
            round: u32,
            index: usize,
        }

        impl Observer<'_> {
            fn append(&self, line: &TraceLine) {
                if let Err(e) = self.inner.store.append_trace(self.id, &line.to_line()) {
                    tracing::error!(session = %self.id, error = %e, "appending trace failed");
                }
            }
        }

        impl RoundObserver for Observer<'_> {
            fn iteration(&mut self, record: &IterationRecord) {
                self.append(&TraceLine::Iteration {
                    session_id: self.id.to_string(),
                    round: self.round,
                    index: self.index,
                    record: record.clone(),
                });
                self.index += 1;
                let mut s = self.entry.lock();
                s.live.get_or_insert_with(Vec::new).push(record.clone());
                drop(s);
                self.entry.changed.notify_all();
            }

            fn refined(&mut self, trace: &RefinementTrace) {
                self.append(&TraceLine::outcome(trace, self.round));
                let round = self.round as usize;
                self.inner.update(self.entry, |s| {
                    s.traces.push(trace.clone());
                    s.live = None;
                    let summary = &mut s.meta.rounds[round];
                    summary.outcome = Some(trace.outcome);
                    summary.proposals = trace.iterations.len();
                    summary.critic_calls = trace.critic_calls();
                    summary.usage = trace.usage;
                    s.meta.phase = Phase::Executing;
                });
            }
        }

        let mut observer = Observer {
            inner: self,
            entry,
            id: &id,
            round,
            index: 0,
        };
        let started = Instant::now();
        let result = run_round(
            &id,
            round,
            &prompt,
            &config,
            &self.registry,
            &self.prompts,
            self.agents.as_ref(),
            &mut observer,
        );
        let map = result.artifact.as_ref().map(|a| a.to_canonical_json());
        let saved = match &map {
            Some(json) => self.store.save_map(&id, json).map_err(|e| e.to_string()),
            None => Ok(()),
        };
        self.update(entry, |s| {
            let summary = &mut s.meta.rounds[round as usize];
            let mut phase = summarize(summary, &result);
            if let Err(e) = &saved {
                summary.error = Some(format!("saving the map failed: {e}"));
                phase = Phase::Failed;
            }
            s.meta.error = summary.error.clone();
            s.meta.phase = phase;
            if phase == Phase::Done {
                s.map = map.map(Arc::from);
                s.meta.map_round = Some(round);
            }
        });
        tracing::info!(
            session = %id,
            round,
            outcome = ?result.trace.outcome,
            elapsed_ms = started.elapsed().as_millis() as u64,
            "round finished"
        );
    }
}
