#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use pcg_core::agent::{Actor, ActorTurn, AgentError, ScriptedActor, TokenUsage};
use pcg_core::eval::MapFamily;
use pcg_core::registry::Registry;
use pcg_core::trajectory::Trajectory;
use pcgctl::backend::{AgentFactory, Agents, ConfiguredAgents};
use pcgctl::service::Service;
use pcgctl::session::SessionConfig;
use serde_json::Value;

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel)
}

/// In-process server on an ephemeral port, shut down on drop.
pub struct TestServer {
    pub url: String,
    pub service: Service,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(data_dir: &Path, agents: Arc<dyn AgentFactory>) -> TestServer {
        let service = Service::open(data_dir, Registry::bundled(), agents, SessionConfig::scripted()).unwrap();
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let svc = service.clone();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                addr_tx.send(listener.local_addr().unwrap()).unwrap();
                pcgctl::api::serve(listener, svc, async {
                    let _ = stop_rx.await;
                })
                .await
                .unwrap();
            });
        });
        let addr = addr_rx.recv().unwrap();
        TestServer {
            url: format!("http://{addr}"),
            service,
            stop: Some(stop_tx),
            thread: Some(thread),
        }
    }

    pub fn scripted(data_dir: &Path) -> TestServer {
        TestServer::start(data_dir, Arc::new(ConfiguredAgents::new(None)))
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(30)))
        .build()
        .into()
}

pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

pub fn get(url: &str) -> Reply {
    let mut resp = agent().get(url).call().unwrap();
    Reply {
        status: resp.status().as_u16(),
        body: resp.body_mut().read_to_string().unwrap(),
    }
}

pub fn post(url: &str, body: &str) -> Reply {
    let mut resp = agent()
        .post(url)
        .header("content-type", "application/json")
        .send(body)
        .unwrap();
    Reply {
        status: resp.status().as_u16(),
        body: resp.body_mut().read_to_string().unwrap(),
    }
}

/// Polls the session until it leaves the refining and executing phases.
pub fn wait_settled(base: &str, id: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        let status = get(&format!("{base}/sessions/{id}")).json();
        let phase = status["phase"].as_str().unwrap().to_string();
        if phase == "done" || phase == "failed" {
            return status;
        }
        assert!(Instant::now() < deadline, "session {id} stuck in {phase}");
        std::thread::sleep(Duration::from_millis(10));
    }
}

/// Opens or closes; actors built while closed block until it opens.
#[derive(Clone, Default)]
pub struct Gate(Arc<(Mutex<bool>, Condvar)>);

impl Gate {
    pub fn open(&self) {
        *self.0 .0.lock().unwrap() = true;
        self.0 .1.notify_all();
    }

    fn wait(&self) {
        let mut open = self.0 .0.lock().unwrap();
        while !*open {
            open = self.0 .1.wait(open).unwrap();
        }
    }
}

struct GatedActor {
    gate: Gate,
    inner: ScriptedActor,
}

impl Actor for GatedActor {
    fn propose(&self, turn: &ActorTurn<'_>) -> Result<(Trajectory, TokenUsage), AgentError> {
        self.gate.wait();
        self.inner.propose(turn)
    }
}

/// Scripted agents whose actor waits on a gate before its first proposal.
pub struct GatedAgents {
    pub gate: Gate,
    base: ConfiguredAgents,
}

impl GatedAgents {
    pub fn new(gate: Gate) -> GatedAgents {
        GatedAgents {
            gate,
            base: ConfiguredAgents::new(None),
        }
    }
}

impl AgentFactory for GatedAgents {
    fn build(&self, config: &SessionConfig, prompt: &str, round: u32) -> Result<Agents, AgentError> {
        let built = self.base.build(config, prompt, round)?;
        Ok(Agents {
            actor: Box::new(GatedActor {
                gate: self.gate.clone(),
                inner: ScriptedActor::fixed(&MapFamily::detect(prompt).golden()),
            }),
            critic: built.critic,
        })
    }
}
