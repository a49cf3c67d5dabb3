//! Layered configuration: built-in defaults, then a TOML or JSON file,
//! then `LLM_*` environment variables, then command-line flags.

use std::path::{Path, PathBuf};

use pcg_core::agent::{AgentConfig, BackendKind};
use pcg_core::refine::Architecture;
use serde::{Deserialize, Serialize};

use crate::session::SessionConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Partial agent settings; unset fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentPatch {
    pub backend: Option<BackendKind>,
    pub temperature: Option<f64>,
    pub model_id: Option<String>,
    pub endpoint: Option<String>,
    pub max_output_tokens: Option<u32>,
}

impl AgentPatch {
    pub fn apply(&self, config: &mut AgentConfig) {
        if let Some(v) = self.backend {
            config.backend = v;
        }
        if let Some(v) = self.temperature {
            config.temperature = v;
        }
        if let Some(v) = &self.model_id {
            config.model_id = v.clone();
        }
        if let Some(v) = &self.endpoint {
            config.endpoint = v.clone();
        }
        if let Some(v) = self.max_output_tokens {
            config.max_output_tokens = v;
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub port: Option<u16>,
    pub max_iterations: Option<u32>,
    pub architecture: Option<Architecture>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub actor: AgentPatch,
    #[serde(default)]
    pub critic: AgentPatch,
}

impl FileConfig {
    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        };
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))
        }
    }
}

/// Effective settings for a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub data_dir: PathBuf,
    pub port: u16,
    pub session: SessionConfig,
    pub api_key: Option<String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            data_dir: PathBuf::from("pcgctl-data"),
            port: 8080,
            session: SessionConfig::default(),
            api_key: None,
        }
    }
}

/// Environment variables read by [`Settings::resolve`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LlmEnv {
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
}

impl LlmEnv {
    pub fn from_process() -> LlmEnv {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        LlmEnv {
            endpoint: var("LLM_ENDPOINT"),
            api_key: var("LLM_API_KEY"),
            model: var("LLM_MODEL"),
        }
    }
}

impl Settings {
    pub fn resolve(file: Option<&FileConfig>, env: &LlmEnv) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        if let Some(f) = file {
            if let Some(v) = &f.data_dir {
                s.data_dir = v.clone();
            }
            if let Some(v) = f.port {
                s.port = v;
            }
            if let Some(v) = f.max_iterations {
                s.session.max_iterations = v;
            }
            if let Some(v) = f.architecture {
                s.session.architecture = v;
            }
            if let Some(v) = f.seed {
                s.session.seed = v;
            }
            f.actor.apply(&mut s.session.actor);
            f.critic.apply(&mut s.session.critic);
        }
        for agent in [&mut s.session.actor, &mut s.session.critic] {
            if let Some(v) = &env.endpoint {
                agent.endpoint = v.clone();
            }
            if let Some(v) = &env.model {
                agent.model_id = v.clone();
            }
        }
        s.api_key = env.api_key.clone();
        s.session.validate().map_err(ConfigError::Invalid)?;
        Ok(s)
    }

    /// `--backend` shorthand: `scripted` replays golden plans reviewed by
    /// the rule critic, `llm` uses the chat endpoint for both agents.
    pub fn set_backend(&mut self, backend: BackendKind) {
        match backend {
            BackendKind::Scripted => {
                self.session.actor.backend = BackendKind::Scripted;
                self.session.critic.backend = BackendKind::RuleBased;
            }
            other => {
                self.session.actor.backend = BackendKind::Llm;
                self.session.critic.backend = other;
            }
        }
    }
}
