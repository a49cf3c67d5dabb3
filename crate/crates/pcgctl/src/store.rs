//! File-system persistence: `sessions/<id>/meta.json` and `map.json` are
//! replaced atomically (temp file, fsync, rename), `trace.jsonl` is
//! append-only.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use pcg_core::refine::{parse_trace_jsonl, TraceLog};

use crate::session::SessionMeta;

pub const META_FILE: &str = "meta.json";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const MAP_FILE: &str = "map.json";
const TEMP_SUFFIX: &str = ".tmp";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("invalid session id `{0}`")]
    InvalidId(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Session ids are UUIDs; anything else never touches the file system.
pub fn valid_session_id(id: &str) -> bool {
    uuid::Uuid::try_parse(id).is_ok_and(|u| u.hyphenated().to_string() == id)
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(TEMP_SUFFIX);
    path.with_file_name(name)
}

/// First half of an atomic replace: writes and syncs the temp file.
pub fn write_temp(path: &Path, bytes: &[u8]) -> io::Result<PathBuf> {
    let tmp = temp_path(path);
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(tmp)
}

/// Second half: renames the temp file over `path` and syncs the directory.
pub fn commit(tmp: &Path, path: &Path) -> io::Result<()> {
    fs::rename(tmp, path)?;
    if let Some(dir) = path.parent() {
        File::open(dir)?.sync_all()?;
    }
    Ok(())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = write_temp(path, bytes)?;
    commit(&tmp, path)
}

/// A session as found on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSession {
    pub meta: SessionMeta,
    pub traces: TraceLog,
    pub map: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Store {
    sessions: PathBuf,
}

impl Store {
    pub fn open(data_dir: &Path) -> Result<Store, StoreError> {
        let sessions = data_dir.join("sessions");
        fs::create_dir_all(&sessions).map_err(io_err(&sessions))?;
        Ok(Store { sessions })
    }

    pub fn session_dir(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_session_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.sessions.join(id))
    }

    pub fn save_meta(&self, meta: &SessionMeta) -> Result<(), StoreError> {
        let dir = self.session_dir(&meta.session_id)?;
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(META_FILE);
        let mut bytes = serde_json::to_vec_pretty(meta).expect("session meta serializes");
        bytes.push(b'\n');
        write_atomic(&path, &bytes).map_err(io_err(&path))
    }

    /// Appends whole newline-terminated lines in one write.
    pub fn append_trace(&self, id: &str, lines: &str) -> Result<(), StoreError> {
        let path = self.session_dir(id)?.join(TRACE_FILE);
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(lines.as_bytes()).map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }

    pub fn save_map(&self, id: &str, json: &str) -> Result<(), StoreError> {
        let path = self.session_dir(id)?.join(MAP_FILE);
        write_atomic(&path, json.as_bytes()).map_err(io_err(&path))
    }

    /// Reads one session, discarding temp files left by an interrupted
    /// replace.
    pub fn load(&self, id: &str) -> Result<StoredSession, StoreError> {
        let dir = self.session_dir(id)?;
        for name in [META_FILE, MAP_FILE] {
            let tmp = temp_path(&dir.join(name));
            if tmp.exists() {
                tracing::warn!(path = %tmp.display(), "discarding unfinished write");
                fs::remove_file(&tmp).map_err(io_err(&tmp))?;
            }
        }
        let meta_path = dir.join(META_FILE);
        let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: SessionMeta = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: meta_path.clone(),
            message: e.to_string(),
        })?;
        if meta.session_id != id {
            return Err(StoreError::Corrupt {
                path: meta_path,
                message: format!("holds session `{}`", meta.session_id),
            });
        }
        let trace_path = dir.join(TRACE_FILE);
        let traces = match fs::read_to_string(&trace_path) {
            Ok(t) => {
                let log = parse_trace_jsonl(&t).map_err(|message| StoreError::Corrupt {
                    path: trace_path.clone(),
                    message,
                })?;
                if log.truncated {
                    tracing::warn!(path = %trace_path.display(), "dropping torn trace line");
                    let keep = t.rfind('\n').map_or(0, |i| i + 1);
                    write_atomic(&trace_path, &t.as_bytes()[..keep]).map_err(io_err(&trace_path))?;
                }
                log
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => TraceLog {
                rounds: Vec::new(),
                truncated: false,
            },
            Err(e) => return Err(io_err(&trace_path)(e)),
        };
        let map_path = dir.join(MAP_FILE);
        let map = match fs::read_to_string(&map_path) {
            Ok(m) => Some(m),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(io_err(&map_path)(e)),
        };
        Ok(StoredSession { meta, traces, map })
    }

    /// Ids of every session directory, sorted.
    pub fn list(&self) -> Result<Vec<String>, StoreError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.sessions).map_err(io_err(&self.sessions))? {
            let entry = entry.map_err(io_err(&self.sessions))?;
            if let Some(name) = entry.file_name().to_str() {
                if valid_session_id(name) && entry.path().join(META_FILE).exists() {
                    ids.push(name.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }
}
