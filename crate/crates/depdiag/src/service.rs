//! Hosted sessions behind the HTTP API. Each session has its own lock, so
//! transitions on one session are serialized while sessions run in parallel.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use depdiag_core::session::{start_session, Answer, Session, SessionConfig, SessionError};
use serde::Deserialize;
use serde_json::{json, Value as Json};

use crate::load::{parse_program, program_hash, ProgramError};
use crate::snapshot::{Snapshot, SnapshotError};
use crate::wire::{action_json, candidate_json, counters_json, report_json, status_json, trace_values_json, HistoryJson, TestFile, WireError};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub session: SessionConfig,
    pub persist_dir: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("persisting session: {0}")]
    Persist(#[from] std::io::Error),
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateSession {
    pub program: String,
    pub test: TestFile,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub max_card: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Verdict {
    Bool(bool),
    Word(String),
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnswerRequest {
    pub action_id: u64,
    #[serde(default)]
    pub verdict: Option<Verdict>,
    #[serde(default)]
    pub iteration: Option<u32>,
    #[serde(default)]
    pub choice: Option<usize>,
}

impl AnswerRequest {
    pub fn answer(&self) -> Result<Answer, ServiceError> {
        match (&self.verdict, self.iteration, self.choice) {
            (Some(v), None, None) => Ok(Answer::Verdict(parse_verdict(v)?)),
            (None, Some(k), None) => Ok(Answer::Iteration(k)),
            (None, None, Some(i)) => Ok(Answer::Choice(i)),
            _ => Err(ServiceError::BadRequest("exactly one of verdict, iteration and choice is required".into())),
        }
    }
}

pub fn parse_verdict(v: &Verdict) -> Result<bool, ServiceError> {
    match v {
        Verdict::Bool(b) => Ok(*b),
        Verdict::Word(w) => match w.to_ascii_lowercase().as_str() {
            "correct" | "ok" | "yes" | "y" => Ok(true),
            "incorrect" | "wrong" | "nok" | "no" | "n" => Ok(false),
            _ => Err(ServiceError::BadRequest(format!("unknown verdict `{w}`"))),
        },
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExpandRequest {
    pub component: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ObserveRequest {
    pub occurrence: String,
    pub verdict: Verdict,
}

pub struct Hosted {
    pub id: String,
    pub created_at: u64,
    pub session: Session,
}

pub struct Service {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Mutex<Hosted>>>>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// The full view model of one session.
pub fn view_json(h: &Hosted) -> Json {
    let s = &h.session;
    let lines = s.candidate_lines();
    let source: Vec<Json> = s
        .program()
        .program()
        .source
        .lines()
        .enumerate()
        .map(|(i, text)| {
            let n = i as u32 + 1;
            json!({ "line": n, "text": text, "candidate": lines.contains(&n) })
        })
        .collect();
    json!({
        "id": h.id,
        "created_at": h.created_at,
        "program_hash": program_hash(&s.program().program().source),
        "method": s.test().method,
        "source": source,
        "candidate_lines": lines,
        "candidates": s.candidates().iter().map(|d| candidate_json(s.graph(), d)).collect::<Vec<_>>(),
        "action": s.pending_action().map(|a| action_json(s, a)),
        "status": status_json(s.status()),
        "counters": counters_json(&s.counters()),
        "history": s.history().iter().map(HistoryJson::from).collect::<Vec<_>>(),
        "trace": trace_values_json(s),
    })
}

impl Service {
    pub fn new(config: ServiceConfig) -> Service {
        Service { config, sessions: RwLock::new(HashMap::new()) }
    }

    /// Reloads every snapshot in the persist directory. Returns how many
    /// sessions were restored; unreadable snapshots are skipped.
    pub fn recover(&self) -> std::io::Result<usize> {
        let Some(dir) = &self.config.persist_dir else { return Ok(0) };
        std::fs::create_dir_all(dir)?;
        let mut n = 0;
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let Some(id) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else { continue };
            match restore_file(&path) {
                Ok(session) => {
                    let created_at = std::fs::metadata(&path).and_then(|m| m.modified()).ok();
                    let created_at = created_at.and_then(|t| t.duration_since(UNIX_EPOCH).ok()).map_or(0, |d| d.as_secs());
                    self.sessions.write().unwrap().insert(id.clone(), Arc::new(Mutex::new(Hosted { id, created_at, session })));
                    n += 1;
                }
                Err(e) => tracing::warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(n)
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Hosted>>, ServiceError> {
        self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ServiceError::NotFound(id.into()))
    }

    fn persist(&self, h: &Hosted) -> Result<(), ServiceError> {
        let Some(dir) = &self.config.persist_dir else { return Ok(()) };
        write_snapshot(&dir.join(format!("{}.json", h.id)), &Snapshot::capture(&h.session))?;
        Ok(())
    }

    pub fn create(&self, req: CreateSession) -> Result<Json, ServiceError> {
        let name = req.name.clone().unwrap_or_else(|| "program.mjv".into());
        let program = parse_program(&name, &req.program)?;
        let test = req.test.to_test()?;
        let mut config = self.config.session.clone();
        if let Some(k) = req.max_card {
            config.max_card = k;
        }
        let session = start_session(program, test, config)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let hosted = Hosted { id: id.clone(), created_at: now(), session };
        self.persist(&hosted)?;
        let view = view_json(&hosted);
        self.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(hosted)));
        Ok(view)
    }

    pub fn view(&self, id: &str) -> Result<Json, ServiceError> {
        let h = self.get(id)?;
        let h = h.lock().unwrap();
        Ok(view_json(&h))
    }

    pub fn report(&self, id: &str) -> Result<Json, ServiceError> {
        let h = self.get(id)?;
        let h = h.lock().unwrap();
        Ok(report_json(&h.session))
    }

    pub fn snapshot(&self, id: &str) -> Result<Snapshot, ServiceError> {
        let h = self.get(id)?;
        let h = h.lock().unwrap();
        Ok(Snapshot::capture(&h.session))
    }

    fn transition(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<(), ServiceError>) -> Result<Json, ServiceError> {
        let h = self.get(id)?;
        let mut h = h.lock().unwrap();
        f(&mut h.session)?;
        self.persist(&h)?;
        Ok(view_json(&h))
    }

    pub fn answer(&self, id: &str, req: &AnswerRequest) -> Result<Json, ServiceError> {
        let answer = req.answer()?;
        self.transition(id, |s| Ok(s.submit_answer(req.action_id, answer)?))
    }

    pub fn expand(&self, id: &str, req: &ExpandRequest) -> Result<Json, ServiceError> {
        self.transition(id, |s| {
            let c = s.graph().component_by_label(&req.component).ok_or_else(|| SessionError::UnknownComponent(req.component.clone()))?;
            let c = c.id.clone();
            Ok(s.expand(&c)?)
        })
    }

    pub fn observe(&self, id: &str, req: &ObserveRequest) -> Result<Json, ServiceError> {
        let correct = parse_verdict(&req.verdict)?;
        self.transition(id, |s| {
            let o = s.graph().occurrence_by_label(&req.occurrence).ok_or_else(|| SessionError::UnknownOccurrence(req.occurrence.clone()))?;
            let key = o.key.clone();
            Ok(s.free_query(&key, correct)?)
        })
    }

    pub fn delete(&self, id: &str) -> Result<(), ServiceError> {
        self.sessions.write().unwrap().remove(id).ok_or_else(|| ServiceError::NotFound(id.into()))?;
        if let Some(dir) = &self.config.persist_dir {
            match std::fs::remove_file(dir.join(format!("{id}.json"))) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Writes through a temporary file so a crash never leaves half a snapshot.
pub fn write_snapshot(path: &Path, snap: &Snapshot) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(snap)?)?;
    std::fs::rename(tmp, path)
}

pub fn read_snapshot(path: &Path) -> anyhow::Result<Snapshot> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

fn restore_file(path: &Path) -> anyhow::Result<Session> {
    let snap = read_snapshot(path)?;
    snap.restore().map_err(|e: SnapshotError| anyhow::anyhow!(e))
}
