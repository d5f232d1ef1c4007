//! Session snapshots: enough to rebuild a session by replaying its history.

use depdiag_core::interp::Limits;
use depdiag_core::logic::Literal;
use depdiag_core::session::{replay, HistoryEntry, Session, SessionConfig, SessionError};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use crate::load::{parse_program, program_hash, ProgramError};
use crate::wire::{counters_json, status_json, HistoryJson, TestFile, WireError};

pub const FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigJson {
    pub max_card: usize,
    pub step_budget: u64,
    pub int_bits: u64,
}

impl From<&SessionConfig> for ConfigJson {
    fn from(c: &SessionConfig) -> Self {
        ConfigJson { max_card: c.max_card, step_budget: c.limits.step_budget, int_bits: c.limits.int_bits }
    }
}

impl From<&ConfigJson> for SessionConfig {
    fn from(c: &ConfigJson) -> Self {
        SessionConfig { max_card: c.max_card, limits: Limits { step_budget: c.step_budget, int_bits: c.int_bits } }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: u32,
    pub program_hash: String,
    pub source_name: String,
    pub source: String,
    pub test: TestFile,
    pub config: ConfigJson,
    /// Observation literals of the current model, for reading only.
    pub observations: Vec<String>,
    pub counters: Json,
    pub status: Json,
    pub history: Vec<HistoryJson>,
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("unsupported snapshot format {0}")]
    Format(u32),
    #[error("program hash mismatch: snapshot says {expected}, source hashes to {actual}")]
    Hash { expected: String, actual: String },
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("replay failed: {0}")]
    Replay(#[from] SessionError),
    #[error("replayed counters {actual} differ from recorded {expected}")]
    Diverged { expected: Json, actual: Json },
}

pub fn observation_literals(s: &Session) -> Vec<String> {
    let sd = s.system_description();
    let obs = s.obs();
    let mut out: Vec<String> = obs.ok.iter().map(|&o| sd.literal(Literal::Ok(o))).collect();
    out.extend(obs.nok.iter().map(|&o| sd.literal(Literal::Nok(o))));
    out.extend(obs.normal.iter().map(|&c| sd.literal(Literal::NotAb(c))));
    out
}

impl Snapshot {
    pub fn capture(s: &Session) -> Snapshot {
        let p = s.program().program();
        Snapshot {
            format: FORMAT,
            program_hash: program_hash(&p.source),
            source_name: p.source_name.clone(),
            source: p.source.clone(),
            test: TestFile::from_test(s.test()),
            config: s.config().into(),
            observations: observation_literals(s),
            counters: counters_json(&s.counters()),
            status: status_json(s.status()),
            history: s.history().iter().map(HistoryJson::from).collect(),
        }
    }

    /// Replays the history and checks the counters come out the same.
    pub fn restore(&self) -> Result<Session, SnapshotError> {
        if self.format != FORMAT {
            return Err(SnapshotError::Format(self.format));
        }
        let actual = program_hash(&self.source);
        if actual != self.program_hash {
            return Err(SnapshotError::Hash { expected: self.program_hash.clone(), actual });
        }
        let program = parse_program(&self.source_name, &self.source)?;
        let history = self.history.iter().map(HistoryEntry::try_from).collect::<Result<Vec<_>, _>>()?;
        let s = replay(program, self.test.to_test()?, (&self.config).into(), &history)?;
        let counters = counters_json(&s.counters());
        if counters != self.counters {
            return Err(SnapshotError::Diverged { expected: self.counters.clone(), actual: counters });
        }
        Ok(s)
    }
}
