//! Minimal diagnoses, the value-based candidate filter and refinement.

mod hsdag;
mod value_filter;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::deps::{expand_component, ComponentId, DepError, DependencyGraph};
use crate::interp::Trace;
use crate::lang::CheckedProgram;
use crate::logic::{compile_sd, LogicError, ObsSet, SystemDescription, Verdict};
use crate::obs::Observation;

pub use hsdag::{hs_dag, minimal_hitting_sets, ConflictSource, HsResult, Outcome};
pub use value_filter::{value_filter, value_filter_one};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiagnosisError {
    #[error("{0} is observed both ok and nok")]
    ObservationClash(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Dependency(#[from] DepError),
}

/// A set of components assumed abnormal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnosis {
    pub components: Vec<ComponentId>,
    pub labels: Vec<String>,
    /// Source lines covered by the components.
    pub lines: Vec<u32>,
}

impl Diagnosis {
    pub fn cardinality(&self) -> usize {
        self.components.len()
    }

    pub fn from_indices(sd: &SystemDescription, set: &BTreeSet<usize>) -> Diagnosis {
        let mut idx: Vec<usize> = set.iter().copied().collect();
        idx.sort_by_key(|&c| (sd.components[c].line, c));
        let mut lines = BTreeSet::new();
        for &c in &idx {
            let info = &sd.components[c];
            lines.extend(info.line..=info.end_line);
        }
        Diagnosis {
            components: idx.iter().map(|&c| sd.components[c].id.clone()).collect(),
            labels: idx.iter().map(|&c| sd.components[c].label.clone()).collect(),
            lines: lines.into_iter().collect(),
        }
    }

    fn sort_key(&self) -> (usize, u32, &[u32], &[ComponentId]) {
        (self.cardinality(), self.lines.first().copied().unwrap_or(0), &self.lines, &self.components)
    }
}

/// Sorts by cardinality, then earliest line.
pub fn sort_diagnoses(ds: &mut [Diagnosis]) {
    ds.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosisReport {
    pub diagnoses: Vec<Diagnosis>,
    /// Conflicts computed during the search, as component labels.
    pub conflicts: Vec<Vec<String>>,
    /// Calls of the consistency checker.
    pub checks: u64,
    /// Propagation runs, including those spent shrinking conflicts.
    pub propagations: u64,
}

struct SdSource<'a> {
    sd: &'a SystemDescription,
    obs: &'a ObsSet,
    checks: u64,
}

impl ConflictSource for SdSource<'_> {
    fn test(&mut self, abnormal: &BTreeSet<usize>, want_conflict: bool) -> Outcome {
        self.checks += 1;
        if !want_conflict {
            return if self.sd.is_consistent(self.obs, abnormal) { Outcome::Consistent } else { Outcome::Inconsistent };
        }
        match self.sd.check_consistency(self.obs, abnormal).expect("observations validated") {
            Verdict::Consistent => Outcome::Consistent,
            Verdict::Conflict(c) => Outcome::Conflict(c),
        }
    }
}

/// All subset-minimal diagnoses with at most `max_card` components, in
/// deterministic order. Components observed normal never appear.
pub fn diagnose(sd: &SystemDescription, obs: &ObsSet, max_card: usize) -> Result<DiagnosisReport, DiagnosisError> {
    if let Some(o) = obs.clashes().first() {
        return Err(DiagnosisError::ObservationClash(sd.occurrences[o.index()].clone()));
    }
    sd.validate(obs)?;
    let before = sd.propagations();
    let mut src = SdSource { sd, obs, checks: 0 };
    let hs = hs_dag(&mut src, max_card);
    let mut diagnoses: Vec<Diagnosis> = hs.sets.iter().map(|s| Diagnosis::from_indices(sd, s)).collect();
    sort_diagnoses(&mut diagnoses);
    let conflicts = hs
        .conflicts
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_by_key(|&i| (sd.components[i].line, i));
            c.into_iter().map(|i| sd.components[i].label.clone()).collect()
        })
        .collect();
    Ok(DiagnosisReport { diagnoses, conflicts, checks: src.checks, propagations: sd.propagations() - before })
}

/// A diagnosis problem one level finer than before.
#[derive(Debug, Clone)]
pub struct Refined {
    pub graph: DependencyGraph,
    pub sd: SystemDescription,
    /// Observations that still resolve in the refined graph.
    pub observations: Vec<Observation>,
    pub obs: ObsSet,
}

/// Expands `blamed`, recompiles the system description and keeps the
/// observations that survive.
pub fn refine(
    program: &CheckedProgram,
    trace: Option<&Trace>,
    graph: &DependencyGraph,
    blamed: &ComponentId,
    observations: &[Observation],
) -> Result<Refined, DiagnosisError> {
    let graph = expand_component(program, trace, graph, blamed)?;
    let sd = compile_sd(&graph);
    let observations: Vec<Observation> = observations
        .iter()
        .filter(|o| match o {
            Observation::Ok(t) | Observation::Nok(t) => graph.resolve(t).is_some(),
            Observation::Normal(c) => graph.component_index(c).is_some(),
        })
        .cloned()
        .collect();
    let obs = crate::logic::resolve_observations(&graph, &observations)?;
    Ok(Refined { graph, sd, observations, obs })
}
