//! Choosing the next occurrence to ask about.
//!
//! Every candidate gets the same prior weight. A candidate predicts `nok` for
//! an occurrence when the occurrence is downstream of one of its components
//! and `ok` is not already forced without them. The chosen query minimizes
//! the expected number of surviving candidates.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::deps::{DependencyGraph, OccId, Occurrence};
use crate::interp::{IterVec, OccKey, Site, Trace, Value};
use crate::lang::StatementId;
use crate::logic::{ObsSet, SystemDescription};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementQuery {
    pub occurrence: OccId,
    pub label: String,
    pub key: OccKey,
    pub statement: Option<StatementId>,
    pub line: u32,
    pub iteration: Option<IterVec>,
    pub displayed_value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomePartition {
    pub candidates: usize,
    /// Candidates predicting `nok`; `P(nok)` is this over `candidates`.
    pub predict_nok: usize,
    /// Indices of candidates consistent with each answer.
    pub ok_survivors: Vec<usize>,
    pub nok_survivors: Vec<usize>,
}

impl OutcomePartition {
    pub fn p_nok(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.predict_nok as f64 / self.candidates as f64
        }
    }

    /// Expected survivor count times the number of candidates.
    pub fn expected_scaled(&self) -> usize {
        (self.candidates - self.predict_nok) * self.ok_survivors.len() + self.predict_nok * self.nok_survivors.len()
    }

    pub fn worst_case(&self) -> usize {
        self.ok_survivors.len().max(self.nok_survivors.len())
    }

    pub fn discriminates(&self) -> bool {
        self.predict_nok > 0 && self.predict_nok < self.candidates && !self.ok_survivors.is_empty() && !self.nok_survivors.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("{0} is already observed")]
    AlreadyObserved(String),
    #[error("{0} was not executed in the trace")]
    NotExecuted(String),
}

/// Ranking of discriminating queries; smaller is better.
pub trait SelectionPolicy {
    fn rank(&self, p: &OutcomePartition) -> (usize, usize);
}

/// Expected remaining candidates, then the worst case.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExpectedSurvivors;

impl SelectionPolicy for ExpectedSurvivors {
    fn rank(&self, p: &OutcomePartition) -> (usize, usize) {
        (p.expected_scaled(), p.worst_case())
    }
}

/// What the planner looks at.
pub struct PlanState<'a> {
    pub graph: &'a DependencyGraph,
    pub sd: &'a SystemDescription,
    pub obs: &'a ObsSet,
    /// Current candidates as component indices of `sd`.
    pub candidates: &'a [BTreeSet<usize>],
    pub trace: &'a Trace,
    /// Occurrences the planner may not ask about.
    pub exclude: Option<&'a dyn Fn(&Occurrence) -> bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Query(MeasurementQuery, OutcomePartition),
    Done,
}

pub fn query_for(graph: &DependencyGraph, trace: &Trace, occ: OccId) -> Result<MeasurementQuery, PlannerError> {
    let o = graph.occurrence(occ);
    let value = trace.value(&o.key).ok_or_else(|| PlannerError::NotExecuted(o.label()))?;
    let (statement, iteration) = match &o.key.site {
        Site::After { stmt, iter } | Site::Cond { stmt, iter } => (Some(*stmt), Some(iter.clone()).filter(|i| !i.is_empty())),
        Site::Input => (o.key.ctx.last().map(|f| f.call), None),
    };
    Ok(MeasurementQuery {
        occurrence: occ,
        label: o.label(),
        key: o.key.clone(),
        statement,
        line: o.line,
        iteration,
        displayed_value: value.clone(),
    })
}

pub fn partition_outcomes(state: &PlanState<'_>, occ: OccId) -> Result<OutcomePartition, PlannerError> {
    if state.obs.is_observed(occ) {
        return Err(PlannerError::AlreadyObserved(state.graph.occurrence(occ).label()));
    }
    let upstream = state.graph.upstream_components(occ);
    let mut with_ok = state.obs.clone();
    with_ok.ok.insert(occ);
    let mut with_nok = state.obs.clone();
    with_nok.nok.insert(occ);
    let mut p = OutcomePartition { candidates: state.candidates.len(), predict_nok: 0, ok_survivors: Vec::new(), nok_survivors: Vec::new() };
    for (i, d) in state.candidates.iter().enumerate() {
        let normal = |c: usize| state.obs.normal.contains(&c) || !d.contains(&c);
        let reachable = d.iter().any(|c| upstream.contains(c));
        if reachable && !state.sd.entails_ok(state.obs, occ, &normal) {
            p.predict_nok += 1;
        }
        if state.sd.is_consistent(&with_ok, d) {
            p.ok_survivors.push(i);
        }
        if state.sd.is_consistent(&with_nok, d) {
            p.nok_survivors.push(i);
        }
    }
    Ok(p)
}

/// The best discriminating query, or `Done` when there is none.
pub fn select_measurement(state: &PlanState<'_>) -> Selection {
    select_with(state, &ExpectedSurvivors)
}

pub fn select_with(state: &PlanState<'_>, policy: &dyn SelectionPolicy) -> Selection {
    if state.candidates.len() <= 1 {
        return Selection::Done;
    }
    let mut best: Option<((usize, usize), OccId, OutcomePartition)> = None;
    for o in &state.graph.occurrences {
        if state.obs.is_observed(o.id) || state.trace.value(&o.key).is_none() || state.exclude.is_some_and(|f| f(o)) {
            continue;
        }
        let Ok(p) = partition_outcomes(state, o.id) else { continue };
        if !p.discriminates() {
            continue;
        }
        let rank = policy.rank(&p);
        if best.as_ref().is_none_or(|(r, _, _)| rank < *r) {
            best = Some((rank, o.id, p));
        }
    }
    match best {
        Some((_, occ, p)) => Selection::Query(query_for(state.graph, state.trace, occ).expect("executed occurrence"), p),
        None => Selection::Done,
    }
}
