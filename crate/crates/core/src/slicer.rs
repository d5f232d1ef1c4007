//! Static backward slices over the dependency graph, and their comparison
//! with single-fault diagnoses.
//!
//! Slices use the graph in which every conditional is expanded, so the
//! condition line of a conditional joins the slice whenever a value it
//! controls does. Loops and calls stay whole.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::deps::{build_graph, Component, ComponentKind, DepError, DependencyGraph, Granularity, OccId};
use crate::diagnosis::{diagnose, DiagnosisError};
use crate::interp::{derive_observations, execute, ExecError, Limits, ObservationError, TestCase, RETURN_VAR};
use crate::lang::{CheckedProgram, MethodDecl, Statement, Type};
use crate::logic::{compile_sd, resolve_observations};
use crate::obs::{Observation, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    /// After the statement at this line.
    Line(u32),
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceCriterion {
    pub variables: BTreeSet<String>,
    pub position: Position,
}

impl SliceCriterion {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(vars: I, position: Position) -> SliceCriterion {
        SliceCriterion { variables: vars.into_iter().map(Into::into).collect(), position }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SliceError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("`{0}` is not a variable of the method")]
    UnknownVariable(String),
    #[error("line {0} is outside the method")]
    BadPosition(u32),
    #[error(transparent)]
    Dependency(#[from] DepError),
}

/// The graph slices are computed on.
pub fn slice_graph(program: &CheckedProgram, method: &str) -> Result<DependencyGraph, DepError> {
    build_graph(program, method, None, &Granularity { all_ifs: true, ..Granularity::default() })
}

pub fn backward_slice(program: &CheckedProgram, method: &str, criterion: &SliceCriterion) -> Result<BTreeSet<u32>, SliceError> {
    let graph = slice_graph(program, method)?;
    slice_on(program, &graph, criterion)
}

/// Slice over a prebuilt [`slice_graph`].
pub fn slice_on(program: &CheckedProgram, graph: &DependencyGraph, criterion: &SliceCriterion) -> Result<BTreeSet<u32>, SliceError> {
    let decl = program.method(&graph.method).ok_or_else(|| SliceError::UnknownMethod(graph.method.clone()))?;
    let info = program.info(&decl.name).expect("checked method");
    for v in &criterion.variables {
        if info.var_type(v).is_none() && !(v == RETURN_VAR && decl.return_type != Type::Void) {
            return Err(SliceError::UnknownVariable(v.clone()));
        }
    }
    let point = match criterion.position {
        Position::End => None,
        Position::Line(l) if l < decl.line || l > decl.end_line => return Err(SliceError::BadPosition(l)),
        Position::Line(l) => Some(last_statement_before(graph, decl, l)),
    };
    let mut comps = BTreeSet::new();
    for v in &criterion.variables {
        let occ: Option<OccId> = match point {
            None => graph.final_occurrence(v),
            Some(Some(s)) => graph.binding_after(s, v),
            Some(None) => graph.resolve(&Target::Input(v.clone())),
        };
        if let Some(o) = occ {
            comps.extend(graph.upstream_components(o));
        }
    }
    let mut lines = BTreeSet::new();
    for c in comps {
        lines.extend(component_lines(program, &graph.components[c]));
    }
    Ok(lines)
}

/// The last statement in source order starting at or before `line` whose
/// bindings the graph records; `None` means method entry.
fn last_statement_before(graph: &DependencyGraph, decl: &MethodDecl, line: u32) -> Option<crate::lang::StatementId> {
    let mut found = None;
    decl.body.walk(&mut |s| {
        if s.line <= line && graph.has_bindings_after(s.id) {
            found = Some(s.id);
        }
    });
    found
}

/// Executable source lines a component stands for.
pub fn component_lines(program: &CheckedProgram, c: &Component) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    match c.kind {
        ComponentKind::If | ComponentKind::While => {
            if let Some((_, s)) = program.program().statement(c.id.stmt) {
                s.walk(&mut |x: &Statement| {
                    if x.is_executable() {
                        out.insert(x.line);
                    }
                });
            }
        }
        _ => {
            out.insert(c.line);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonReport {
    pub nok_outputs: Vec<String>,
    /// Union of the slices of all wrong outputs, or of all expected outputs
    /// when none is wrong.
    pub slice_lines: BTreeSet<u32>,
    /// Lines of all single-fault diagnoses.
    pub diagnosis_lines: BTreeSet<u32>,
    /// Slice lines no single-fault diagnosis points at.
    pub difference: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Observation(#[from] ObservationError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

pub fn compare_slice_diag(program: &CheckedProgram, test: &TestCase, limits: Limits) -> Result<ComparisonReport, CompareError> {
    let trace = execute(program, &test.method, &test.args, limits)?;
    let observations = derive_observations(program, &trace, test)?;
    let nok_outputs: Vec<String> = observations
        .iter()
        .filter_map(|o| match o {
            Observation::Nok(Target::Output(v)) => Some(v.clone()),
            _ => None,
        })
        .collect();

    let sgraph = slice_graph(program, &test.method).map_err(SliceError::from)?;
    // With nothing wrong, slice what the test looks at.
    let variables: BTreeSet<String> = if nok_outputs.is_empty() {
        let mut all: BTreeSet<String> = test.expect.keys().cloned().collect();
        if test.expect_return.is_some() {
            all.insert(String::from(RETURN_VAR));
        }
        all
    } else {
        nok_outputs.iter().cloned().collect()
    };
    let slice_lines = slice_on(program, &sgraph, &SliceCriterion { variables, position: Position::End })?;

    let graph = crate::deps::method_graph(program, &test.method).map_err(DiagnosisError::from)?;
    let sd = compile_sd(&graph);
    let obs = resolve_observations(&graph, &observations).map_err(DiagnosisError::from)?;
    let report = diagnose(&sd, &obs, 1)?;
    let mut diagnosis_lines = BTreeSet::new();
    for d in &report.diagnoses {
        for id in &d.components {
            let c = graph.component(id).expect("component of this graph");
            diagnosis_lines.extend(component_lines(program, c));
        }
    }
    let difference = slice_lines.difference(&diagnosis_lines).copied().collect();
    Ok(ComparisonReport { nok_outputs, slice_lines, diagnosis_lines, difference })
}
