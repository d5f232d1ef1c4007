//! Operator swaps keep every functional dependency, so the swapped
//! statement must stay among the single-fault diagnoses of any failing test.

use depdiag_core::deps::{expand_component, method_graph, DependencyGraph};
use depdiag_core::diagnosis::diagnose;
use depdiag_core::interp::{derive_observations, execute, Limits, TestCase, Trace};
use depdiag_core::lang::CheckedProgram;
use depdiag_core::logic::{compile_sd, resolve_observations};
use depdiag_testkit::corpus::{expected_test, subjects};
use depdiag_testkit::gen::{args, program, GenConfig};
use depdiag_testkit::mutate::{apply, mutations, Mutation};
use depdiag_testkit::checked;
use rand::rngs::StdRng;
use rand::SeedableRng;

const LIMITS: Limits = Limits::steps(50_000);

fn single_fault_lines(p: &CheckedProgram, graph: &DependencyGraph, trace: &Trace, test: &TestCase) -> Option<Vec<u32>> {
    let observations = derive_observations(p, trace, test).unwrap();
    let obs = resolve_observations(graph, &observations).unwrap();
    if obs.nok.is_empty() {
        return None;
    }
    let sd = compile_sd(graph);
    Some(diagnose(&sd, &obs, 1).unwrap().diagnoses.iter().flat_map(|d| d.lines.clone()).collect())
}

/// Checks the top-level graph, unless the mutation sits in a callee, and the
/// fully expanded one. Returns whether the test failed.
fn check(faulty: &CheckedProgram, test: &TestCase, m: &Mutation, what: &str) -> bool {
    let line = m.line;
    let Ok(trace) = execute(faulty, &test.method, &test.args, LIMITS) else { return false };
    let mut graph = method_graph(faulty, &test.method).unwrap();
    let Some(lines) = single_fault_lines(faulty, &graph, &trace, test) else { return false };
    assert!(m.method != test.method || lines.contains(&line), "{what}: line {line} missing from {lines:?}");
    for round in 0.. {
        let Some(c) = graph.components.iter().find(|c| c.kind.is_composite()) else { break };
        assert!(round < 100, "{what}: {c:?} does not go away");
        let id = c.id.clone();
        graph = expand_component(faulty, Some(&trace), &graph, &id).unwrap();
    }
    let lines = single_fault_lines(faulty, &graph, &trace, test).unwrap();
    assert!(lines.contains(&line), "{what} expanded: line {line} missing from {lines:?}");
    true
}

#[test]
fn corpus_mutants_keep_the_faulty_line() {
    let mut failing = 0;
    for s in subjects() {
        let intended = s.program();
        let tests = s.tests(&intended);
        for m in mutations(intended.program(), None) {
            let faulty = apply(&intended, &m);
            for t in &tests {
                failing += check(&faulty, t, &m, &format!("{} {m:?}", s.name)) as usize;
            }
        }
    }
    assert!(failing > 50, "{failing}");
}

#[test]
fn random_mutants_keep_the_faulty_line() {
    let mut rng = StdRng::seed_from_u64(42);
    let mut failing = 0;
    for _ in 0..300 {
        let g = program(&mut rng, GenConfig::small());
        let intended = checked("gen", &g.source);
        let outputs: Vec<&str> = g.outputs.iter().map(String::as_str).filter(|v| g.source.contains(&format!(" {v} = "))).collect();
        let test = expected_test(&intended, &g.method, &outputs, &args(&mut rng, 3));
        for m in mutations(intended.program(), None) {
            let faulty = apply(&intended, &m);
            failing += check(&faulty, &test, &m, &format!("{m:?}\n{}", g.source)) as usize;
        }
    }
    assert!(failing > 100, "{failing}");
}
