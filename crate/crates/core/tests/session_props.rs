//! Session invariants under a truthful user, on corpus and random mutants.

use depdiag_core::diagnosis::diagnose;
use depdiag_core::interp::{execute, Limits, TestCase};
use depdiag_core::lang::CheckedProgram;
use depdiag_core::session::{replay, start_session, ActionKind, Session, SessionConfig, Status};
use depdiag_testkit::checked;
use depdiag_testkit::corpus::{expected_test, subjects};
use depdiag_testkit::gen::{args, program, GenConfig};
use depdiag_testkit::mutate::{apply, mutations, Mutation};
use depdiag_testkit::oracle::TruthOracle;
use rand::rngs::StdRng;
use rand::SeedableRng;

const LIMITS: Limits = Limits::steps(50_000);

fn config() -> SessionConfig {
    SessionConfig { limits: LIMITS, ..SessionConfig::default() }
}

fn assert_fresh(s: &Session, what: &str) {
    let want = diagnose(s.system_description(), s.obs(), s.cardinality()).unwrap().diagnoses;
    assert_eq!(s.candidates(), want.as_slice(), "{what}: stale candidates");
    let c = s.counters();
    assert_eq!(c.total(), c.setup + c.query + c.loop_ + c.exprs + c.iter);
    assert_eq!(c.total2(), c.setup + c.query);
    let r = s.interaction_report();
    assert_eq!((r.total, r.total2), (c.total(), c.total2()));
}

/// Runs one truthful session and checks it step by step. `None` when the
/// test passes or the faulty run does not finish normally.
fn drive(intended: &CheckedProgram, faulty: CheckedProgram, test: &TestCase, m: &Mutation, what: &str) -> Option<Session> {
    let trace = execute(&faulty, &test.method, &test.args, LIMITS).ok()?;
    let occurrences = trace.keys().count();
    let mut s = start_session(faulty.clone(), test.clone(), config()).unwrap();
    if matches!(s.status(), Status::Localized { components, .. } if components.is_empty()) {
        return None;
    }
    let oracle = TruthOracle::new(intended.clone(), test, LIMITS);
    assert_fresh(&s, what);
    let mut steps = 0;
    while let Ok(a) = s.next_action().cloned() {
        let Some(answer) = oracle.answer(&s, &a) else { break };
        let before = (s.candidates().len(), s.cardinality(), s.graph().components.len());
        s.submit_answer(a.id, answer).unwrap();
        steps += 1;
        assert_fresh(&s, what);
        // counts compare only while the granularity and the bound stay put
        if matches!(a.kind, ActionKind::AskQuery(_)) && (s.cardinality(), s.graph().components.len()) == (before.1, before.2) {
            assert!(s.candidates().len() <= before.0, "{what}: {} -> {}", before.0, s.candidates().len());
        }
        assert!(steps <= occurrences, "{what}: {steps} steps for {occurrences} occurrences");
    }
    match s.status() {
        Status::Localized { lines, .. } => assert!(lines.contains(&m.line), "{what}: localized {lines:?}, seeded {}", m.line),
        other => panic!("{what}: ended {other:?}"),
    }
    let r = replay(faulty, test.clone(), config(), s.history()).unwrap();
    assert_eq!(r.candidates(), s.candidates());
    assert_eq!(r.counters(), s.counters());
    assert_eq!(r.status(), s.status());
    Some(s)
}

#[test]
fn corpus_sessions_localize_the_seeded_line() {
    let mut sessions = 0;
    for subj in subjects() {
        let intended = subj.program();
        for t in subj.tests(&intended) {
            for m in mutations(intended.program(), None) {
                let what = format!("{} {:?} {m:?}", subj.name, t.args);
                sessions += drive(&intended, apply(&intended, &m), &t, &m, &what).is_some() as usize;
            }
        }
    }
    assert!(sessions > 50, "{sessions}");
}

#[test]
fn random_sessions_localize_the_seeded_line() {
    let mut rng = StdRng::seed_from_u64(99);
    let mut sessions = 0;
    for _ in 0..200 {
        let g = program(&mut rng, GenConfig::small());
        let intended = checked("gen", &g.source);
        let outputs: Vec<&str> = g.outputs.iter().map(String::as_str).filter(|v| g.source.contains(&format!(" {v} = "))).collect();
        let test = expected_test(&intended, &g.method, &outputs, &args(&mut rng, 3));
        for m in mutations(intended.program(), None) {
            let what = format!("{m:?}\n{}\n{:?}", g.source, test.args);
            sessions += drive(&intended, apply(&intended, &m), &test, &m, &what).is_some() as usize;
        }
    }
    assert!(sessions > 100, "{sessions}");
}
