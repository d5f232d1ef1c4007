//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails at the
//! end if any criterion failed, so a single red line does not hide the rest.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use depdiag::snapshot::Snapshot;
use depdiag::wire::report_json;
use depdiag_core::deps::{expand_component, method_graph, DependencyGraph, OccId};
use depdiag_core::diagnosis::{diagnose, value_filter};
use depdiag_core::interp::{derive_observations, execute, Limits, TestCase, Trace, Value};
use depdiag_core::lang::{pretty_print, CheckedProgram};
use depdiag_core::logic::{compile_sd, resolve_observations, HornClause, Literal, ObsSet, SystemDescription};
use depdiag_core::obs::{Observation, Target};
use depdiag_core::session::{start_session, Session, SessionConfig, Status};
use depdiag_core::slicer::{backward_slice, compare_slice_diag, Position, SliceCriterion};
use depdiag_testkit::checked;
use depdiag_testkit::corpus::{is_sort, subjects, FIG2};
use depdiag_testkit::gen::{program, GenConfig};
use depdiag_testkit::mutate::{apply, mutations, Mutation};
use depdiag_testkit::oracle::{run_session, TruthOracle};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const LIMITS: Limits = Limits::steps(50_000);
const FIG2_BUDGET: Duration = Duration::from_millis(100);
const ORACLE_PROGRAMS: usize = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const MAX_ATOMS: usize = 12;
const LARGE_PROGRAM: usize = 300;
const LARGE_BUDGET: Duration = Duration::from_secs(1);
const MAX_EXPONENT: f64 = 2.2;
const ADDER_TOTAL2: std::ops::RangeInclusive<u32> = 2..=8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn fig2_test(f: i64, g: i64) -> TestCase {
    TestCase {
        method: "test".into(),
        args: [3, 2, 2, 3, 3].iter().map(|&x| Value::int(x)).collect(),
        expect: BTreeMap::from([("f".into(), Value::int(f)), ("g".into(), Value::int(g))]),
        expect_return: None,
    }
}

fn fig2_golden() -> Outcome {
    let start = Instant::now();
    let p = checked("fig2.mjv", FIG2);
    let test = fig2_test(12, 0);
    let trace = execute(&p, "test", &test.args, LIMITS).unwrap();
    let observations = derive_observations(&p, &trace, &test).unwrap();
    let graph = method_graph(&p, "test").unwrap();
    let sd = compile_sd(&graph);
    let obs = resolve_observations(&graph, &observations).unwrap();
    let report = diagnose(&sd, &obs, 1).unwrap();
    let elapsed = start.elapsed();

    let mut problems = Vec::new();
    for (v, want) in [("s1", 6), ("s2", 6), ("s3", 6), ("f", 12), ("g", 12)] {
        if trace.final_env.get(v) != Some(&Value::int(want)) {
            problems.push(format!("{v} = {:?}", trace.final_env.get(v)));
        }
    }
    let mut want_obs: Vec<Observation> = ["a", "b", "c", "d", "e"].iter().map(|v| Observation::Ok(Target::Input(v.to_string()))).collect();
    want_obs.push(Observation::Ok(Target::Output("f".into())));
    want_obs.push(Observation::Nok(Target::Output("g".into())));
    let got_obs: BTreeSet<&Observation> = observations.iter().collect();
    if got_obs != want_obs.iter().collect() {
        problems.push(format!("observations {observations:?}"));
    }
    if sd.behaviors.len() != 5 {
        problems.push(format!("{} behavior clauses", sd.behaviors.len()));
    }
    let labels: Vec<Vec<String>> = report.diagnoses.iter().map(|d| d.labels.clone()).collect();
    if labels != [["C5"], ["C6"], ["C8"]] {
        problems.push(format!("diagnoses {labels:?}"));
    }
    if elapsed >= FIG2_BUDGET {
        problems.push(format!("took {elapsed:?}"));
    }
    outcome(problems.is_empty(), if problems.is_empty() { format!("diagnoses {labels:?} in {elapsed:?}") } else { problems.join("; ") })
}

fn fig2_value_filter() -> Outcome {
    let p = checked("fig2.mjv", FIG2);
    let test = fig2_test(12, 0);
    let trace = execute(&p, "test", &test.args, LIMITS).unwrap();
    let graph = method_graph(&p, "test").unwrap();
    let sd = compile_sd(&graph);
    let obs = resolve_observations(&graph, &derive_observations(&p, &trace, &test).unwrap()).unwrap();
    let all = diagnose(&sd, &obs, 1).unwrap().diagnoses;
    let kept = value_filter(&graph, &test, &all);
    let removed: Vec<Vec<String>> = all.iter().filter(|d| !kept.contains(d)).map(|d| d.labels.clone()).collect();
    outcome(removed == [["C5"]], format!("removed {removed:?}"))
}

fn fig2_slicing() -> Outcome {
    let p = checked("fig2.mjv", FIG2);
    let set = |xs: &[u32]| xs.iter().copied().collect::<BTreeSet<u32>>();
    let g8 = backward_slice(&p, "test", &SliceCriterion::new(["g"], Position::Line(8))).unwrap();
    let both = backward_slice(&p, "test", &SliceCriterion::new(["f", "g"], Position::End)).unwrap();
    let seeded = compare_slice_diag(&p, &fig2_test(0, 0), LIMITS).unwrap();
    let pass = g8 == set(&[5, 6, 8]) && both == set(&[4, 5, 6, 7, 8]) && seeded.diagnosis_lines == set(&[5]) && seeded.slice_lines == set(&[4, 5, 6, 7, 8]);
    outcome(
        pass,
        format!("slice(g,8)={g8:?} slice(f+g)={both:?} line 5 seeded: diagnoses {:?} slice {:?}", seeded.diagnosis_lines, seeded.slice_lines),
    )
}

/// Satisfiability of the clauses under `ab` by enumerating all assignments.
fn truth_table(sd: &SystemDescription, clauses: &[HornClause], obs: &ObsSet, ab: &BTreeSet<usize>) -> bool {
    let n_occ = sd.occurrence_count();
    let n_comp = sd.component_count();
    'assign: for mask in 0u32..(1 << (2 * n_occ + n_comp)) {
        let bit = |i: usize| mask & (1 << i) != 0;
        let val = |l: Literal| match l {
            Literal::Ok(o) => bit(o.index()),
            Literal::Nok(o) => bit(n_occ + o.index()),
            Literal::Ab(c) => bit(2 * n_occ + c),
            Literal::NotAb(c) => !bit(2 * n_occ + c),
        };
        let fixed = obs.ok.iter().all(|&o| val(Literal::Ok(o)))
            && obs.nok.iter().all(|&o| val(Literal::Nok(o)))
            && (0..n_comp).all(|c| val(Literal::Ab(c)) == ab.contains(&c));
        if !fixed {
            continue 'assign;
        }
        if clauses.iter().all(|c| !c.body.iter().all(|&l| val(l)) || c.head.is_some_and(&val)) {
            return true;
        }
    }
    false
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0xacce);
    let (mut programs, mut mismatches) = (0, Vec::new());
    while programs < ORACLE_PROGRAMS {
        let cfg = GenConfig { inputs: rng.gen_range(1..3), locals: 2, statements: rng.gen_range(1..4), allow_if: true, allow_while: false, depth: 1 };
        let g = program(&mut rng, cfg);
        let p = checked("gen", &g.source);
        let graph = method_graph(&p, &g.method).unwrap();
        let sd = compile_sd(&graph);
        let (n_occ, n) = (sd.occurrence_count(), sd.component_count());
        if 2 * n_occ + n > MAX_ATOMS {
            continue;
        }
        let mut obs = ObsSet::default();
        for i in 0..n_occ {
            match rng.gen_range(0..4) {
                0 => obs.ok.insert(OccId(i as u32)),
                1 => obs.nok.insert(OccId(i as u32)),
                _ => false,
            };
        }
        programs += 1;
        let clauses = sd.clauses();
        let subsets: Vec<BTreeSet<usize>> = (0u32..(1 << n)).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect();
        let consistent: Vec<&BTreeSet<usize>> = subsets.iter().filter(|ab| truth_table(&sd, &clauses, &obs, ab)).collect();
        if let Some(ab) = subsets.iter().find(|ab| sd.is_consistent(&obs, ab) != consistent.contains(ab)) {
            mismatches.push(format!("consistency of {ab:?} in\n{}", g.source));
            continue;
        }
        let mut want: Vec<&BTreeSet<usize>> = consistent.iter().copied().filter(|s| !consistent.iter().any(|t| t != s && t.is_subset(s))).collect();
        want.sort();
        match diagnose(&sd, &obs, n) {
            Ok(r) => {
                let mut got: Vec<BTreeSet<usize>> =
                    r.diagnoses.iter().map(|d| d.components.iter().map(|c| sd.component_index(c).unwrap()).collect()).collect();
                got.sort();
                if got.iter().collect::<Vec<_>>() != want {
                    mismatches.push(format!("diagnoses {got:?} vs {want:?} in\n{}", g.source));
                }
            }
            Err(_) if !obs.clashes().is_empty() => {}
            Err(e) => mismatches.push(format!("{e}")),
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && elapsed < ORACLE_BUDGET;
    let detail = match mismatches.first() {
        Some(m) => format!("{} mismatches, first: {m}", mismatches.len()),
        None => format!("{programs} programs agree with truth tables in {elapsed:?}"),
    };
    outcome(pass, detail)
}

fn single_fault_lines(p: &CheckedProgram, graph: &DependencyGraph, trace: &Trace, test: &TestCase) -> Vec<u32> {
    let obs = resolve_observations(graph, &derive_observations(p, trace, test).unwrap()).unwrap();
    let sd = compile_sd(graph);
    diagnose(&sd, &obs, 1).unwrap().diagnoses.iter().flat_map(|d| d.lines.clone()).collect()
}

fn fails(p: &CheckedProgram, trace: &Trace, test: &TestCase) -> bool {
    derive_observations(p, trace, test).unwrap().iter().any(|o| matches!(o, Observation::Nok(_)))
}

fn corpus_completeness() -> Outcome {
    let (mut failing, mut missed) = (0, Vec::new());
    for s in subjects() {
        let intended = s.program();
        let tests = s.tests(&intended);
        for m in mutations(intended.program(), None) {
            let faulty = apply(&intended, &m);
            for t in &tests {
                let Ok(trace) = execute(&faulty, &t.method, &t.args, LIMITS) else { continue };
                if !fails(&faulty, &trace, t) {
                    continue;
                }
                failing += 1;
                let mut graph = method_graph(&faulty, &t.method).unwrap();
                let top = m.method != t.method || single_fault_lines(&faulty, &graph, &trace, t).contains(&m.line);
                while let Some(c) = graph.components.iter().find(|c| c.kind.is_composite()) {
                    let id = c.id.clone();
                    graph = expand_component(&faulty, Some(&trace), &graph, &id).unwrap();
                }
                if !top || !single_fault_lines(&faulty, &graph, &trace, t).contains(&m.line) {
                    missed.push(format!("{} line {}", s.name, m.line));
                }
            }
        }
    }
    let found = failing - missed.len();
    outcome(failing > 0 && missed.is_empty(), format!("{found}/{failing} failing runs keep the faulty line {missed:?}"))
}

/// Straight-line program with one wrong output and the others right.
fn large_instance(n: usize, seed: u64) -> (SystemDescription, ObsSet) {
    let mut rng = StdRng::seed_from_u64(seed);
    let g = program(&mut rng, GenConfig::straight_line(n));
    let p = checked("gen", &g.source);
    let graph = method_graph(&p, &g.method).unwrap();
    let mut obs = ObsSet::default();
    obs.ok.extend(graph.inputs.iter().copied());
    let mut computed = graph.outputs.iter().copied().filter(|o| !graph.inputs.contains(o));
    obs.nok.extend(computed.next());
    obs.ok.extend(computed);
    (compile_sd(&graph), obs)
}

fn performance() -> Outcome {
    let (sd, obs) = large_instance(LARGE_PROGRAM, 7);
    let start = Instant::now();
    let r = diagnose(&sd, &obs, 1).unwrap();
    let elapsed = start.elapsed();

    let sizes = [50usize, 100, 200];
    let counts: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            (0..5)
                .map(|seed| {
                    let (sd, obs) = large_instance(n, seed);
                    diagnose(&sd, &obs, 1).unwrap().propagations as f64
                })
                .sum::<f64>()
                / 5.0
        })
        .collect();
    let exponent = (counts[2] / counts[0]).ln() / 4f64.ln();
    let pass = !r.diagnoses.is_empty() && elapsed < LARGE_BUDGET && exponent <= MAX_EXPONENT;
    outcome(
        pass,
        format!("{LARGE_PROGRAM} statements: {} diagnoses in {elapsed:?}; propagations {counts:?} give exponent {exponent:.2}", r.diagnoses.len()),
    )
}

fn config() -> SessionConfig {
    SessionConfig { max_card: 2, limits: LIMITS }
}

/// Sessions over the mutants of `subject`, one per mutant with a failing test.
fn mutant_sessions(name: &str) -> Vec<(Mutation, usize, Session)> {
    let s = subjects().into_iter().find(|s| s.name == name).unwrap();
    let intended = s.program();
    let tests = s.tests(&intended);
    let decl = intended.method(s.method).unwrap();
    let mut order = Vec::new();
    decl.body.walk(&mut |st| order.push(st.line));
    let mut out = Vec::new();
    for m in mutations(intended.program(), Some(s.method)) {
        let faulty = apply(&intended, &m);
        let failing = tests.iter().find(|t| execute(&faulty, &t.method, &t.args, LIMITS).is_ok_and(|tr| fails(&faulty, &tr, t)));
        let Some(t) = failing else { continue };
        let mut session = start_session(faulty, t.clone(), config()).unwrap();
        run_session(&mut session, &TruthOracle::new(intended.clone(), t, LIMITS), 500).unwrap();
        let index = order.iter().position(|&l| l == m.line).unwrap() + 1;
        out.push((m, index, session));
    }
    out
}

fn localized(m: &Mutation, s: &Session) -> bool {
    matches!(s.status(), Status::Localized { lines, .. } if lines.contains(&m.line))
}

fn adder_accounting() -> Outcome {
    let runs = mutant_sessions("adder");
    let bad: Vec<String> = runs
        .iter()
        .filter(|(m, _, s)| !(s.counters().setup == 1 && ADDER_TOTAL2.contains(&s.counters().total2()) && localized(m, s)))
        .map(|(m, _, s)| format!("line {} {:?}", m.line, s.counters()))
        .collect();
    let totals: Vec<u32> = runs.iter().map(|(_, _, s)| s.counters().total2()).collect();
    outcome(!runs.is_empty() && bad.is_empty(), format!("{} mutants, Total2 {totals:?} {bad:?}", runs.len()))
}

fn sort_accounting() -> Outcome {
    let mut rows = Vec::new();
    let mut over = 0;
    for s in subjects().iter().filter(|s| is_sort(s)) {
        for (m, index, session) in mutant_sessions(s.name) {
            let t2 = session.counters().total2();
            let ok = t2 as usize <= index && localized(&m, &session);
            over += !ok as usize;
            rows.push(format!("{} line {}: Total2 {t2} vs index {index}{}", s.name, m.line, if ok { "" } else { " (over)" }));
        }
    }
    outcome(!rows.is_empty() && over == 0, format!("{over}/{} mutants over budget: {}", rows.len(), rows.join(", ")))
}

fn replay_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (mut checked_sessions, mut bad) = (0, Vec::new());
    for name in ["adder", "insertionSort", "library"] {
        let s = subjects().into_iter().find(|s| s.name == name).unwrap();
        let intended = s.program();
        let tests = s.tests(&intended);
        for m in mutations(intended.program(), None).into_iter().take(6) {
            // snapshots carry source text, so start from the printed mutant
            let faulty = checked("mutant.mjv", &pretty_print(apply(&intended, &m).program()));
            for t in &tests {
                let Ok(mut session) = start_session(faulty.clone(), t.clone(), config()) else { continue };
                let oracle = TruthOracle::new(intended.clone(), t, LIMITS);
                // a snapshot mid-session and one at the end
                for budget in [1, 500] {
                    run_session(&mut session, &oracle, budget).unwrap();
                    let path = dir.path().join(format!("{checked_sessions}.json"));
                    std::fs::write(&path, serde_json::to_vec(&Snapshot::capture(&session)).unwrap()).unwrap();
                    let snap: Snapshot = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
                    checked_sessions += 1;
                    match snap.restore() {
                        Ok(r) if r.counters() == session.counters() && r.candidates() == session.candidates() && report_json(&r) == report_json(&session) => {}
                        Ok(_) => bad.push(format!("{name} line {} differs after replay", m.line)),
                        Err(e) => bad.push(format!("{name} line {}: {e}", m.line)),
                    }
                }
            }
        }
    }
    outcome(checked_sessions > 0 && bad.is_empty(), format!("{checked_sessions} snapshots replayed {bad:?}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("fig2 golden trace, observations, model and diagnoses", fig2_golden),
        ("fig2 value filter removes exactly C5", fig2_value_filter),
        ("fig2 slices and slice/diagnosis comparison", fig2_slicing),
        ("engine agrees with truth tables", oracle_equivalence),
        ("completeness over corpus mutants", corpus_completeness),
        ("single-fault search time and growth", performance),
        ("adder interaction counts", adder_accounting),
        ("sort interaction counts within the faulty statement index", sort_accounting),
        ("replay determinism across persisted snapshots", replay_determinism),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let o = f();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
