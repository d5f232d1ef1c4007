use alloc::collections::BTreeMap;

use super::*;
use crate::interp::Value;
use crate::lang::{check, parse};

const FIG2: &str = "class SWExamples {
  public static void test(int a,b,c,d,e) {
    int f,g,s1,s2,s3;
    s1=a*c;
    s2=b*d;
    s3=c*e;
    f=s1+s2;
    g=s2+s3;
  }
}
";

fn program(src: &str) -> CheckedProgram {
    check(parse("t", src).unwrap()).unwrap()
}

fn fig2_test(f: i64, g: i64) -> TestCase {
    TestCase {
        method: "test".into(),
        args: [3, 2, 2, 3, 3].iter().map(|&x| Value::int(x)).collect(),
        expect: BTreeMap::from([("f".into(), Value::int(f)), ("g".into(), Value::int(g))]),
        expect_return: None,
    }
}

fn fig2_session() -> Session {
    start_session(program(FIG2), fig2_test(12, 0), SessionConfig::default()).unwrap()
}

fn labels(s: &Session) -> Vec<Vec<String>> {
    s.candidates().iter().map(|d| d.labels.clone()).collect()
}

fn query(s: &Session) -> (u64, MeasurementQuery) {
    match s.next_action().unwrap() {
        Action { id, kind: ActionKind::AskQuery(q) } => (*id, q.clone()),
        a => panic!("expected a query, got {a:?}"),
    }
}

#[test]
fn fresh_fig2_session() {
    let s = fig2_session();
    assert_eq!(labels(&s), [["C5"], ["C6"], ["C8"]]);
    assert_eq!(s.counters(), Counters { setup: 1, ..Counters::default() });
    let r = s.interaction_report();
    assert_eq!((r.total, r.total2, r.lines), (1, 1, None));
    let (_, q) = query(&s);
    assert_eq!((q.label.as_str(), q.line, q.displayed_value.clone()), ("s2#1", 5, Value::int(6)));
}

#[test]
fn fault_at_line_8() {
    let mut s = fig2_session();
    let (id, _) = query(&s);
    s.submit_answer(id, Answer::Verdict(true)).unwrap();
    assert_eq!(labels(&s), [["C6"], ["C8"]]);
    let (id, q) = query(&s);
    assert_eq!(q.label, "s3#1");
    s.submit_answer(id, Answer::Verdict(true)).unwrap();
    assert_eq!(labels(&s), [["C8"]]);
    assert!(matches!(s.status(), Status::Localized { lines, .. } if lines == &[8]));
    assert_eq!(s.pending_action().unwrap().kind, ActionKind::Report { lines: alloc::vec![8] });
    let r = s.interaction_report();
    assert_eq!(r.counters, Counters { setup: 1, query: 2, ..Counters::default() });
    assert_eq!((r.total, r.total2, r.lines), (3, 3, Some(alloc::vec![8])));
    assert_eq!(s.next_action(), Err(SessionError::SessionFinished));
}

#[test]
fn wrong_s2_reports_line_5() {
    let mut s = fig2_session();
    let (id, _) = query(&s);
    s.submit_answer(id, Answer::Verdict(false)).unwrap();
    assert_eq!(labels(&s), [["C5"]]);
    assert_eq!(s.status().lines(), [5]);
}

#[test]
fn stale_and_invalid_answers() {
    let mut s = fig2_session();
    let (id, _) = query(&s);
    assert_eq!(s.submit_answer(id + 7, Answer::Verdict(true)), Err(SessionError::StaleAction(id + 7)));
    assert!(matches!(s.submit_answer(id, Answer::Iteration(1)), Err(SessionError::InvalidAnswer(_))));
    s.submit_answer(id, Answer::Verdict(true)).unwrap();
    assert_eq!(s.submit_answer(id, Answer::Verdict(true)), Err(SessionError::StaleAction(id)));
    assert_eq!(s.counters().query, 1);
}

#[test]
fn passing_test_means_no_fault() {
    let s = start_session(program(FIG2), fig2_test(12, 12), SessionConfig::default()).unwrap();
    assert!(matches!(s.status(), Status::Localized { components, .. } if components.is_empty()));
    assert_eq!(s.counters().total(), 1);
}

#[test]
fn unknown_method() {
    let mut t = fig2_test(12, 0);
    t.method = "nope".into();
    assert!(matches!(start_session(program(FIG2), t, SessionConfig::default()), Err(SessionError::UnknownMethod(_))));
}

#[test]
fn replay_reproduces_the_session() {
    let mut s = fig2_session();
    let (id, _) = query(&s);
    s.submit_answer(id, Answer::Verdict(true)).unwrap();
    let r = replay(program(FIG2), fig2_test(12, 0), SessionConfig::default(), s.history()).unwrap();
    assert_eq!(r.candidates(), s.candidates());
    assert_eq!(r.pending_action(), s.pending_action());
    assert_eq!(r.counters(), s.counters());
}

#[test]
fn runtime_fault_is_reported() {
    let src = "int m(int a) {\n int z = 0;\n int q = a / z;\n return q;\n}";
    let t = TestCase { method: "m".into(), args: alloc::vec![Value::int(4)], expect: BTreeMap::new(), expect_return: Some(Value::int(1)) };
    let s = start_session(program(src), t, SessionConfig::default()).unwrap();
    assert!(matches!(s.status(), Status::Exhausted { reason: ExhaustReason::RuntimeFault { line: 3, .. }, lines } if lines == &[3]));
}

const SUM: &str = "int sum(int n) {
 int s = 0;
 int i = 0;
 while (i < n) {
  s = s + i;
  i = i + 1;
 }
 return s;
}";

#[test]
fn loop_drill_down() {
    let t = TestCase { method: "sum".into(), args: alloc::vec![Value::int(3)], expect: BTreeMap::new(), expect_return: Some(Value::int(6)) };
    let mut s = start_session(program(SUM), t, SessionConfig::default()).unwrap();
    let mut kinds = Vec::new();
    // answers of someone who knows the loop should add i + 1
    for _ in 0..20 {
        let Ok(a) = s.next_action().cloned() else { break };
        let answer = match &a.kind {
            ActionKind::AskQuery(q) => {
                kinds.push("query");
                let v = q.displayed_value.as_int().cloned().unwrap_or_default();
                let ok = match (q.key.var.as_str(), q.line) {
                    ("s", 2) | ("i", _) => true,
                    ("s", 5) => {
                        let it = q.iteration.as_ref().unwrap()[0];
                        v == num_bigint::BigInt::from(it * (it + 1) / 2)
                    }
                    _ => false,
                };
                Answer::Verdict(ok)
            }
            ActionKind::AskFirstBadIteration { iterations, .. } => {
                kinds.push("iter");
                assert_eq!(*iterations, 3);
                Answer::Iteration(1)
            }
            ActionKind::AskLoopCondition { line, .. } => {
                kinds.push("loop");
                assert_eq!(*line, 4);
                Answer::Verdict(true)
            }
            ActionKind::AskSubExpression { .. } => {
                kinds.push("exprs");
                Answer::Choice(0)
            }
            ActionKind::Report { .. } => unreachable!(),
        };
        s.submit_answer(a.id, answer).unwrap();
    }
    assert_eq!(s.status().lines(), [5]);
    let c = s.counters();
    assert_eq!((c.iter, c.loop_), (1, 1));
    let first_iter = kinds.iter().position(|k| *k == "iter").unwrap();
    assert!(kinds[..first_iter].iter().all(|k| *k == "query"));
    assert_eq!(kinds[first_iter + 1], "loop");
}

#[test]
fn compound_expression_asks_for_the_sub_expression() {
    let src = "int m(int a, int b) {\n int x = a * b + a;\n return x;\n}";
    let t = TestCase { method: "m".into(), args: alloc::vec![Value::int(2), Value::int(3)], expect: BTreeMap::new(), expect_return: Some(Value::int(0)) };
    let mut s = start_session(program(src), t, SessionConfig::default()).unwrap();
    let a = s.next_action().unwrap().clone();
    let (id, _) = (a.id, query(&s));
    s.submit_answer(id, Answer::Verdict(false)).unwrap();
    let a = s.next_action().unwrap().clone();
    let ActionKind::AskSubExpression { options, line, .. } = &a.kind else { panic!("{a:?}") };
    assert_eq!(*line, 2);
    let texts: Vec<&str> = options.iter().map(|o| o.text.as_str()).collect();
    assert_eq!(texts, ["a * b + a", "a * b"]);
    s.submit_answer(a.id, Answer::Choice(1)).unwrap();
    assert!(matches!(s.status(), Status::Localized { detail: Some(d), lines, .. } if d == "a * b" && lines == &[2]));
    assert_eq!(s.counters().exprs, 1);
}

#[test]
fn expanding_an_atomic_fails() {
    let mut s = fig2_session();
    let c = s.graph().components[0].id.clone();
    assert!(matches!(s.expand(&c), Err(SessionError::NotComposite(_))));
    assert!(s.history().is_empty());
}
