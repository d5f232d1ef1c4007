use depdiag_core::interp::Limits;
use depdiag_core::session::{start_session, ActionKind, SessionConfig};
use depdiag_testkit::corpus::subjects;
use depdiag_testkit::mutate::{apply, mutations};
use depdiag_testkit::oracle::TruthOracle;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let name = &args[1];
    let line: u32 = args[2].parse().unwrap();
    let ti: usize = args.get(3).map(|x| x.parse().unwrap()).unwrap_or(0);
    let lim = Limits::steps(50_000);
    let s = subjects().into_iter().find(|s| &s.name == name).unwrap();
    let p = s.program();
    let m = mutations(p.program(), Some(s.method)).into_iter().find(|m| m.line == line).unwrap();
    let mp = apply(&p, &m);
    let t = s.tests(&p)[ti].clone();
    let mut sess = start_session(mp, t.clone(), SessionConfig { max_card: 2, limits: lim }).unwrap();
    let o = TruthOracle::new(p.clone(), &t, lim);
    loop {
        let labels: Vec<String> = sess.candidates().iter().map(|d| d.labels.join("+")).collect();
        println!("  candidates {:?} (occ {})", labels, sess.graph().occurrences.len());
        let Ok(a) = sess.next_action().cloned() else { break };
        let ans = o.answer(&sess, &a).unwrap();
        match &a.kind {
            ActionKind::AskQuery(q) => println!("Q {} L{} it{:?} = {:?} -> {:?}", q.label, q.line, q.iteration, q.displayed_value, ans),
            k => println!("{k:?} -> {ans:?}"),
        }
        sess.submit_answer(a.id, ans).unwrap();
    }
    println!("{:?} {:?}", sess.status(), sess.counters());
}
