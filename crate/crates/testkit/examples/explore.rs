use depdiag_core::deps::method_graph;
use depdiag_core::diagnosis::diagnose;
use depdiag_core::interp::{derive_observations, execute, Limits};
use depdiag_core::logic::{compile_sd, resolve_observations};
use depdiag_core::obs::Observation;
use depdiag_core::session::{start_session, SessionConfig, Status};
use depdiag_testkit::corpus::subjects;
use depdiag_testkit::mutate::{apply, mutations};
use depdiag_testkit::oracle::{run_session, TruthOracle};

const LIM: Limits = Limits::steps(50_000);

fn main() {
    for s in subjects() {
        let p = s.program();
        let tests = s.tests(&p);
        for m in mutations(p.program(), Some(s.method)) {
            let mp = apply(&p, &m);
            let Some(t) = tests.iter().find(|t| {
                let Ok(tr) = execute(&mp, &t.method, &t.args, LIM) else { return false };
                derive_observations(&mp, &tr, t).unwrap().iter().any(|o| matches!(o, Observation::Nok(_)))
            }) else {
                println!("{} L{} {:?}->{:?}: no failing test", s.name, m.line, m.from, m.to);
                continue;
            };
            let tr = execute(&mp, &t.method, &t.args, LIM).unwrap();
            let g = method_graph(&mp, s.method).unwrap();
            let sd = compile_sd(&g);
            let obs = resolve_observations(&g, &derive_observations(&mp, &tr, t).unwrap()).unwrap();
            let d = diagnose(&sd, &obs, 1).unwrap();
            let complete = d.diagnoses.iter().any(|x| x.lines.contains(&m.line));
            let mut sess = start_session(mp.clone(), t.clone(), SessionConfig { max_card: 2, limits: LIM }).unwrap();
            let o = TruthOracle::new(p.clone(), t, LIM);
            let t0 = std::time::Instant::now();
            let r = run_session(&mut sess, &o, 200);
            let c = sess.counters();
            let st = match sess.status() {
                Status::Localized { lines, .. } => format!("loc {lines:?}"),
                Status::Exhausted { reason, lines } => format!("exh {reason:?} {lines:?}"),
                Status::Running => "running".into(),
            };
            println!("{} L{} {:?}->{:?}: complete={complete} {st} q{} l{} e{} i{} T2={} {:?} {:?}", s.name, m.line, m.from, m.to, c.query, c.loop_, c.exprs, c.iter, c.total2(), r.err(), t0.elapsed());
        }
    }
}
