//! Answers session questions the way a user who knows the intended program
//! would.

use depdiag_core::interp::{execute, Limits, TestCase, Trace};
use depdiag_core::lang::{CheckedProgram, StmtKind};
use depdiag_core::session::{sub_expressions, Action, ActionKind, Answer, Session, SessionError};

pub struct TruthOracle {
    intended: CheckedProgram,
    trace: Option<Trace>,
}

impl TruthOracle {
    pub fn new(intended: CheckedProgram, test: &TestCase, limits: Limits) -> TruthOracle {
        let trace = execute(&intended, &test.method, &test.args, limits).ok();
        TruthOracle { intended, trace }
    }

    pub fn intended(&self) -> &CheckedProgram {
        &self.intended
    }

    /// `None` for the final report.
    pub fn answer(&self, session: &Session, action: &Action) -> Option<Answer> {
        Some(match &action.kind {
            ActionKind::AskQuery(q) => {
                let want = self.trace.as_ref().and_then(|t| t.value(&q.key));
                Answer::Verdict(want == Some(&q.displayed_value))
            }
            ActionKind::AskFirstBadIteration { component, iterations, .. } => {
                let run = session.loop_run(component).expect("loop run of the question");
                let faulty = session.trace().expect("trace");
                let first = faulty
                    .keys()
                    .filter(|(k, v)| self.trace.as_ref().and_then(|t| t.value(k)) != Some(*v))
                    .filter_map(|(k, _)| run.iteration_of(k))
                    .min();
                Answer::Iteration(first.unwrap_or(*iterations).min(*iterations))
            }
            ActionKind::AskLoopCondition { component, .. } => {
                let cond = |p: &CheckedProgram| match p.program().statement(component.stmt).map(|(_, s)| &s.kind) {
                    Some(StmtKind::While { cond, .. }) | Some(StmtKind::If { cond, .. }) => Some(cond.clone()),
                    _ => None,
                };
                Answer::Verdict(cond(session.program()) == cond(&self.intended))
            }
            ActionKind::AskSubExpression { component, options, .. } => {
                let shown = session.option_exprs();
                let want = self.intended.program().statement(component.stmt).map(|(_, s)| sub_expressions(s)).unwrap_or_default();
                let differing = (0..shown.len()).filter(|&i| want.get(i) != Some(&shown[i])).last();
                let call = options.iter().position(|o| o.is_call);
                Answer::Choice(differing.or(call).unwrap_or(0))
            }
            ActionKind::Report { .. } => return None,
        })
    }
}

/// Answers until the session ends or `max_steps` answers were given.
pub fn run_session(session: &mut Session, oracle: &TruthOracle, max_steps: usize) -> Result<usize, SessionError> {
    let mut steps = 0;
    while steps < max_steps {
        let Ok(action) = session.next_action().cloned() else { break };
        let Some(answer) = oracle.answer(session, &action) else { break };
        session.submit_answer(action.id, answer)?;
        steps += 1;
    }
    Ok(steps)
}
