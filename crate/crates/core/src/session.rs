//! The interactive debugging loop.
//!
//! A session asks measurement queries while more than one candidate is left.
//! Once a single candidate remains it drills down: loops first ask for the
//! first bad iteration and then about their condition, calls and compound
//! expressions ask for the wrong sub-expression, and other composites are
//! expanded without asking.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::deps::{build_graph, expand_component, ComponentId, ComponentKind, DepError, DependencyGraph, Granularity, Occurrence, Role};
use crate::diagnosis::{diagnose, Diagnosis, DiagnosisError};
use crate::interp::{derive_observations, execute, Ctx, ExecError, IterVec, Limits, OccKey, ObservationError, Site, TestCase, Trace};
use crate::lang::{expr_text, CheckedProgram, Expr, Statement, StatementId, StmtKind};
use crate::logic::{compile_sd, resolve_observations, LogicError, ObsSet, SystemDescription};
use crate::obs::{Observation, Target};
use crate::planner::{query_for, select_measurement, MeasurementQuery, PlanState, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionConfig {
    pub max_card: usize,
    pub limits: Limits,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { max_card: 2, limits: Limits::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExhaustReason {
    RuntimeFault { line: u32, message: String },
    BudgetExceeded,
    ValueTooLarge { line: u32 },
    /// No diagnosis within the cardinality bound.
    NoCandidates,
    /// Several candidates remain and nothing can tell them apart.
    Undiscriminated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Running,
    /// Empty `components` means the test passes.
    Localized { components: Vec<ComponentId>, labels: Vec<String>, lines: Vec<u32>, detail: Option<String> },
    Exhausted { reason: ExhaustReason, lines: Vec<u32> },
}

impl Status {
    pub fn is_running(&self) -> bool {
        matches!(self, Status::Running)
    }

    /// Lines of the final report; empty while running.
    pub fn lines(&self) -> &[u32] {
        match self {
            Status::Running => &[],
            Status::Localized { lines, .. } | Status::Exhausted { lines, .. } => lines,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubExpression {
    pub text: String,
    pub is_call: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionKind {
    AskQuery(MeasurementQuery),
    /// Answered with an iteration number in `1..=iterations`.
    AskFirstBadIteration { component: ComponentId, label: String, line: u32, iterations: u32 },
    AskLoopCondition { component: ComponentId, label: String, line: u32 },
    AskSubExpression { component: ComponentId, label: String, line: u32, options: Vec<SubExpression> },
    Report { lines: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Action {
    pub id: u64,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    /// `true` means the shown value or condition is correct.
    Verdict(bool),
    Iteration(u32),
    Choice(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub setup: u32,
    pub query: u32,
    pub loop_: u32,
    pub exprs: u32,
    pub iter: u32,
}

impl Counters {
    pub fn total(&self) -> u32 {
        self.setup + self.query + self.loop_ + self.exprs + self.iter
    }

    pub fn total2(&self) -> u32 {
        self.setup + self.query
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HistoryEntry {
    Answer { action_id: u64, answer: Answer },
    Expand { component: ComponentId },
    FreeQuery { key: OccKey, correct: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionReport {
    pub counters: Counters,
    pub total: u32,
    pub total2: u32,
    pub lines: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("no method `{0}`")]
    UnknownMethod(String),
    #[error(transparent)]
    Exec(ExecError),
    #[error(transparent)]
    Observation(#[from] ObservationError),
    #[error(transparent)]
    Diagnosis(#[from] DiagnosisError),
    #[error("action {0} is not the pending action")]
    StaleAction(u64),
    #[error("invalid answer: {0}")]
    InvalidAnswer(String),
    #[error("the session is finished")]
    SessionFinished,
    #[error("{0} is not composite")]
    NotComposite(String),
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("{0} is not an executed occurrence of the current model")]
    UnknownOccurrence(String),
}

impl From<DepError> for SessionError {
    fn from(e: DepError) -> Self {
        match e {
            DepError::NotComposite(l) => SessionError::NotComposite(l),
            DepError::UnknownComponent(l) => SessionError::UnknownComponent(l),
            e => SessionError::Diagnosis(DiagnosisError::Dependency(e)),
        }
    }
}

impl From<LogicError> for SessionError {
    fn from(e: LogicError) -> Self {
        SessionError::Diagnosis(DiagnosisError::Logic(e))
    }
}

/// One run of a loop: its call context, the iteration vector of the
/// enclosing loops and the statements it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopRun {
    pub ctx: Ctx,
    pub outer: IterVec,
    pub body: BTreeSet<StatementId>,
    /// Number of iterations.
    pub runs: u32,
}

impl LoopRun {
    /// The iteration of this run a trace key belongs to, if any.
    pub fn iteration_of(&self, key: &OccKey) -> Option<u32> {
        let n = self.ctx.len();
        if key.ctx.len() < n || key.ctx[..n] != self.ctx[..] {
            return None;
        }
        let (stmt, iter) = if key.ctx.len() == n {
            match &key.site {
                Site::After { stmt, iter } | Site::Cond { stmt, iter } => (*stmt, iter),
                Site::Input => return None,
            }
        } else {
            (key.ctx[n].call, &key.ctx[n].iter)
        };
        let d = self.outer.len();
        (self.body.contains(&stmt) && iter.len() > d && iter[..d] == self.outer[..]).then(|| iter[d])
    }
}

/// The answer to a first-bad-iteration question: iterations before `bound`
/// are correct and later ones are not asked about.
#[derive(Debug, Clone)]
struct LoopBound {
    run: LoopRun,
    bound: u32,
}

impl LoopBound {
    fn excludes(&self, key: &OccKey) -> bool {
        self.run.iteration_of(key).is_some_and(|k| k > self.bound)
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    program: Arc<CheckedProgram>,
    test: Arc<TestCase>,
    trace: Option<Arc<Trace>>,
    config: SessionConfig,
    graph: DependencyGraph,
    sd: SystemDescription,
    observations: Vec<Observation>,
    obs: ObsSet,
    candidates: Vec<Diagnosis>,
    candidate_sets: Vec<BTreeSet<usize>>,
    card: usize,
    counters: Counters,
    history: Vec<HistoryEntry>,
    status: Status,
    pending: Option<Action>,
    next_id: u64,
    bounds: Vec<LoopBound>,
    iteration_asked: BTreeSet<ComponentId>,
    /// Options of a pending sub-expression question.
    options: Vec<Expr>,
}

/// Runs the test, records setup observations and computes the first action.
pub fn start_session(program: CheckedProgram, test: TestCase, config: SessionConfig) -> Result<Session, SessionError> {
    if program.method(&test.method).is_none() {
        return Err(SessionError::UnknownMethod(test.method.clone()));
    }
    let trace = match execute(&program, &test.method, &test.args, config.limits) {
        Ok(t) => t,
        Err(e @ (ExecError::Runtime { .. } | ExecError::BudgetExceeded { .. } | ExecError::ValueTooLarge { .. })) => return Session::faulted(program, test, config, e),
        Err(e) => return Err(SessionError::Exec(e)),
    };
    let observations = derive_observations(&program, &trace, &test)?;
    let graph = build_graph(&program, &test.method, Some(&trace), &Granularity::default())?;
    let sd = compile_sd(&graph);
    let obs = resolve_observations(&graph, &observations)?;
    let mut s = Session {
        program: Arc::new(program),
        test: Arc::new(test),
        trace: Some(Arc::new(trace)),
        config,
        graph,
        sd,
        observations,
        obs,
        candidates: Vec::new(),
        candidate_sets: Vec::new(),
        card: 0,
        counters: Counters { setup: 1, ..Counters::default() },
        history: Vec::new(),
        status: Status::Running,
        pending: None,
        next_id: 1,
        bounds: Vec::new(),
        iteration_asked: BTreeSet::new(),
        options: Vec::new(),
    };
    s.rediagnose()?;
    s.advance()?;
    Ok(s)
}

/// Rebuilds a session from its history.
pub fn replay(program: CheckedProgram, test: TestCase, config: SessionConfig, history: &[HistoryEntry]) -> Result<Session, SessionError> {
    let mut s = start_session(program, test, config)?;
    for h in history {
        match h {
            HistoryEntry::Answer { action_id, answer } => s.submit_answer(*action_id, answer.clone())?,
            HistoryEntry::Expand { component } => s.expand(component)?,
            HistoryEntry::FreeQuery { key, correct } => s.free_query(key, *correct)?,
        }
    }
    Ok(s)
}

impl Session {
    fn faulted(program: CheckedProgram, test: TestCase, config: SessionConfig, e: ExecError) -> Result<Session, SessionError> {
        let (reason, lines) = match e {
            ExecError::Runtime { kind, line, .. } => {
                (ExhaustReason::RuntimeFault { line, message: alloc::format!("{kind}") }, alloc::vec![line])
            }
            ExecError::ValueTooLarge { line, .. } => (ExhaustReason::ValueTooLarge { line }, Vec::new()),
            _ => (ExhaustReason::BudgetExceeded, Vec::new()),
        };
        let graph = crate::deps::method_graph(&program, &test.method)?;
        let sd = compile_sd(&graph);
        let mut s = Session {
            program: Arc::new(program),
            test: Arc::new(test),
            trace: None,
            config,
            graph,
            sd,
            observations: Vec::new(),
            obs: ObsSet::default(),
            candidates: Vec::new(),
            candidate_sets: Vec::new(),
            card: 0,
            counters: Counters { setup: 1, ..Counters::default() },
            history: Vec::new(),
            status: Status::Exhausted { reason, lines },
            pending: None,
            next_id: 1,
            bounds: Vec::new(),
            iteration_asked: BTreeSet::new(),
            options: Vec::new(),
        };
        s.finish_action();
        Ok(s)
    }

    pub fn program(&self) -> &CheckedProgram {
        &self.program
    }

    pub fn test(&self) -> &TestCase {
        &self.test
    }

    /// `None` when the run faulted.
    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_deref()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn system_description(&self) -> &SystemDescription {
        &self.sd
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn obs(&self) -> &ObsSet {
        &self.obs
    }

    pub fn candidates(&self) -> &[Diagnosis] {
        &self.candidates
    }

    /// Cardinality bound the current candidates were computed with.
    pub fn cardinality(&self) -> usize {
        self.card
    }

    /// Source lines of all current candidates.
    pub fn candidate_lines(&self) -> BTreeSet<u32> {
        self.candidates.iter().flat_map(|d| d.lines.iter().copied()).collect()
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    /// The current action, including the final report.
    pub fn pending_action(&self) -> Option<&Action> {
        self.pending.as_ref()
    }

    pub fn next_action(&self) -> Result<&Action, SessionError> {
        if !self.status.is_running() {
            return Err(SessionError::SessionFinished);
        }
        Ok(self.pending.as_ref().expect("a running session has a pending action"))
    }

    pub fn interaction_report(&self) -> InteractionReport {
        InteractionReport {
            counters: self.counters,
            total: self.counters.total(),
            total2: self.counters.total2(),
            lines: (!self.status.is_running()).then(|| self.status.lines().to_vec()),
        }
    }

    pub fn submit_answer(&mut self, action_id: u64, answer: Answer) -> Result<(), SessionError> {
        if !self.status.is_running() {
            return Err(SessionError::SessionFinished);
        }
        let action = self.pending.clone().expect("pending action");
        if action.id != action_id {
            return Err(SessionError::StaleAction(action_id));
        }
        let mut next = self.clone();
        next.apply_answer(&action.kind, &answer)?;
        next.history.push(HistoryEntry::Answer { action_id, answer });
        next.advance()?;
        *self = next;
        Ok(())
    }

    /// User-forced expansion of any composite of the current model.
    pub fn expand(&mut self, component: &ComponentId) -> Result<(), SessionError> {
        if !self.status.is_running() {
            return Err(SessionError::SessionFinished);
        }
        let mut next = self.clone();
        next.expand_component(component)?;
        next.history.push(HistoryEntry::Expand { component: component.clone() });
        next.advance()?;
        *self = next;
        Ok(())
    }

    /// An observation the user makes on their own; counted as a query.
    pub fn free_query(&mut self, key: &OccKey, correct: bool) -> Result<(), SessionError> {
        if !self.status.is_running() {
            return Err(SessionError::SessionFinished);
        }
        let executed = self.trace.as_ref().is_some_and(|t| t.value(key).is_some());
        if !executed || self.graph.by_key(key).is_none() {
            return Err(SessionError::UnknownOccurrence(alloc::format!("{key:?}")));
        }
        let mut next = self.clone();
        next.observe(key.clone(), correct)?;
        next.history.push(HistoryEntry::FreeQuery { key: key.clone(), correct });
        next.advance()?;
        *self = next;
        Ok(())
    }

    fn observe(&mut self, key: OccKey, correct: bool) -> Result<(), SessionError> {
        let t = Target::At(key);
        self.observations.push(if correct { Observation::Ok(t) } else { Observation::Nok(t) });
        self.counters.query += 1;
        self.rediagnose()
    }

    fn apply_answer(&mut self, action: &ActionKind, answer: &Answer) -> Result<(), SessionError> {
        match (action, answer) {
            (ActionKind::AskQuery(q), Answer::Verdict(ok)) => self.observe(q.key.clone(), *ok),
            (ActionKind::AskFirstBadIteration { component, iterations, .. }, Answer::Iteration(k)) => {
                if *k == 0 || k > iterations {
                    return Err(SessionError::InvalidAnswer(alloc::format!("iteration must be in 1..={iterations}")));
                }
                let run = self.loop_run(component).expect("asked loops have one run");
                self.bounds.push(LoopBound { run, bound: *k });
                self.iteration_asked.insert(component.clone());
                self.counters.iter += 1;
                Ok(())
            }
            (ActionKind::AskLoopCondition { component, label, line }, Answer::Verdict(ok)) => {
                self.counters.loop_ += 1;
                if *ok {
                    self.expand_component(component)?;
                    self.observations.push(Observation::Normal(ComponentId { role: Role::Cond, ..component.clone() }));
                    self.rediagnose()
                } else {
                    self.localize(alloc::vec![component.clone()], alloc::vec![label.clone()], alloc::vec![*line], Some(String::from("loop condition")));
                    Ok(())
                }
            }
            (ActionKind::AskSubExpression { component, label, line, options }, Answer::Choice(i)) => {
                let Some(opt) = options.get(*i) else {
                    return Err(SessionError::InvalidAnswer(alloc::format!("choice must be below {}", options.len())));
                };
                self.counters.exprs += 1;
                let composite = self.graph.component(component).is_some_and(|c| c.kind == ComponentKind::Call);
                if opt.is_call && composite {
                    self.expand_component(component)
                } else {
                    self.localize(alloc::vec![component.clone()], alloc::vec![label.clone()], alloc::vec![*line], Some(opt.text.clone()));
                    Ok(())
                }
            }
            (ActionKind::Report { .. }, _) => Err(SessionError::SessionFinished),
            _ => Err(SessionError::InvalidAnswer(String::from("answer does not fit the pending action"))),
        }
    }

    fn expand_component(&mut self, id: &ComponentId) -> Result<(), SessionError> {
        self.graph = expand_component(&self.program, self.trace.as_deref(), &self.graph, id)?;
        self.sd = compile_sd(&self.graph);
        let graph = &self.graph;
        self.observations.retain(|o| match o {
            Observation::Ok(t) | Observation::Nok(t) => graph.resolve(t).is_some(),
            Observation::Normal(c) => graph.component_index(c).is_some(),
        });
        self.rediagnose()
    }

    /// Recomputes candidates with the smallest cardinality that yields any.
    fn rediagnose(&mut self) -> Result<(), SessionError> {
        self.obs = resolve_observations(&self.graph, &self.observations)?;
        // Iterations before the first bad one only computed correct values.
        for b in &self.bounds {
            for o in &self.graph.occurrences {
                if b.run.iteration_of(&o.key).is_some_and(|k| k < b.bound) && !self.obs.nok.contains(&o.id) {
                    self.obs.ok.insert(o.id);
                }
            }
        }
        let max = self.config.max_card.max(1);
        for k in 1..=max {
            let r = diagnose(&self.sd, &self.obs, k)?;
            if !r.diagnoses.is_empty() || k == max {
                self.candidate_sets = r
                    .diagnoses
                    .iter()
                    .map(|d| d.components.iter().map(|c| self.sd.component_index(c).expect("candidate component")).collect())
                    .collect();
                self.candidates = r.diagnoses;
                self.card = k;
                break;
            }
        }
        Ok(())
    }

    fn localize(&mut self, components: Vec<ComponentId>, labels: Vec<String>, lines: Vec<u32>, detail: Option<String>) {
        self.status = Status::Localized { components, labels, lines, detail };
    }

    fn new_action(&mut self, kind: ActionKind) {
        self.pending = Some(Action { id: self.next_id, kind });
        self.next_id += 1;
    }

    fn finish_action(&mut self) {
        let lines = self.status.lines().to_vec();
        self.new_action(ActionKind::Report { lines });
    }

    /// Moves on until a question is due or the session ends.
    fn advance(&mut self) -> Result<(), SessionError> {
        while self.status.is_running() {
            self.options.clear();
            if let Some(kind) = self.decide()? {
                self.new_action(kind);
                return Ok(());
            }
        }
        self.finish_action();
        Ok(())
    }

    /// The next question, or `None` after a silent step.
    fn decide(&mut self) -> Result<Option<ActionKind>, SessionError> {
        match self.candidates.len() {
            0 => {
                self.status = Status::Exhausted { reason: ExhaustReason::NoCandidates, lines: Vec::new() };
                return Ok(None);
            }
            1 if self.candidates[0].components.is_empty() => {
                self.localize(Vec::new(), Vec::new(), Vec::new(), Some(String::from("no fault")));
                return Ok(None);
            }
            1 => {}
            _ => {
                if let Some(q) = self.plan() {
                    return Ok(Some(ActionKind::AskQuery(q)));
                }
                return match self.first_composite() {
                    Some(c) => self.expand_component(&c).map(|_| None),
                    None => {
                        let lines = self.candidate_lines().into_iter().collect();
                        self.status = Status::Exhausted { reason: ExhaustReason::Undiscriminated, lines };
                        Ok(None)
                    }
                };
            }
        }
        let d = self.candidates[0].clone();
        if d.components.len() > 1 {
            return match self.first_composite() {
                Some(c) => self.expand_component(&c).map(|_| None),
                None => {
                    self.localize(d.components, d.labels, d.lines, None);
                    Ok(None)
                }
            };
        }
        let id = d.components[0].clone();
        let c = self.graph.component(&id).expect("candidate component").clone();
        match c.kind {
            ComponentKind::While => {
                if !self.iteration_asked.contains(&id) {
                    if let Some(run) = self.loop_run(&id).filter(|r| r.runs > 0) {
                        return Ok(Some(ActionKind::AskFirstBadIteration { component: id, label: c.label, line: c.line, iterations: run.runs }));
                    }
                }
                Ok(Some(ActionKind::AskLoopCondition { component: id, label: c.label, line: c.line }))
            }
            ComponentKind::If => self.expand_component(&id).map(|_| None),
            ComponentKind::Call | ComponentKind::Atomic => {
                let options = self.sub_expressions(&id);
                let asks = match c.kind {
                    ComponentKind::Call => options.len() > 1,
                    _ => options.iter().any(|e| e.operator_depth() >= 2),
                };
                if asks {
                    let shown = options.iter().map(|e| SubExpression { text: expr_text(e), is_call: matches!(e, Expr::Call(_)) }).collect();
                    self.options = options;
                    return Ok(Some(ActionKind::AskSubExpression { component: id, label: c.label, line: c.line, options: shown }));
                }
                if c.kind == ComponentKind::Call {
                    return self.expand_component(&id).map(|_| None);
                }
                self.localize(d.components, d.labels, d.lines, None);
                Ok(None)
            }
            ComponentKind::Condition | ComponentKind::Binding => {
                self.localize(d.components, d.labels, d.lines, None);
                Ok(None)
            }
        }
    }

    fn plan(&self) -> Option<MeasurementQuery> {
        let trace = self.trace.as_deref()?;
        let exclude = |o: &Occurrence| self.bounds.iter().any(|b| b.excludes(&o.key));
        let state = PlanState {
            graph: &self.graph,
            sd: &self.sd,
            obs: &self.obs,
            candidates: &self.candidate_sets,
            trace,
            exclude: if self.bounds.is_empty() { None } else { Some(&exclude) },
        };
        match select_measurement(&state) {
            Selection::Query(q, _) => Some(q),
            Selection::Done => None,
        }
    }

    fn first_composite(&self) -> Option<ComponentId> {
        self.candidates
            .iter()
            .flat_map(|d| d.components.iter())
            .find(|c| self.graph.component(c).is_some_and(|x| x.kind.is_composite()))
            .cloned()
    }

    /// The loop run a loop component stands for, counting only runs inside
    /// the first bad iteration of enclosing loops; `None` when that leaves
    /// several runs or the run faulted.
    pub fn loop_run(&self, id: &ComponentId) -> Option<LoopRun> {
        let c = self.graph.component(id)?;
        let mut runs = BTreeSet::new();
        for &f in &c.fds {
            let key = &self.graph.occurrence(self.graph.fds[f].target).key;
            let relevant = self.bounds.iter().all(|b| b.run.iteration_of(key).is_none_or(|k| k == b.bound));
            if let Site::After { stmt, iter } = &key.site {
                if *stmt == id.stmt && relevant {
                    runs.insert((key.ctx.clone(), iter.clone()));
                }
            }
        }
        if runs.len() != 1 {
            return None;
        }
        let (ctx, outer) = runs.into_iter().next()?;
        let n = self.trace.as_ref()?.loop_count(&ctx, id.stmt, &outer)?;
        let mut body = BTreeSet::new();
        let (_, s) = self.program.program().statement(id.stmt)?;
        s.walk(&mut |x: &Statement| {
            body.insert(x.id);
        });
        Some(LoopRun { ctx, outer, body, runs: n })
    }

    fn sub_expressions(&self, id: &ComponentId) -> Vec<Expr> {
        self.program.program().statement(id.stmt).map(|(_, s)| sub_expressions(s)).unwrap_or_default()
    }

    /// Expressions behind the options of a pending sub-expression question.
    pub fn option_exprs(&self) -> &[Expr] {
        &self.options
    }

    /// The query the planner would ask for `key`, for display.
    pub fn describe(&self, key: &OccKey) -> Option<MeasurementQuery> {
        let occ = self.graph.by_key(key)?;
        query_for(&self.graph, self.trace.as_deref()?, occ).ok()
    }
}

/// Operator and call nodes of a statement, in pre-order. A call statement
/// lists the call first.
pub fn sub_expressions(s: &Statement) -> Vec<Expr> {
    let mut out: Vec<Expr> = Vec::new();
    if let StmtKind::Call { call, .. } = &s.kind {
        out.push(Expr::Call(call.clone()));
        for a in &call.args {
            out.extend(a.subexpressions().into_iter().cloned());
        }
        return out;
    }
    for e in s.own_exprs() {
        out.extend(e.subexpressions().into_iter().cloned());
    }
    out
}

#[cfg(test)]
mod tests;
