//! JSON shapes shared by the CLI, the snapshots and the HTTP API.

use std::collections::BTreeMap;
use std::str::FromStr;

use depdiag_core::deps::{Component, ComponentId, DependencyGraph, Role};
use depdiag_core::diagnosis::Diagnosis;
use depdiag_core::interp::{Frame, OccKey, Site, TestCase, Value};
use depdiag_core::lang::StatementId;
use depdiag_core::session::{
    Action, ActionKind, Answer, Counters, ExhaustReason, HistoryEntry, Session, Status,
};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("`{0}` is not an integer, boolean or integer array")]
    BadValue(String),
    #[error("malformed {what}: {message}")]
    Malformed { what: &'static str, message: String },
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(n) => int_to_json(n),
        Value::Bool(b) => Json::Bool(*b),
        Value::Array(xs) => Json::Array(xs.iter().map(int_to_json).collect()),
    }
}

fn int_to_json(n: &BigInt) -> Json {
    Json::Number(serde_json::Number::from_str(&n.to_string()).expect("decimal digits"))
}

fn int_from_json(j: &Json) -> Option<BigInt> {
    match j {
        Json::Number(n) => BigInt::from_str(&n.to_string()).ok(),
        Json::String(s) => BigInt::from_str(s.trim()).ok(),
        _ => None,
    }
}

pub fn value_from_json(j: &Json) -> Result<Value, WireError> {
    let bad = || WireError::BadValue(j.to_string());
    match j {
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::Array(xs) => xs.iter().map(int_from_json).collect::<Option<Vec<_>>>().map(Value::Array).ok_or_else(bad),
        _ => int_from_json(j).map(Value::Int).ok_or_else(bad),
    }
}

/// The `.test.json` format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFile {
    pub method: String,
    #[serde(default)]
    pub args: Vec<Json>,
    #[serde(default)]
    pub expect: BTreeMap<String, Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_return: Option<Json>,
}

impl TestFile {
    pub fn to_test(&self) -> Result<TestCase, WireError> {
        Ok(TestCase {
            method: self.method.clone(),
            args: self.args.iter().map(value_from_json).collect::<Result<_, _>>()?,
            expect: self.expect.iter().map(|(k, v)| Ok((k.clone(), value_from_json(v)?))).collect::<Result<_, WireError>>()?,
            expect_return: self.expect_return.as_ref().map(value_from_json).transpose()?,
        })
    }

    pub fn from_test(t: &TestCase) -> TestFile {
        TestFile {
            method: t.method.clone(),
            args: t.args.iter().map(value_to_json).collect(),
            expect: t.expect.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect(),
            expect_return: t.expect_return.as_ref().map(value_to_json),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameJson {
    pub call: u32,
    pub iter: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteJson {
    Input,
    After { stmt: u32, iter: Vec<u32> },
    Cond { stmt: u32, iter: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyJson {
    pub ctx: Vec<FrameJson>,
    pub site: SiteJson,
    pub var: String,
}

impl From<&OccKey> for KeyJson {
    fn from(k: &OccKey) -> Self {
        KeyJson {
            ctx: k.ctx.iter().map(|f| FrameJson { call: f.call.0, iter: f.iter.clone() }).collect(),
            site: match &k.site {
                Site::Input => SiteJson::Input,
                Site::After { stmt, iter } => SiteJson::After { stmt: stmt.0, iter: iter.clone() },
                Site::Cond { stmt, iter } => SiteJson::Cond { stmt: stmt.0, iter: iter.clone() },
            },
            var: k.var.clone(),
        }
    }
}

impl From<&KeyJson> for OccKey {
    fn from(k: &KeyJson) -> Self {
        OccKey {
            ctx: k.ctx.iter().map(|f| Frame { call: StatementId(f.call), iter: f.iter.clone() }).collect(),
            site: match &k.site {
                SiteJson::Input => Site::Input,
                SiteJson::After { stmt, iter } => Site::After { stmt: StatementId(*stmt), iter: iter.clone() },
                SiteJson::Cond { stmt, iter } => Site::Cond { stmt: StatementId(*stmt), iter: iter.clone() },
            },
            var: k.var.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub ctx: Vec<u32>,
    pub stmt: u32,
    pub role: String,
}

impl From<&ComponentId> for ComponentJson {
    fn from(c: &ComponentId) -> Self {
        let role = match c.role {
            Role::Stmt => "stmt",
            Role::Cond => "cond",
            Role::Bind => "bind",
        };
        ComponentJson { ctx: c.ctx.iter().map(|s| s.0).collect(), stmt: c.stmt.0, role: role.into() }
    }
}

impl TryFrom<&ComponentJson> for ComponentId {
    type Error = WireError;

    fn try_from(c: &ComponentJson) -> Result<Self, WireError> {
        let role = match c.role.as_str() {
            "stmt" => Role::Stmt,
            "cond" => Role::Cond,
            "bind" => Role::Bind,
            r => return Err(WireError::Malformed { what: "component role", message: r.into() }),
        };
        Ok(ComponentId { ctx: c.ctx.iter().map(|&s| StatementId(s)).collect(), stmt: StatementId(c.stmt), role })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerJson {
    Verdict(bool),
    Iteration(u32),
    Choice(usize),
}

impl From<&Answer> for AnswerJson {
    fn from(a: &Answer) -> Self {
        match a {
            Answer::Verdict(b) => AnswerJson::Verdict(*b),
            Answer::Iteration(k) => AnswerJson::Iteration(*k),
            Answer::Choice(i) => AnswerJson::Choice(*i),
        }
    }
}

impl From<&AnswerJson> for Answer {
    fn from(a: &AnswerJson) -> Self {
        match a {
            AnswerJson::Verdict(b) => Answer::Verdict(*b),
            AnswerJson::Iteration(k) => Answer::Iteration(*k),
            AnswerJson::Choice(i) => Answer::Choice(*i),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryJson {
    Answer { action_id: u64, answer: AnswerJson },
    Expand { component: ComponentJson },
    FreeQuery { key: KeyJson, correct: bool },
}

impl From<&HistoryEntry> for HistoryJson {
    fn from(h: &HistoryEntry) -> Self {
        match h {
            HistoryEntry::Answer { action_id, answer } => HistoryJson::Answer { action_id: *action_id, answer: answer.into() },
            HistoryEntry::Expand { component } => HistoryJson::Expand { component: component.into() },
            HistoryEntry::FreeQuery { key, correct } => HistoryJson::FreeQuery { key: key.into(), correct: *correct },
        }
    }
}

impl TryFrom<&HistoryJson> for HistoryEntry {
    type Error = WireError;

    fn try_from(h: &HistoryJson) -> Result<Self, WireError> {
        Ok(match h {
            HistoryJson::Answer { action_id, answer } => HistoryEntry::Answer { action_id: *action_id, answer: answer.into() },
            HistoryJson::Expand { component } => HistoryEntry::Expand { component: component.try_into()? },
            HistoryJson::FreeQuery { key, correct } => HistoryEntry::FreeQuery { key: key.into(), correct: *correct },
        })
    }
}

pub fn counters_json(c: &Counters) -> Json {
    json!({
        "setup": c.setup,
        "query": c.query,
        "loop": c.loop_,
        "exprs": c.exprs,
        "iter": c.iter,
        "total": c.total(),
        "total2": c.total2(),
    })
}

pub fn status_json(s: &Status) -> Json {
    match s {
        Status::Running => json!({ "state": "running" }),
        Status::Localized { labels, lines, detail, .. } => {
            json!({ "state": "localized", "components": labels, "lines": lines, "detail": detail })
        }
        Status::Exhausted { reason, lines } => {
            let reason = match reason {
                ExhaustReason::RuntimeFault { line, message } => json!({ "kind": "runtime_fault", "line": line, "message": message }),
                ExhaustReason::BudgetExceeded => json!({ "kind": "budget_exceeded" }),
                ExhaustReason::ValueTooLarge { line } => json!({ "kind": "value_too_large", "line": line }),
                ExhaustReason::NoCandidates => json!({ "kind": "no_candidates" }),
                ExhaustReason::Undiscriminated => json!({ "kind": "undiscriminated" }),
            };
            json!({ "state": "exhausted", "reason": reason, "lines": lines })
        }
    }
}

pub fn diagnosis_json(d: &Diagnosis) -> Json {
    json!({ "components": d.labels, "lines": d.lines, "cardinality": d.cardinality() })
}

/// A session candidate, with whether any member can be expanded.
pub fn candidate_json(graph: &DependencyGraph, d: &Diagnosis) -> Json {
    let composite = d.components.iter().any(|c| graph.component(c).is_some_and(|c| c.kind.is_composite()));
    json!({ "components": d.labels, "lines": d.lines, "cardinality": d.cardinality(), "composite": composite })
}

pub fn component_kind(c: &Component) -> &'static str {
    use depdiag_core::deps::ComponentKind::*;
    match c.kind {
        Atomic => "atomic",
        If => "if",
        While => "while",
        Call => "call",
        Condition => "condition",
        Binding => "binding",
    }
}

pub fn action_json(session: &Session, a: &Action) -> Json {
    let label = |c: &ComponentId| session.graph().component(c).map(|c| c.label.clone());
    match &a.kind {
        ActionKind::AskQuery(q) => json!({
            "id": a.id,
            "kind": "query",
            "question": format!("Is {} = {} at line {} correct?", q.key.var, display(&q.displayed_value), q.line),
            "occurrence": q.label,
            "variable": q.key.var,
            "line": q.line,
            "iteration": q.iteration,
            "value": value_to_json(&q.displayed_value),
            "key": KeyJson::from(&q.key),
        }),
        ActionKind::AskFirstBadIteration { component, label: l, line, iterations } => json!({
            "id": a.id,
            "kind": "first_bad_iteration",
            "question": format!("In which iteration (1..{iterations}) of the loop at line {line} does the first wrong value appear?"),
            "component": label(component).unwrap_or_else(|| l.clone()),
            "line": line,
            "iterations": iterations,
        }),
        ActionKind::AskLoopCondition { component, label: l, line } => json!({
            "id": a.id,
            "kind": "loop_condition",
            "question": format!("Is the loop condition at line {line} correct?"),
            "component": label(component).unwrap_or_else(|| l.clone()),
            "line": line,
        }),
        ActionKind::AskSubExpression { component, label: l, line, options } => json!({
            "id": a.id,
            "kind": "sub_expression",
            "question": format!("Which is the smallest wrong part of the statement at line {line}?"),
            "component": label(component).unwrap_or_else(|| l.clone()),
            "line": line,
            "options": options.iter().map(|o| json!({ "text": o.text, "is_call": o.is_call })).collect::<Vec<_>>(),
        }),
        ActionKind::Report { lines } => json!({ "id": a.id, "kind": "report", "lines": lines }),
    }
}

/// Plain text of a value, as shown in questions.
pub fn display(v: &Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Array(xs) => format!("[{}]", xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")),
    }
}

/// The session report: everything that must be identical after a replay.
pub fn report_json(s: &Session) -> Json {
    let r = s.interaction_report();
    json!({
        "method": s.test().method,
        "status": status_json(s.status()),
        "lines": r.lines,
        "counters": counters_json(&r.counters),
        "candidates": s.candidates().iter().map(|d| candidate_json(s.graph(), d)).collect::<Vec<_>>(),
        "history": s.history().iter().map(HistoryJson::from).collect::<Vec<_>>(),
    })
}

/// Occurrences of the current model with their values in the failing run.
pub fn trace_values_json(s: &Session) -> Json {
    let Some(trace) = s.trace() else { return Json::Array(Vec::new()) };
    let obs = s.obs();
    let values = s.graph().occurrences.iter().filter_map(|o| {
        let v = trace.value(&o.key)?;
        let verdict = if obs.ok.contains(&o.id) {
            Some("ok")
        } else if obs.nok.contains(&o.id) {
            Some("nok")
        } else {
            None
        };
        Some(json!({
            "occurrence": o.label(),
            "line": o.line,
            "value": value_to_json(v),
            "observed": verdict,
            "key": KeyJson::from(&o.key),
        }))
    });
    Json::Array(values.collect())
}
