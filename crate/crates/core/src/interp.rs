//! Concrete execution with a recorded trace.
//!
//! Every value the dependency model can talk about is addressed by an
//! [`OccKey`]: the call context, a site inside the method, and the variable.
//! The trace keeps an index from keys to values so that later stages (query
//! display, the test-harness oracle, value filtering) never re-execute.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::lang::{BinOp, CallExpr, CheckedProgram, Expr, LValue, MethodDecl, Statement, StatementId, StmtKind, Type, UnaryOp};
use crate::obs::{Observation, Target};

/// Name under which a method's return value is tracked.
pub const RETURN_VAR: &str = "$ret";
/// Name under which a condition evaluation is tracked.
pub const COND_VAR: &str = "$cond";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Array(Vec<BigInt>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn array(xs: &[i64]) -> Value {
        Value::Array(xs.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn default_for(ty: Type) -> Value {
        match ty {
            Type::Int | Type::Void => Value::Int(BigInt::zero()),
            Type::Bool => Value::Bool(false),
            Type::IntArray => Value::Array(Vec::new()),
        }
    }

    pub fn has_type(&self, ty: Type) -> bool {
        matches!((self, ty), (Value::Int(_), Type::Int) | (Value::Bool(_), Type::Bool) | (Value::Array(_), Type::IntArray))
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Array(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// One counter per enclosing loop, outermost first, 1-based.
pub type IterVec = Vec<u32>;

/// A call-site on the dynamic call stack.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frame {
    pub call: StatementId,
    pub iter: IterVec,
}

pub type Ctx = Vec<Frame>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    /// Method entry.
    Input,
    /// Immediately after a statement finished (for loops: after the loop).
    After { stmt: StatementId, iter: IterVec },
    /// An evaluation of an `if`/`while` condition. For loops the last counter
    /// is the evaluation number.
    Cond { stmt: StatementId, iter: IterVec },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccKey {
    pub ctx: Ctx,
    pub site: Site,
    pub var: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Write(Vec<(String, Value)>),
    Cond(bool),
    /// End of a compound or call-bearing statement, with the variables it may
    /// have changed.
    Exit(Vec<(String, Value)>),
    /// Entry into a callee; the step's `stmt` is the call site.
    Enter(Vec<(String, Value)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub ctx: Ctx,
    pub stmt: StatementId,
    pub line: u32,
    pub iter: IterVec,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub method: String,
    pub args: Vec<Value>,
    pub expect: BTreeMap<String, Value>,
    pub expect_return: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub method: String,
    pub args: Vec<Value>,
    pub steps: Vec<TraceStep>,
    pub initial_env: BTreeMap<String, Value>,
    pub final_env: BTreeMap<String, Value>,
    pub return_value: Option<Value>,
    keys: BTreeMap<OccKey, Value>,
    /// True condition evaluations per loop run, keyed by context, loop and the
    /// iteration vector outside the loop.
    profile: BTreeMap<(Ctx, StatementId, IterVec), u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub step_budget: u64,
    /// Largest integer a run may compute, in bits.
    pub int_bits: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits::steps(1_000_000)
    }
}

impl Limits {
    pub const fn steps(step_budget: u64) -> Limits {
        Limits { step_budget, int_bits: 65_536 }
    }
}

/// Longest array `new int[n]` may allocate.
pub const MAX_ARRAY_LEN: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: BigInt, len: usize },
    #[error("negative array size {0}")]
    NegativeArraySize(BigInt),
    #[error("array size {0} exceeds the limit of {MAX_ARRAY_LEN}")]
    ArrayTooLarge(BigInt),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("runtime error at line {line}: {kind}")]
    Runtime { kind: RuntimeErrorKind, line: u32, stmt: StatementId },
    #[error("step budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("value at line {line} exceeds {bits} bits")]
    ValueTooLarge { bits: u64, line: u32 },
    #[error("no method `{0}`")]
    UnknownMethod(String),
    #[error("bad arguments for `{method}`: {message}")]
    BadArguments { method: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LookupError {
    #[error("statement {0} was not executed at the requested iteration")]
    NotExecuted(StatementId),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ObservationError {
    #[error("expected output `{0}` is never assigned")]
    MissingOutput(String),
}

type Env = BTreeMap<String, Value>;

/// Runs `method` on `args` and records the trace.
pub fn execute(program: &CheckedProgram, method: &str, args: &[Value], limits: Limits) -> Result<Trace, ExecError> {
    let decl = program.method(method).ok_or_else(|| ExecError::UnknownMethod(String::from(method)))?;
    check_args(decl, args)?;
    let mut m = Machine { program, steps: Vec::new(), counted: 0, budget: limits.step_budget, int_bits: limits.int_bits, profile: BTreeMap::new() };
    let initial_env = initial_env(program, decl, args);
    let (return_value, final_env) = m.run(decl, initial_env.clone(), Vec::new())?;
    let mut keys = BTreeMap::new();
    for (p, v) in decl.params.iter().zip(args) {
        keys.insert(OccKey { ctx: Vec::new(), site: Site::Input, var: p.name.clone() }, v.clone());
    }
    for step in &m.steps {
        match &step.event {
            Event::Write(vals) | Event::Exit(vals) => {
                for (var, v) in vals {
                    let site = Site::After { stmt: step.stmt, iter: step.iter.clone() };
                    keys.insert(OccKey { ctx: step.ctx.clone(), site, var: var.clone() }, v.clone());
                }
            }
            Event::Cond(b) => {
                let site = Site::Cond { stmt: step.stmt, iter: step.iter.clone() };
                keys.insert(OccKey { ctx: step.ctx.clone(), site, var: String::from(COND_VAR) }, Value::Bool(*b));
            }
            Event::Enter(vals) => {
                for (var, v) in vals {
                    keys.insert(OccKey { ctx: step.ctx.clone(), site: Site::Input, var: var.clone() }, v.clone());
                }
            }
        }
    }
    Ok(Trace {
        method: String::from(method),
        args: args.to_vec(),
        steps: m.steps,
        initial_env,
        final_env,
        return_value,
        keys,
        profile: m.profile,
    })
}

fn check_args(decl: &MethodDecl, args: &[Value]) -> Result<(), ExecError> {
    if decl.params.len() != args.len() {
        return Err(ExecError::BadArguments {
            method: decl.name.clone(),
            message: alloc::format!("expected {} arguments, got {}", decl.params.len(), args.len()),
        });
    }
    for (p, a) in decl.params.iter().zip(args) {
        if !a.has_type(p.ty) {
            return Err(ExecError::BadArguments {
                method: decl.name.clone(),
                message: alloc::format!("`{}` expects {}, got {a}", p.name, p.ty),
            });
        }
    }
    Ok(())
}

fn initial_env(program: &CheckedProgram, decl: &MethodDecl, args: &[Value]) -> Env {
    let info = program.info(&decl.name).expect("checked method");
    let mut env: Env = info.vars.iter().map(|(n, t)| (n.clone(), Value::default_for(*t))).collect();
    for (p, a) in decl.params.iter().zip(args) {
        env.insert(p.name.clone(), a.clone());
    }
    env
}

/// Variables a statement may change in the enclosing method, in source order.
pub fn assigned_vars(program: &CheckedProgram, s: &Statement) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut add = |n: &str| {
        if !out.iter().any(|o| o == n) {
            out.push(String::from(n));
        }
    };
    s.walk(&mut |st| {
        if let Some(call) = st.call() {
            for v in copy_out_args(program, call) {
                add(&v);
            }
        }
        match &st.kind {
            StmtKind::Assign { target, .. } => add(target.name()),
            StmtKind::Call { target: Some(t), .. } => add(t.name()),
            StmtKind::VarDecl { decls, .. } => {
                for d in decls.iter().filter(|d| d.init.is_some()) {
                    add(&d.name);
                }
            }
            StmtKind::Return { .. } => add(RETURN_VAR),
            _ => {}
        }
    });
    out
}

/// Caller variables that receive array parameters back after `call` returns.
pub fn copy_out_args(program: &CheckedProgram, call: &CallExpr) -> Vec<String> {
    let info = program.info(&call.method).expect("checked call");
    info.modified_params
        .iter()
        .filter_map(|&i| match call.args.get(i) {
            Some(Expr::Var(v)) => Some(v.clone()),
            _ => None,
        })
        .collect()
}

struct Machine<'p> {
    program: &'p CheckedProgram,
    steps: Vec<TraceStep>,
    counted: u64,
    budget: u64,
    int_bits: u64,
    profile: BTreeMap<(Ctx, StatementId, IterVec), u32>,
}

struct Loc<'a> {
    ctx: &'a Ctx,
    iter: &'a IterVec,
    stmt: &'a Statement,
}

impl<'p> Machine<'p> {
    fn tick(&mut self) -> Result<(), ExecError> {
        self.counted += 1;
        if self.counted > self.budget {
            return Err(ExecError::BudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    fn record(&mut self, loc: &Loc<'_>, event: Event) {
        self.steps.push(TraceStep {
            ctx: loc.ctx.clone(),
            stmt: loc.stmt.id,
            line: loc.stmt.line,
            iter: loc.iter.clone(),
            event,
        });
    }

    fn run(&mut self, decl: &'p MethodDecl, mut env: Env, ctx: Ctx) -> Result<(Option<Value>, Env), ExecError> {
        let mut ret = None;
        self.block(&decl.body.stmts, &mut env, &ctx, &Vec::new(), &mut ret)?;
        Ok((ret, env))
    }

    fn block(
        &mut self,
        stmts: &'p [Statement],
        env: &mut Env,
        ctx: &Ctx,
        iter: &IterVec,
        ret: &mut Option<Value>,
    ) -> Result<(), ExecError> {
        for s in stmts {
            self.statement(s, env, ctx, iter, ret)?;
        }
        Ok(())
    }

    fn statement(
        &mut self,
        s: &'p Statement,
        env: &mut Env,
        ctx: &Ctx,
        iter: &IterVec,
        ret: &mut Option<Value>,
    ) -> Result<(), ExecError> {
        let loc = Loc { ctx, iter, stmt: s };
        if !s.is_executable() {
            return Ok(());
        }
        self.tick()?;
        let calls = s.call().is_some();
        let mut written: Vec<(String, Value)> = Vec::new();
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(value, env, &loc)?;
                self.store(target, v, env, &loc, &mut written)?;
            }
            StmtKind::VarDecl { decls, .. } => {
                for d in decls {
                    if let Some(init) = &d.init {
                        let v = self.eval(init, env, &loc)?;
                        env.insert(d.name.clone(), v.clone());
                        push_unique(&mut written, &d.name, v);
                    }
                }
            }
            StmtKind::Call { target, call } => {
                let v = self.call(call, env, &loc)?;
                if let Some(t) = target {
                    self.store(t, v.expect("checked non-void call"), env, &loc, &mut written)?;
                }
            }
            StmtKind::Return { value } => {
                if let Some(e) = value {
                    let v = self.eval(e, env, &loc)?;
                    *ret = Some(v.clone());
                    written.push((String::from(RETURN_VAR), v));
                }
            }
            StmtKind::If { cond, then_block, else_block } => {
                let c = self.eval_bool(cond, env, &loc)?;
                self.record(&loc, Event::Cond(c));
                if c {
                    self.block(&then_block.stmts, env, ctx, iter, ret)?;
                } else if let Some(e) = else_block {
                    self.block(&e.stmts, env, ctx, iter, ret)?;
                }
                let exit = self.snapshot(s, env, None);
                self.record(&loc, Event::Exit(exit));
                return Ok(());
            }
            StmtKind::While { cond, body } => {
                let mut k: u32 = 1;
                loop {
                    let mut inner = iter.clone();
                    inner.push(k);
                    let c = self.eval_bool(cond, env, &loc)?;
                    self.record(&Loc { ctx, iter: &inner, stmt: s }, Event::Cond(c));
                    if !c {
                        break;
                    }
                    self.block(&body.stmts, env, ctx, &inner, ret)?;
                    self.tick()?;
                    k += 1;
                }
                self.profile.insert((ctx.clone(), s.id, iter.clone()), k - 1);
                let exit = self.snapshot(s, env, None);
                self.record(&loc, Event::Exit(exit));
                return Ok(());
            }
        }
        if calls {
            let exit = self.snapshot(s, env, Some(&written));
            self.record(&loc, Event::Exit(exit));
        } else {
            self.record(&loc, Event::Write(written));
        }
        Ok(())
    }

    fn snapshot(&self, s: &Statement, env: &Env, written: Option<&Vec<(String, Value)>>) -> Vec<(String, Value)> {
        assigned_vars(self.program, s)
            .into_iter()
            .map(|v| {
                let val = written
                    .and_then(|w| w.iter().find(|(n, _)| *n == v).map(|(_, x)| x.clone()))
                    .unwrap_or_else(|| env.get(&v).cloned().unwrap_or(Value::int(0)));
                (v, val)
            })
            .collect()
    }

    fn store(
        &mut self,
        target: &LValue,
        v: Value,
        env: &mut Env,
        loc: &Loc<'_>,
        written: &mut Vec<(String, Value)>,
    ) -> Result<(), ExecError> {
        match target {
            LValue::Var(n) => {
                env.insert(n.clone(), v.clone());
                push_unique(written, n, v);
            }
            LValue::Index(n, idx) => {
                let i = self.eval_int(idx, env, loc)?;
                let x = match v {
                    Value::Int(x) => x,
                    _ => unreachable!("checked element store"),
                };
                let arr = match env.get_mut(n) {
                    Some(Value::Array(a)) => a,
                    _ => unreachable!("checked array variable"),
                };
                let slot = index(arr.len(), &i).ok_or_else(|| runtime(loc, RuntimeErrorKind::IndexOutOfBounds { index: i.clone(), len: arr.len() }))?;
                arr[slot] = x;
                let whole = Value::Array(arr.clone());
                push_unique(written, n, whole);
            }
        }
        Ok(())
    }

    fn call(&mut self, c: &CallExpr, env: &mut Env, loc: &Loc<'_>) -> Result<Option<Value>, ExecError> {
        let callee = self.program.method(&c.method).expect("checked call target");
        let mut args = Vec::with_capacity(c.args.len());
        for a in &c.args {
            args.push(self.eval(a, env, loc)?);
        }
        let mut callee_ctx = loc.ctx.clone();
        callee_ctx.push(Frame { call: loc.stmt.id, iter: loc.iter.clone() });
        let params: Vec<(String, Value)> = callee.params.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
        self.steps.push(TraceStep { ctx: callee_ctx.clone(), stmt: loc.stmt.id, line: callee.line, iter: Vec::new(), event: Event::Enter(params) });
        let start = initial_env(self.program, callee, &args);
        let (ret, out) = self.run(callee, start, callee_ctx)?;
        let info = self.program.info(&callee.name).expect("checked method");
        for &i in &info.modified_params {
            if let Some(Expr::Var(v)) = c.args.get(i) {
                env.insert(v.clone(), out[&callee.params[i].name].clone());
            }
        }
        Ok(ret)
    }

    fn eval_int(&mut self, e: &Expr, env: &mut Env, loc: &Loc<'_>) -> Result<BigInt, ExecError> {
        match self.eval(e, env, loc)? {
            Value::Int(n) => Ok(n),
            _ => unreachable!("checked int expression"),
        }
    }

    fn eval_bool(&mut self, e: &Expr, env: &mut Env, loc: &Loc<'_>) -> Result<bool, ExecError> {
        match self.eval(e, env, loc)? {
            Value::Bool(b) => Ok(b),
            _ => unreachable!("checked boolean expression"),
        }
    }

    fn eval(&mut self, e: &Expr, env: &mut Env, loc: &Loc<'_>) -> Result<Value, ExecError> {
        let v = self.eval_unchecked(e, env, loc)?;
        if let Value::Int(n) = &v {
            if n.bits() > self.int_bits {
                return Err(ExecError::ValueTooLarge { bits: self.int_bits, line: loc.stmt.line });
            }
        }
        Ok(v)
    }

    fn eval_unchecked(&mut self, e: &Expr, env: &mut Env, loc: &Loc<'_>) -> Result<Value, ExecError> {
        if let Expr::Call(c) = e {
            return Ok(self.call(c, env, loc)?.expect("checked non-void call"));
        }
        if e.find_call().is_none() {
            return eval_pure(e, &|n| env.get(n).cloned()).map_err(|k| runtime(loc, k));
        }
        // A call nested in a larger expression: evaluate it first, then the
        // rest with the call replaced by its value.
        let c = e.find_call().expect("checked above").clone();
        let v = self.call(&c, env, loc)?.expect("checked non-void call");
        eval_with_call(e, &c, &v, &|n| env.get(n).cloned()).map_err(|k| runtime(loc, k))
    }
}

fn push_unique(written: &mut Vec<(String, Value)>, n: &str, v: Value) {
    match written.iter_mut().find(|(x, _)| x == n) {
        Some(slot) => slot.1 = v,
        None => written.push((String::from(n), v)),
    }
}

fn runtime(loc: &Loc<'_>, kind: RuntimeErrorKind) -> ExecError {
    ExecError::Runtime { kind, line: loc.stmt.line, stmt: loc.stmt.id }
}

fn index(len: usize, i: &BigInt) -> Option<usize> {
    i.to_usize().filter(|&i| i < len)
}

/// Evaluates a call-free expression. `lookup` supplies variable values.
pub fn eval_pure(e: &Expr, lookup: &dyn Fn(&str) -> Option<Value>) -> Result<Value, RuntimeErrorKind> {
    eval_inner(e, lookup, None)
}

/// Evaluates an expression whose single call `call` already produced `result`.
pub fn eval_with_call(
    e: &Expr,
    call: &CallExpr,
    result: &Value,
    lookup: &dyn Fn(&str) -> Option<Value>,
) -> Result<Value, RuntimeErrorKind> {
    eval_inner(e, lookup, Some((call, result)))
}

fn eval_inner(
    e: &Expr,
    lookup: &dyn Fn(&str) -> Option<Value>,
    call: Option<(&CallExpr, &Value)>,
) -> Result<Value, RuntimeErrorKind> {
    let var = |n: &str| lookup(n).expect("variable in scope");
    Ok(match e {
        Expr::Int(n) => Value::Int(n.clone()),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Var(n) => var(n),
        Expr::Index(n, i) => {
            let i = match eval_inner(i, lookup, call)? {
                Value::Int(i) => i,
                _ => unreachable!("checked index"),
            };
            match var(n) {
                Value::Array(a) => {
                    let slot = index(a.len(), &i).ok_or(RuntimeErrorKind::IndexOutOfBounds { index: i, len: a.len() })?;
                    Value::Int(a[slot].clone())
                }
                _ => unreachable!("checked array"),
            }
        }
        Expr::Length(n) => match var(n) {
            Value::Array(a) => Value::Int(BigInt::from(a.len())),
            _ => unreachable!("checked array"),
        },
        Expr::NewArray(len) => match eval_inner(len, lookup, call)? {
            Value::Int(n) if n.is_negative() => return Err(RuntimeErrorKind::NegativeArraySize(n)),
            Value::Int(n) => match n.to_usize().filter(|&l| l <= MAX_ARRAY_LEN) {
                Some(l) => Value::Array(alloc::vec![BigInt::zero(); l]),
                None => return Err(RuntimeErrorKind::ArrayTooLarge(n)),
            },
            _ => unreachable!("checked length"),
        },
        Expr::Call(c) => match call {
            Some((expected, v)) if expected == c => v.clone(),
            _ => panic!("call `{}` must be evaluated by the machine", c.method),
        },
        Expr::Unary(UnaryOp::Neg, x) => match eval_inner(x, lookup, call)? {
            Value::Int(n) => Value::Int(-n),
            _ => unreachable!(),
        },
        Expr::Unary(UnaryOp::Not, x) => match eval_inner(x, lookup, call)? {
            Value::Bool(b) => Value::Bool(!b),
            _ => unreachable!(),
        },
        Expr::Binary(BinOp::And, l, r) => {
            let lv = eval_inner(l, lookup, call)?.as_bool().expect("checked boolean");
            if !lv {
                return Ok(Value::Bool(false));
            }
            eval_inner(r, lookup, call)?
        }
        Expr::Binary(BinOp::Or, l, r) => {
            let lv = eval_inner(l, lookup, call)?.as_bool().expect("checked boolean");
            if lv {
                return Ok(Value::Bool(true));
            }
            eval_inner(r, lookup, call)?
        }
        Expr::Binary(op, l, r) => {
            let lv = eval_inner(l, lookup, call)?;
            let rv = eval_inner(r, lookup, call)?;
            apply_binary(*op, &lv, &rv)?
        }
    })
}

/// Applies a non-short-circuit binary operator to two values.
pub fn apply_binary(op: BinOp, lv: &Value, rv: &Value) -> Result<Value, RuntimeErrorKind> {
    Ok(match (op, lv, rv) {
        (BinOp::Eq, a, b) => Value::Bool(a == b),
        (BinOp::Ne, a, b) => Value::Bool(a != b),
        (BinOp::And, Value::Bool(a), Value::Bool(b)) => Value::Bool(*a && *b),
        (BinOp::Or, Value::Bool(a), Value::Bool(b)) => Value::Bool(*a || *b),
        (_, Value::Int(a), Value::Int(b)) => match op {
            BinOp::Add => Value::Int(a + b),
            BinOp::Sub => Value::Int(a - b),
            BinOp::Mul => Value::Int(a * b),
            BinOp::Div if b.is_zero() => return Err(RuntimeErrorKind::DivisionByZero),
            BinOp::Rem if b.is_zero() => return Err(RuntimeErrorKind::DivisionByZero),
            // BigInt division truncates toward zero, as in Java.
            BinOp::Div => Value::Int(a / b),
            BinOp::Rem => Value::Int(a % b),
            BinOp::Lt => Value::Bool(a < b),
            BinOp::Le => Value::Bool(a <= b),
            BinOp::Gt => Value::Bool(a > b),
            BinOp::Ge => Value::Bool(a >= b),
            _ => unreachable!("checked operator"),
        },
        _ => unreachable!("checked operand types"),
    })
}

/// Where to read a value in [`Trace::lookup_value`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryPoint {
    Entry,
    /// After a top-level-context statement; `None` means its first execution.
    After(StatementId, Option<IterVec>),
}

impl Trace {
    /// Value recorded for an occurrence key.
    pub fn value(&self, key: &OccKey) -> Option<&Value> {
        self.keys.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = (&OccKey, &Value)> {
        self.keys.iter()
    }

    /// Number of true condition evaluations of loop `stmt` in `ctx` when it
    /// was entered with iteration vector `iter`.
    pub fn loop_count(&self, ctx: &Ctx, stmt: StatementId, iter: &IterVec) -> Option<u32> {
        self.profile.get(&(ctx.clone(), stmt, iter.clone())).copied()
    }

    /// Value of `var` in the method under test right after the given point.
    pub fn lookup_value(&self, var: &str, at: &QueryPoint) -> Result<Value, LookupError> {
        let (stmt, iter) = match at {
            QueryPoint::Entry => {
                return self.initial_env.get(var).cloned().ok_or(LookupError::NotExecuted(StatementId(u32::MAX)));
            }
            QueryPoint::After(stmt, iter) => (*stmt, iter),
        };
        // Compound statements finish with an exit step; simple ones with a write.
        let pos = self
            .steps
            .iter()
            .position(|s| {
                s.ctx.is_empty()
                    && s.stmt == stmt
                    && matches!(s.event, Event::Write(_) | Event::Exit(_))
                    && iter.as_ref().is_none_or(|i| *i == s.iter)
            })
            .ok_or(LookupError::NotExecuted(stmt))?;
        for s in self.steps[..=pos].iter().rev().filter(|s| s.ctx.is_empty()) {
            if let Event::Write(vals) | Event::Exit(vals) = &s.event {
                if let Some((_, v)) = vals.iter().find(|(n, _)| n == var) {
                    return Ok(v.clone());
                }
            }
        }
        self.initial_env.get(var).cloned().ok_or(LookupError::NotExecuted(stmt))
    }

    /// Re-applies the recorded top-level writes to the initial environment.
    pub fn replay(&self) -> BTreeMap<String, Value> {
        let mut env = self.initial_env.clone();
        for s in self.steps.iter().filter(|s| s.ctx.is_empty()) {
            if let Event::Write(vals) | Event::Exit(vals) = &s.event {
                for (n, v) in vals {
                    if n != RETURN_VAR {
                        env.insert(n.clone(), v.clone());
                    }
                }
            }
        }
        env
    }

    /// Variables with at least one recorded top-level write.
    pub fn written_vars(&self) -> BTreeSet<&str> {
        self.keys
            .keys()
            .filter(|k| k.ctx.is_empty() && matches!(k.site, Site::After { .. }))
            .map(|k| k.var.as_str())
            .collect()
    }
}

/// Compares a trace with the test's expectations. Inputs are always observed
/// correct; each expected output is observed at its final value.
pub fn derive_observations(program: &CheckedProgram, trace: &Trace, test: &TestCase) -> Result<Vec<Observation>, ObservationError> {
    let decl = program.method(&trace.method).expect("traced method exists");
    let mut out: Vec<Observation> = decl.params.iter().map(|p| Observation::Ok(Target::Input(p.name.clone()))).collect();
    let written = trace.written_vars();
    for (var, expected) in &test.expect {
        let actual = trace.final_env.get(var);
        let is_param = decl.params.iter().any(|p| &p.name == var);
        if !written.contains(var.as_str()) {
            if is_param && actual == Some(expected) {
                continue;
            }
            return Err(ObservationError::MissingOutput(var.clone()));
        }
        let t = Target::Output(var.clone());
        out.push(if actual == Some(expected) { Observation::Ok(t) } else { Observation::Nok(t) });
    }
    if let Some(expected) = &test.expect_return {
        let t = Target::Output(String::from(RETURN_VAR));
        match &trace.return_value {
            None => return Err(ObservationError::MissingOutput(String::from(RETURN_VAR))),
            Some(v) if v == expected => out.push(Observation::Ok(t)),
            Some(_) => out.push(Observation::Nok(t)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check, parse};
    use alloc::string::ToString;

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

    fn ints(xs: &[i64]) -> Vec<Value> {
        xs.iter().map(|&x| Value::int(x)).collect()
    }

    #[test]
    fn fig2_trace_values() {
        let p = program(FIG2);
        let t = execute(&p, "test", &ints(&[3, 2, 2, 3, 3]), Limits::default()).unwrap();
        let writes: Vec<(u32, String, String)> = t
            .steps
            .iter()
            .map(|s| match &s.event {
                Event::Write(v) => (s.line, v[0].0.clone(), v[0].1.to_string()),
                e => panic!("{e:?}"),
            })
            .collect();
        let expected: Vec<(u32, String, String)> = [(4, "s1", "6"), (5, "s2", "6"), (6, "s3", "6"), (7, "f", "12"), (8, "g", "12")]
            .iter()
            .map(|(l, n, v)| (*l, String::from(*n), String::from(*v)))
            .collect();
        assert_eq!(writes, expected);
        assert_eq!(t.replay(), t.final_env);
    }

    #[test]
    fn lookup_after_statement_and_at_entry() {
        let p = program(FIG2);
        let t = execute(&p, "test", &ints(&[3, 2, 2, 3, 3]), Limits::default()).unwrap();
        let c5 = p.method("test").unwrap().body.stmts[2].id;
        assert_eq!(t.lookup_value("s2", &QueryPoint::After(c5, None)), Ok(Value::int(6)));
        assert_eq!(t.lookup_value("a", &QueryPoint::Entry), Ok(Value::int(3)));
    }

    #[test]
    fn dead_branch_is_not_executed() {
        let p = program("void m(int a) { int x; if (a > 0) { x = 1; } }");
        let t = execute(&p, "m", &ints(&[-1]), Limits::default()).unwrap();
        let inner = p.method("m").unwrap().body.stmts[1].children()[0].id;
        assert_eq!(t.lookup_value("x", &QueryPoint::After(inner, None)), Err(LookupError::NotExecuted(inner)));
    }

    #[test]
    fn empty_body_has_no_steps() {
        let p = program("class E { void m(int a) { } }");
        let t = execute(&p, "m", &ints(&[1]), Limits::default()).unwrap();
        assert!(t.steps.is_empty());
        assert_eq!(t.return_value, None);
    }

    #[test]
    fn division_truncates_and_zero_faults() {
        let p = program("int m(int a, int b) {\n int q = a / b;\n int r = a % b;\n return q * 10 + r;\n}");
        let t = execute(&p, "m", &ints(&[-7, 2]), Limits::default()).unwrap();
        assert_eq!(t.return_value, Some(Value::int(-31)));
        let err = execute(&p, "m", &ints(&[1, 0]), Limits::default()).unwrap_err();
        assert!(matches!(err, ExecError::Runtime { kind: RuntimeErrorKind::DivisionByZero, line: 2, .. }));
    }

    #[test]
    fn budget_stops_non_termination() {
        let p = program("void m(int a) { while (a > 0) { a = a + 1; } }");
        let err = execute(&p, "m", &ints(&[1]), Limits::steps(1000)).unwrap_err();
        assert_eq!(err, ExecError::BudgetExceeded { budget: 1000 });
    }

    #[test]
    fn repeated_squaring_hits_the_size_limit() {
        let p = program("void m(int a) {\n while (a > 0) {\n  a = a * a;\n }\n}");
        let err = execute(&p, "m", &ints(&[2]), Limits::default()).unwrap_err();
        assert_eq!(err, ExecError::ValueTooLarge { bits: 65_536, line: 3 });
    }

    #[test]
    fn huge_arrays_are_refused() {
        let p = program("void m(int n) {\n int[] a = new int[n];\n}");
        let err = execute(&p, "m", &ints(&[1 << 40]), Limits::default()).unwrap_err();
        assert!(matches!(err, ExecError::Runtime { kind: RuntimeErrorKind::ArrayTooLarge(_), line: 2, .. }));
    }

    #[test]
    fn loops_record_iterations_and_profile() {
        let p = program("int m(int n) {\n int s = 0;\n int i = 0;\n while (i < n) {\n  s = s + i;\n  i = i + 1;\n }\n return s;\n}");
        let t = execute(&p, "m", &ints(&[3]), Limits::default()).unwrap();
        let body = &p.method("m").unwrap().body.stmts;
        let w = body[2].id;
        assert_eq!(t.loop_count(&Vec::new(), w, &Vec::new()), Some(3));
        let s_stmt = body[2].children()[0].id;
        let key = OccKey { ctx: Vec::new(), site: Site::After { stmt: s_stmt, iter: alloc::vec![2] }, var: "s".into() };
        assert_eq!(t.value(&key), Some(&Value::int(1)));
        let cond = OccKey { ctx: Vec::new(), site: Site::Cond { stmt: w, iter: alloc::vec![4] }, var: COND_VAR.into() };
        assert_eq!(t.value(&cond), Some(&Value::Bool(false)));
        assert_eq!(t.return_value, Some(Value::int(3)));
        assert_eq!(t.replay(), t.final_env);
    }

    #[test]
    fn arrays_copy_back_from_callees() {
        let src = "void swap(int[] a, int i, int j) { int t = a[i]; a[i] = a[j]; a[j] = t; }\n\
                   void sort(int[] a) { int i = 0; while (i < a.length - 1) { if (a[i] > a[i + 1]) { swap(a, i, i + 1); i = 0; } else { i = i + 1; } } }";
        let p = program(src);
        let arr = Value::Array([3, 1, 2].iter().map(|&x| BigInt::from(x)).collect());
        let t = execute(&p, "sort", &[arr], Limits::default()).unwrap();
        assert_eq!(t.final_env["a"], Value::Array([1, 2, 3].iter().map(|&x| BigInt::from(x)).collect()));
        assert_eq!(t.replay(), t.final_env);
        let callee_inputs = t.keys().filter(|(k, _)| !k.ctx.is_empty() && k.site == Site::Input).count();
        assert_eq!(callee_inputs % 3, 0);
    }

    #[test]
    fn observations_follow_expectations() {
        let p = program(FIG2);
        let t = execute(&p, "test", &ints(&[3, 2, 2, 3, 3]), Limits::default()).unwrap();
        let mut test = TestCase { method: "test".into(), args: t.args.clone(), expect: BTreeMap::new(), expect_return: None };
        test.expect.insert("f".into(), Value::int(12));
        test.expect.insert("g".into(), Value::int(0));
        let obs = derive_observations(&p, &t, &test).unwrap();
        let noks: Vec<_> = obs.iter().filter(|o| matches!(o, Observation::Nok(_))).collect();
        assert_eq!(noks, [&Observation::Nok(Target::Output("g".into()))]);
        assert_eq!(obs.len(), 7);
        test.expect.insert("zz".into(), Value::int(0));
        assert!(derive_observations(&p, &t, &test).is_err());
    }
}
