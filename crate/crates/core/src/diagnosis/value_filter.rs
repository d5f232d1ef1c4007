//! Concrete value propagation over the components outside a candidate.
//!
//! Inputs hold the test arguments and outputs hold their expected values.
//! Every fd of a component outside the candidate is evaluated forward when
//! its operands are known, and solved backward when exactly one operand
//! occurrence of a `+`, `-`, `*` or unary `-` chain is unknown. A candidate
//! is dropped when some occurrence would need two different values.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_traits::Zero;

use super::Diagnosis;
use crate::deps::{DependencyGraph, Fd, OccId, Operand, Semantics};
use crate::interp::{eval_pure, eval_with_call, TestCase, Value, RETURN_VAR};
use crate::lang::{BinOp, CallExpr, Expr, UnaryOp};

struct Clash;

struct Values {
    known: Vec<Option<Value>>,
    changed: bool,
}

impl Values {
    fn get(&self, o: OccId) -> Option<&Value> {
        self.known[o.index()].as_ref()
    }

    fn set(&mut self, o: OccId, v: Value) -> Result<(), Clash> {
        match &self.known[o.index()] {
            Some(old) if *old == v => Ok(()),
            Some(_) => Err(Clash),
            None => {
                self.known[o.index()] = Some(v);
                self.changed = true;
                Ok(())
            }
        }
    }

    fn operand(&self, op: &Operand) -> Option<Value> {
        match op {
            Operand::Occ(o) => self.get(*o).cloned(),
            Operand::Const(v) => Some(v.clone()),
        }
    }
}

/// Candidates that survive value propagation, in their original order.
pub fn value_filter(graph: &DependencyGraph, test: &TestCase, candidates: &[Diagnosis]) -> Vec<Diagnosis> {
    candidates.iter().filter(|d| value_filter_one(graph, test, d)).cloned().collect()
}

/// Whether assuming exactly `candidate` abnormal can still reproduce the
/// expected outputs as far as propagation can tell.
pub fn value_filter_one(graph: &DependencyGraph, test: &TestCase, candidate: &Diagnosis) -> bool {
    let free: BTreeSet<usize> = candidate.components.iter().filter_map(|c| graph.component_index(c)).collect();
    let mut vals = Values { known: alloc::vec![None; graph.occurrences.len()], changed: false };
    let seeded = (|| {
        for (o, v) in graph.inputs.iter().zip(&test.args) {
            vals.set(*o, v.clone())?;
        }
        for (var, v) in &test.expect {
            if let Some(o) = graph.final_occurrence(var) {
                vals.set(o, v.clone())?;
            }
        }
        if let Some(v) = &test.expect_return {
            if let Some(o) = graph.final_occurrence(RETURN_VAR) {
                vals.set(o, v.clone())?;
            }
        }
        Ok::<(), Clash>(())
    })();
    if seeded.is_err() {
        return false;
    }
    let active: Vec<&Fd> = graph.fds.iter().filter(|fd| !free.contains(&fd.component)).collect();
    loop {
        vals.changed = false;
        for fd in &active {
            if step(fd, &mut vals).is_err() {
                return false;
            }
        }
        if !vals.changed {
            return true;
        }
    }
}

fn step(fd: &Fd, vals: &mut Values) -> Result<(), Clash> {
    match &fd.semantics {
        Semantics::Opaque => Ok(()),
        Semantics::Copy(src) => {
            if let Some(v) = vals.get(*src).cloned() {
                vals.set(fd.target, v)?;
            }
            if let Some(v) = vals.get(fd.target).cloned() {
                vals.set(*src, v)?;
            }
            Ok(())
        }
        Semantics::Merge { cond, then_value, else_value } => {
            let Some(Value::Bool(c)) = vals.get(*cond).cloned() else {
                return Ok(());
            };
            let chosen = if c { then_value } else { else_value };
            if let Some(v) = vals.operand(chosen) {
                vals.set(fd.target, v)?;
            }
            if let (Some(v), Operand::Occ(o)) = (vals.get(fd.target).cloned(), chosen) {
                vals.set(*o, v)?;
            }
            Ok(())
        }
        Semantics::Expr { expr, env, call } => {
            let leaves = Leaves { env, call: call.as_ref(), vals };
            if let Some(v) = leaves.eval(expr) {
                return vals.set(fd.target, v);
            }
            let Some(t) = vals.get(fd.target).cloned() else {
                return Ok(());
            };
            let leaves = Leaves { env, call: call.as_ref(), vals };
            if leaves.unknown_count(expr) != 1 {
                return Ok(());
            }
            match leaves.solve(expr, t)? {
                Some((o, v)) => vals.set(o, v),
                None => Ok(()),
            }
        }
        Semantics::ArrayStore { array, index, value, env, call } => {
            let leaves = Leaves { env, call: call.as_ref(), vals };
            let (Some(Value::Array(mut a)), Some(Value::Int(i)), Some(Value::Int(v))) =
                (vals.operand(array), leaves.eval(index), leaves.eval(value))
            else {
                return Ok(());
            };
            match usize::try_from(&i).ok().filter(|&i| i < a.len()) {
                Some(slot) => {
                    a[slot] = v;
                    vals.set(fd.target, Value::Array(a))
                }
                None => Ok(()),
            }
        }
    }
}

struct Leaves<'a> {
    env: &'a [(alloc::string::String, Operand)],
    call: Option<&'a (CallExpr, OccId)>,
    vals: &'a Values,
}

impl Leaves<'_> {
    fn var(&self, n: &str) -> Option<Value> {
        self.env.iter().find(|(x, _)| x == n).and_then(|(_, op)| self.vals.operand(op))
    }

    fn var_occ(&self, n: &str) -> Option<OccId> {
        match self.env.iter().find(|(x, _)| x == n) {
            Some((_, Operand::Occ(o))) => Some(*o),
            _ => None,
        }
    }

    fn call_value(&self) -> Option<Value> {
        self.call.and_then(|(_, o)| self.vals.get(*o).cloned())
    }

    /// Evaluates `e` when every leaf is known; runtime faults count as unknown.
    fn eval(&self, e: &Expr) -> Option<Value> {
        if self.unknown_count(e) > 0 {
            return None;
        }
        let lookup = |n: &str| self.var(n);
        match self.call {
            Some((c, _)) if e.find_call().is_some() => eval_with_call(e, c, &self.call_value()?, &lookup).ok(),
            _ => eval_pure(e, &lookup).ok(),
        }
    }

    fn unknown_count(&self, e: &Expr) -> usize {
        match e {
            Expr::Int(_) | Expr::Bool(_) => 0,
            Expr::Var(n) | Expr::Length(n) => usize::from(self.var(n).is_none()),
            Expr::Index(n, i) => usize::from(self.var(n).is_none()) + self.unknown_count(i),
            Expr::NewArray(x) | Expr::Unary(_, x) => self.unknown_count(x),
            Expr::Binary(_, l, r) => self.unknown_count(l) + self.unknown_count(r),
            Expr::Call(_) => usize::from(self.call_value().is_none()),
        }
    }

    /// Finds the value of the single unknown leaf that makes `e` equal `t`.
    fn solve(&self, e: &Expr, t: Value) -> Result<Option<(OccId, Value)>, Clash> {
        match e {
            Expr::Var(n) => Ok(self.var_occ(n).map(|o| (o, t))),
            Expr::Call(_) => Ok(self.call.map(|(_, o)| (*o, t))),
            Expr::Unary(UnaryOp::Neg, x) => match t {
                Value::Int(t) => self.solve(x, Value::Int(-t)),
                _ => Ok(None),
            },
            Expr::Binary(op @ (BinOp::Add | BinOp::Sub | BinOp::Mul), l, r) => {
                let Value::Int(t) = t else {
                    return Ok(None);
                };
                let left_unknown = self.unknown_count(l) == 1;
                let (unknown, known) = if left_unknown { (l, r) } else { (r, l) };
                let Some(Value::Int(k)) = self.eval(known) else {
                    return Ok(None);
                };
                let inner = match (op, left_unknown) {
                    (BinOp::Add, _) => t - k,
                    (BinOp::Sub, true) => t + k,
                    (BinOp::Sub, false) => k - t,
                    _ => {
                        if k.is_zero() {
                            return if t.is_zero() { Ok(None) } else { Err(Clash) };
                        }
                        if !(&t % &k).is_zero() {
                            return Err(Clash);
                        }
                        t / k
                    }
                };
                self.solve(unknown, Value::Int(inner))
            }
            _ => Ok(None),
        }
    }
}
