//! Name-level dependency transfer.
//!
//! `NameDeps` maps a variable to the names, as they were before the analysed
//! code ran, its current value may depend on. A name without an entry depends
//! only on itself.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::DepError;
use crate::interp::{copy_out_args, RETURN_VAR};
use crate::lang::{CallExpr, CheckedProgram, Expr, LValue, Statement, StmtKind};

pub type NameDeps = BTreeMap<String, BTreeSet<String>>;

/// What a caller needs to know about a callee.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Summary {
    /// Parameter positions the return value depends on.
    pub ret: BTreeSet<usize>,
    /// For each modified array parameter, the parameter positions its final
    /// value depends on.
    pub modified: BTreeMap<usize, BTreeSet<usize>>,
}

fn get(d: &NameDeps, v: &str) -> BTreeSet<String> {
    d.get(v).cloned().unwrap_or_else(|| BTreeSet::from([String::from(v)]))
}

fn sources(d: &NameDeps, names: impl IntoIterator<Item = String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for n in names {
        out.extend(get(d, &n));
    }
    out
}

struct Cx<'a> {
    program: &'a CheckedProgram,
    summaries: &'a BTreeMap<String, Summary>,
}

/// Summaries of every method reachable from `root`, callees first.
pub fn method_summaries(program: &CheckedProgram, root: &str) -> Result<BTreeMap<String, Summary>, DepError> {
    let mut order = Vec::new();
    let mut state: BTreeMap<String, u8> = BTreeMap::new();
    visit(program, root, &mut state, &mut order, &mut Vec::new())?;
    let mut summaries = BTreeMap::new();
    for name in order {
        let s = summarize(program, &name, &summaries);
        summaries.insert(name, s);
    }
    Ok(summaries)
}

fn visit(
    program: &CheckedProgram,
    name: &str,
    state: &mut BTreeMap<String, u8>,
    order: &mut Vec<String>,
    path: &mut Vec<String>,
) -> Result<(), DepError> {
    match state.get(name) {
        Some(2) => return Ok(()),
        Some(1) => {
            path.push(String::from(name));
            let start = path.iter().position(|p| p == name).unwrap_or(0);
            return Err(DepError::RecursionUnsupported(path[start..].join(" -> ")));
        }
        _ => {}
    }
    let decl = program.method(name).ok_or_else(|| DepError::UnknownMethod(String::from(name)))?;
    state.insert(String::from(name), 1);
    path.push(String::from(name));
    let mut callees = Vec::new();
    decl.body.walk(&mut |s| {
        if let Some(c) = s.call() {
            callees.push(c.method.clone());
        }
    });
    for c in callees {
        visit(program, &c, state, order, path)?;
    }
    path.pop();
    state.insert(String::from(name), 2);
    order.push(String::from(name));
    Ok(())
}

fn summarize(program: &CheckedProgram, name: &str, summaries: &BTreeMap<String, Summary>) -> Summary {
    let decl = program.method(name).expect("visited method");
    let info = program.info(name).expect("checked method");
    let cx = Cx { program, summaries };
    let mut d = NameDeps::new();
    for s in &decl.body.stmts {
        cx.statement(s, &mut d, &BTreeSet::new());
    }
    let positions = |names: BTreeSet<String>| -> BTreeSet<usize> {
        decl.params.iter().enumerate().filter(|(_, p)| names.contains(&p.name)).map(|(i, _)| i).collect()
    };
    let ret = match d.get(RETURN_VAR) {
        Some(n) => positions(n.clone()),
        None => BTreeSet::new(),
    };
    let modified = info.modified_params.iter().map(|&i| (i, positions(get(&d, &decl.params[i].name)))).collect();
    Summary { ret, modified }
}

/// Applies one statement to `d` under the control dependencies `control`.
pub fn transfer_statement(
    program: &CheckedProgram,
    summaries: &BTreeMap<String, Summary>,
    s: &Statement,
    d: &mut NameDeps,
    control: &BTreeSet<String>,
) {
    Cx { program, summaries }.statement(s, d, control);
}

impl Cx<'_> {
    fn block(&self, stmts: &[Statement], d: &mut NameDeps, control: &BTreeSet<String>) {
        for s in stmts {
            self.statement(s, d, control);
        }
    }

    fn expr_sources(&self, d: &NameDeps, e: &Expr, call_result: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = sources(d, e.reads_outside_calls());
        if e.find_call().is_some() {
            out.extend(call_result.iter().cloned());
        }
        out
    }

    /// Applies copy-outs of `c` and returns the sources of its result.
    fn call(&self, c: &CallExpr, d: &mut NameDeps, control: &BTreeSet<String>) -> BTreeSet<String> {
        let summary = &self.summaries[&c.method];
        let arg_sources: Vec<BTreeSet<String>> = c.args.iter().map(|a| sources(d, a.reads())).collect();
        let gather = |positions: &BTreeSet<usize>| {
            let mut out = control.clone();
            for &j in positions {
                out.extend(arg_sources[j].iter().cloned());
            }
            out
        };
        let result = gather(&summary.ret);
        let outs: Vec<String> = copy_out_args(self.program, c);
        let mut updates = Vec::new();
        for (&p, deps) in &summary.modified {
            if let Some(Expr::Var(n)) = c.args.get(p) {
                if outs.contains(n) {
                    updates.push((n.clone(), gather(deps)));
                }
            }
        }
        for (n, s) in updates {
            d.insert(n, s);
        }
        result
    }

    fn assign(&self, target: &LValue, value_sources: BTreeSet<String>, d: &mut NameDeps, control: &BTreeSet<String>, idx_sources: BTreeSet<String>) {
        let mut s = value_sources;
        s.extend(control.iter().cloned());
        match target {
            LValue::Var(n) => {
                d.insert(n.clone(), s);
            }
            LValue::Index(n, _) => {
                s.extend(get(d, n));
                s.extend(idx_sources);
                d.insert(n.clone(), s);
            }
        }
    }

    fn statement(&self, s: &Statement, d: &mut NameDeps, control: &BTreeSet<String>) {
        let call_result = match s.call() {
            Some(c) if !s.is_compound() => self.call(c, d, control),
            _ => BTreeSet::new(),
        };
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let idx = match target {
                    LValue::Index(_, i) => self.expr_sources(d, i, &call_result),
                    LValue::Var(_) => BTreeSet::new(),
                };
                let v = self.expr_sources(d, value, &call_result);
                self.assign(target, v, d, control, idx);
            }
            StmtKind::Call { target, .. } => {
                if let Some(t) = target {
                    let idx = match t {
                        LValue::Index(_, i) => self.expr_sources(d, i, &BTreeSet::new()),
                        LValue::Var(_) => BTreeSet::new(),
                    };
                    self.assign(t, call_result, d, control, idx);
                }
            }
            StmtKind::VarDecl { decls, .. } => {
                for decl in decls {
                    if let Some(init) = &decl.init {
                        let v = self.expr_sources(d, init, &call_result);
                        self.assign(&LValue::Var(decl.name.clone()), v, d, control, BTreeSet::new());
                    }
                }
            }
            StmtKind::Return { value } => {
                if let Some(e) = value {
                    let v = self.expr_sources(d, e, &call_result);
                    self.assign(&LValue::Var(String::from(RETURN_VAR)), v, d, control, BTreeSet::new());
                }
            }
            StmtKind::If { cond, then_block, else_block } => {
                let mut cs = sources(d, cond.reads());
                cs.extend(control.iter().cloned());
                let mut dt = d.clone();
                self.block(&then_block.stmts, &mut dt, &cs);
                let mut de = d.clone();
                if let Some(e) = else_block {
                    self.block(&e.stmts, &mut de, &cs);
                }
                for v in crate::interp::assigned_vars(self.program, s) {
                    let mut merged = get(&dt, &v);
                    merged.extend(get(&de, &v));
                    merged.extend(cs.iter().cloned());
                    d.insert(v, merged);
                }
            }
            StmtKind::While { cond, body } => {
                self.fixpoint(s, cond, &body.stmts, d, control);
            }
        }
    }
}

impl Cx<'_> {
    /// Iterates the loop body until the dependency sets stop growing and
    /// returns the number of rounds taken.
    fn fixpoint(&self, s: &Statement, cond: &Expr, body: &[Statement], d: &mut NameDeps, control: &BTreeSet<String>) -> usize {
        let assigned = crate::interp::assigned_vars(self.program, s);
        let mut rounds = 0;
        loop {
            rounds += 1;
            let mut cs = sources(d, cond.reads());
            cs.extend(control.iter().cloned());
            let mut db = d.clone();
            self.block(body, &mut db, &cs);
            let mut changed = false;
            for v in &assigned {
                let mut merged = get(d, v);
                merged.extend(get(&db, v));
                merged.extend(cs.iter().cloned());
                changed |= merged != get(d, v);
                d.insert(v.clone(), merged);
            }
            if !changed {
                return rounds;
            }
        }
    }
}

/// Rounds the loop fixpoint needs for `s` starting from identity deps.
#[cfg(test)]
pub(crate) fn loop_rounds(program: &CheckedProgram, summaries: &BTreeMap<String, Summary>, s: &Statement) -> usize {
    match &s.kind {
        StmtKind::While { cond, body } => {
            Cx { program, summaries }.fixpoint(s, cond, &body.stmts, &mut NameDeps::new(), &BTreeSet::new())
        }
        _ => 0,
    }
}
