use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::interp::{assigned_vars, copy_out_args, RETURN_VAR};
use crate::lang::{CheckedProgram, LValue, MethodDecl, Statement, StatementId, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeKind {
    /// After an `if`, joining the two branch values.
    IfJoin,
    /// At a loop header, joining the entry value and the value from the
    /// previous iteration.
    LoopHeader,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiMerge {
    pub stmt: StatementId,
    pub var: String,
    pub index: u32,
    /// Indices joined; `None` when the variable had no value yet.
    pub sources: Vec<Option<u32>>,
    pub kind: MergeKind,
}

/// Occurrence indices for a method, independent of any trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexedMethod {
    /// Index given to each assignment target.
    pub targets: BTreeMap<(StatementId, String), u32>,
    /// Index each read of a statement's own expressions binds to.
    pub uses: BTreeMap<(StatementId, String), u32>,
    pub merges: Vec<PhiMerge>,
    /// Every (variable, index) in the order it was created.
    pub order: Vec<(String, u32)>,
}

/// Gives every assignment target a fresh index and binds every use to the
/// most recent index on its control path. Inputs have index 0.
pub fn index_occurrences(program: &CheckedProgram, method: &MethodDecl) -> IndexedMethod {
    let mut ix = Indexer { program, out: IndexedMethod::default(), counters: BTreeMap::new() };
    let mut env = BTreeMap::new();
    for p in &method.params {
        ix.counters.insert(p.name.clone(), 0);
        ix.out.order.push((p.name.clone(), 0));
        env.insert(p.name.clone(), 0);
    }
    ix.block(&method.body.stmts, &mut env);
    ix.out
}

struct Indexer<'p> {
    program: &'p CheckedProgram,
    out: IndexedMethod,
    counters: BTreeMap<String, u32>,
}

impl Indexer<'_> {
    fn fresh(&mut self, var: &str) -> u32 {
        let c = self.counters.entry(String::from(var)).or_insert(0);
        *c += 1;
        let i = *c;
        self.out.order.push((String::from(var), i));
        i
    }

    fn uses(&mut self, s: &Statement, names: Vec<String>, env: &BTreeMap<String, u32>) {
        for n in names {
            if let Some(&i) = env.get(&n) {
                self.out.uses.insert((s.id, n), i);
            }
        }
    }

    fn define(&mut self, s: &Statement, var: &str, env: &mut BTreeMap<String, u32>) {
        let i = self.fresh(var);
        self.out.targets.insert((s.id, String::from(var)), i);
        env.insert(String::from(var), i);
    }

    fn block(&mut self, stmts: &[Statement], env: &mut BTreeMap<String, u32>) {
        for s in stmts {
            self.statement(s, env);
        }
    }

    fn statement(&mut self, s: &Statement, env: &mut BTreeMap<String, u32>) {
        if !s.is_executable() {
            return;
        }
        match &s.kind {
            StmtKind::If { cond, then_block, else_block } => {
                self.uses(s, cond.reads(), env);
                let mut then_env = env.clone();
                self.block(&then_block.stmts, &mut then_env);
                let mut else_env = env.clone();
                if let Some(e) = else_block {
                    self.block(&e.stmts, &mut else_env);
                }
                for v in assigned_vars(self.program, s) {
                    let (t, e) = (then_env.get(&v).copied(), else_env.get(&v).copied());
                    if t == e {
                        if let Some(i) = t {
                            env.insert(v, i);
                        }
                        continue;
                    }
                    let index = self.fresh(&v);
                    self.out.merges.push(PhiMerge { stmt: s.id, var: v.clone(), index, sources: alloc::vec![t, e], kind: MergeKind::IfJoin });
                    env.insert(v, index);
                }
            }
            StmtKind::While { cond, body } => {
                let mut headers = Vec::new();
                for v in assigned_vars(self.program, s) {
                    let entry = env.get(&v).copied();
                    let index = self.fresh(&v);
                    env.insert(v.clone(), index);
                    headers.push((v, index, entry));
                }
                self.uses(s, cond.reads(), env);
                let mut body_env = env.clone();
                self.block(&body.stmts, &mut body_env);
                for (v, index, entry) in headers {
                    let back = body_env.get(&v).copied();
                    self.out.merges.push(PhiMerge { stmt: s.id, var: v, index, sources: alloc::vec![entry, back], kind: MergeKind::LoopHeader });
                }
            }
            _ => {
                let mut reads: Vec<String> = Vec::new();
                for e in s.own_exprs() {
                    reads.extend(e.reads());
                }
                if let StmtKind::Assign { target: LValue::Index(a, _), .. } | StmtKind::Call { target: Some(LValue::Index(a, _)), .. } = &s.kind {
                    reads.push(a.clone());
                }
                self.uses(s, reads, env);
                if let Some(c) = s.call() {
                    for v in copy_out_args(self.program, c) {
                        self.define(s, &v, env);
                    }
                }
                match &s.kind {
                    StmtKind::Assign { target, .. } | StmtKind::Call { target: Some(target), .. } => self.define(s, target.name(), env),
                    StmtKind::VarDecl { decls, .. } => {
                        for d in decls.iter().filter(|d| d.init.is_some()) {
                            self.define(s, &d.name, env);
                        }
                    }
                    StmtKind::Return { value: Some(_) } => self.define(s, RETURN_VAR, env),
                    _ => {}
                }
            }
        }
    }
}
