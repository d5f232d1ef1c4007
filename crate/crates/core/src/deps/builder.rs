use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::transfer::{method_summaries, transfer_statement, NameDeps, Summary};
use super::*;
use crate::interp::{assigned_vars, Ctx, Frame, IterVec, COND_VAR, RETURN_VAR};
use crate::lang::{LValue, MethodDecl, Statement, StmtKind, Type};

type Env = BTreeMap<String, OccId>;

struct Scope<'a> {
    ctx: Ctx,
    sctx: Vec<StatementId>,
    iter: IterVec,
    control: Vec<OccId>,
    method: &'a MethodDecl,
    qual: String,
    /// Inside an unrolled loop the unrolling depends on concrete values, so
    /// fd semantics there are not usable for value reasoning.
    opaque: bool,
}

impl Scope<'_> {
    fn after(&self, stmt: StatementId, var: &str) -> OccKey {
        OccKey { ctx: self.ctx.clone(), site: Site::After { stmt, iter: self.iter.clone() }, var: String::from(var) }
    }
}

struct Builder<'p> {
    program: &'p CheckedProgram,
    trace: Option<&'p Trace>,
    gran: &'p Granularity,
    summaries: BTreeMap<String, Summary>,
    line_suffix: BTreeMap<StatementId, u32>,
    occurrences: Vec<Occurrence>,
    components: Vec<Component>,
    fds: Vec<Fd>,
    by_key: BTreeMap<OccKey, OccId>,
    comp_index: BTreeMap<ComponentId, usize>,
    counters: BTreeMap<String, u32>,
    defining: Vec<Option<usize>>,
    after: BTreeMap<StatementId, Env>,
}

pub(super) fn build(
    program: &CheckedProgram,
    method: &str,
    trace: Option<&Trace>,
    gran: &Granularity,
) -> Result<DependencyGraph, DepError> {
    let decl = program.method(method).ok_or_else(|| DepError::UnknownMethod(String::from(method)))?;
    let summaries = method_summaries(program, method)?;
    let mut b = Builder {
        program,
        trace,
        gran,
        summaries,
        line_suffix: line_suffixes(program),
        occurrences: Vec::new(),
        components: Vec::new(),
        fds: Vec::new(),
        by_key: BTreeMap::new(),
        comp_index: BTreeMap::new(),
        counters: BTreeMap::new(),
        defining: Vec::new(),
        after: BTreeMap::new(),
    };
    let mut env = Env::new();
    let mut inputs = Vec::new();
    for p in &decl.params {
        let key = OccKey { ctx: Vec::new(), site: Site::Input, var: p.name.clone() };
        let id = b.occurrence(key, p.name.clone(), decl.line, true);
        env.insert(p.name.clone(), id);
        inputs.push(id);
    }
    let scope = Scope {
        ctx: Vec::new(),
        sctx: Vec::new(),
        iter: Vec::new(),
        control: Vec::new(),
        method: decl,
        qual: String::new(),
        opaque: false,
    };
    b.block(&decl.body.stmts, &scope, &mut env);

    let used: BTreeSet<OccId> = b.fds.iter().flat_map(|fd| fd.antecedents.iter().copied()).collect();
    let outputs = env
        .values()
        .copied()
        .filter(|o| !used.contains(o) && !inputs.contains(o))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let graph = DependencyGraph {
        method: String::from(method),
        occurrences: b.occurrences,
        components: b.components,
        fds: b.fds,
        inputs,
        outputs,
        expanded: gran.expanded.clone(),
        by_key: b.by_key,
        comp_index: b.comp_index,
        final_binding: env,
        defining: b.defining,
        after: b.after,
    };
    graph.topological_order()?;
    Ok(graph)
}

/// Statements sharing a source line are told apart by a suffix counting from 2.
fn line_suffixes(program: &CheckedProgram) -> BTreeMap<StatementId, u32> {
    let mut out = BTreeMap::new();
    for m in &program.program().methods {
        let mut seen: BTreeMap<u32, u32> = BTreeMap::new();
        m.body.walk(&mut |s| {
            if s.is_executable() {
                let n = seen.entry(s.line).or_insert(0);
                *n += 1;
                out.insert(s.id, *n);
            }
        });
    }
    out
}

impl<'p> Builder<'p> {
    fn occurrence(&mut self, key: OccKey, name: String, line: u32, input: bool) -> OccId {
        assert!(!self.by_key.contains_key(&key), "occurrence key created twice: {key:?}");
        let counter = self.counters.entry(name.clone()).or_insert(0);
        let index = if input { 0 } else { *counter + 1 };
        *counter = index;
        let id = OccId(self.occurrences.len() as u32);
        self.by_key.insert(key.clone(), id);
        self.occurrences.push(Occurrence { id, key, name, index, origin: None, line });
        self.defining.push(None);
        id
    }

    fn statement_line(&self, id: StatementId) -> u32 {
        self.program.program().statement(id).map(|(_, s)| s.line).unwrap_or(0)
    }

    fn label(&self, id: &ComponentId) -> String {
        let line = self.statement_line(id.stmt);
        let mut l = alloc::format!("C{line}");
        let n = self.line_suffix.get(&id.stmt).copied().unwrap_or(1);
        if n > 1 {
            l.push_str(&alloc::format!(".{n}"));
        }
        match id.role {
            Role::Stmt => {}
            Role::Cond => l.push_str(":cond"),
            Role::Bind => l.push_str(":call"),
        }
        for c in &id.ctx {
            l.push_str(&alloc::format!("@{}", self.statement_line(*c)));
        }
        l
    }

    fn component(&mut self, id: ComponentId, kind: ComponentKind, line: u32, end_line: u32) -> usize {
        if let Some(&i) = self.comp_index.get(&id) {
            return i;
        }
        let label = self.label(&id);
        let i = self.components.len();
        self.comp_index.insert(id.clone(), i);
        self.components.push(Component { id, label, kind, line, end_line, fds: Vec::new() });
        i
    }

    fn fd(&mut self, comp: usize, key: OccKey, name: String, line: u32, antecedents: Vec<OccId>, semantics: Semantics) -> OccId {
        let mut ants = antecedents;
        ants.sort();
        ants.dedup();
        let target = self.occurrence(key, name, line, false);
        let i = self.fds.len();
        self.fds.push(Fd { component: comp, target, antecedents: ants, semantics });
        self.components[comp].fds.push(i);
        self.occurrences[target.index()].origin = Some(comp);
        self.defining[target.index()] = Some(i);
        target
    }

    fn operand(&self, env: &Env, scope: &Scope<'_>, name: &str) -> Operand {
        match env.get(name) {
            Some(o) => Operand::Occ(*o),
            None => {
                let ty = self.program.info(&scope.method.name).and_then(|i| i.var_type(name)).unwrap_or(Type::Int);
                Operand::Const(Value::default_for(ty))
            }
        }
    }

    fn bind(env: &Env, names: &[String]) -> Vec<OccId> {
        names.iter().filter_map(|n| env.get(n).copied()).collect()
    }

    fn block(&mut self, stmts: &[Statement], scope: &Scope<'_>, env: &mut Env) {
        for s in stmts {
            self.statement(s, scope, env);
        }
    }

    fn statement(&mut self, s: &Statement, scope: &Scope<'_>, env: &mut Env) {
        if !s.is_executable() {
            return;
        }
        let cid = ComponentId { ctx: scope.sctx.clone(), stmt: s.id, role: Role::Stmt };
        let expand = self.gran.expanded.contains(&cid);
        match &s.kind {
            StmtKind::If { .. } if expand || self.gran.all_ifs => self.expand_if(s, scope, env),
            StmtKind::While { .. } if expand => self.expand_while(s, scope, env),
            StmtKind::If { .. } => self.composite(s, cid, ComponentKind::If, scope, env),
            StmtKind::While { .. } => self.composite(s, cid, ComponentKind::While, scope, env),
            _ if s.call().is_some() => {
                if expand {
                    self.expand_call(s, scope, env)
                } else {
                    self.composite(s, cid, ComponentKind::Call, scope, env)
                }
            }
            _ => {
                let comp = self.component(cid, ComponentKind::Atomic, s.line, s.end_line);
                self.simple(comp, s, None, scope, env);
            }
        }
        if scope.ctx.is_empty() && scope.iter.is_empty() {
            self.after.insert(s.id, env.clone());
        }
    }

    /// A composite at its own granularity: every variable it may change
    /// depends on what the static transfer function says.
    fn composite(&mut self, s: &Statement, cid: ComponentId, kind: ComponentKind, scope: &Scope<'_>, env: &mut Env) {
        let mut d = NameDeps::new();
        transfer_statement(self.program, &self.summaries, s, &mut d, &BTreeSet::new());
        let end = if kind == ComponentKind::Call { s.line } else { s.end_line };
        let comp = self.component(cid, kind, s.line, end);
        let mut updates = Vec::new();
        for v in assigned_vars(self.program, s) {
            let names: Vec<String> = match d.get(&v) {
                Some(n) => n.iter().cloned().collect(),
                None => alloc::vec![v.clone()],
            };
            let mut ants = Self::bind(env, &names);
            ants.extend(scope.control.iter().copied());
            let occ = self.fd(comp, scope.after(s.id, &v), alloc::format!("{}{v}", scope.qual), s.line, ants, Semantics::Opaque);
            updates.push((v, occ));
        }
        env.extend(updates);
    }

    /// Writes of a simple statement; with `call` the statement's call has
    /// already been modelled and produced the given result occurrence.
    fn simple(&mut self, comp: usize, s: &Statement, call: Option<(&crate::lang::CallExpr, OccId)>, scope: &Scope<'_>, env: &mut Env) {
        match &s.kind {
            StmtKind::Assign { target, value } => self.assign(comp, s, target, value, call, scope, env),
            StmtKind::Call { target: Some(t), call: c } => {
                let value = Expr::Call(c.clone());
                self.assign(comp, s, t, &value, call, scope, env)
            }
            StmtKind::Call { target: None, .. } => {}
            StmtKind::VarDecl { decls, .. } => {
                for d in decls {
                    if let Some(init) = &d.init {
                        let c = call.filter(|_| init.find_call().is_some());
                        self.assign(comp, s, &LValue::Var(d.name.clone()), init, c, scope, env);
                    }
                }
            }
            StmtKind::Return { value: Some(e) } => {
                self.assign(comp, s, &LValue::Var(String::from(RETURN_VAR)), e, call, scope, env)
            }
            StmtKind::Return { value: None } => {}
            StmtKind::If { .. } | StmtKind::While { .. } => unreachable!("compound statements are not simple"),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assign(
        &mut self,
        comp: usize,
        s: &Statement,
        target: &LValue,
        value: &Expr,
        call: Option<(&crate::lang::CallExpr, OccId)>,
        scope: &Scope<'_>,
        env: &mut Env,
    ) {
        let mut reads = value.reads_outside_calls();
        let mut ants = Vec::new();
        let name = target.name();
        if let LValue::Index(a, i) = target {
            if let Some(prev) = env.get(a) {
                ants.push(*prev);
            }
            for r in i.reads_outside_calls() {
                if !reads.contains(&r) {
                    reads.push(r);
                }
            }
        }
        ants.extend(Self::bind(env, &reads));
        if let Some((_, r)) = call {
            ants.push(r);
        }
        ants.extend(scope.control.iter().copied());
        let semantics = if scope.opaque {
            Semantics::Opaque
        } else {
            let operands: Vec<(String, Operand)> = reads.iter().map(|r| (r.clone(), self.operand(env, scope, r))).collect();
            let call = call.map(|(c, o)| (c.clone(), o));
            match target {
                LValue::Var(_) => Semantics::Expr { expr: value.clone(), env: operands, call },
                LValue::Index(a, i) => Semantics::ArrayStore {
                    array: self.operand(env, scope, a),
                    index: i.clone(),
                    value: value.clone(),
                    env: operands,
                    call,
                },
            }
        };
        let occ = self.fd(comp, scope.after(s.id, name), alloc::format!("{}{name}", scope.qual), s.line, ants, semantics);
        env.insert(String::from(name), occ);
    }

    fn cond_occurrence(&mut self, comp: usize, s: &Statement, cond: &Expr, iter: IterVec, scope: &Scope<'_>, env: &Env) -> OccId {
        let reads = cond.reads();
        let mut ants = Self::bind(env, &reads);
        ants.extend(scope.control.iter().copied());
        let semantics = if scope.opaque {
            Semantics::Opaque
        } else {
            let operands = reads.iter().map(|r| (r.clone(), self.operand(env, scope, r))).collect();
            Semantics::Expr { expr: cond.clone(), env: operands, call: None }
        };
        let key = OccKey { ctx: scope.ctx.clone(), site: Site::Cond { stmt: s.id, iter }, var: String::from(COND_VAR) };
        let name = alloc::format!("{}{COND_VAR}@{}", scope.qual, s.line);
        self.fd(comp, key, name, s.line, ants, semantics)
    }

    fn sub_scope<'a>(scope: &Scope<'a>, iter: IterVec, cond: OccId, opaque: bool) -> Scope<'a> {
        let mut control = scope.control.clone();
        control.push(cond);
        Scope {
            ctx: scope.ctx.clone(),
            sctx: scope.sctx.clone(),
            iter,
            control,
            method: scope.method,
            qual: scope.qual.clone(),
            opaque: scope.opaque || opaque,
        }
    }

    fn expand_if(&mut self, s: &Statement, scope: &Scope<'_>, env: &mut Env) {
        let (cond, then_block, else_block) = match &s.kind {
            StmtKind::If { cond, then_block, else_block } => (cond, then_block, else_block),
            _ => unreachable!(),
        };
        let cid = ComponentId { ctx: scope.sctx.clone(), stmt: s.id, role: Role::Cond };
        let comp = self.component(cid, ComponentKind::Condition, s.line, s.line);
        let c = self.cond_occurrence(comp, s, cond, scope.iter.clone(), scope, env);
        let inner = Self::sub_scope(scope, scope.iter.clone(), c, false);
        let mut then_env = env.clone();
        self.block(&then_block.stmts, &inner, &mut then_env);
        let mut else_env = env.clone();
        if let Some(e) = else_block {
            self.block(&e.stmts, &inner, &mut else_env);
        }
        for v in assigned_vars(self.program, s) {
            let mut ants = alloc::vec![c];
            ants.extend(then_env.get(&v).copied());
            ants.extend(else_env.get(&v).copied());
            let semantics = if scope.opaque {
                Semantics::Opaque
            } else {
                Semantics::Merge {
                    cond: c,
                    then_value: self.operand(&then_env, scope, &v),
                    else_value: self.operand(&else_env, scope, &v),
                }
            };
            let occ = self.fd(comp, scope.after(s.id, &v), alloc::format!("{}{v}", scope.qual), s.line, ants, semantics);
            env.insert(v, occ);
        }
    }

    fn expand_while(&mut self, s: &Statement, scope: &Scope<'_>, env: &mut Env) {
        let (cond, body) = match &s.kind {
            StmtKind::While { cond, body } => (cond, body),
            _ => unreachable!(),
        };
        let assigned = assigned_vars(self.program, s);
        let runs = self
            .trace
            .and_then(|t| t.loop_count(&scope.ctx, s.id, &scope.iter))
            .unwrap_or_else(|| assigned.len().max(1) as u32);
        let cid = ComponentId { ctx: scope.sctx.clone(), stmt: s.id, role: Role::Cond };
        let comp = self.component(cid, ComponentKind::Condition, s.line, s.line);
        let mut k = 1u32;
        let last = loop {
            let mut iter = scope.iter.clone();
            iter.push(k);
            let c = self.cond_occurrence(comp, s, cond, iter.clone(), scope, env);
            if k > runs {
                break c;
            }
            let inner = Self::sub_scope(scope, iter, c, true);
            self.block(&body.stmts, &inner, env);
            k += 1;
        };
        for v in assigned {
            let mut ants = alloc::vec![last];
            ants.extend(env.get(&v).copied());
            let occ = self.fd(comp, scope.after(s.id, &v), alloc::format!("{}{v}", scope.qual), s.line, ants, Semantics::Opaque);
            env.insert(v, occ);
        }
    }

    fn expand_call(&mut self, s: &Statement, scope: &Scope<'_>, env: &mut Env) {
        let call = s.call().expect("call-bearing statement").clone();
        let callee = self.program.method(&call.method).expect("checked callee");
        let cid = ComponentId { ctx: scope.sctx.clone(), stmt: s.id, role: Role::Bind };
        let comp = self.component(cid, ComponentKind::Binding, s.line, s.line);

        let mut ctx = scope.ctx.clone();
        ctx.push(Frame { call: s.id, iter: scope.iter.clone() });
        let mut sctx = scope.sctx.clone();
        sctx.push(s.id);
        let qual = alloc::format!("{}{}::", scope.qual, callee.name);
        let mut callee_env = Env::new();
        for (p, a) in callee.params.iter().zip(&call.args) {
            let reads = a.reads();
            let mut ants = Self::bind(env, &reads);
            ants.extend(scope.control.iter().copied());
            let semantics = if scope.opaque {
                Semantics::Opaque
            } else {
                let operands = reads.iter().map(|r| (r.clone(), self.operand(env, scope, r))).collect();
                Semantics::Expr { expr: a.clone(), env: operands, call: None }
            };
            let key = OccKey { ctx: ctx.clone(), site: Site::Input, var: p.name.clone() };
            let occ = self.fd(comp, key, alloc::format!("{qual}{}", p.name), s.line, ants, semantics);
            callee_env.insert(p.name.clone(), occ);
        }
        let inner = Scope {
            ctx,
            sctx,
            iter: Vec::new(),
            control: scope.control.clone(),
            method: callee,
            qual,
            opaque: scope.opaque,
        };
        self.block(&callee.body.stmts, &inner, &mut callee_env);

        let target = match &s.kind {
            StmtKind::Assign { target, .. } | StmtKind::Call { target: Some(target), .. } => Some(String::from(target.name())),
            StmtKind::VarDecl { decls, .. } => decls.iter().find(|d| d.init.as_ref().is_some_and(|e| e.find_call().is_some())).map(|d| d.name.clone()),
            StmtKind::Return { .. } => Some(String::from(RETURN_VAR)),
            _ => None,
        };
        let info = self.program.info(&callee.name).expect("checked callee");
        for &p in &info.modified_params {
            if let Some(Expr::Var(n)) = call.args.get(p) {
                let back = callee_env[&callee.params[p].name];
                if target.as_deref() == Some(n.as_str()) {
                    // The statement's own write to `n` follows the copy-back.
                    env.insert(n.clone(), back);
                    continue;
                }
                let mut ants = alloc::vec![back];
                ants.extend(scope.control.iter().copied());
                let semantics = if scope.opaque { Semantics::Opaque } else { Semantics::Copy(back) };
                let occ = self.fd(comp, scope.after(s.id, n), alloc::format!("{}{n}", scope.qual), s.line, ants, semantics);
                env.insert(n.clone(), occ);
            }
        }
        match callee_env.get(RETURN_VAR).copied() {
            Some(ret) => self.simple(comp, s, Some((&call, ret)), scope, env),
            None => self.simple(comp, s, None, scope, env),
        }
    }
}
