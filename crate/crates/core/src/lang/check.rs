use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("line {line}: undeclared identifier `{name}`")]
    NameError { name: String, line: u32 },
    #[error("line {line}: type error: {message}")]
    TypeError { message: String, line: u32 },
    #[error("line {line}: `{method}` expects {expected} arguments, got {found}")]
    ArityError { method: String, expected: usize, found: usize, line: u32 },
    #[error("line {line}: `{name}` is declared twice")]
    Redeclared { name: String, line: u32 },
    #[error("line {line}: unsupported construct: {message}")]
    Unsupported { message: String, line: u32 },
}

impl CheckError {
    pub fn line(&self) -> u32 {
        match self {
            CheckError::NameError { line, .. }
            | CheckError::TypeError { line, .. }
            | CheckError::ArityError { line, .. }
            | CheckError::Redeclared { line, .. }
            | CheckError::Unsupported { line, .. } => *line,
        }
    }
}

/// Resolved signature and variable types of one method.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodInfo {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: Type,
    pub vars: BTreeMap<String, Type>,
    /// Positions of array parameters the method may write to. Arguments
    /// passed for them as bare variables are copied back to the caller.
    pub modified_params: BTreeSet<usize>,
}

impl MethodInfo {
    pub fn var_type(&self, name: &str) -> Option<Type> {
        self.vars.get(name).copied()
    }
}

/// A program that passed [`check`]. Only checked programs are executed or
/// modelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckedProgram {
    program: Program,
    infos: BTreeMap<String, MethodInfo>,
}

impl CheckedProgram {
    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn info(&self, method: &str) -> Option<&MethodInfo> {
        self.infos.get(method)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.program.method(name)
    }

    /// Type of `e` evaluated inside `method`. Panics on expressions that were
    /// not part of the checked program.
    pub fn type_of(&self, method: &str, e: &Expr) -> Type {
        let info = &self.infos[method];
        let cx = Ctx { infos: &self.infos, info, line: 0, declared: None };
        cx.expr(e).expect("expression was checked")
    }

    /// Display label of a statement: `C` followed by its line.
    pub fn label(&self, id: StatementId) -> Option<String> {
        self.program.statement(id).map(|(_, s)| alloc::format!("C{}", s.line))
    }
}

/// Resolves names and types and enforces the structural restrictions the
/// dependency model relies on: one call per statement, no calls inside
/// conditions, and `return` only as the final top-level statement.
pub fn check(program: Program) -> Result<CheckedProgram, CheckError> {
    let mut infos = BTreeMap::new();
    for m in &program.methods {
        if infos.contains_key(&m.name) {
            return Err(CheckError::Redeclared { name: m.name.clone(), line: m.line });
        }
        let mut vars = BTreeMap::new();
        for p in &m.params {
            if vars.insert(p.name.clone(), p.ty).is_some() {
                return Err(CheckError::Redeclared { name: p.name.clone(), line: m.line });
            }
        }
        infos.insert(
            m.name.clone(),
            MethodInfo {
                name: m.name.clone(),
                params: m.params.clone(),
                return_type: m.return_type,
                vars,
                modified_params: BTreeSet::new(),
            },
        );
    }
    for m in &program.methods {
        let vars = collect_locals(m, &infos[&m.name].vars)?;
        infos.get_mut(&m.name).expect("inserted above").vars = vars;
    }
    for m in &program.methods {
        check_method(m, &infos)?;
    }
    compute_modified_params(&program, &mut infos);
    Ok(CheckedProgram { program, infos })
}

fn collect_locals(m: &MethodDecl, params: &BTreeMap<String, Type>) -> Result<BTreeMap<String, Type>, CheckError> {
    let mut vars = params.clone();
    let mut err = None;
    m.body.walk(&mut |s| {
        if let StmtKind::VarDecl { ty, decls } = &s.kind {
            for d in decls {
                if vars.insert(d.name.clone(), *ty).is_some() && err.is_none() {
                    err = Some(CheckError::Redeclared { name: d.name.clone(), line: s.line });
                }
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(vars),
    }
}

// Fixpoint over the call graph, so mutual recursion is handled too.
fn compute_modified_params(program: &Program, infos: &mut BTreeMap<String, MethodInfo>) {
    loop {
        let mut changed = false;
        for m in &program.methods {
            let mut written = BTreeSet::new();
            m.body.walk(&mut |s| {
                match &s.kind {
                    StmtKind::Assign { target, .. } => {
                        written.insert(String::from(target.name()));
                    }
                    StmtKind::Call { target: Some(t), .. } => {
                        written.insert(String::from(t.name()));
                    }
                    _ => {}
                }
                if let Some(call) = s.call() {
                    if let Some(callee) = infos.get(&call.method) {
                        for &i in &callee.modified_params {
                            if let Some(Expr::Var(v)) = call.args.get(i) {
                                written.insert(v.clone());
                            }
                        }
                    }
                }
            });
            let info = &infos[&m.name];
            let now: BTreeSet<usize> = m
                .params
                .iter()
                .enumerate()
                .filter(|(_, p)| p.ty == Type::IntArray && written.contains(&p.name))
                .map(|(i, _)| i)
                .collect();
            if now != info.modified_params {
                infos.get_mut(&m.name).expect("known method").modified_params = now;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

struct Ctx<'a> {
    infos: &'a BTreeMap<String, MethodInfo>,
    info: &'a MethodInfo,
    line: u32,
    /// Names visible so far; `None` skips the declare-before-use check.
    declared: Option<&'a BTreeSet<String>>,
}

fn check_method(m: &MethodDecl, infos: &BTreeMap<String, MethodInfo>) -> Result<(), CheckError> {
    let info = &infos[&m.name];
    let mut declared: BTreeSet<String> = m.params.iter().map(|p| p.name.clone()).collect();
    let n = m.body.stmts.len();
    for (i, s) in m.body.stmts.iter().enumerate() {
        statement(s, info, infos, &mut declared, i + 1 == n)?;
    }
    if m.return_type != Type::Void && !matches!(m.body.stmts.last(), Some(Statement { kind: StmtKind::Return { .. }, .. })) {
        return Err(CheckError::TypeError {
            message: alloc::format!("method `{}` must end with a return statement", m.name),
            line: m.end_line,
        });
    }
    Ok(())
}

fn type_error<T>(line: u32, message: String) -> Result<T, CheckError> {
    Err(CheckError::TypeError { message, line })
}

fn statement(
    s: &Statement,
    info: &MethodInfo,
    infos: &BTreeMap<String, MethodInfo>,
    declared: &mut BTreeSet<String>,
    last_top_level: bool,
) -> Result<(), CheckError> {
    let calls: usize = s.own_exprs().iter().map(|e| e.count_calls()).sum::<usize>()
        + usize::from(matches!(s.kind, StmtKind::Call { .. }));
    let line = s.line;
    match &s.kind {
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } if cond.count_calls() > 0 => {
            return Err(CheckError::Unsupported { message: String::from("method call inside a condition"), line });
        }
        StmtKind::If { .. } | StmtKind::While { .. } => {}
        _ if calls > 1 => {
            return Err(CheckError::Unsupported { message: String::from("more than one method call in a statement"), line });
        }
        _ => {}
    }
    let snapshot = declared.clone();
    let cx = Ctx { infos, info, line, declared: Some(&snapshot) };
    match &s.kind {
        StmtKind::Assign { target, value } => {
            let lt = cx.lvalue(target)?;
            let vt = cx.expr(value)?;
            if lt != vt {
                return type_error(line, alloc::format!("cannot assign {vt} to `{}` of type {lt}", target.name()));
            }
        }
        StmtKind::VarDecl { ty, decls } => {
            for d in decls {
                if let Some(init) = &d.init {
                    let scope = declared.clone();
                    let cx = Ctx { infos, info, line, declared: Some(&scope) };
                    let vt = cx.expr(init)?;
                    if vt != *ty {
                        return type_error(line, alloc::format!("cannot initialise `{}` of type {ty} with {vt}", d.name));
                    }
                }
                declared.insert(d.name.clone());
            }
        }
        StmtKind::If { cond, then_block, else_block } => {
            cx.condition(cond)?;
            for b in core::iter::once(then_block).chain(else_block.iter()) {
                for c in &b.stmts {
                    statement(c, info, infos, declared, false)?;
                }
            }
        }
        StmtKind::While { cond, body } => {
            cx.condition(cond)?;
            for c in &body.stmts {
                statement(c, info, infos, declared, false)?;
            }
        }
        StmtKind::Call { target, call } => {
            let rt = cx.call(call)?;
            if let Some(lv) = target {
                let lt = cx.lvalue(lv)?;
                if rt != lt {
                    return type_error(line, alloc::format!("cannot assign {rt} to `{}` of type {lt}", lv.name()));
                }
            }
        }
        StmtKind::Return { value } => {
            if !last_top_level {
                return Err(CheckError::Unsupported {
                    message: String::from("return is only allowed as the last statement of a method body"),
                    line,
                });
            }
            let vt = match value {
                Some(v) => cx.expr(v)?,
                None => Type::Void,
            };
            if vt != info.return_type {
                return type_error(line, alloc::format!("method `{}` returns {}, found {vt}", info.name, info.return_type));
            }
        }
    }
    Ok(())
}

impl Ctx<'_> {
    fn var(&self, name: &str) -> Result<Type, CheckError> {
        let visible = self.declared.is_none_or(|d| d.contains(name));
        match self.info.var_type(name) {
            Some(t) if visible => Ok(t),
            _ => Err(CheckError::NameError { name: String::from(name), line: self.line }),
        }
    }

    fn lvalue(&self, lv: &LValue) -> Result<Type, CheckError> {
        match lv {
            LValue::Var(n) => self.var(n),
            LValue::Index(n, i) => {
                self.array(n)?;
                self.expect(i, Type::Int)?;
                Ok(Type::Int)
            }
        }
    }

    fn array(&self, name: &str) -> Result<(), CheckError> {
        match self.var(name)? {
            Type::IntArray => Ok(()),
            t => type_error(self.line, alloc::format!("`{name}` has type {t}, expected int[]")),
        }
    }

    fn expect(&self, e: &Expr, want: Type) -> Result<(), CheckError> {
        let t = self.expr(e)?;
        if t == want {
            Ok(())
        } else {
            type_error(self.line, alloc::format!("expected {want}, found {t} in `{}`", pretty::expr(e)))
        }
    }

    fn condition(&self, e: &Expr) -> Result<(), CheckError> {
        self.expect(e, Type::Bool)
    }

    fn call(&self, c: &CallExpr) -> Result<Type, CheckError> {
        let callee = self
            .infos
            .get(&c.method)
            .ok_or_else(|| CheckError::NameError { name: c.method.clone(), line: self.line })?;
        if callee.params.len() != c.args.len() {
            return Err(CheckError::ArityError {
                method: c.method.clone(),
                expected: callee.params.len(),
                found: c.args.len(),
                line: self.line,
            });
        }
        for (p, a) in callee.params.iter().zip(&c.args) {
            self.expect(a, p.ty)?;
        }
        Ok(callee.return_type)
    }

    fn expr(&self, e: &Expr) -> Result<Type, CheckError> {
        match e {
            Expr::Int(_) => Ok(Type::Int),
            Expr::Bool(_) => Ok(Type::Bool),
            Expr::Var(n) => self.var(n),
            Expr::Index(n, i) => {
                self.array(n)?;
                self.expect(i, Type::Int)?;
                Ok(Type::Int)
            }
            Expr::Length(n) => {
                self.array(n)?;
                Ok(Type::Int)
            }
            Expr::NewArray(len) => {
                self.expect(len, Type::Int)?;
                Ok(Type::IntArray)
            }
            Expr::Unary(UnaryOp::Neg, inner) => self.expect(inner, Type::Int).map(|_| Type::Int),
            Expr::Unary(UnaryOp::Not, inner) => self.expect(inner, Type::Bool).map(|_| Type::Bool),
            Expr::Binary(op, l, r) => match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                    self.expect(l, Type::Int)?;
                    self.expect(r, Type::Int)?;
                    Ok(Type::Int)
                }
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    self.expect(l, Type::Int)?;
                    self.expect(r, Type::Int)?;
                    Ok(Type::Bool)
                }
                BinOp::And | BinOp::Or => {
                    self.expect(l, Type::Bool)?;
                    self.expect(r, Type::Bool)?;
                    Ok(Type::Bool)
                }
                BinOp::Eq | BinOp::Ne => {
                    let lt = self.expr(l)?;
                    let rt = self.expr(r)?;
                    if lt != rt || lt == Type::IntArray || lt == Type::Void {
                        return type_error(self.line, alloc::format!("cannot compare {lt} with {rt}"));
                    }
                    Ok(Type::Bool)
                }
            },
            Expr::Call(c) => match self.call(c)? {
                Type::Void => type_error(self.line, alloc::format!("`{}` returns void", c.method)),
                t => Ok(t),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn run(src: &str) -> Result<CheckedProgram, CheckError> {
        check(parse("t", src).unwrap())
    }

    #[test]
    fn fig2_assignments_are_int() {
        let src = "class SWExamples {\n public static void test(int a,b,c,d,e) {\n int f,g,s1,s2,s3;\n s1=a*c;\n s2=b*d;\n s3=c*e;\n f=s1+s2;\n g=s2+s3;\n }\n}\n";
        let cp = run(src).unwrap();
        let m = cp.method("test").unwrap();
        for s in m.body.stmts.iter().filter(|s| s.is_executable()) {
            match &s.kind {
                StmtKind::Assign { value, .. } => assert_eq!(cp.type_of("test", value), Type::Int),
                k => panic!("{k:?}"),
            }
        }
        assert_eq!(cp.label(m.body.stmts[5].id).as_deref(), Some("C8"));
    }

    #[test]
    fn undeclared_name_reports_line() {
        let err = run("void m(int a) {\n  int x;\n  x = q + a;\n}").unwrap_err();
        assert_eq!(err, CheckError::NameError { name: "q".into(), line: 3 });
    }

    #[test]
    fn use_before_declaration_is_a_name_error() {
        let err = run("void m(int a) {\n  x = a;\n  int x;\n}").unwrap_err();
        assert!(matches!(err, CheckError::NameError { ref name, line: 2 } if name == "x"));
    }

    #[test]
    fn boolean_from_int_is_a_type_error() {
        let err = run("void m() { boolean b = 1 + 2; }").unwrap_err();
        assert!(matches!(err, CheckError::TypeError { .. }), "{err:?}");
    }

    #[test]
    fn arity_mismatch() {
        let err = run("int f(int a) { return a; }\nvoid g() { int y; y = f(1, 2); }").unwrap_err();
        assert!(matches!(err, CheckError::ArityError { expected: 1, found: 2, line: 2, .. }), "{err:?}");
    }

    #[test]
    fn structural_restrictions() {
        assert!(matches!(
            run("int f(int a) { return a; }\nvoid g(int x) { if (f(x) > 0) { x = 1; } }").unwrap_err(),
            CheckError::Unsupported { line: 2, .. }
        ));
        assert!(matches!(
            run("int f(int a) { return a; }\nvoid g(int x) { x = f(x) + f(x); }").unwrap_err(),
            CheckError::Unsupported { .. }
        ));
        assert!(matches!(
            run("int f(int a) { if (a > 0) { return 1; } return a; }").unwrap_err(),
            CheckError::Unsupported { .. }
        ));
        assert!(matches!(run("int f(int a) { a = 1; }").unwrap_err(), CheckError::TypeError { .. }));
        assert!(matches!(run("void f(int a, int a) { }").unwrap_err(), CheckError::Redeclared { .. }));
    }

    #[test]
    fn arrays_and_calls_type_check() {
        let src = "int sum(int[] xs) { int s = 0; int i = 0; while (i < xs.length) { s = s + xs[i]; i = i + 1; } return s; }\n\
                   void m(int n) { int[] a = new int[n]; a[0] = 4; int t; t = sum(a); }";
        let cp = run(src).unwrap();
        assert!(cp.info("sum").unwrap().modified_params.is_empty());
    }

    #[test]
    fn modified_array_params_propagate_through_calls() {
        let src = "void swap(int[] a, int i, int j) { int t = a[i]; a[i] = a[j]; a[j] = t; }\n\
                   void sort2(int[] xs, int[] ys) { if (xs[0] > xs[1]) { swap(xs, 0, 1); } }";
        let cp = run(src).unwrap();
        assert_eq!(cp.info("swap").unwrap().modified_params, BTreeSet::from([0]));
        assert_eq!(cp.info("sort2").unwrap().modified_params, BTreeSet::from([0]));
    }
}
