//! Front end for the mini-language: a static-method subset of Java with
//! `int`, `boolean` and `int[]` values.
//!
//! [`parse`] turns source text into a [`Program`]; [`check`] resolves names and
//! types and yields a [`CheckedProgram`], which every later stage consumes.

mod check;
mod lexer;
mod parser;
mod pretty;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;

pub use check::{check, CheckError, CheckedProgram, MethodInfo};
pub use parser::{parse, SyntaxError};
pub use pretty::{expr as expr_text, pretty_print};

/// Program-unique statement identity, assigned in source (pre-)order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StatementId(pub u32);

impl fmt::Display for StatementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Int,
    Bool,
    IntArray,
    Void,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Int => "int",
            Type::Bool => "boolean",
            Type::IntArray => "int[]",
            Type::Void => "void",
        })
    }
}

/// Byte range of a construct in the original source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub source_name: String,
    pub class_name: Option<String>,
    pub methods: Vec<MethodDecl>,
    /// Verbatim source text, kept for excerpts.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    /// Locals in declaration order (filled from the body's declarations).
    pub locals: Vec<Param>,
    pub body: Block,
    pub return_type: Type,
    pub line: u32,
    pub end_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Statement>,
    /// Line of the closing brace.
    pub close_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub id: StatementId,
    pub line: u32,
    pub end_line: u32,
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    Index(String, Expr),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Index(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declarator {
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign { target: LValue, value: Expr },
    VarDecl { ty: Type, decls: Vec<Declarator> },
    If { cond: Expr, then_block: Block, else_block: Option<Block> },
    While { cond: Expr, body: Block },
    /// `f(args);` or `target = f(args);`
    Call { target: Option<LValue>, call: CallExpr },
    Return { value: Option<Expr> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallExpr {
    pub method: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    Bool(bool),
    Var(String),
    Index(String, Box<Expr>),
    Length(String),
    NewArray(Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(CallExpr),
}

impl Expr {
    /// Variables read by this expression, in first-occurrence order.
    pub fn reads(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_reads(&mut out, true);
        out
    }

    /// Like [`Expr::reads`] but skips call arguments.
    pub fn reads_outside_calls(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_reads(&mut out, false);
        out
    }

    fn collect_reads(&self, out: &mut Vec<String>, into_calls: bool) {
        fn push(out: &mut Vec<String>, n: &String) {
            if !out.iter().any(|o| o == n) {
                out.push(n.clone());
            }
        }
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(n) | Expr::Length(n) => push(out, n),
            Expr::Index(n, i) => {
                push(out, n);
                i.collect_reads(out, into_calls);
            }
            Expr::NewArray(e) | Expr::Unary(_, e) => e.collect_reads(out, into_calls),
            Expr::Binary(_, l, r) => {
                l.collect_reads(out, into_calls);
                r.collect_reads(out, into_calls);
            }
            Expr::Call(c) => {
                if into_calls {
                    for a in &c.args {
                        a.collect_reads(out, into_calls);
                    }
                }
            }
        }
    }

    pub fn find_call(&self) -> Option<&CallExpr> {
        match self {
            Expr::Call(c) => Some(c),
            Expr::Index(_, e) | Expr::NewArray(e) | Expr::Unary(_, e) => e.find_call(),
            Expr::Binary(_, l, r) => l.find_call().or_else(|| r.find_call()),
            _ => None,
        }
    }

    pub fn count_calls(&self) -> usize {
        match self {
            Expr::Call(c) => 1 + c.args.iter().map(Expr::count_calls).sum::<usize>(),
            Expr::Index(_, e) | Expr::NewArray(e) | Expr::Unary(_, e) => e.count_calls(),
            Expr::Binary(_, l, r) => l.count_calls() + r.count_calls(),
            _ => 0,
        }
    }

    /// Operator nesting depth: literals and names are 0, `a+b` is 1, `a+b*c` is 2.
    pub fn operator_depth(&self) -> usize {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Length(_) => 0,
            Expr::Index(_, e) | Expr::NewArray(e) => e.operator_depth(),
            Expr::Unary(_, e) => 1 + e.operator_depth(),
            Expr::Binary(_, l, r) => 1 + l.operator_depth().max(r.operator_depth()),
            Expr::Call(c) => 1 + c.args.iter().map(Expr::operator_depth).max().unwrap_or(0),
        }
    }

    /// Operator and call sub-expressions in pre-order.
    pub fn subexpressions(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_subexpressions(&mut out);
        out
    }

    fn collect_subexpressions<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Unary(_, e) => {
                out.push(self);
                e.collect_subexpressions(out);
            }
            Expr::Binary(_, l, r) => {
                out.push(self);
                l.collect_subexpressions(out);
                r.collect_subexpressions(out);
            }
            Expr::Call(c) => {
                out.push(self);
                for a in &c.args {
                    a.collect_subexpressions(out);
                }
            }
            Expr::Index(_, e) | Expr::NewArray(e) => e.collect_subexpressions(out),
            _ => {}
        }
    }
}

impl Statement {
    /// Whether this statement is a diagnosis unit. Pure declarations are not.
    pub fn is_executable(&self) -> bool {
        match &self.kind {
            StmtKind::VarDecl { decls, .. } => decls.iter().any(|d| d.init.is_some()),
            _ => true,
        }
    }

    pub fn is_compound(&self) -> bool {
        matches!(self.kind, StmtKind::If { .. } | StmtKind::While { .. })
    }

    /// The single method call this statement makes, if any.
    pub fn call(&self) -> Option<&CallExpr> {
        match &self.kind {
            StmtKind::Call { call, .. } => Some(call),
            StmtKind::Assign { target, value } => {
                let idx = match target {
                    LValue::Index(_, i) => i.find_call(),
                    LValue::Var(_) => None,
                };
                idx.or_else(|| value.find_call())
            }
            StmtKind::VarDecl { decls, .. } => {
                decls.iter().find_map(|d| d.init.as_ref().and_then(Expr::find_call))
            }
            StmtKind::Return { value } => value.as_ref().and_then(Expr::find_call),
            StmtKind::If { .. } | StmtKind::While { .. } => None,
        }
    }

    /// Expressions evaluated by a simple statement (not descending into blocks).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        match &self.kind {
            StmtKind::Assign { target, value } => {
                if let LValue::Index(_, i) = target {
                    out.push(i);
                }
                out.push(value);
            }
            StmtKind::VarDecl { decls, .. } => out.extend(decls.iter().filter_map(|d| d.init.as_ref())),
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => out.push(cond),
            StmtKind::Call { target, call } => {
                if let Some(LValue::Index(_, i)) = target {
                    out.push(i);
                }
                out.extend(call.args.iter());
            }
            StmtKind::Return { value } => out.extend(value.iter()),
        }
        out
    }

    /// Child statements of a compound statement, all branches in order.
    pub fn children(&self) -> Vec<&Statement> {
        match &self.kind {
            StmtKind::If { then_block, else_block, .. } => {
                let mut v: Vec<&Statement> = then_block.stmts.iter().collect();
                if let Some(e) = else_block {
                    v.extend(e.stmts.iter());
                }
                v
            }
            StmtKind::While { body, .. } => body.stmts.iter().collect(),
            _ => Vec::new(),
        }
    }

    /// Calls `f` on this statement and every nested statement, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Statement)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

impl Block {
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Statement)) {
        for s in &self.stmts {
            s.walk(f);
        }
    }
}

impl Program {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn statement(&self, id: StatementId) -> Option<(&MethodDecl, &Statement)> {
        let mut found = None;
        for m in &self.methods {
            m.body.walk(&mut |s| {
                if s.id == id {
                    found = Some(s);
                }
            });
            if let Some(s) = found {
                return Some((m, s));
            }
        }
        None
    }

    /// Line and verbatim excerpt of a statement. Compound statements report
    /// their header line.
    pub fn locate(&self, id: StatementId) -> Result<(u32, String), UnknownStatement> {
        let (_, s) = self.statement(id).ok_or(UnknownStatement(id))?;
        let text = self.source.get(s.span.start..s.span.end).unwrap_or("");
        let first = text.lines().next().unwrap_or("").trim();
        Ok((s.line, String::from(first)))
    }

    /// Copy with byte spans cleared, for structural comparison.
    pub fn normalized(&self) -> Program {
        fn clear_block(b: &mut Block) {
            for s in &mut b.stmts {
                s.span = Span::default();
                match &mut s.kind {
                    StmtKind::If { then_block, else_block, .. } => {
                        clear_block(then_block);
                        if let Some(e) = else_block {
                            clear_block(e);
                        }
                    }
                    StmtKind::While { body, .. } => clear_block(body),
                    _ => {}
                }
            }
        }
        let mut p = self.clone();
        p.source = String::new();
        p.source_name = String::new();
        for m in &mut p.methods {
            clear_block(&mut m.body);
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("unknown statement {0}")]
pub struct UnknownStatement(pub StatementId);

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn locate_reports_line_and_text() {
        let p = parse("fig2.mjv", FIG2).unwrap();
        let m = p.method("test").unwrap();
        let ids: Vec<_> = m.body.stmts.iter().map(|s| s.id).collect();
        assert_eq!(p.locate(ids[5]).unwrap(), (8, String::from("g=s2+s3;")));
        assert_eq!(p.locate(ids[1]).unwrap(), (4, String::from("s1=a*c;")));
        assert_eq!(p.locate(StatementId(999)), Err(UnknownStatement(StatementId(999))));
    }

    #[test]
    fn operator_depth_separates_plain_from_compound() {
        let p = parse("t", "void m(int a, int b, int c) { int x; x = a + b; x = a + b * c; }").unwrap();
        let stmts = &p.methods[0].body.stmts;
        let depth = |s: &Statement| match &s.kind {
            StmtKind::Assign { value, .. } => value.operator_depth(),
            _ => 0,
        };
        assert_eq!(depth(&stmts[1]), 1);
        assert_eq!(depth(&stmts[2]), 2);
    }
}
