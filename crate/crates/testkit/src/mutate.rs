//! Operator swap mutations: `+`/`-`, `*`/`/` and `<`/`<=`.

use depdiag_core::lang::{BinOp, Block, CheckedProgram, Expr, LValue, Program, Statement, StatementId, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutation {
    /// Position among all swappable operators of the program, pre-order.
    pub index: usize,
    pub method: String,
    pub stmt: StatementId,
    pub line: u32,
    pub from: BinOp,
    pub to: BinOp,
}

pub fn swap(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::Add => BinOp::Sub,
        BinOp::Sub => BinOp::Add,
        BinOp::Mul => BinOp::Div,
        BinOp::Div => BinOp::Mul,
        BinOp::Lt => BinOp::Le,
        BinOp::Le => BinOp::Lt,
        _ => return None,
    })
}

/// Called with the method, the statement id and line, and the operator.
type Visit<'a> = dyn FnMut(&str, StatementId, u32, &mut BinOp) + 'a;

fn visit_expr(method: &str, s: (StatementId, u32), e: &mut Expr, f: &mut Visit<'_>) {
    match e {
        Expr::Binary(op, l, r) => {
            f(method, s.0, s.1, op);
            visit_expr(method, s, l, f);
            visit_expr(method, s, r, f);
        }
        Expr::Unary(_, x) | Expr::Index(_, x) | Expr::NewArray(x) => visit_expr(method, s, x, f),
        Expr::Call(c) => {
            for a in &mut c.args {
                visit_expr(method, s, a, f);
            }
        }
        Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) | Expr::Length(_) => {}
    }
}

fn visit_block(method: &str, b: &mut Block, f: &mut Visit<'_>) {
    for s in &mut b.stmts {
        visit_stmt(method, s, f);
    }
}

fn visit_stmt(method: &str, s: &mut Statement, f: &mut Visit<'_>) {
    let header = (s.id, s.line);
    match &mut s.kind {
        StmtKind::Assign { target, value } => {
            if let LValue::Index(_, i) = target {
                visit_expr(method, header, i, f);
            }
            visit_expr(method, header, value, f);
        }
        StmtKind::VarDecl { decls, .. } => {
            for d in decls {
                if let Some(e) = &mut d.init {
                    visit_expr(method, header, e, f);
                }
            }
        }
        StmtKind::If { cond, then_block, else_block } => {
            visit_expr(method, header, cond, f);
            visit_block(method, then_block, f);
            if let Some(b) = else_block {
                visit_block(method, b, f);
            }
        }
        StmtKind::While { cond, body } => {
            visit_expr(method, header, cond, f);
            visit_block(method, body, f);
        }
        StmtKind::Call { target, call } => {
            if let Some(LValue::Index(_, i)) = target {
                visit_expr(method, header, i, f);
            }
            for a in &mut call.args {
                visit_expr(method, header, a, f);
            }
        }
        StmtKind::Return { value } => {
            if let Some(e) = value {
                visit_expr(method, header, e, f);
            }
        }
    }
}

fn visit_program(p: &mut Program, f: &mut Visit<'_>) {
    for m in &mut p.methods {
        let name = m.name.clone();
        visit_block(&name, &mut m.body, f);
    }
}

/// Every operator swap of the program, optionally limited to one method.
pub fn mutations(program: &Program, method: Option<&str>) -> Vec<Mutation> {
    let mut p = program.clone();
    let mut out = Vec::new();
    let mut index = 0;
    visit_program(&mut p, &mut |m, stmt, line, op| {
        if let Some(to) = swap(*op) {
            if method.is_none_or(|x| x == m) {
                out.push(Mutation { index, method: m.to_string(), stmt, line, from: *op, to });
            }
            index += 1;
        }
    });
    out
}

/// The program with mutation `m` applied; ids and lines are unchanged.
/// Its `source` is still the original text.
pub fn apply(program: &CheckedProgram, m: &Mutation) -> CheckedProgram {
    let mut p = program.program().clone();
    let mut index = 0;
    visit_program(&mut p, &mut |_, _, _, op| {
        if swap(*op).is_some() {
            if index == m.index {
                *op = m.to;
            }
            index += 1;
        }
    });
    depdiag_core::lang::check(p).expect("operator swaps keep programs well typed")
}
