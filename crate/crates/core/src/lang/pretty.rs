use alloc::string::String;
use core::fmt::Write;

use super::*;

/// Renders a program back to source. Every statement is placed on its
/// original line, so re-parsing the output reproduces the same line numbers.
pub fn pretty_print(program: &Program) -> String {
    let mut w = LineWriter { out: String::new(), line: 1, depth: 0 };
    if let Some(c) = &program.class_name {
        w.text(&alloc::format!("class {c} {{"));
        w.depth += 1;
    }
    for m in &program.methods {
        w.goto(m.line);
        let mut header = alloc::format!("static {} {}(", m.return_type, m.name);
        for (i, p) in m.params.iter().enumerate() {
            if i > 0 {
                header.push_str(", ");
            }
            let _ = write!(header, "{} {}", p.ty, p.name);
        }
        header.push_str(") {");
        w.text(&header);
        w.depth += 1;
        w.block_body(&m.body);
        w.depth -= 1;
        w.goto(m.end_line);
        w.text("}");
    }
    if program.class_name.is_some() {
        w.depth -= 1;
        w.newline();
        w.text("}");
    }
    w.out.push('\n');
    w.out
}

struct LineWriter {
    out: String,
    line: u32,
    depth: usize,
}

impl LineWriter {
    fn newline(&mut self) {
        self.out.push('\n');
        self.line += 1;
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    /// Moves to `line` if it is ahead; otherwise continues on the current line.
    fn goto(&mut self, line: u32) {
        if line > self.line {
            while self.line < line {
                self.out.push('\n');
                self.line += 1;
            }
            for _ in 0..self.depth {
                self.out.push_str("  ");
            }
        } else if !self.out.is_empty() && !self.out.ends_with(' ') && !self.out.ends_with('\n') {
            self.out.push(' ');
        }
    }

    fn text(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn block_body(&mut self, b: &Block) {
        for s in &b.stmts {
            self.statement(s);
        }
    }

    fn block(&mut self, b: &Block) {
        self.text("{");
        self.depth += 1;
        self.block_body(b);
        self.depth -= 1;
        self.goto(b.close_line);
        self.text("}");
    }

    fn statement(&mut self, s: &Statement) {
        self.goto(s.line);
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let t = alloc::format!("{} = {}", lvalue(target), expr(value));
                self.text(&t);
                self.semicolon(s);
            }
            StmtKind::VarDecl { ty, decls } => {
                let mut t = alloc::format!("{ty} ");
                for (i, d) in decls.iter().enumerate() {
                    if i > 0 {
                        t.push_str(", ");
                    }
                    t.push_str(&d.name);
                    if let Some(init) = &d.init {
                        let _ = write!(t, " = {}", expr(init));
                    }
                }
                self.text(&t);
                self.semicolon(s);
            }
            StmtKind::Call { target, call } => {
                let mut t = String::new();
                if let Some(lv) = target {
                    let _ = write!(t, "{} = ", lvalue(lv));
                }
                t.push_str(&call_text(call));
                self.text(&t);
                self.semicolon(s);
            }
            StmtKind::Return { value } => {
                match value {
                    Some(v) => self.text(&alloc::format!("return {}", expr(v))),
                    None => self.text("return"),
                }
                self.semicolon(s);
            }
            StmtKind::If { cond, then_block, else_block } => {
                self.text(&alloc::format!("if ({}) ", expr(cond)));
                self.block(then_block);
                if let Some(e) = else_block {
                    self.text(" else ");
                    self.block(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.text(&alloc::format!("while ({}) ", expr(cond)));
                self.block(body);
            }
        }
    }

    // A statement that spanned several lines keeps its end line via the `;`.
    fn semicolon(&mut self, s: &Statement) {
        if s.end_line > self.line {
            self.goto(s.end_line);
        }
        self.text(";");
    }
}

fn lvalue(lv: &LValue) -> String {
    match lv {
        LValue::Var(n) => n.clone(),
        LValue::Index(n, i) => alloc::format!("{n}[{}]", expr(i)),
    }
}

fn call_text(c: &CallExpr) -> String {
    let mut t = alloc::format!("{}(", c.method);
    for (i, a) in c.args.iter().enumerate() {
        if i > 0 {
            t.push_str(", ");
        }
        t.push_str(&expr(a));
    }
    t.push(')');
    t
}

/// Source text of an expression with minimal parentheses.
pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(n) => alloc::format!("{n}"),
        Expr::Bool(b) => alloc::format!("{b}"),
        Expr::Var(n) => n.clone(),
        Expr::Index(n, i) => alloc::format!("{n}[{}]", expr(i)),
        Expr::Length(n) => alloc::format!("{n}.length"),
        Expr::NewArray(len) => alloc::format!("new int[{}]", expr(len)),
        Expr::Call(c) => call_text(c),
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnaryOp::Neg => "-",
                UnaryOp::Not => "!",
            };
            match **inner {
                Expr::Binary(..) => alloc::format!("{sym}({})", expr(inner)),
                _ => alloc::format!("{sym}{}", expr(inner)),
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let left = match &**l {
                Expr::Binary(lop, ..) if lop.precedence() < p => alloc::format!("({})", expr(l)),
                _ => expr(l),
            };
            let right = match &**r {
                Expr::Binary(rop, ..) if rop.precedence() <= p => alloc::format!("({})", expr(r)),
                _ => expr(r),
            };
            alloc::format!("{left} {} {right}", op.symbol())
        }
    }
}
