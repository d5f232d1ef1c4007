use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::lexer::{tokenize, Kw, Tok, Token};
use super::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub expected: String,
    pub found: String,
}

/// Parses a whole source file.
pub fn parse(source_name: &str, source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { toks: tokens, pos: 0, next_id: 0 };
    let (class_name, methods) = p.program()?;
    Ok(Program {
        source_name: String::from(source_name),
        class_name,
        methods,
        source: String::from(source),
    })
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn token(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, SyntaxError> {
        let t = self.token();
        Err(SyntaxError {
            line: t.line,
            col: t.col,
            expected: String::from(expected),
            found: t.tok.to_string(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<Token, SyntaxError> {
        if self.is_sym(s) {
            Ok(self.bump())
        } else {
            self.error(&alloc::format!("`{s}`"))
        }
    }

    fn is_kw(&self, k: Kw) -> bool {
        matches!(self.peek(), Tok::Kw(x) if *x == k)
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("identifier"),
        }
    }

    fn fresh_id(&mut self) -> StatementId {
        let id = StatementId(self.next_id);
        self.next_id += 1;
        id
    }

    fn program(&mut self) -> Result<(Option<String>, Vec<MethodDecl>), SyntaxError> {
        let mut methods = Vec::new();
        let mut class_name = None;
        self.modifiers();
        if self.is_kw(Kw::Class) {
            self.bump();
            class_name = Some(self.ident()?);
            self.expect_sym("{")?;
            while !self.is_sym("}") {
                if matches!(self.peek(), Tok::Eof) {
                    return self.error("`}`");
                }
                methods.push(self.method()?);
            }
            self.bump();
        } else {
            loop {
                methods.push(self.method()?);
                if matches!(self.peek(), Tok::Eof) {
                    break;
                }
            }
        }
        if !matches!(self.peek(), Tok::Eof) {
            return self.error("end of input");
        }
        Ok((class_name, methods))
    }

    fn modifiers(&mut self) {
        while matches!(self.peek(), Tok::Kw(Kw::Public | Kw::Private | Kw::Protected | Kw::Static)) {
            self.bump();
        }
    }

    fn at_type(&self) -> bool {
        matches!(self.peek(), Tok::Kw(Kw::Int | Kw::Boolean))
    }

    fn ty(&mut self) -> Result<Type, SyntaxError> {
        let base = match self.peek() {
            Tok::Kw(Kw::Int) => Type::Int,
            Tok::Kw(Kw::Boolean) => Type::Bool,
            _ => return self.error("type"),
        };
        self.bump();
        if self.is_sym("[") {
            if base != Type::Int {
                return self.error("`int` element type");
            }
            self.bump();
            self.expect_sym("]")?;
            return Ok(Type::IntArray);
        }
        Ok(base)
    }

    fn method(&mut self) -> Result<MethodDecl, SyntaxError> {
        self.modifiers();
        let line = self.token().line;
        let return_type = if self.is_kw(Kw::Void) {
            self.bump();
            Type::Void
        } else if self.at_type() {
            self.ty()?
        } else {
            return self.error("method declaration");
        };
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.is_sym(")") {
            // `int a,b,c` shares the type; a type keyword starts a new group.
            let mut ty = self.ty()?;
            loop {
                let pname = self.ident()?;
                params.push(Param { name: pname, ty });
                if !self.eat_sym(",") {
                    break;
                }
                if self.at_type() {
                    ty = self.ty()?;
                }
            }
        }
        self.expect_sym(")")?;
        let mut locals = Vec::new();
        let (body, end_line) = self.block(&mut locals)?;
        Ok(MethodDecl { name, params, locals, body, return_type, line, end_line })
    }

    /// Returns the block and the line of its closing brace.
    fn block(&mut self, locals: &mut Vec<Param>) -> Result<(Block, u32), SyntaxError> {
        self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.is_sym("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.error("`}`");
            }
            stmts.push(self.statement(locals)?);
        }
        let close = self.bump();
        Ok((Block { stmts, close_line: close.line }, close.line))
    }

    fn statement(&mut self, locals: &mut Vec<Param>) -> Result<Statement, SyntaxError> {
        let first = self.token().clone();
        let id = self.fresh_id();
        let kind = if self.at_type() {
            let ty = self.ty()?;
            let mut decls = Vec::new();
            loop {
                let name = self.ident()?;
                let init = if self.eat_sym("=") { Some(self.expr()?) } else { None };
                if !locals.iter().any(|l| l.name == name) {
                    locals.push(Param { name: name.clone(), ty });
                }
                decls.push(Declarator { name, init });
                if !self.eat_sym(",") {
                    break;
                }
            }
            self.expect_sym(";")?;
            StmtKind::VarDecl { ty, decls }
        } else if self.is_kw(Kw::If) {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let (then_block, _) = self.block(locals)?;
            let else_block = if self.is_kw(Kw::Else) {
                self.bump();
                if self.is_kw(Kw::If) {
                    let nested = self.statement(locals)?;
                    let close_line = nested.end_line;
                    Some(Block { stmts: alloc::vec![nested], close_line })
                } else {
                    Some(self.block(locals)?.0)
                }
            } else {
                None
            };
            StmtKind::If { cond, then_block, else_block }
        } else if self.is_kw(Kw::While) {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let (body, _) = self.block(locals)?;
            StmtKind::While { cond, body }
        } else if self.is_kw(Kw::Return) {
            self.bump();
            let value = if self.is_sym(";") { None } else { Some(self.expr()?) };
            self.expect_sym(";")?;
            StmtKind::Return { value }
        } else if let Tok::Ident(name) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::Sym("(")) {
                self.bump();
                let call = self.call_args(name)?;
                self.expect_sym(";")?;
                StmtKind::Call { target: None, call }
            } else {
                self.bump();
                let target = if self.eat_sym("[") {
                    let idx = self.expr()?;
                    self.expect_sym("]")?;
                    LValue::Index(name, idx)
                } else {
                    LValue::Var(name)
                };
                self.expect_sym("=")?;
                let value = self.expr()?;
                self.expect_sym(";")?;
                match value {
                    Expr::Call(call) => StmtKind::Call { target: Some(target), call },
                    value => StmtKind::Assign { target, value },
                }
            }
        } else {
            return self.error("statement");
        };
        let last = &self.toks[self.pos.saturating_sub(1)];
        Ok(Statement {
            id,
            line: first.line,
            end_line: last.line,
            span: Span { start: first.start, end: last.end },
            kind,
        })
    }

    fn call_args(&mut self, method: String) -> Result<CallExpr, SyntaxError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        Ok(CallExpr { method, args })
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Sym("+") => BinOp::Add,
            Tok::Sym("-") => BinOp::Sub,
            Tok::Sym("*") => BinOp::Mul,
            Tok::Sym("/") => BinOp::Div,
            Tok::Sym("%") => BinOp::Rem,
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            Tok::Sym("&&") => BinOp::And,
            Tok::Sym("||") => BinOp::Or,
            _ => return None,
        })
    }

    // Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_sym("-") {
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_sym("!") {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n))
            }
            Tok::Kw(Kw::True) => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Kw(Kw::False) => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Kw(Kw::New) => {
                self.bump();
                if !self.is_kw(Kw::Int) {
                    return self.error("`int`");
                }
                self.bump();
                self.expect_sym("[")?;
                let len = self.expr()?;
                self.expect_sym("]")?;
                Ok(Expr::NewArray(Box::new(len)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.is_sym("(") {
                    Ok(Expr::Call(self.call_args(name)?))
                } else if self.eat_sym("[") {
                    let idx = self.expr()?;
                    self.expect_sym("]")?;
                    Ok(Expr::Index(name, Box::new(idx)))
                } else if self.eat_sym(".") {
                    match self.peek() {
                        Tok::Ident(f) if f == "length" => {
                            self.bump();
                            Ok(Expr::Length(name))
                        }
                        _ => self.error("`length`"),
                    }
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => self.error("expression"),
        }
    }
}
