//! Random well-formed programs.
//!
//! Programs have integer parameters `p0..`, locals `v0..` declared up front,
//! and bounded loops driven by counters `k0..` the loop body never writes.
//! No division is generated, so runs never fault.

use std::fmt::Write;

use depdiag_core::interp::Value;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub inputs: usize,
    pub locals: usize,
    /// Top-level statements.
    pub statements: usize,
    pub allow_if: bool,
    pub allow_while: bool,
    /// Nesting limit for compound statements.
    pub depth: usize,
}

impl GenConfig {
    pub fn straight_line(statements: usize) -> GenConfig {
        GenConfig { inputs: 4, locals: 8, statements, allow_if: false, allow_while: false, depth: 0 }
    }

    pub fn small() -> GenConfig {
        GenConfig { inputs: 3, locals: 4, statements: 6, allow_if: true, allow_while: true, depth: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub source: String,
    pub method: String,
    pub outputs: Vec<String>,
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: GenConfig,
    out: String,
    counters: usize,
    /// Counters of the enclosing loops; they are read-only inside.
    busy: Vec<String>,
}

impl<R: Rng> Gen<'_, R> {
    fn var(&mut self) -> String {
        let n = self.cfg.inputs + self.cfg.locals;
        let i = self.rng.gen_range(0..n);
        if i < self.cfg.inputs {
            format!("p{i}")
        } else {
            format!("v{}", i - self.cfg.inputs)
        }
    }

    fn leaf(&mut self) -> String {
        if self.rng.gen_bool(0.25) {
            self.rng.gen_range(0..5).to_string()
        } else {
            self.var()
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf();
        }
        let op = ["+", "-", "*"][self.rng.gen_range(0..3)];
        let l = self.expr(depth - 1);
        let r = self.expr(depth - 1);
        format!("({l} {op} {r})")
    }

    fn cond(&mut self) -> String {
        let op = ["<", "<=", "==", "!="][self.rng.gen_range(0..4)];
        let l = self.expr(1);
        let r = self.expr(1);
        format!("{l} {op} {r}")
    }

    fn indent(&mut self, level: usize) {
        for _ in 0..=level {
            self.out.push_str("  ");
        }
    }

    fn statement(&mut self, level: usize) {
        let roll = self.rng.gen_range(0..10);
        if self.cfg.allow_if && level < self.cfg.depth && roll < 2 {
            let c = self.cond();
            self.indent(level);
            writeln!(self.out, "if ({c}) {{").unwrap();
            let n = self.rng.gen_range(1..3);
            for _ in 0..n {
                self.statement(level + 1);
            }
            if self.rng.gen_bool(0.5) {
                self.indent(level);
                self.out.push_str("} else {\n");
                self.statement(level + 1);
            }
            self.indent(level);
            self.out.push_str("}\n");
        } else if self.cfg.allow_while && level < self.cfg.depth && roll < 3 {
            let k = format!("k{}", self.counters);
            self.counters += 1;
            let bound = self.rng.gen_range(0..4);
            self.indent(level);
            writeln!(self.out, "int {k} = 0;").unwrap();
            self.indent(level);
            writeln!(self.out, "while ({k} < {bound}) {{").unwrap();
            self.busy.push(k.clone());
            let n = self.rng.gen_range(1..3);
            for _ in 0..n {
                self.statement(level + 1);
            }
            self.busy.pop();
            self.indent(level + 1);
            writeln!(self.out, "{k} = {k} + 1;").unwrap();
            self.indent(level);
            self.out.push_str("}\n");
        } else {
            let target = loop {
                let v = self.var();
                if !self.busy.contains(&v) {
                    break v;
                }
            };
            let e = self.expr(2);
            self.indent(level);
            writeln!(self.out, "{target} = {e};").unwrap();
        }
    }
}

pub fn program<R: Rng>(rng: &mut R, cfg: GenConfig) -> Generated {
    let mut g = Gen { rng, cfg, out: String::new(), counters: 0, busy: Vec::new() };
    let params: Vec<String> = (0..cfg.inputs).map(|i| format!("int p{i}")).collect();
    writeln!(g.out, "void m({}) {{", params.join(", ")).unwrap();
    if cfg.locals > 0 {
        let locals: Vec<String> = (0..cfg.locals).map(|i| format!("v{i}")).collect();
        writeln!(g.out, "  int {};", locals.join(", ")).unwrap();
    }
    for _ in 0..cfg.statements {
        g.statement(0);
    }
    g.out.push_str("}\n");
    let outputs = (0..cfg.locals).map(|i| format!("v{i}")).collect();
    Generated { source: g.out, method: "m".to_string(), outputs }
}

pub fn args<R: Rng>(rng: &mut R, n: usize) -> Vec<Value> {
    (0..n).map(|_| Value::int(rng.gen_range(-5..=5))).collect()
}
