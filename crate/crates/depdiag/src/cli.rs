use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use depdiag_core::deps::{build_graph, method_graph, Granularity};
use depdiag_core::diagnosis::{diagnose, value_filter};
use depdiag_core::interp::{derive_observations, execute, Event, Limits, TestCase, Trace};
use depdiag_core::lang::CheckedProgram;
use depdiag_core::logic::{compile_sd, resolve_observations, Literal};
use depdiag_core::session::{start_session, ActionKind, Answer, Session, SessionConfig};
use depdiag_core::slicer::{backward_slice, compare_slice_diag, Position, SliceCriterion};
use serde_json::{json, Value as Json};

use crate::load::{read_program, read_test};
use crate::service::{read_snapshot, write_snapshot, Service, ServiceConfig};
use crate::snapshot::Snapshot;
use crate::wire::{action_json, component_kind, diagnosis_json, display, report_json, value_from_json, value_to_json};

#[derive(Debug, Parser)]
#[command(name = "depdiag", version, about = "Model-based debugging for a small Java-like language")]
pub struct Cli {
    /// Largest diagnosis cardinality.
    #[arg(long, global = true, env = "DEPDIAG_MAX_CARD", default_value_t = 2)]
    pub max_card: usize,
    /// Interpreter step budget per run.
    #[arg(long, global = true, env = "DEPDIAG_STEPS", default_value_t = 1_000_000)]
    pub step_budget: u64,
    /// Indent JSON output.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Components and functional dependencies of a method.
    Deps {
        file: PathBuf,
        #[arg(long)]
        method: String,
    },
    /// Horn clauses of the system description, with observations when a test is given.
    Model {
        file: PathBuf,
        #[arg(long, required_unless_present = "test")]
        method: Option<String>,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Minimal diagnoses for a failing test.
    Diagnose {
        file: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Drop candidates that value propagation refutes.
        #[arg(long)]
        value_filter: bool,
    },
    /// Static backward slice.
    Slice {
        file: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long, value_delimiter = ',', required = true)]
        vars: Vec<String>,
        /// A line number, or `end`.
        #[arg(long, default_value = "end")]
        at: String,
    },
    /// Slice lines against single-fault diagnosis lines.
    Compare {
        file: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Execution trace of one run.
    Trace {
        file: PathBuf,
        #[arg(long, conflicts_with_all = ["method", "args"])]
        test: Option<PathBuf>,
        #[arg(long, requires = "args")]
        method: Option<String>,
        /// Arguments as a JSON array.
        #[arg(long)]
        args: Option<String>,
    },
    /// Interactive debugging session on the terminal.
    Session {
        file: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Write a snapshot after every transition.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Rebuild a session from a snapshot and print its report.
    Replay { snapshot: PathBuf },
    /// Rebuild a session from a snapshot and print the pending action.
    Next { snapshot: PathBuf },
    /// HTTP service for the debugger UI.
    Serve {
        #[arg(long, env = "DEPDIAG_BIND", default_value = "127.0.0.1:7071")]
        bind: String,
        #[arg(long)]
        persist_dir: Option<PathBuf>,
        /// Origins allowed by CORS; `*` allows any.
        #[arg(long)]
        allow_origin: Vec<String>,
    },
}

impl Cli {
    fn limits(&self) -> Limits {
        Limits { step_budget: self.step_budget, ..Limits::default() }
    }

    fn session_config(&self) -> SessionConfig {
        SessionConfig { max_card: self.max_card, limits: self.limits() }
    }
}

pub fn main() -> i32 {
    let stdin = std::io::stdin();
    run_with(std::env::args_os(), &mut stdin.lock(), &mut std::io::stdout(), &mut std::io::stderr())
}

/// Runs the CLI on explicit streams and returns the exit code.
pub fn run_with<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, input, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn emit(cli: &Cli, out: &mut dyn Write, v: &Json) -> anyhow::Result<()> {
    let text = if cli.pretty { serde_json::to_string_pretty(v)? } else { serde_json::to_string(v)? };
    writeln!(out, "{text}")?;
    Ok(())
}

fn run(cli: &Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    match &cli.command {
        Command::Deps { file, method } => emit(cli, out, &deps(&read_program(file)?, method)?),
        Command::Model { file, method, test } => {
            let p = read_program(file)?;
            let test = test.as_deref().map(read_test).transpose()?;
            let method = method.clone().or_else(|| test.as_ref().map(|t| t.method.clone())).expect("clap requires one");
            emit(cli, out, &model(cli, &p, &method, test.as_ref())?)
        }
        Command::Diagnose { file, test, value_filter } => {
            emit(cli, out, &diagnose_cmd(cli, &read_program(file)?, &read_test(test)?, *value_filter)?)
        }
        Command::Slice { file, method, vars, at } => {
            let p = read_program(file)?;
            let position = match at.as_str() {
                "end" => Position::End,
                n => Position::Line(n.parse().with_context(|| format!("--at expects a line number or `end`, got `{n}`"))?),
            };
            let lines = backward_slice(&p, method, &SliceCriterion::new(vars.iter().cloned(), position))?;
            emit(cli, out, &json!({ "lines": lines }))
        }
        Command::Compare { file, test } => {
            let r = compare_slice_diag(&read_program(file)?, &read_test(test)?, cli.limits())?;
            emit(
                cli,
                out,
                &json!({
                    "nok_outputs": r.nok_outputs,
                    "slice": r.slice_lines,
                    "diagnosis": r.diagnosis_lines,
                    "difference": r.difference,
                }),
            )
        }
        Command::Trace { file, test, method, args } => {
            let p = read_program(file)?;
            let (method, args) = match (test, method, args) {
                (Some(t), _, _) => {
                    let t = read_test(t)?;
                    (t.method, t.args)
                }
                (None, Some(m), Some(a)) => {
                    let a: Vec<Json> = serde_json::from_str(a).context("--args must be a JSON array")?;
                    (m.clone(), a.iter().map(value_from_json).collect::<Result<_, _>>()?)
                }
                _ => bail!("give --test, or --method with --args"),
            };
            let trace = execute(&p, &method, &args, cli.limits())?;
            emit(cli, out, &trace_json(&trace))
        }
        Command::Session { file, test, snapshot } => {
            let s = start_session(read_program(file)?, read_test(test)?, cli.session_config())?;
            let s = interact(s, snapshot.as_deref(), input, err)?;
            emit(cli, out, &report_json(&s))
        }
        Command::Replay { snapshot } => emit(cli, out, &report_json(&restore(snapshot)?)),
        Command::Next { snapshot } => {
            let s = restore(snapshot)?;
            emit(cli, out, &s.pending_action().map_or(Json::Null, |a| action_json(&s, a)))
        }
        Command::Serve { bind, persist_dir, allow_origin } => {
            let _ = tracing_subscriber::fmt()
                .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
                .with_writer(std::io::stderr)
                .try_init();
            let svc = Service::new(ServiceConfig { session: cli.session_config(), persist_dir: persist_dir.clone() });
            let restored = svc.recover()?;
            if restored > 0 {
                tracing::info!("restored {restored} sessions");
            }
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(crate::http::serve(Arc::new(svc), bind, allow_origin))
        }
    }
}

fn restore(path: &Path) -> anyhow::Result<Session> {
    Ok(read_snapshot(path)?.restore()?)
}

fn deps(p: &CheckedProgram, method: &str) -> anyhow::Result<Json> {
    let g = method_graph(p, method)?;
    let label = |o: depdiag_core::deps::OccId| g.occurrence(o).label();
    let items: Vec<Json> = g
        .components
        .iter()
        .map(|c| {
            let fds: Vec<Json> = c
                .fds
                .iter()
                .map(|&i| {
                    let fd = &g.fds[i];
                    json!({ "target": label(fd.target), "deps": fd.antecedents.iter().map(|&a| label(a)).collect::<Vec<_>>() })
                })
                .collect();
            json!({ "component": c.label, "line": c.line, "kind": component_kind(c), "fd": fds })
        })
        .collect();
    Ok(Json::Array(items))
}

fn model(cli: &Cli, p: &CheckedProgram, method: &str, test: Option<&TestCase>) -> anyhow::Result<Json> {
    let g = method_graph(p, method)?;
    let sd = compile_sd(&g);
    let clauses: Vec<String> = sd.clauses().iter().map(|c| sd.clause_text(c)).collect();
    let mut out = json!({
        "method": method,
        "components": g.components.iter().map(|c| json!({ "component": c.label, "line": c.line, "kind": component_kind(c) })).collect::<Vec<_>>(),
        "inputs": g.inputs.iter().map(|&o| g.occurrence(o).label()).collect::<Vec<_>>(),
        "outputs": g.outputs.iter().map(|&o| g.occurrence(o).label()).collect::<Vec<_>>(),
        "clauses": clauses,
    });
    if let Some(t) = test {
        let trace = execute(p, &t.method, &t.args, cli.limits())?;
        let obs = resolve_observations(&g, &derive_observations(p, &trace, t)?)?;
        let mut lits: Vec<String> = obs.ok.iter().map(|&o| sd.literal(Literal::Ok(o))).collect();
        lits.extend(obs.nok.iter().map(|&o| sd.literal(Literal::Nok(o))));
        out["observations"] = json!(lits);
    }
    Ok(out)
}

fn diagnose_cmd(cli: &Cli, p: &CheckedProgram, test: &TestCase, filter: bool) -> anyhow::Result<Json> {
    let trace = execute(p, &test.method, &test.args, cli.limits())?;
    let graph = build_graph(p, &test.method, Some(&trace), &Granularity::default())?;
    let sd = compile_sd(&graph);
    let obs = resolve_observations(&graph, &derive_observations(p, &trace, test)?)?;
    let report = diagnose(&sd, &obs, cli.max_card)?;
    let kept = if filter { value_filter(&graph, test, &report.diagnoses) } else { report.diagnoses.clone() };
    let removed: Vec<Json> = report.diagnoses.iter().filter(|d| !kept.contains(d)).map(diagnosis_json).collect();
    let mut lits: Vec<String> = obs.ok.iter().map(|&o| sd.literal(Literal::Ok(o))).collect();
    lits.extend(obs.nok.iter().map(|&o| sd.literal(Literal::Nok(o))));
    Ok(json!({
        "method": test.method,
        "observations": lits,
        "diagnoses": kept.iter().map(diagnosis_json).collect::<Vec<_>>(),
        "conflicts": report.conflicts,
        "checks": report.checks,
        "value_filter": filter,
        "removed": removed,
    }))
}

fn trace_json(t: &Trace) -> Json {
    let values = |xs: &[(String, depdiag_core::interp::Value)]| -> Json {
        Json::Object(xs.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect())
    };
    let steps: Vec<Json> = t
        .steps
        .iter()
        .map(|s| {
            let mut j = json!({
                "line": s.line,
                "stmt": s.stmt.0,
                "iter": s.iter,
                "ctx": s.ctx.iter().map(|f| json!({ "call": f.call.0, "iter": f.iter })).collect::<Vec<_>>(),
            });
            let (event, payload) = match &s.event {
                Event::Write(xs) => ("write", values(xs)),
                Event::Cond(b) => ("cond", Json::Bool(*b)),
                Event::Exit(xs) => ("exit", values(xs)),
                Event::Enter(xs) => ("enter", values(xs)),
            };
            j["event"] = json!(event);
            j["values"] = payload;
            j
        })
        .collect();
    json!({
        "method": t.method,
        "args": t.args.iter().map(value_to_json).collect::<Vec<_>>(),
        "steps": steps,
        "final": Json::Object(t.final_env.iter().map(|(k, v)| (k.clone(), value_to_json(v))).collect()),
        "return": t.return_value.as_ref().map(value_to_json),
    })
}

fn prompt(s: &Session, err: &mut dyn Write) -> std::io::Result<bool> {
    let lines: Vec<String> = s.candidate_lines().iter().map(u32::to_string).collect();
    writeln!(err, "candidates: {}", s.candidates().iter().map(|d| d.labels.join("+")).collect::<Vec<_>>().join(", "))?;
    writeln!(err, "lines: {}", lines.join(" "))?;
    let Some(a) = s.pending_action() else { return Ok(false) };
    match &a.kind {
        ActionKind::AskQuery(q) => {
            writeln!(err, "Is {} = {} at line {} correct? [y/n]", q.key.var, display(&q.displayed_value), q.line)?;
        }
        ActionKind::AskFirstBadIteration { line, iterations, .. } => {
            writeln!(err, "First wrong iteration of the loop at line {line}? [1-{iterations}]")?;
        }
        ActionKind::AskLoopCondition { line, .. } => writeln!(err, "Is the loop condition at line {line} correct? [y/n]")?,
        ActionKind::AskSubExpression { line, options, .. } => {
            writeln!(err, "Smallest wrong part of line {line}?")?;
            for (i, o) in options.iter().enumerate() {
                writeln!(err, "  {i}: {}", o.text)?;
            }
        }
        ActionKind::Report { lines } => {
            writeln!(err, "Fault at line(s) {}", lines.iter().map(u32::to_string).collect::<Vec<_>>().join(", "))?;
            return Ok(false);
        }
    }
    write!(err, "> ")?;
    err.flush()?;
    Ok(true)
}

/// Reads answers until the session ends, the input ends or `quit`.
/// Besides answers, `expand <component>` and `observe <occurrence> y|n`
/// are accepted.
fn interact(mut s: Session, snapshot: Option<&Path>, input: &mut dyn BufRead, err: &mut dyn Write) -> anyhow::Result<Session> {
    let save = |s: &Session| -> anyhow::Result<()> {
        if let Some(p) = snapshot {
            write_snapshot(p, &Snapshot::capture(s))?;
        }
        Ok(())
    };
    save(&s)?;
    let mut line = String::new();
    while prompt(&s, err)? {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let step = match words.as_slice() {
            [] => continue,
            ["quit" | "q"] => break,
            ["expand", label] => s
                .graph()
                .component_by_label(label)
                .map(|c| c.id.clone())
                .ok_or_else(|| anyhow!("no component {label}"))
                .and_then(|c| Ok(s.expand(&c)?)),
            ["observe", occ, v] => s
                .graph()
                .occurrence_by_label(occ)
                .map(|o| o.key.clone())
                .ok_or_else(|| anyhow!("no occurrence {occ}"))
                .and_then(|k| Ok(s.free_query(&k, yes(v).ok_or_else(|| anyhow!("answer y or n"))?)?)),
            [word] => answer_for(&s, word).and_then(|(id, a)| Ok(s.submit_answer(id, a)?)),
            _ => Err(anyhow!("unrecognized input")),
        };
        match step {
            Ok(()) => save(&s)?,
            Err(e) => writeln!(err, "{e}")?,
        }
    }
    Ok(s)
}

fn yes(w: &str) -> Option<bool> {
    match w.to_ascii_lowercase().as_str() {
        "y" | "yes" | "c" | "correct" | "ok" => Some(true),
        "n" | "no" | "i" | "incorrect" | "wrong" | "nok" => Some(false),
        _ => None,
    }
}

fn answer_for(s: &Session, word: &str) -> anyhow::Result<(u64, Answer)> {
    let a = s.next_action()?;
    let answer = match &a.kind {
        ActionKind::AskQuery(_) | ActionKind::AskLoopCondition { .. } => Answer::Verdict(yes(word).ok_or_else(|| anyhow!("answer y or n"))?),
        ActionKind::AskFirstBadIteration { .. } => Answer::Iteration(word.parse().context("answer an iteration number")?),
        ActionKind::AskSubExpression { .. } => Answer::Choice(word.parse().context("answer an option number")?),
        ActionKind::Report { .. } => bail!("the session is finished"),
    };
    Ok((a.id, answer))
}
