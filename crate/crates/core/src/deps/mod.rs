//! Occurrences, functional dependencies and the component graph.
//!
//! A graph is built for one method at a chosen granularity: compound and
//! call-bearing statements stay single components until they are expanded.
//! Expanding an `if` adds a condition pseudo-component that owns the branch
//! merges; expanding a loop unrolls it as often as the trace says it ran;
//! expanding a call adds a binding component and inlines the callee.

mod builder;
mod index;
mod transfer;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::interp::{OccKey, Site, Trace, Value};
use crate::lang::{CallExpr, CheckedProgram, Expr, StatementId};
use crate::obs::Target;

pub use index::{index_occurrences, IndexedMethod, MergeKind, PhiMerge};
pub use transfer::{method_summaries, transfer_statement, NameDeps, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Stmt,
    /// Condition of an expanded `if` or `while`.
    Cond,
    /// Argument and result passing of an expanded call.
    Bind,
}

/// Identity of a diagnosis component. `ctx` lists the call statements through
/// which an inlined callee statement was reached.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ComponentId {
    pub ctx: Vec<StatementId>,
    pub stmt: StatementId,
    pub role: Role,
}

impl ComponentId {
    pub fn top(stmt: StatementId) -> ComponentId {
        ComponentId { ctx: Vec::new(), stmt, role: Role::Stmt }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Atomic,
    If,
    While,
    Call,
    Condition,
    Binding,
}

impl ComponentKind {
    pub fn is_composite(self) -> bool {
        matches!(self, ComponentKind::If | ComponentKind::While | ComponentKind::Call)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccId(pub u32);

impl OccId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub id: OccId,
    pub key: OccKey,
    /// Variable name, qualified with the callee for inlined code.
    pub name: String,
    /// Per-name counter; 0 only for inputs of the method under test.
    pub index: u32,
    /// Index of the component whose fd defines this occurrence.
    pub origin: Option<usize>,
    pub line: u32,
}

impl Occurrence {
    pub fn label(&self) -> String {
        alloc::format!("{}#{}", self.name, self.index)
    }
}

/// Where a value used by an fd comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Occ(OccId),
    /// A local read before any assignment holds its default.
    Const(Value),
}

/// Concrete meaning of an fd, used by the value filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Semantics {
    /// `target = expr`; `call` stands for the single call inside `expr`.
    Expr { expr: Expr, env: Vec<(String, Operand)>, call: Option<(CallExpr, OccId)> },
    /// `array[index] = value`.
    ArrayStore { array: Operand, index: Expr, value: Expr, env: Vec<(String, Operand)>, call: Option<(CallExpr, OccId)> },
    /// Join after an expanded `if`.
    Merge { cond: OccId, then_value: Operand, else_value: Operand },
    Copy(OccId),
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fd {
    pub component: usize,
    pub target: OccId,
    pub antecedents: Vec<OccId>,
    pub semantics: Semantics,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub id: ComponentId,
    pub label: String,
    pub kind: ComponentKind,
    pub line: u32,
    pub end_line: u32,
    pub fds: Vec<usize>,
}

impl Component {
    /// Source lines the component stands for.
    pub fn lines(&self) -> core::ops::RangeInclusive<u32> {
        match self.kind {
            ComponentKind::If | ComponentKind::While => self.line..=self.end_line,
            _ => self.line..=self.line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DepError {
    #[error("recursive calls are not supported: {0}")]
    RecursionUnsupported(String),
    #[error("dependency cycle through {0}")]
    CycleDetected(String),
    #[error("{0} is not a composite component")]
    NotComposite(String),
    #[error("unknown component {0}")]
    UnknownComponent(String),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    pub method: String,
    pub occurrences: Vec<Occurrence>,
    pub components: Vec<Component>,
    pub fds: Vec<Fd>,
    pub inputs: Vec<OccId>,
    pub outputs: Vec<OccId>,
    expanded: BTreeSet<ComponentId>,
    by_key: BTreeMap<OccKey, OccId>,
    comp_index: BTreeMap<ComponentId, usize>,
    final_binding: BTreeMap<String, OccId>,
    defining: Vec<Option<usize>>,
    after: BTreeMap<StatementId, BTreeMap<String, OccId>>,
}

/// Granularity of a graph: which composites are expanded, and whether loop
/// unrolling may use a trace.
#[derive(Debug, Clone, Default)]
pub struct Granularity {
    pub expanded: BTreeSet<ComponentId>,
    /// Expand every `if` regardless of `expanded`.
    pub all_ifs: bool,
}

/// Builds the component graph of `method` at the given granularity. Loops are
/// unrolled according to `trace` when one is given.
pub fn build_graph(
    program: &CheckedProgram,
    method: &str,
    trace: Option<&Trace>,
    granularity: &Granularity,
) -> Result<DependencyGraph, DepError> {
    builder::build(program, method, trace, granularity)
}

/// Top-level graph of `method`: every compound and call-bearing statement is
/// a single component.
pub fn method_graph(program: &CheckedProgram, method: &str) -> Result<DependencyGraph, DepError> {
    build_graph(program, method, None, &Granularity::default())
}

/// Replaces a composite by its parts.
pub fn expand_component(
    program: &CheckedProgram,
    trace: Option<&Trace>,
    graph: &DependencyGraph,
    id: &ComponentId,
) -> Result<DependencyGraph, DepError> {
    let c = graph.component(id).ok_or_else(|| DepError::UnknownComponent(alloc::format!("{id:?}")))?;
    if !c.kind.is_composite() {
        return Err(DepError::NotComposite(c.label.clone()));
    }
    let mut g = Granularity { expanded: graph.expanded.clone(), all_ifs: false };
    g.expanded.insert(id.clone());
    build_graph(program, &graph.method, trace, &g)
}

impl DependencyGraph {
    pub fn occurrence(&self, id: OccId) -> &Occurrence {
        &self.occurrences[id.index()]
    }

    pub fn component(&self, id: &ComponentId) -> Option<&Component> {
        self.comp_index.get(id).map(|&i| &self.components[i])
    }

    pub fn component_index(&self, id: &ComponentId) -> Option<usize> {
        self.comp_index.get(id).copied()
    }

    pub fn component_by_label(&self, label: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.label == label)
    }

    pub fn occurrence_by_label(&self, label: &str) -> Option<&Occurrence> {
        self.occurrences.iter().find(|o| o.label() == label)
    }

    pub fn expanded(&self) -> &BTreeSet<ComponentId> {
        &self.expanded
    }

    pub fn by_key(&self, key: &OccKey) -> Option<OccId> {
        self.by_key.get(key).copied()
    }

    /// The fd defining an occurrence; `None` for inputs.
    pub fn defining_fd(&self, occ: OccId) -> Option<&Fd> {
        self.defining[occ.index()].map(|i| &self.fds[i])
    }

    /// Final occurrence of a variable of the method under test.
    pub fn final_occurrence(&self, var: &str) -> Option<OccId> {
        self.final_binding.get(var).copied()
    }

    /// Occurrence of `var` visible right after `stmt`, for statements of the
    /// method under test outside expanded loops.
    pub fn binding_after(&self, stmt: StatementId, var: &str) -> Option<OccId> {
        self.after.get(&stmt).and_then(|env| env.get(var).copied())
    }

    pub fn has_bindings_after(&self, stmt: StatementId) -> bool {
        self.after.contains_key(&stmt)
    }

    pub fn resolve(&self, target: &Target) -> Option<OccId> {
        match target {
            Target::Input(v) => self.by_key(&OccKey { ctx: Vec::new(), site: Site::Input, var: v.clone() }),
            Target::Output(v) => self.final_occurrence(v),
            Target::At(k) => self.by_key(k),
        }
    }

    /// Components whose fds (transitively) feed `occ`, including its origin.
    pub fn upstream_components(&self, occ: OccId) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut comps = BTreeSet::new();
        let mut stack = alloc::vec![occ];
        while let Some(o) = stack.pop() {
            if !seen.insert(o) {
                continue;
            }
            if let Some(fd) = self.defining_fd(o) {
                comps.insert(fd.component);
                stack.extend(fd.antecedents.iter().copied());
            }
        }
        comps
    }

    /// Occurrence ids in topological order, or the occurrence on a cycle.
    pub fn topological_order(&self) -> Result<Vec<OccId>, DepError> {
        let n = self.occurrences.len();
        let mut indegree = alloc::vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for fd in &self.fds {
            for a in &fd.antecedents {
                succ[a.index()].push(fd.target.index());
                indegree[fd.target.index()] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop() {
            order.push(OccId(i as u32));
            for &j in &succ[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(j);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| indegree[i] > 0).expect("some node is left");
            return Err(DepError::CycleDetected(self.occurrences[stuck].label()));
        }
        Ok(order)
    }
}

impl fmt::Display for DependencyGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            write!(f, "{}:", c.label)?;
            for (n, &i) in c.fds.iter().enumerate() {
                let fd = &self.fds[i];
                let sep = if n == 0 { " " } else { ", " };
                write!(f, "{sep}({}, {{", self.occurrence(fd.target).label())?;
                for (k, a) in fd.antecedents.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(&self.occurrence(*a).label())?;
                }
                f.write_str("})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
