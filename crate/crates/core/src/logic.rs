//! Horn-clause system description and consistency checking.
//!
//! Each fd `(o, M)` of a component `C` becomes `¬AB(C) ∧ ⋀ ok(x∈M) → ok(o)`,
//! and each occurrence `v` gets `ok(v) ∧ nok(v) → ⊥`. Consistency of
//! `SD ∪ OBS` under a fixed AB assignment is decided by unit propagation.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};
use core::fmt;

use crate::deps::{ComponentId, DependencyGraph, OccId};
use crate::obs::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Ok(OccId),
    Nok(OccId),
    /// `AB(C)` for the component with this index.
    Ab(usize),
    NotAb(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HornClause {
    pub body: Vec<Literal>,
    /// `None` is ⊥.
    pub head: Option<Literal>,
}

/// The behavior clause of one fd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    pub component: usize,
    pub body: Vec<OccId>,
    pub head: OccId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentInfo {
    pub id: ComponentId,
    pub label: String,
    pub line: u32,
    /// Last source line the component stands for.
    pub end_line: u32,
}

#[derive(Debug)]
pub struct SystemDescription {
    pub components: Vec<ComponentInfo>,
    pub occurrences: Vec<String>,
    pub behaviors: Vec<Behavior>,
    /// For every occurrence, the behaviors whose body mentions it.
    watchers: Vec<Vec<usize>>,
    propagations: AtomicU64,
}

impl Clone for SystemDescription {
    fn clone(&self) -> Self {
        SystemDescription {
            components: self.components.clone(),
            occurrences: self.occurrences.clone(),
            behaviors: self.behaviors.clone(),
            watchers: self.watchers.clone(),
            propagations: AtomicU64::new(self.propagations()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LogicError {
    #[error("observation over unknown atom {0}")]
    UnknownAtom(String),
}

/// Observation literals resolved to atoms of one system description.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObsSet {
    pub ok: BTreeSet<OccId>,
    pub nok: BTreeSet<OccId>,
    /// Components observed to behave correctly.
    pub normal: BTreeSet<usize>,
}

impl ObsSet {
    /// Occurrences observed both ok and nok.
    pub fn clashes(&self) -> Vec<OccId> {
        self.ok.intersection(&self.nok).copied().collect()
    }

    pub fn is_observed(&self, o: OccId) -> bool {
        self.ok.contains(&o) || self.nok.contains(&o)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    /// Components assumed normal that cannot all be normal together.
    Conflict(Vec<usize>),
}

pub fn compile_sd(graph: &DependencyGraph) -> SystemDescription {
    let components = graph
        .components
        .iter()
        .map(|c| ComponentInfo { id: c.id.clone(), label: c.label.clone(), line: c.line, end_line: *c.lines().end() })
        .collect();
    let occurrences: Vec<String> = graph.occurrences.iter().map(|o| o.label()).collect();
    let mut behaviors = Vec::with_capacity(graph.fds.len());
    let mut watchers = alloc::vec![Vec::new(); occurrences.len()];
    for (ci, c) in graph.components.iter().enumerate() {
        for &f in &c.fds {
            let fd = &graph.fds[f];
            for a in &fd.antecedents {
                watchers[a.index()].push(behaviors.len());
            }
            behaviors.push(Behavior { component: ci, body: fd.antecedents.clone(), head: fd.target });
        }
    }
    SystemDescription { components, occurrences, behaviors, watchers, propagations: AtomicU64::new(0) }
}

/// Resolves target-level observations against `graph`.
pub fn resolve_observations(graph: &DependencyGraph, observations: &[Observation]) -> Result<ObsSet, LogicError> {
    let mut out = ObsSet::default();
    for o in observations {
        match o {
            Observation::Ok(t) | Observation::Nok(t) => {
                let occ = graph.resolve(t).ok_or_else(|| LogicError::UnknownAtom(alloc::format!("{t:?}")))?;
                if matches!(o, Observation::Ok(_)) {
                    out.ok.insert(occ);
                } else {
                    out.nok.insert(occ);
                }
            }
            Observation::Normal(id) => {
                let c = graph.component_index(id).ok_or_else(|| LogicError::UnknownAtom(alloc::format!("{id:?}")))?;
                out.normal.insert(c);
            }
        }
    }
    Ok(out)
}

impl SystemDescription {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn occurrence_count(&self) -> usize {
        self.occurrences.len()
    }

    /// Number of propagation runs performed on this description so far.
    pub fn propagations(&self) -> u64 {
        self.propagations.load(Ordering::Relaxed)
    }

    pub fn reset_propagations(&self) {
        self.propagations.store(0, Ordering::Relaxed);
    }

    pub fn component_index(&self, id: &ComponentId) -> Option<usize> {
        self.components.iter().position(|c| &c.id == id)
    }

    /// All clauses, behaviors first and then one contradiction per occurrence.
    pub fn clauses(&self) -> Vec<HornClause> {
        let mut out: Vec<HornClause> = self
            .behaviors
            .iter()
            .map(|b| {
                let mut body = alloc::vec![Literal::NotAb(b.component)];
                body.extend(b.body.iter().map(|o| Literal::Ok(*o)));
                HornClause { body, head: Some(Literal::Ok(b.head)) }
            })
            .collect();
        for i in 0..self.occurrences.len() {
            let o = OccId(i as u32);
            out.push(HornClause { body: alloc::vec![Literal::Ok(o), Literal::Nok(o)], head: None });
        }
        out
    }

    pub fn validate(&self, obs: &ObsSet) -> Result<(), LogicError> {
        let n = self.occurrences.len();
        if let Some(o) = obs.ok.iter().chain(&obs.nok).find(|o| o.index() >= n) {
            return Err(LogicError::UnknownAtom(alloc::format!("occurrence {}", o.0)));
        }
        if let Some(c) = obs.normal.iter().find(|&&c| c >= self.components.len()) {
            return Err(LogicError::UnknownAtom(alloc::format!("component {c}")));
        }
        Ok(())
    }

    /// Runs unit propagation with the components for which `normal` holds.
    /// Returns the first occurrence derived ok while observed nok together
    /// with the derivation reasons.
    fn propagate(&self, obs: &ObsSet, normal: &dyn Fn(usize) -> bool) -> Option<(OccId, Vec<Option<usize>>)> {
        self.propagations.fetch_add(1, Ordering::Relaxed);
        let n = self.occurrences.len();
        let mut known = alloc::vec![false; n];
        let mut reason: Vec<Option<usize>> = alloc::vec![None; n];
        let mut missing: Vec<usize> = self.behaviors.iter().map(|b| b.body.len()).collect();
        let mut queue: Vec<OccId> = Vec::new();

        let fire = |b: usize, known: &mut Vec<bool>, reason: &mut Vec<Option<usize>>, queue: &mut Vec<OccId>| {
            let beh = &self.behaviors[b];
            if normal(beh.component) && !known[beh.head.index()] {
                known[beh.head.index()] = true;
                reason[beh.head.index()] = Some(b);
                queue.push(beh.head);
            }
        };
        for &o in &obs.ok {
            if !known[o.index()] {
                known[o.index()] = true;
                queue.push(o);
            }
        }
        for b in 0..self.behaviors.len() {
            if missing[b] == 0 {
                fire(b, &mut known, &mut reason, &mut queue);
            }
        }
        let mut head = 0;
        while head < queue.len() {
            let o = queue[head];
            head += 1;
            if obs.nok.contains(&o) {
                return Some((o, reason));
            }
            for &b in &self.watchers[o.index()] {
                missing[b] -= 1;
                if missing[b] == 0 {
                    fire(b, &mut known, &mut reason, &mut queue);
                }
            }
        }
        None
    }

    /// Components whose behavior clauses took part in deriving `o`.
    fn support(&self, o: OccId, reason: &[Option<usize>]) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut comps = BTreeSet::new();
        let mut stack = alloc::vec![o];
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            if let Some(b) = reason[x.index()] {
                let beh = &self.behaviors[b];
                comps.insert(beh.component);
                stack.extend(beh.body.iter().copied());
            }
        }
        comps
    }

    /// Decides `SD ∪ OBS ∪ {AB(C) | C ∈ abnormal} ∪ {¬AB(C) | C ∉ abnormal}`.
    /// A conflict never contains components observed normal, and is shrunk
    /// until removing any member makes it consistent.
    pub fn check_consistency(&self, obs: &ObsSet, abnormal: &BTreeSet<usize>) -> Result<Verdict, LogicError> {
        self.validate(obs)?;
        let normal = |c: usize| obs.normal.contains(&c) || !abnormal.contains(&c);
        let Some((o, reason)) = self.propagate(obs, &normal) else {
            return Ok(Verdict::Consistent);
        };
        let mut conflict: Vec<usize> = self.support(o, &reason).into_iter().filter(|c| !obs.normal.contains(c)).collect();
        let mut i = 0;
        while i < conflict.len() {
            let trial: Vec<usize> = conflict.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &c)| c).collect();
            let inside = |c: usize| obs.normal.contains(&c) || trial.binary_search(&c).is_ok();
            if self.propagate(obs, &inside).is_some() {
                conflict = trial;
            } else {
                i += 1;
            }
        }
        Ok(Verdict::Conflict(conflict))
    }

    /// Like [`Self::check_consistency`] without computing a conflict.
    /// Observations must already be validated.
    pub fn is_consistent(&self, obs: &ObsSet, abnormal: &BTreeSet<usize>) -> bool {
        let normal = |c: usize| obs.normal.contains(&c) || !abnormal.contains(&c);
        self.propagate(obs, &normal).is_none()
    }

    /// Whether `ok(o)` follows from `obs` with the components for which
    /// `normal` holds.
    pub fn entails_ok(&self, obs: &ObsSet, o: OccId, normal: &dyn Fn(usize) -> bool) -> bool {
        let mut probe = obs.clone();
        probe.nok = BTreeSet::from([o]);
        probe.ok.remove(&o);
        obs.ok.contains(&o) || self.propagate(&probe, normal).is_some()
    }

    pub fn literal(&self, l: Literal) -> String {
        match l {
            Literal::Ok(o) => alloc::format!("ok({})", self.occurrences[o.index()]),
            Literal::Nok(o) => alloc::format!("nok({})", self.occurrences[o.index()]),
            Literal::Ab(c) => alloc::format!("AB({})", self.components[c].label),
            Literal::NotAb(c) => alloc::format!("-AB({})", self.components[c].label),
        }
    }

    /// Text form of a clause, prefixed by the owning component for behaviors.
    pub fn clause_text(&self, c: &HornClause) -> String {
        let mut s = String::new();
        if let Some(Literal::NotAb(comp)) = c.body.first() {
            s.push_str(&self.components[*comp].label);
            s.push_str(": ");
        }
        for (i, l) in c.body.iter().enumerate() {
            if i > 0 {
                s.push_str(" & ");
            }
            s.push_str(&self.literal(*l));
        }
        s.push_str(" -> ");
        match c.head {
            Some(h) => s.push_str(&self.literal(h)),
            None => s.push_str("false"),
        }
        s
    }
}

impl fmt::Display for SystemDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.clauses() {
            writeln!(f, "{}", self.clause_text(&c))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::method_graph;
    use crate::lang::{check, parse};
    use crate::obs::Target;
    use alloc::string::ToString;

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

    fn fig2() -> (DependencyGraph, SystemDescription) {
        let p = check(parse("fig2", FIG2).unwrap()).unwrap();
        let g = method_graph(&p, "test").unwrap();
        let sd = compile_sd(&g);
        (g, sd)
    }

    fn fig2_obs(g: &DependencyGraph) -> ObsSet {
        let mut obs: Vec<Observation> = ["a", "b", "c", "d", "e"].iter().map(|v| Observation::Ok(Target::Input((*v).into()))).collect();
        obs.push(Observation::Ok(Target::Output("f".into())));
        obs.push(Observation::Nok(Target::Output("g".into())));
        resolve_observations(g, &obs).unwrap()
    }

    #[test]
    fn fig2_behavior_clauses() {
        let (_, sd) = fig2();
        let text = sd.to_string();
        let lines: Vec<&str> = text.lines().take(5).collect();
        assert_eq!(
            lines,
            [
                "C4: -AB(C4) & ok(a#0) & ok(c#0) -> ok(s1#1)",
                "C5: -AB(C5) & ok(b#0) & ok(d#0) -> ok(s2#1)",
                "C6: -AB(C6) & ok(c#0) & ok(e#0) -> ok(s3#1)",
                "C7: -AB(C7) & ok(s1#1) & ok(s2#1) -> ok(f#1)",
                "C8: -AB(C8) & ok(s2#1) & ok(s3#1) -> ok(g#1)",
            ]
        );
        assert_eq!(sd.clauses().len(), 5 + sd.occurrence_count());
        assert!(text.contains("ok(g#1) & nok(g#1) -> false"));
    }

    #[test]
    fn fig2_conflict() {
        let (g, sd) = fig2();
        let obs = fig2_obs(&g);
        let v = sd.check_consistency(&obs, &BTreeSet::new()).unwrap();
        let labels = |cs: &[usize]| cs.iter().map(|&c| sd.components[c].label.clone()).collect::<Vec<_>>();
        match v {
            Verdict::Conflict(c) => assert_eq!(labels(&c), ["C5", "C6", "C8"]),
            Verdict::Consistent => panic!("expected a conflict"),
        }
        let c8 = sd.components.iter().position(|c| c.label == "C8").unwrap();
        assert_eq!(sd.check_consistency(&obs, &BTreeSet::from([c8])).unwrap(), Verdict::Consistent);
        assert_eq!(sd.check_consistency(&ObsSet::default(), &BTreeSet::new()).unwrap(), Verdict::Consistent);
    }

    #[test]
    fn unknown_atoms_are_rejected() {
        let (_, sd) = fig2();
        let obs = ObsSet { nok: BTreeSet::from([OccId(99)]), ..Default::default() };
        assert!(matches!(sd.check_consistency(&obs, &BTreeSet::new()), Err(LogicError::UnknownAtom(_))));
    }

    #[test]
    fn empty_method_has_only_contradictions() {
        let p = check(parse("e", "void m(int a) { }").unwrap()).unwrap();
        let sd = compile_sd(&method_graph(&p, "m").unwrap());
        let cl = sd.clauses();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].head, None);
    }

    #[test]
    fn loop_composite_shares_one_guard() {
        let p = check(parse("w", "void m(int n) {\n int s = 0;\n int i = 0;\n while (i < n) { s = s + i; i = i + 1; }\n}").unwrap()).unwrap();
        let g = method_graph(&p, "m").unwrap();
        let sd = compile_sd(&g);
        let total: usize = g.components.iter().map(|c| c.fds.len()).sum();
        assert_eq!(sd.behaviors.len(), total);
        let w = sd.components.iter().position(|c| c.label == "C4").unwrap();
        assert_eq!(sd.behaviors.iter().filter(|b| b.component == w).count(), 2);
    }

    #[test]
    fn forced_normal_components_leave_conflicts() {
        let (g, sd) = fig2();
        let mut obs = fig2_obs(&g);
        let c5 = sd.components.iter().position(|c| c.label == "C5").unwrap();
        obs.normal.insert(c5);
        match sd.check_consistency(&obs, &BTreeSet::new()).unwrap() {
            Verdict::Conflict(c) => assert!(!c.contains(&c5)),
            Verdict::Consistent => panic!(),
        }
    }
}
