use std::collections::BTreeSet;

use depdiag_core::slicer::{backward_slice, Position, SliceCriterion};
use depdiag_testkit::checked;
use depdiag_testkit::gen::{program, GenConfig, Generated};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Assignments of a generated straight-line program as (line, target, reads),
/// read off the source text.
fn assignments(g: &Generated) -> Vec<(u32, String, BTreeSet<String>)> {
    let mut out = Vec::new();
    for (i, line) in g.source.lines().enumerate() {
        let Some((lhs, rhs)) = line.split_once(" = ") else { continue };
        let reads = rhs
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| w.starts_with('p') || w.starts_with('v'))
            .map(str::to_string)
            .collect();
        out.push((i as u32 + 1, lhs.trim().to_string(), reads));
    }
    out
}

/// Walks backward from `upto`, keeping statements that write a live variable.
fn closure(asg: &[(u32, String, BTreeSet<String>)], vars: &BTreeSet<String>, upto: u32) -> BTreeSet<u32> {
    let mut live = vars.clone();
    let mut lines = BTreeSet::new();
    for (line, target, reads) in asg.iter().rev().filter(|a| a.0 <= upto) {
        if live.remove(target) {
            lines.insert(*line);
            live.extend(reads.iter().cloned());
        }
    }
    lines
}

fn var_set(mask: u32, locals: usize) -> BTreeSet<String> {
    (0..locals).filter(|i| mask & (1 << i) != 0).map(|i| format!("v{i}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn straight_line_slices_are_transitive_closures(seed in any::<u64>(), n in 1usize..25, mask in 1u32..256, cut in 0u32..30) {
        let mut rng = StdRng::seed_from_u64(seed);
        let g = program(&mut rng, GenConfig::straight_line(n));
        let p = checked("gen", &g.source);
        let asg = assignments(&g);
        let vars = var_set(mask, 8);
        let end = backward_slice(&p, &g.method, &SliceCriterion::new(vars.clone(), Position::End)).unwrap();
        prop_assert_eq!(&end, &closure(&asg, &vars, u32::MAX));
        let at = 2 + cut.min(n as u32);
        let mid = backward_slice(&p, &g.method, &SliceCriterion::new(vars.clone(), Position::Line(at))).unwrap();
        prop_assert_eq!(mid, closure(&asg, &vars, at));
    }

    #[test]
    fn slices_grow_with_the_criterion(seed in any::<u64>(), a in 1u32..16, b in 0u32..16, at in 0u32..30) {
        let mut rng = StdRng::seed_from_u64(seed);
        let g = program(&mut rng, GenConfig::small());
        let p = checked("gen", &g.source);
        let lines = g.source.lines().count() as u32;
        let position = if at == 0 { Position::End } else { Position::Line(1 + at % lines) };
        let small = backward_slice(&p, &g.method, &SliceCriterion::new(var_set(a, 4), position)).unwrap();
        let big = backward_slice(&p, &g.method, &SliceCriterion::new(var_set(a | b, 4), position)).unwrap();
        prop_assert!(small.is_subset(&big), "{:?} {:?}\n{}", small, big, g.source);
    }
}
