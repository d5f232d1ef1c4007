use depdiag_core::lang::{parse, pretty_print};
use depdiag_testkit::corpus::subjects;
use depdiag_testkit::gen::{program, GenConfig};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn roundtrip(src: &str) {
    let a = parse("a", src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let printed = pretty_print(&a);
    let b = parse("b", &printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert_eq!(a.normalized(), b.normalized(), "\n{printed}");
    assert_eq!(pretty_print(&b), printed);
}

#[test]
fn corpus_roundtrips() {
    for s in subjects() {
        roundtrip(s.source);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_programs_roundtrip(seed in any::<u64>(), statements in 1usize..12, depth in 0usize..3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let cfg = GenConfig { statements, depth, ..GenConfig::small() };
        roundtrip(&program(&mut rng, cfg).source);
    }
}
