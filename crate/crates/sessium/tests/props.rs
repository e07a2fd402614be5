//! Randomised invariants of the type layer: printing, unfolding, the
//! refinement preorders, and the transition-system construction.

use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sessium::harness::{corpus_process, random_type, CORPUS};
use sessium::parser::{parse_process, parse_type};
use sessium::process::{canon, pretty_proc};
use sessium::relations::{sem_eq, strong_subsession, subsession, viability};
use sessium::semantics::{build_graph, internal_graph, internal_reachable, is_complete};
use sessium::{Ctx, TypeId, Universe};

fn ctx() -> Ctx {
    Ctx::new(Universe::default_universe())
}

fn arb(c: &Ctx, seed: u64) -> TypeId {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_type(c, &mut rng, 8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Generated terms are well formed and carry no channel payloads.
    #[test]
    fn generated_terms_are_well_formed(seed in any::<u64>()) {
        let c = ctx();
        let t = arb(&c, seed);
        let violations = c.validate(t);
        prop_assert!(violations.is_empty(), "{}: {violations:?}", c.pretty(t));
        prop_assert_eq!(c.weight(t), 0, "{}", c.pretty(t));
    }

    /// Printing a term and parsing it back yields the same interned term.
    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let c = ctx();
        let t = arb(&c, seed);
        let shown = c.pretty(t);
        let back = parse_type(&c, &shown);
        prop_assert_eq!(back, Ok(t), "printed as {}", shown);
    }

    /// Unfolding a recursion does not change the behaviour.
    #[test]
    fn unfolding_is_invisible(seed in any::<u64>()) {
        let c = ctx();
        let t = arb(&c, seed);
        prop_assert!(sem_eq(&c, t, c.unfold(t)), "{}", c.pretty(t));
    }

    /// Both preorders are reflexive, and decide so without searching.
    #[test]
    fn refinement_is_reflexive(seed in any::<u64>()) {
        let c = ctx();
        let t = arb(&c, seed);
        prop_assert!(subsession(&c, t, t, c.default_bound).is_yes(), "{}", c.pretty(t));
        prop_assert!(strong_subsession(&c, t, t, c.default_bound).is_yes(), "{}", c.pretty(t));
    }

    /// Building the same state graph twice gives identical results.
    #[test]
    fn graph_construction_is_deterministic(seed in any::<u64>()) {
        let c = ctx();
        let t = arb(&c, seed);
        let once = build_graph(&c, t, true);
        let again = build_graph(&c, t, true);
        match (once, again) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.nodes, b.nodes);
                prop_assert_eq!(a.internal, b.internal);
                prop_assert_eq!(a.visible, b.visible);
                prop_assert_eq!(a.check, b.check);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "one build failed: {a:?} vs {b:?}"),
        }
    }

    /// Completion is closed under internal reachability: from a complete
    /// term, every internally reachable state is complete again.
    #[test]
    fn completion_is_closed_under_internal_steps(seed in any::<u64>()) {
        let c = ctx();
        let t = arb(&c, seed);
        if is_complete(&c, t) == Ok(true) {
            let g = internal_graph(&c, t).unwrap();
            for s in internal_reachable(&g) {
                prop_assert_eq!(
                    is_complete(&c, s),
                    Ok(true),
                    "state {} of {}",
                    c.pretty(s),
                    c.pretty(t)
                );
            }
        }
    }

    /// A complete term is viable (the empty-session tester completes it).
    #[test]
    fn complete_terms_are_viable(seed in any::<u64>()) {
        let c = ctx();
        let t = arb(&c, seed);
        if is_complete(&c, t) == Ok(true) {
            prop_assert!(viability(&c, t, c.default_bound).is_yes(), "{}", c.pretty(t));
        }
    }
}

/// The process printer and parser agree on every built-in example.
#[test]
fn corpus_processes_round_trip() {
    let c = ctx();
    for (name, _) in CORPUS {
        let p = corpus_process(&c, name).unwrap();
        let shown = pretty_proc(&c, &p);
        let back = parse_process(&c, &shown)
            .unwrap_or_else(|e| panic!("{name} printed as unparsable `{shown}`: {e}"));
        assert_eq!(canon(&c, &back), canon(&c, &p), "{name} changed under printing");
    }
}
