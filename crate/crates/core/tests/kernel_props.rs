//! Kernel-level properties: determinism of the step function, the
//! confluence smoke test over a generated regression corpus, and
//! proptest-driven laws for the state lattice and substitution helpers.

use irt_core::corpus;
use irt_core::gen::{random_typed_term, TypedTermConfig};
use irt_core::kernel::{
    alpha_eq, fresh_name, normalize, redex_positions, reduce_at, step, Term, DEFAULT_FUEL,
};
use irt_core::runtime::{
    apply_exception, merge_exceptions, properly_extends, state_leq, ExceptionValue,
    KnowledgeState, WitnessKey,
};
use irt_core::sig::{MergeStrategy, Signature};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sig() -> Signature {
    corpus::signature()
}

#[test]
fn step_is_deterministic() {
    let s = sig();
    let cfg = TypedTermConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let (t, _) = random_typed_term(&s, &cfg, &mut rng);
        assert_eq!(step(&s, &t).unwrap(), step(&s, &t).unwrap());
    }
}

#[test]
fn confluence_smoke_over_regression_corpus() {
    let s = sig();
    let cfg = TypedTermConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut alternates = 0usize;
    for _ in 0..400 {
        let (t, _) = random_typed_term(&s, &cfg, &mut rng);
        let nf = normalize(&s, &t, DEFAULT_FUEL).unwrap();
        for p in redex_positions(&s, &t).into_iter().take(6) {
            let alt = reduce_at(&s, &t, &p).unwrap();
            let nf2 = normalize(&s, &alt, DEFAULT_FUEL).unwrap();
            assert!(
                alpha_eq(&nf, &nf2),
                "confluence violated: reducing at {p:?} first changed the normal form of {t:?}"
            );
            alternates += 1;
        }
    }
    assert!(alternates > 400, "too few non-leftmost reductions exercised: {alternates}");
}

fn key_strategy() -> impl Strategy<Value = WitnessKey> {
    // Predicate B4 has one parameter slot less than its arity.
    (0u64..3).prop_map(|p| WitnessKey::new("LT", vec![p]))
}

/// Sound witness for an `LT` key: `LT(p, w)` must be false, i.e. `w <= p`.
fn entry_strategy() -> impl Strategy<Value = (WitnessKey, u64)> {
    key_strategy().prop_flat_map(|k| {
        let p = k.params[0];
        (Just(k), 0..=p)
    })
}

fn state_strategy() -> impl Strategy<Value = KnowledgeState> {
    proptest::collection::vec(entry_strategy(), 0..5)
        .prop_map(|entries| KnowledgeState::new(&sig(), entries).expect("sound by construction"))
}

fn exception_strategy() -> impl Strategy<Value = ExceptionValue> {
    proptest::collection::vec(entry_strategy(), 0..5)
        .prop_map(|claims| ExceptionValue::new(&sig(), claims).expect("sound by construction"))
}

proptest! {
    #[test]
    fn state_leq_is_a_partial_order(a in state_strategy(), b in state_strategy(), c in state_strategy()) {
        prop_assert!(state_leq(&a, &a));
        if state_leq(&a, &b) && state_leq(&b, &a) {
            prop_assert_eq!(a.clone(), b.clone());
        }
        if state_leq(&a, &b) && state_leq(&b, &c) {
            prop_assert!(state_leq(&a, &c));
        }
    }

    #[test]
    fn apply_exception_is_monotone(e in exception_strategy(), s in state_strategy()) {
        if let Some(out) = apply_exception(&e, &s) {
            prop_assert!(state_leq(&s, &out));
            // Strictness holds exactly when some claim key is absent.
            let has_fresh = e.claims().any(|(k, _)| s.get(k).is_none());
            prop_assert_eq!(out.len() > s.len(), has_fresh);
            prop_assert_eq!(properly_extends(&e, &s), has_fresh);
        }
    }

    #[test]
    fn merge_is_idempotent_and_left_biased(e1 in exception_strategy(), e2 in exception_strategy()) {
        let m = merge_exceptions(&e1, &e2, MergeStrategy::Leftmost);
        prop_assert_eq!(merge_exceptions(&e1, &e1, MergeStrategy::Leftmost), e1.clone());
        for (k, w) in e1.claims() {
            prop_assert_eq!(m.claims().find(|(k2, _)| k2 == &k).map(|(_, w2)| w2), Some(w));
        }
        for (k, w) in e2.claims() {
            if e1.claims().all(|(k1, _)| k1 != k) {
                prop_assert_eq!(m.claims().find(|(k2, _)| k2 == &k).map(|(_, w2)| w2), Some(w));
            }
        }
    }

    #[test]
    fn min_witness_merge_takes_minima(e1 in exception_strategy(), e2 in exception_strategy()) {
        let m = merge_exceptions(&e1, &e2, MergeStrategy::MinWitness);
        for (k, w) in m.claims() {
            let w1 = e1.claims().find(|(k1, _)| k1 == &k).map(|(_, x)| x);
            let w2 = e2.claims().find(|(k2, _)| k2 == &k).map(|(_, x)| x);
            let expected = match (w1, w2) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!("claim came from somewhere"),
            };
            prop_assert_eq!(w, expected);
        }
    }

    #[test]
    fn fresh_names_avoid_the_avoid_set(base in "[a-z]{1,4}", taken in proptest::collection::btree_set("[a-z_0-9]{1,4}", 0..8)) {
        let name = fresh_name(&base, &taken);
        prop_assert!(!taken.contains(&name));
    }

    #[test]
    fn numerals_roundtrip(n in 0u64..200) {
        prop_assert_eq!(Term::numeral(n).as_numeral(), Some(n));
    }
}
