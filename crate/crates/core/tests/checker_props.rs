//! Checker and learner properties: failed verdicts replay, the loop never
//! claims a fixed point for an adversarial thrower, and traces round-trip
//! through the wire format.

use irt_core::checker::{sequent_valid, CheckBounds, Checker, FailureWitness, Outcome, SuppliedRealizers};
use irt_core::corpus;
use irt_core::extract::{extract, DecoratedSequent};
use irt_core::format::{trace_from_sexp, trace_to_sexp};
use irt_core::kernel::{subst, ConstKind, Term, Type, DEFAULT_FUEL};
use irt_core::learner::{learn, StepOutcome, Terminal};
use irt_core::logic::{subst_formula, ArithTerm, Formula};
use irt_core::monads::ir_monad;
use irt_core::runtime::{state_leq, KnowledgeState, WitnessKey};
use irt_core::sexp::parse;
use rand::SeedableRng;
use irt_core::sig::Signature;

fn sig() -> Signature {
    corpus::signature()
}

/// A failing sequent check yields an instantiation that reproduces the
/// failure when replayed directly against the monadic relation.
#[test]
fn sequent_failures_replay() {
    let s = sig();
    let m = ir_monad();
    // A wrong realizer for `exists y. LT(2,y)`: witness 1 does not satisfy
    // the matrix.
    let concl = Formula::exists("y", Formula::atom("LT", vec![ArithTerm::num(2), ArithTerm::var("y")]));
    let bad = m.unit_app(
        &Type::prod(Type::Nat, Type::Unit),
        Term::pair(Type::Nat, Type::Unit, Term::numeral(1), Term::unit_val()),
    );
    let ds = DecoratedSequent { context: vec![], realizer: bad, conclusion: concl };
    let st = KnowledgeState::empty();
    let bounds = CheckBounds::default();
    let v = sequent_valid(&s, &ds, &st, bounds, &SuppliedRealizers::new()).unwrap();
    let witness = match v.outcome {
        Outcome::Fail(w) => w,
        other => panic!("expected failure, got {other:?}"),
    };
    let FailureWitness::Instantiation { omega, sigma, .. } = *witness else {
        panic!("sequent failures carry instantiations");
    };
    // Replay: apply the recorded substitutions and re-run the check.
    let mut realizer = ds.realizer.clone();
    let mut concl = ds.conclusion.clone();
    for (x, n) in &omega {
        realizer = subst(&realizer, x, &Term::numeral(*n));
        concl = subst_formula(&concl, x, &ArithTerm::num(*n));
    }
    for (label, t) in &sigma {
        realizer = subst(&realizer, label, t);
    }
    let checker = Checker::new(&s, bounds);
    let replay = checker.monadic_realizes(&realizer, &concl, &st).unwrap();
    assert!(replay.is_fail(), "replay did not reproduce the failure");
}

/// An adversarial realizer that throws a fresh sound exception at every
/// state it has not yet filled: the loop keeps extending the state and the
/// budget terminal fires instead of a false fixed point.
#[test]
fn adversarial_thrower_exhausts_the_budget() {
    let s = sig();
    // Chain queries for LT with parameters 0..8; on the first miss, throw
    // the sound claim (LT,(k)) -> 0 (LT(k,0) is always false); if every key
    // is present, return a regular unit.
    let sym = s.pred("LT").unwrap().sym.clone();
    let out_ty = Type::sum(Type::Unit, Type::ex());
    let mut body = Term::inl(Type::Unit, Type::ex(), Term::unit_val());
    for k in (0..8u64).rev() {
        let claim = irt_core::runtime::ExceptionValue::singleton(
            &s,
            WitnessKey::new("LT", vec![k]),
            0,
        )
        .unwrap();
        let scrut = Term::apps(
            Term::app(Term::Const(ConstKind::Query(sym.clone())), Term::var("s", Type::state())),
            [Term::numeral(k)],
        );
        body = Term::case(
            Type::Unit,
            Type::Nat,
            out_ty.clone(),
            scrut,
            Term::lam(
                "_",
                Type::Unit,
                Term::inr(Type::Unit, Type::ex(), Term::ExLit(claim)),
            ),
            Term::lam("w", Type::Nat, body),
        );
    }
    let thrower = Term::lam("s", Type::state(), body);

    let trace = learn(&s, &thrower, &KnowledgeState::empty(), 5, DEFAULT_FUEL).unwrap();
    assert_eq!(trace.terminal, Terminal::BudgetExhausted);
    assert_eq!(trace.steps.len(), 5);
    // Strict progress on every exceptional step.
    for step in &trace.steps {
        assert!(matches!(step.outcome, StepOutcome::Exceptional(_)));
        assert!(state_leq(&step.before, &step.after));
        assert!(step.after.len() == step.before.len() + 1);
    }

    // With a budget past the family size the loop reaches the fixed point.
    let full = learn(&s, &thrower, &KnowledgeState::empty(), 20, DEFAULT_FUEL).unwrap();
    assert_eq!(full.terminal, Terminal::FixedPoint);
    assert_eq!(full.steps.len(), 9);
}

#[test]
fn em_loop_trace_roundtrips_through_the_wire_format() {
    let s = sig();
    let m = ir_monad();
    let (_, d) = corpus::derivations().into_iter().find(|(n, _)| *n == "12-em-loop").unwrap();
    let ds = extract(&s, &m, &d).unwrap();
    let trace = learn(&s, &ds.realizer, &KnowledgeState::empty(), 100, DEFAULT_FUEL).unwrap();
    let printed = trace_to_sexp(3, &trace).to_string();
    let (seed, parsed) = trace_from_sexp(&s, &parse(&printed).unwrap()).unwrap();
    assert_eq!(seed, 3);
    assert_eq!(parsed, trace);
    assert_eq!(trace_to_sexp(3, &parsed).to_string(), printed);
}

/// Fixed-point correctness: whenever the loop terminates with a regular
/// value, that value inner-realizes the conclusion at the final state. Run
/// over every closed corpus derivation (the induction one exercises the
/// guarded recursor inside the checker's universal clause).
#[test]
fn learn_fixed_points_are_checker_verified() {
    let s = sig();
    let m = ir_monad();
    let bounds = CheckBounds::default();
    let checker = Checker::new(&s, bounds);
    let mut ran = 0usize;
    for (name, d) in corpus::derivations() {
        if !d.ctx.is_empty() {
            continue;
        }
        let ds = extract(&s, &m, &d).unwrap();
        let trace = learn(&s, &ds.realizer, &KnowledgeState::empty(), 100, DEFAULT_FUEL)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(trace.terminal, Terminal::FixedPoint, "{name}");
        let result = trace.result().unwrap().clone();
        let v = checker.inner_realizes(&result, &ds.conclusion, &trace.final_state()).unwrap();
        assert!(v.is_pass(), "{name}: {:?}", v.outcome);
        ran += 1;
    }
    assert!(ran >= 4, "expected several closed corpus derivations, got {ran}");
}

/// The excluded-middle realizer for a parameterized predicate: the instance
/// carries an open argument term, which sequent validity ranges over
/// numerals, and the quantifier binder in the realizer steers clear of the
/// argument variables.
#[test]
fn em_realizer_with_parameters_is_valid() {
    let s = sig();
    let em = irt_core::extract::em_realizer(&s, "LT", &[ArithTerm::var("y")]).unwrap();
    // The realizer's only free variable is the argument; the internal
    // quantifier binder was freshened away from it.
    assert_eq!(em.free_vars().into_iter().collect::<Vec<_>>(), vec!["y".to_string()]);
    let ds = DecoratedSequent {
        context: vec![],
        realizer: em,
        conclusion: Formula::em_instance("LT", &[ArithTerm::var("y")], "w"),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xE41);
    for _ in 0..6 {
        let st = irt_core::runtime::sample_state(&s, &mut rng, 2, 8);
        let v = sequent_valid(&s, &ds, &st, CheckBounds::default(), &SuppliedRealizers::new())
            .unwrap();
        assert!(v.is_pass(), "failed at {st:?}: {:?}", v.outcome);
    }
}

/// A second learning scenario, for a parameterized predicate: the excluded
/// middle for `LT` at parameter 3, with the universal disjunct used at
/// instance 0. `LT(3,0)` fails, so the first pass throws the claim
/// `(LT,(3)) -> 0` and the second pass takes the existential branch with the
/// stored witness.
#[test]
fn parameterized_em_scenario_learns_the_counterexample() {
    use irt_core::logic::{Derivation, Rule};
    let s = sig();
    let m = ir_monad();
    let lt = |a: ArithTerm, b: ArithTerm| Formula::atom("LT", vec![a, b]);
    let n = ArithTerm::num;
    let em = Formula::em_instance("LT", &[n(3)], "y");
    let universal = Formula::forall("y", lt(n(3), ArithTerm::var("y")));
    let existential = Formula::exists("y", Formula::not(lt(n(3), ArithTerm::var("y"))));
    let concl = Formula::or(lt(n(3), n(0)), existential.clone());

    let em_node = Derivation::new(Rule::Em { pred: "LT".into(), args: vec![n(3)] }, vec![], em, vec![]);
    let lctx = vec![("u".to_string(), universal.clone())];
    let inst = Derivation::new(
        Rule::ForallE { term: n(0) },
        lctx.clone(),
        lt(n(3), n(0)),
        vec![Derivation::new(Rule::Id { label: "u".into() }, lctx.clone(), universal, vec![])],
    );
    let left = Derivation::new(Rule::OrIL, lctx, concl.clone(), vec![inst]);
    let rctx = vec![("v".to_string(), existential.clone())];
    let right = Derivation::new(
        Rule::OrIR,
        rctx.clone(),
        concl.clone(),
        vec![Derivation::new(Rule::Id { label: "v".into() }, rctx, existential, vec![])],
    );
    let d = Derivation::new(Rule::OrE, vec![], concl, vec![em_node, left, right]);

    let ds = extract(&s, &m, &d).unwrap();
    let trace = learn(&s, &ds.realizer, &KnowledgeState::empty(), 10, DEFAULT_FUEL).unwrap();
    assert_eq!(trace.terminal, Terminal::FixedPoint);
    assert_eq!(trace.steps.len(), 2);
    match &trace.steps[0].outcome {
        StepOutcome::Exceptional(e) => {
            assert_eq!(
                e.claims().collect::<Vec<_>>(),
                vec![(&WitnessKey::new("LT", vec![3]), 0)]
            );
        }
        other => panic!("expected a learned claim, got {other:?}"),
    }
    let result = trace.result().unwrap().clone();
    let checker = Checker::new(&s, CheckBounds::default());
    let v = checker.inner_realizes(&result, &ds.conclusion, &trace.final_state()).unwrap();
    assert!(v.is_pass(), "{:?}", v.outcome);
    let report = irt_core::learner::extract_witness(
        &s,
        &result,
        &ds.conclusion,
        &trace.final_state(),
        CheckBounds::default(),
    )
    .unwrap();
    match report {
        irt_core::learner::WitnessReport::Branch { left: false, inner } => match *inner {
            irt_core::learner::WitnessReport::Witness { value: 0, .. } => {}
            other => panic!("expected witness 0, got {other:?}"),
        },
        other => panic!("expected the existential branch, got {other:?}"),
    }
}

/// Bound exhaustion is reported as inconclusive, never as a silent pass.
#[test]
fn sequent_with_too_many_free_variables_is_inconclusive() {
    let s = sig();
    let m = ir_monad();
    let mut concl = Formula::atom("B4", vec![ArithTerm::var("x0")]);
    for i in 1..6 {
        concl = Formula::and(concl, Formula::atom("B4", vec![ArithTerm::var(format!("x{i}"))]));
    }
    let realizer = m.unit_app(
        &irt_core::extract::inner_type(&m, &concl),
        irt_core::kernel::dummy(&irt_core::extract::inner_type(&m, &concl)).unwrap(),
    );
    let ds = DecoratedSequent { context: vec![], realizer, conclusion: concl };
    let v = sequent_valid(&s, &ds, &KnowledgeState::empty(), CheckBounds::default(), &SuppliedRealizers::new())
        .unwrap();
    assert!(matches!(v.outcome, Outcome::Inconclusive(_)), "{:?}", v.outcome);
}

/// The supplied-realizer hook verifies and uses corpus realizers.
#[test]
fn supplied_realizers_participate_in_sequent_checks() {
    let s = sig();
    let concl = Formula::atom("LT", vec![ArithTerm::num(0), ArithTerm::num(1)]);
    let m = ir_monad();
    let ds = DecoratedSequent {
        context: vec![("a".into(), concl.clone())],
        realizer: Term::app(
            irt_core::monads::raise_n(&m, &[], &Type::Unit),
            Term::var("a", Type::Unit),
        ),
        conclusion: concl,
    };
    let mut supplied = SuppliedRealizers::new();
    supplied.insert("a".into(), vec![Term::unit_val()]);
    let v = sequent_valid(&s, &ds, &KnowledgeState::empty(), CheckBounds::default(), &supplied)
        .unwrap();
    assert!(v.is_pass());
}
