//! The bundled derivation corpus: a signature with interpreted predicates
//! and atomic rules, twelve derivations covering every decorated rule, and a
//! catalog of deliberately broken derivations for negative tests.
//!
//! Derivation 12 is the end-to-end learning scenario: the predicate `B4` has
//! a universal side true exactly for arguments up to 4, and the derivation
//! uses the universal disjunct at instance 5, so learning from the empty
//! state throws once (discovering witness 5) and then settles on the
//! existential disjunct.

use crate::logic::{ArithTerm, Context, Derivation, Formula, Rule};
use crate::sig::{AtomicRule, BuiltinPred, Interp, RuleAtom, Signature};

/// Predicates: `LT`/`LE` (strict and non-strict order), `TT` (always-true
/// universal side), `FF` (always-false universal side), `B4` (true up to 4).
/// Rules: `lt-le` (from `LT(x,y)` conclude `LE(x,y)`) and the axiom `tt-ax`.
pub fn signature() -> Signature {
    let mut s = Signature::new();
    s.declare_pred("LT", 2, Interp::Builtin(BuiltinPred::Lt)).expect("fresh");
    s.declare_pred("LE", 2, Interp::Builtin(BuiltinPred::Le)).expect("fresh");
    s.declare_pred("TT", 1, Interp::Builtin(BuiltinPred::True)).expect("fresh");
    s.declare_pred("FF", 1, Interp::Builtin(BuiltinPred::False)).expect("fresh");
    let rows = (0..=4u64).map(|y| (vec![y], true)).collect();
    s.declare_pred("B4", 1, Interp::Table { default: false, rows }).expect("fresh");
    s.declare_rule(AtomicRule {
        name: "lt-le".into(),
        premises: vec![RuleAtom::Pred("LT".into())],
        conclusion: RuleAtom::Pred("LE".into()),
    })
    .expect("sound");
    s.declare_rule(AtomicRule {
        name: "tt-ax".into(),
        premises: vec![],
        conclusion: RuleAtom::Pred("TT".into()),
    })
    .expect("sound");
    s
}

fn lt(a: ArithTerm, b: ArithTerm) -> Formula {
    Formula::atom("LT", vec![a, b])
}

fn le(a: ArithTerm, b: ArithTerm) -> Formula {
    Formula::atom("LE", vec![a, b])
}

fn tt(a: ArithTerm) -> Formula {
    Formula::atom("TT", vec![a])
}

fn n(v: u64) -> ArithTerm {
    ArithTerm::num(v)
}

fn v(name: &str) -> ArithTerm {
    ArithTerm::var(name)
}

fn id(ctx: &Context, label: &str) -> Derivation {
    let f = ctx
        .iter()
        .find(|(l, _)| l == label)
        .unwrap_or_else(|| panic!("label {label} must be in the context"))
        .1
        .clone();
    Derivation::new(Rule::Id { label: label.into() }, ctx.clone(), f, vec![])
}

fn d01_id() -> Derivation {
    let ctx: Context = vec![("a".into(), lt(n(0), n(1)))];
    id(&ctx, "a")
}

fn d02_atm() -> Derivation {
    let ctx: Context = vec![("a".into(), lt(n(0), n(1)))];
    Derivation::new(
        Rule::Atm { rule: "lt-le".into(), args: vec![n(0), n(1)] },
        ctx.clone(),
        le(n(0), n(1)),
        vec![id(&ctx, "a")],
    )
}

fn d03_and() -> Derivation {
    let conj = Formula::and(lt(n(0), n(1)), le(n(0), n(2)));
    let ctx: Context = vec![("a".into(), conj)];
    let right = Derivation::new(Rule::AndER, ctx.clone(), le(n(0), n(2)), vec![id(&ctx, "a")]);
    let left = Derivation::new(Rule::AndEL, ctx.clone(), lt(n(0), n(1)), vec![id(&ctx, "a")]);
    Derivation::new(
        Rule::AndI,
        ctx,
        Formula::and(le(n(0), n(2)), lt(n(0), n(1))),
        vec![right, left],
    )
}

fn d04_or_intro() -> Derivation {
    let a = lt(n(0), n(1));
    let ctx: Context = vec![("a".into(), a.clone())];
    let left_or = Formula::or(a.clone(), Formula::False);
    let right_or = Formula::or(Formula::False, a.clone());
    let l = Derivation::new(Rule::OrIL, ctx.clone(), left_or.clone(), vec![id(&ctx, "a")]);
    let r = Derivation::new(Rule::OrIR, ctx.clone(), right_or.clone(), vec![id(&ctx, "a")]);
    Derivation::new(Rule::AndI, ctx, Formula::and(left_or, right_or), vec![l, r])
}

fn d05_or_elim() -> Derivation {
    let a = lt(n(0), n(1));
    let b = le(n(0), n(1));
    let ctx: Context = vec![("a".into(), Formula::or(a.clone(), b.clone()))];
    let mut lctx = ctx.clone();
    lctx.push(("b".into(), a));
    let left = Derivation::new(
        Rule::Atm { rule: "lt-le".into(), args: vec![n(0), n(1)] },
        lctx.clone(),
        b.clone(),
        vec![id(&lctx, "b")],
    );
    let mut rctx = ctx.clone();
    rctx.push(("c".into(), b.clone()));
    let right = id(&rctx, "c");
    Derivation::new(Rule::OrE, ctx.clone(), b, vec![id(&ctx, "a"), left, right])
}

fn d06_imp_intro() -> Derivation {
    let a = lt(n(0), n(1));
    let inner: Context = vec![("h".into(), a.clone())];
    Derivation::new(
        Rule::ImpI,
        vec![],
        Formula::implies(a.clone(), a),
        vec![id(&inner, "h")],
    )
}

fn d07_imp_elim() -> Derivation {
    let a = lt(n(0), n(1));
    let b = le(n(0), n(1));
    let ctx: Context = vec![
        ("f".into(), Formula::implies(a.clone(), b.clone())),
        ("a".into(), a),
    ];
    Derivation::new(Rule::ImpE, ctx.clone(), b, vec![id(&ctx, "f"), id(&ctx, "a")])
}

fn d08_forall() -> Derivation {
    let body = tt(v("x"));
    let axiom = Derivation::new(
        Rule::Atm { rule: "tt-ax".into(), args: vec![v("x")] },
        vec![],
        body.clone(),
        vec![],
    );
    let all = Derivation::new(Rule::ForallI, vec![], Formula::forall("x", body), vec![axiom]);
    Derivation::new(Rule::ForallE { term: n(2) }, vec![], tt(n(2)), vec![all])
}

fn d09_exists_intro() -> Derivation {
    let ctx: Context = vec![("a".into(), lt(n(2), n(3)))];
    Derivation::new(
        Rule::ExistsI { term: n(3) },
        ctx.clone(),
        Formula::exists("y", lt(n(2), v("y"))),
        vec![id(&ctx, "a")],
    )
}

fn d10_exists_elim() -> Derivation {
    let major_f = Formula::exists("y", lt(n(2), v("y")));
    let concl = Formula::exists("w", le(n(2), v("w")));
    let ctx: Context = vec![("e".into(), major_f)];
    let mut inner = ctx.clone();
    inner.push(("h".into(), lt(n(2), v("u"))));
    let step = Derivation::new(
        Rule::Atm { rule: "lt-le".into(), args: vec![n(2), v("u")] },
        inner.clone(),
        le(n(2), v("u")),
        vec![id(&inner, "h")],
    );
    let witness = Derivation::new(
        Rule::ExistsI { term: v("u") },
        inner,
        concl.clone(),
        vec![step],
    );
    Derivation::new(Rule::ExistsE { eigen: "u".into() }, ctx.clone(), concl, vec![id(&ctx, "e"), witness])
}

fn d11_ind() -> Derivation {
    let hyp = Formula::forall(
        "z",
        Formula::implies(lt(v("z"), v("y")), tt(v("z"))),
    );
    let inner: Context = vec![("ih".into(), hyp)];
    let premise = Derivation::new(
        Rule::Atm { rule: "tt-ax".into(), args: vec![v("y")] },
        inner,
        tt(v("y")),
        vec![],
    );
    Derivation::new(
        Rule::Ind { eigen: "y".into() },
        vec![],
        Formula::forall("x", tt(v("x"))),
        vec![premise],
    )
}

/// The learning scenario: from `EM(B4)` conclude `B4(5) or exists y. not
/// B4(y)` by cases, using the universal disjunct at the refutable instance 5.
fn d12_em_loop() -> Derivation {
    let b4 = |t: ArithTerm| Formula::atom("B4", vec![t]);
    let em = Formula::em_instance("B4", &[], "y");
    let universal = Formula::forall("y", b4(v("y")));
    let existential = Formula::exists("y", Formula::not(b4(v("y"))));
    let concl = Formula::or(b4(n(5)), existential.clone());

    let em_node = Derivation::new(Rule::Em { pred: "B4".into(), args: vec![] }, vec![], em, vec![]);

    let lctx: Context = vec![("u".into(), universal)];
    let inst = Derivation::new(
        Rule::ForallE { term: n(5) },
        lctx.clone(),
        b4(n(5)),
        vec![id(&lctx, "u")],
    );
    let left = Derivation::new(Rule::OrIL, lctx, concl.clone(), vec![inst]);

    let rctx: Context = vec![("v".into(), existential)];
    let right = Derivation::new(Rule::OrIR, rctx.clone(), concl.clone(), vec![id(&rctx, "v")]);

    Derivation::new(Rule::OrE, vec![], concl, vec![em_node, left, right])
}

/// The twelve corpus derivations, in order. The first ten are the HA
/// sub-corpus (no induction, no excluded middle).
pub fn derivations() -> Vec<(&'static str, Derivation)> {
    vec![
        ("01-id", d01_id()),
        ("02-atm", d02_atm()),
        ("03-and", d03_and()),
        ("04-or-intro", d04_or_intro()),
        ("05-or-elim", d05_or_elim()),
        ("06-imp-intro", d06_imp_intro()),
        ("07-imp-elim", d07_imp_elim()),
        ("08-forall", d08_forall()),
        ("09-exists-intro", d09_exists_intro()),
        ("10-exists-elim", d10_exists_elim()),
        ("11-ind", d11_ind()),
        ("12-em-loop", d12_em_loop()),
    ]
}

/// Deliberately broken derivations, each violating one well-formedness
/// condition.
pub fn broken_mutants() -> Vec<(&'static str, Derivation)> {
    let a = lt(n(0), n(1));
    let b = le(n(0), n(1));
    let ctx1: Context = vec![("a".into(), a.clone())];
    let mut out: Vec<(&'static str, Derivation)> = Vec::new();

    // 1. Id with a label missing from the context.
    out.push((
        "id-missing-label",
        Derivation::new(Rule::Id { label: "ghost".into() }, ctx1.clone(), a.clone(), vec![]),
    ));
    // 2. Id concluding a formula other than the labeled assumption.
    out.push((
        "id-wrong-conclusion",
        Derivation::new(Rule::Id { label: "a".into() }, ctx1.clone(), b.clone(), vec![]),
    ));
    // 3. ImpE whose minor premise is not the antecedent.
    let ctx3: Context = vec![
        ("f".into(), Formula::implies(a.clone(), b.clone())),
        ("x".into(), b.clone()),
    ];
    out.push((
        "imp-e-minor-mismatch",
        Derivation::new(
            Rule::ImpE,
            ctx3.clone(),
            b.clone(),
            vec![id(&ctx3, "f"), id(&ctx3, "x")],
        ),
    ));
    // 4. AndI concluding an atomic formula.
    out.push((
        "and-i-non-conjunction",
        Derivation::new(Rule::AndI, ctx1.clone(), a.clone(), vec![id(&ctx1, "a"), id(&ctx1, "a")]),
    ));
    // 5. OrE whose right branch discharges the wrong formula.
    let or_ctx: Context = vec![("a".into(), Formula::or(a.clone(), b.clone()))];
    let mut l5 = or_ctx.clone();
    l5.push(("b".into(), a.clone()));
    let mut r5 = or_ctx.clone();
    r5.push(("c".into(), a.clone())); // should discharge the right disjunct
    out.push((
        "or-e-wrong-discharge",
        Derivation::new(
            Rule::OrE,
            or_ctx.clone(),
            a.clone(),
            vec![id(&or_ctx, "a"), id(&l5, "b"), id(&r5, "c")],
        ),
    ));
    // 6. ForallI whose eigenvariable occurs free in an open assumption.
    let px = lt(v("x"), n(1));
    let ctx6: Context = vec![("a".into(), px.clone())];
    out.push((
        "forall-i-eigen-capture",
        Derivation::new(
            Rule::ForallI,
            ctx6.clone(),
            Formula::forall("x", px.clone()),
            vec![id(&ctx6, "a")],
        ),
    ));
    // 7. ForallE concluding the wrong instance.
    let all = Formula::forall("x", tt(v("x")));
    let ctx7: Context = vec![("a".into(), all)];
    out.push((
        "forall-e-wrong-instance",
        Derivation::new(
            Rule::ForallE { term: n(2) },
            ctx7.clone(),
            tt(n(3)),
            vec![id(&ctx7, "a")],
        ),
    ));
    // 8. ExistsE whose eigenvariable occurs free in the conclusion.
    let major_f = Formula::exists("y", lt(n(2), v("y")));
    let ctx8: Context = vec![("e".into(), major_f)];
    let mut inner8 = ctx8.clone();
    inner8.push(("h".into(), lt(n(2), v("u"))));
    out.push((
        "exists-e-eigen-escapes",
        Derivation::new(
            Rule::ExistsE { eigen: "u".into() },
            ctx8.clone(),
            lt(n(2), v("u")),
            vec![id(&ctx8, "e"), id(&inner8, "h")],
        ),
    ));
    // 9. Ind whose hypothesis guard is a non-strict order.
    let bad_hyp = Formula::forall("z", Formula::implies(le(v("z"), v("y")), tt(v("z"))));
    let inner9: Context = vec![("ih".into(), bad_hyp)];
    out.push((
        "ind-non-strict-guard",
        Derivation::new(
            Rule::Ind { eigen: "y".into() },
            vec![],
            Formula::forall("x", tt(v("x"))),
            vec![Derivation::new(
                Rule::Atm { rule: "tt-ax".into(), args: vec![v("y")] },
                inner9,
                tt(v("y")),
                vec![],
            )],
        ),
    ));
    // 10. Atm whose premise does not match the rule instance.
    let ctx10: Context = vec![("a".into(), lt(n(1), n(2)))];
    out.push((
        "atm-instance-mismatch",
        Derivation::new(
            Rule::Atm { rule: "lt-le".into(), args: vec![n(0), n(1)] },
            ctx10.clone(),
            le(n(0), n(1)),
            vec![id(&ctx10, "a")],
        ),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::check_derivation;

    #[test]
    fn corpus_is_well_formed() {
        let sig = signature();
        for (name, d) in derivations() {
            let report = check_derivation(&sig, &d);
            assert!(report.ok(), "{name}: {:?}", report.errors);
        }
    }

    #[test]
    fn mutants_are_rejected() {
        let sig = signature();
        let mutants = broken_mutants();
        assert_eq!(mutants.len(), 10);
        for (name, d) in mutants {
            let report = check_derivation(&sig, &d);
            assert!(!report.ok(), "{name} should be rejected");
        }
    }

    #[test]
    fn corpus_covers_every_rule() {
        let mut seen = std::collections::BTreeSet::new();
        for (_, d) in derivations() {
            seen.extend(d.rules_used());
        }
        for tag in [
            "id", "atm", "and-i", "and-el", "and-er", "or-il", "or-ir", "or-e", "imp-i",
            "imp-e", "all-i", "all-e", "ex-i", "ex-e", "ind", "em",
        ] {
            assert!(seen.contains(tag), "missing rule {tag}");
        }
    }
}
