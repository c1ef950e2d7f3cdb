//! Proof decoration: the inner/monadic type translations, extraction of
//! monadic realizers from derivations, and the interactive realizer for the
//! excluded-middle axiom.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::kernel::{
    dummy, fresh_name, type_of, ConstKind, Guard, KernelError, Term, Type, TypeCtx, TypeError,
};
use crate::logic::{
    check_derivation, eval_arith, ArithTerm, Context, Derivation, Formula, LogicError, Report,
    Rule,
};
use crate::monads::{raise_n, star_n, SyntacticMonad};
use crate::sig::{SigError, Signature};

#[derive(Error, Debug)]
pub enum ExtractError {
    #[error("derivation is ill-formed: {0:?}")]
    IllFormed(Report),
    #[error("the excluded-middle axiom is only realized by the interactive realizability monad, not `{0}`")]
    EmNeedsIr(String),
    #[error("function symbol `{0}` in an open arithmetic term cannot be embedded; only variables, zero and successor may appear open")]
    OpenFnSymbol(String),
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("extracted realizer fails to type: {0}")]
    Type(#[from] TypeError),
}

/// The inner typing of a formula: the type of its BHK-style realizers.
/// The consequents of implications and the bodies of universals live under
/// the monad.
pub fn inner_type(m: &SyntacticMonad, f: &Formula) -> Type {
    match f {
        Formula::Atomic { .. } | Formula::False => Type::Unit,
        Formula::And(a, b) => Type::prod(inner_type(m, a), inner_type(m, b)),
        Formula::Or(a, b) => Type::sum(inner_type(m, a), inner_type(m, b)),
        Formula::Implies(a, b) => Type::arrow(inner_type(m, a), monadic_type(m, b)),
        Formula::Exists(_, a) => Type::prod(Type::Nat, inner_type(m, a)),
        Formula::Forall(_, a) => Type::arrow(Type::Nat, monadic_type(m, a)),
    }
}

/// The outer (monadic) typing: `T` applied to the inner type.
pub fn monadic_type(m: &SyntacticMonad, f: &Formula) -> Type {
    m.t_apply(&inner_type(m, f))
}

/// Embed an arithmetic term as a System T' term of type `Nat`. Open terms
/// may only use variables, zero and successor; configured function symbols
/// are admitted in closed positions, where they evaluate to a numeral.
pub fn embed_arith(sig: &Signature, t: &ArithTerm) -> Result<Term, ExtractError> {
    match t {
        ArithTerm::Var(x) => Ok(Term::var(x.clone(), Type::Nat)),
        ArithTerm::Zero => Ok(Term::zero()),
        ArithTerm::Succ(inner) => {
            Ok(Term::app(Term::Const(ConstKind::Succ), embed_arith(sig, inner)?))
        }
        ArithTerm::Fn { name, .. } => {
            if t.is_closed() {
                Ok(Term::numeral(eval_arith(t, &|_| None, sig)?))
            } else {
                Err(ExtractError::OpenFnSymbol(name.clone()))
            }
        }
    }
}

/// A sequent annotated with a candidate monadic realizer of its conclusion.
#[derive(Clone, Debug)]
pub struct DecoratedSequent {
    pub context: Context,
    pub realizer: Term,
    pub conclusion: Formula,
}

impl DecoratedSequent {
    /// Typing context for the realizer: each assumption label at the inner
    /// type of its formula, every other free variable at `Nat`.
    pub fn type_ctx(&self, m: &SyntacticMonad) -> TypeCtx {
        let mut ctx = TypeCtx::new();
        for (label, formula) in &self.context {
            ctx.bind(label.clone(), inner_type(m, formula));
        }
        for v in self.realizer.free_vars() {
            if !self.context.iter().any(|(l, _)| l == &v) {
                ctx.bind(v, Type::Nat);
            }
        }
        ctx
    }

    /// Verify the decoration invariant: the realizer types at the monadic
    /// type of the conclusion under the decorated context.
    pub fn check_typing(&self, m: &SyntacticMonad) -> Result<(), ExtractError> {
        let ctx = self.type_ctx(m);
        let found = type_of(&ctx, &self.realizer)?;
        let expected = monadic_type(m, &self.conclusion);
        if found != expected {
            return Err(ExtractError::Type(TypeError::ArgMismatch {
                expected,
                found,
            }));
        }
        Ok(())
    }
}

/// Deterministic supply of binder names disjoint from every name occurring
/// in the derivation.
struct Names {
    used: BTreeSet<String>,
    counter: u64,
}

impl Names {
    fn from_derivation(d: &Derivation) -> Self {
        let mut used = BTreeSet::new();
        fn formula_names(f: &Formula, used: &mut BTreeSet<String>) {
            match f {
                Formula::Atomic { args, .. } => {
                    for a in args {
                        used.extend(a.free_vars());
                    }
                }
                Formula::False => {}
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    formula_names(a, used);
                    formula_names(b, used);
                }
                Formula::Forall(x, a) | Formula::Exists(x, a) => {
                    used.insert(x.clone());
                    formula_names(a, used);
                }
            }
        }
        fn walk(d: &Derivation, used: &mut BTreeSet<String>) {
            for (l, f) in &d.ctx {
                used.insert(l.clone());
                formula_names(f, used);
            }
            formula_names(&d.concl, used);
            match &d.rule {
                Rule::ExistsE { eigen } | Rule::Ind { eigen } => {
                    used.insert(eigen.clone());
                }
                _ => {}
            }
            d.premises.iter().for_each(|p| walk(p, used));
        }
        walk(d, &mut used);
        Names { used, counter: 0 }
    }

    fn fresh(&mut self, base: &str) -> String {
        loop {
            self.counter += 1;
            let cand = format!("{base}{}", self.counter);
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }
}

struct Extractor<'a> {
    sig: &'a Signature,
    monad: &'a SyntacticMonad,
    names: Names,
}

impl<'a> Extractor<'a> {
    fn mt(&self, f: &Formula) -> Type {
        inner_type(self.monad, f)
    }

    fn mm(&self, f: &Formula) -> Type {
        monadic_type(self.monad, f)
    }

    fn raise0(&self, b: &Type, arg: Term) -> Term {
        Term::app(raise_n(self.monad, &[], b), arg)
    }

    fn decorate(&mut self, d: &Derivation) -> Result<Term, ExtractError> {
        let m = self.monad;
        match &d.rule {
            Rule::Id { label } => {
                let a = self.mt(&d.concl);
                Ok(self.raise0(&a, Term::var(label.clone(), a.clone())))
            }
            Rule::Atm { .. } => {
                let premises = d
                    .premises
                    .iter()
                    .map(|p| self.decorate(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let l = premises.len();
                let mut body = Term::unit_val();
                let mut binders = Vec::with_capacity(l);
                for _ in 0..l {
                    binders.push(self.names.fresh("g"));
                }
                for name in binders.iter().rev() {
                    body = Term::lam(name.clone(), Type::Unit, body);
                }
                let arg_tys = vec![Type::Unit; l];
                Ok(Term::apps(
                    Term::app(raise_n(m, &arg_tys, &Type::Unit), body),
                    premises,
                ))
            }
            Rule::AndI => {
                let r1 = self.decorate(&d.premises[0])?;
                let r2 = self.decorate(&d.premises[1])?;
                let (a, b) = match &d.concl {
                    Formula::And(a, b) => (self.mt(a), self.mt(b)),
                    _ => unreachable!("checked derivation"),
                };
                let pair = Term::Const(ConstKind::Pair(a.clone(), b.clone()));
                Ok(Term::apps(
                    Term::app(raise_n(m, &[a.clone(), b.clone()], &Type::prod(a, b)), pair),
                    [r1, r2],
                ))
            }
            Rule::AndEL | Rule::AndER => {
                let r = self.decorate(&d.premises[0])?;
                let (a, b) = match &d.premises[0].concl {
                    Formula::And(a, b) => (self.mt(a), self.mt(b)),
                    _ => unreachable!("checked derivation"),
                };
                let (proj, out) = if matches!(d.rule, Rule::AndEL) {
                    (ConstKind::ProjL(a.clone(), b.clone()), a.clone())
                } else {
                    (ConstKind::ProjR(a.clone(), b.clone()), b.clone())
                };
                let src = Type::prod(a, b);
                Ok(Term::app(
                    Term::app(raise_n(m, &[src], &out), Term::Const(proj)),
                    r,
                ))
            }
            Rule::OrIL | Rule::OrIR => {
                let r = self.decorate(&d.premises[0])?;
                let (a, b) = match &d.concl {
                    Formula::Or(a, b) => (self.mt(a), self.mt(b)),
                    _ => unreachable!("checked derivation"),
                };
                let (inj, src) = if matches!(d.rule, Rule::OrIL) {
                    (ConstKind::InjL(a.clone(), b.clone()), a.clone())
                } else {
                    (ConstKind::InjR(a.clone(), b.clone()), b.clone())
                };
                let out = Type::sum(a, b);
                Ok(Term::app(
                    Term::app(raise_n(m, &[src], &out), Term::Const(inj)),
                    r,
                ))
            }
            Rule::OrE => {
                let major = self.decorate(&d.premises[0])?;
                let left = self.decorate(&d.premises[1])?;
                let right = self.decorate(&d.premises[2])?;
                let (a, b) = match &d.premises[0].concl {
                    Formula::Or(a, b) => (self.mt(a), self.mt(b)),
                    _ => unreachable!("checked derivation"),
                };
                let c = self.mt(&d.concl);
                let mm_c = self.mm(&d.concl);
                let la = d.premises[1].ctx.last().expect("discharge checked").0.clone();
                let lb = d.premises[2].ctx.last().expect("discharge checked").0.clone();
                let g = self.names.fresh("g");
                let scrut_ty = Type::sum(a.clone(), b.clone());
                let f = Term::lam(
                    g.clone(),
                    scrut_ty.clone(),
                    Term::case(
                        a.clone(),
                        b.clone(),
                        mm_c,
                        Term::var(g, scrut_ty.clone()),
                        Term::lam(la, a, left),
                        Term::lam(lb, b, right),
                    ),
                );
                Ok(Term::apps(
                    Term::app(star_n(m, &[scrut_ty], &c), f),
                    [major],
                ))
            }
            Rule::ImpI => {
                let r = self.decorate(&d.premises[0])?;
                let (a, label) = match &d.concl {
                    Formula::Implies(a, _) => (
                        self.mt(a),
                        d.premises[0].ctx.last().expect("discharge checked").0.clone(),
                    ),
                    _ => unreachable!("checked derivation"),
                };
                let whole = self.mt(&d.concl);
                Ok(self.raise0(&whole, Term::lam(label, a, r)))
            }
            Rule::ImpE => {
                let major = self.decorate(&d.premises[0])?;
                let minor = self.decorate(&d.premises[1])?;
                let (a, b) = match &d.premises[0].concl {
                    Formula::Implies(a, b) => (a, b),
                    _ => unreachable!("checked derivation"),
                };
                let fun_ty = self.mt(&d.premises[0].concl);
                let arg_ty = self.mt(a);
                let g1 = self.names.fresh("g");
                let g2 = self.names.fresh("g");
                let f = Term::lam(
                    g1.clone(),
                    fun_ty.clone(),
                    Term::lam(
                        g2.clone(),
                        arg_ty.clone(),
                        Term::app(Term::var(g1, fun_ty.clone()), Term::var(g2, arg_ty.clone())),
                    ),
                );
                Ok(Term::apps(
                    Term::app(star_n(m, &[fun_ty, arg_ty], &self.mt(b)), f),
                    [major, minor],
                ))
            }
            Rule::ForallI => {
                let r = self.decorate(&d.premises[0])?;
                let x = match &d.concl {
                    Formula::Forall(x, _) => x.clone(),
                    _ => unreachable!("checked derivation"),
                };
                let whole = self.mt(&d.concl);
                Ok(self.raise0(&whole, Term::lam(x, Type::Nat, r)))
            }
            Rule::ForallE { term } => {
                let r = self.decorate(&d.premises[0])?;
                let src = self.mt(&d.premises[0].concl);
                let out = self.mt(&d.concl);
                let g = self.names.fresh("g");
                let f = Term::lam(
                    g.clone(),
                    src.clone(),
                    Term::app(Term::var(g, src.clone()), embed_arith(self.sig, term)?),
                );
                Ok(Term::apps(Term::app(star_n(m, &[src], &out), f), [r]))
            }
            Rule::ExistsI { term } => {
                let r = self.decorate(&d.premises[0])?;
                let inner = self.mt(&d.premises[0].concl);
                let out = self.mt(&d.concl);
                let g = self.names.fresh("g");
                let f = Term::lam(
                    g.clone(),
                    inner.clone(),
                    Term::pair(
                        Type::Nat,
                        inner.clone(),
                        embed_arith(self.sig, term)?,
                        Term::var(g, inner.clone()),
                    ),
                );
                Ok(Term::apps(Term::app(raise_n(m, &[inner], &out), f), [r]))
            }
            Rule::ExistsE { eigen } => {
                let major = self.decorate(&d.premises[0])?;
                let minor = self.decorate(&d.premises[1])?;
                let a_inner = match &d.premises[0].concl {
                    Formula::Exists(_, a) => self.mt(a),
                    _ => unreachable!("checked derivation"),
                };
                let label = d.premises[1].ctx.last().expect("discharge checked").0.clone();
                let c = self.mt(&d.concl);
                let src = Type::prod(Type::Nat, a_inner.clone());
                let g = self.names.fresh("g");
                let split = Term::lam(
                    eigen.clone(),
                    Type::Nat,
                    Term::lam(label, a_inner.clone(), minor),
                );
                let f = Term::lam(
                    g.clone(),
                    src.clone(),
                    Term::apps(
                        split,
                        [
                            Term::prl(Type::Nat, a_inner.clone(), Term::var(g.clone(), src.clone())),
                            Term::prr(Type::Nat, a_inner.clone(), Term::var(g, src.clone())),
                        ],
                    ),
                );
                Ok(Term::apps(Term::app(star_n(m, &[src], &c), f), [major]))
            }
            Rule::Ind { eigen } => {
                let r = self.decorate(&d.premises[0])?;
                let body_mm = match &d.concl {
                    Formula::Forall(_, a) => self.mm(a),
                    _ => unreachable!("checked derivation"),
                };
                let hyp = d.premises[0].ctx.last().expect("discharge checked");
                let (label, hyp_ty) = (hyp.0.clone(), self.mt(&hyp.1));
                let beta = self.names.fresh("b");
                let z = self.names.fresh("z");
                let anon = self.names.fresh("u");
                let beta_ty = Type::arrow(Type::Nat, body_mm.clone());
                // raise_0 lifts `\_:Unit. beta z` to the hypothesis instance type.
                let guard_inst = match &hyp.1 {
                    Formula::Forall(_, inst) => self.mt(inst),
                    _ => unreachable!("checked derivation"),
                };
                let lifted = Term::lam(
                    z.clone(),
                    Type::Nat,
                    self.raise0(
                        &guard_inst,
                        Term::lam(
                            anon,
                            Type::Unit,
                            Term::app(Term::var(beta.clone(), beta_ty.clone()), Term::var(z.clone(), Type::Nat)),
                        ),
                    ),
                );
                let f = Term::lam(
                    eigen.clone(),
                    Type::Nat,
                    Term::lam(
                        beta,
                        beta_ty,
                        Term::app(Term::lam(label, hyp_ty, r), lifted),
                    ),
                );
                let rec = Term::app(Term::Const(ConstKind::Rec(Guard::Inf, body_mm)), f);
                let whole = self.mt(&d.concl);
                Ok(self.raise0(&whole, rec))
            }
            Rule::Em { pred, args } => {
                if self.monad.name != "ir" {
                    return Err(ExtractError::EmNeedsIr(self.monad.name.clone()));
                }
                em_realizer(self.sig, pred, args)
            }
        }
    }
}

/// Decorate a derivation with a monadic realizer per the decorated rules.
/// The derivation must be well-formed; excluded-middle nodes require the
/// interactive realizability monad.
pub fn extract(
    sig: &Signature,
    m: &SyntacticMonad,
    d: &Derivation,
) -> Result<DecoratedSequent, ExtractError> {
    let report = check_derivation(sig, d);
    if !report.ok() {
        return Err(ExtractError::IllFormed(report));
    }
    if d.uses_em() && m.name != "ir" {
        return Err(ExtractError::EmNeedsIr(m.name.clone()));
    }
    let mut extractor = Extractor { sig, monad: m, names: Names::from_derivation(d) };
    let realizer = extractor.decorate(d)?;
    let ds = DecoratedSequent {
        context: d.ctx.clone(),
        realizer,
        conclusion: d.concl.clone(),
    };
    ds.check_typing(m)?;
    Ok(ds)
}

/// The interactive realizer for an excluded-middle instance
/// `(forall y. P(ts,y)) or (exists y. not P(ts,y))`:
///
/// it queries the state; on a miss it commits to the universal disjunct with
/// a realizer that `eval`s each requested instance, and on a stored witness
/// it produces the existential disjunct with that witness. The second pair
/// component is a canonical trivial inner realizer: it is never
/// interrogated, because a stored witness refutes the matrix, leaving the
/// negation realized vacuously, so any well-typed term is correct there.
pub fn em_realizer(
    sig: &Signature,
    pred: &str,
    args: &[ArithTerm],
) -> Result<Term, ExtractError> {
    let decl = sig.pred(pred)?;
    if decl.sym.params() != args.len() {
        return Err(ExtractError::Sig(SigError::ArityMismatch {
            name: pred.to_string(),
            expected: decl.sym.params(),
            found: args.len(),
        }));
    }
    let sym = decl.sym.clone();
    let embedded: Vec<Term> =
        args.iter().map(|t| embed_arith(sig, t)).collect::<Result<_, _>>()?;

    let t_unit = Type::arrow(Type::state(), Type::sum(Type::Unit, Type::ex()));
    let m_univ = Type::arrow(Type::Nat, t_unit.clone());
    let m_not = Type::arrow(Type::Unit, t_unit);
    let m_exis = Type::prod(Type::Nat, m_not.clone());
    let m_em = Type::sum(m_univ.clone(), m_exis.clone());

    let mut avoid: BTreeSet<String> = BTreeSet::new();
    for a in args {
        avoid.extend(a.free_vars());
    }
    avoid.insert("s".to_string());
    let y = fresh_name("y", &avoid);

    let r_forall = Term::lam(
        y.clone(),
        Type::Nat,
        Term::lam(
            "_",
            Type::state(),
            Term::apps(
                Term::Const(ConstKind::Eval(sym.clone())),
                embedded.iter().cloned().chain([Term::var(y.clone(), Type::Nat)]),
            ),
        ),
    );
    let witness_side = Term::lam(
        y.clone(),
        Type::Nat,
        Term::inr(
            m_univ.clone(),
            m_exis.clone(),
            Term::pair(Type::Nat, m_not.clone(), Term::var(y, Type::Nat), dummy(&m_not)?),
        ),
    );
    let scrut = Term::apps(
        Term::app(Term::Const(ConstKind::Query(sym)), Term::var("s", Type::state())),
        embedded,
    );
    Ok(Term::lam(
        "s",
        Type::state(),
        Term::inl(
            m_em.clone(),
            Type::ex(),
            Term::case(
                Type::Unit,
                Type::Nat,
                m_em,
                scrut,
                Term::lam("_", Type::Unit, Term::inl(m_univ, m_exis, r_forall)),
                witness_side,
            ),
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{alpha_eq, normalize, DEFAULT_FUEL};
    use crate::monads::{exception_monad, identity_monad, ir_monad};
    use crate::runtime::{KnowledgeState, WitnessKey};
    use crate::sig::{BuiltinPred, Interp};

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.declare_pred("LT", 2, Interp::Builtin(BuiltinPred::Lt)).unwrap();
        let rows = (0..=4u64).map(|y| (vec![y], true)).collect();
        s.declare_pred("B4", 1, Interp::Table { default: false, rows }).unwrap();
        s
    }

    fn lt01() -> Formula {
        Formula::atom("LT", vec![ArithTerm::num(0), ArithTerm::num(1)])
    }

    #[test]
    fn inner_type_clauses() {
        let m = ir_monad();
        assert_eq!(inner_type(&m, &lt01()), Type::Unit);
        let ex = Formula::exists("y", Formula::atom("B4", vec![ArithTerm::var("y")]));
        assert_eq!(inner_type(&m, &ex), Type::prod(Type::Nat, Type::Unit));
        let fa = Formula::forall("y", Formula::atom("B4", vec![ArithTerm::var("y")]));
        assert_eq!(
            inner_type(&m, &fa),
            Type::arrow(Type::Nat, m.t_apply(&Type::Unit))
        );
        // For the identity monad the monadic type is the inner type.
        let id = identity_monad();
        for f in [lt01(), ex, fa] {
            assert_eq!(monadic_type(&id, &f), inner_type(&id, &f));
        }
    }

    #[test]
    fn monadic_type_of_atomic_under_ir() {
        let m = ir_monad();
        assert_eq!(
            monadic_type(&m, &lt01()),
            Type::arrow(Type::state(), Type::sum(Type::Unit, Type::ex()))
        );
    }

    #[test]
    fn id_node_extracts_and_types() {
        let s = sig();
        let d = Derivation::new(
            Rule::Id { label: "a".into() },
            vec![("a".into(), lt01())],
            lt01(),
            vec![],
        );
        for m in [identity_monad(), exception_monad(), ir_monad()] {
            let ds = extract(&s, &m, &d).unwrap();
            ds.check_typing(&m).unwrap();
        }
    }

    #[test]
    fn and_intro_over_ids_types_at_the_conjunction() {
        let s = sig();
        let a = lt01();
        let b = Formula::atom("B4", vec![ArithTerm::num(0)]);
        let ctx: Context = vec![("a1".into(), a.clone()), ("a2".into(), b.clone())];
        let d = Derivation::new(
            Rule::AndI,
            ctx.clone(),
            Formula::and(a.clone(), b.clone()),
            vec![
                Derivation::new(Rule::Id { label: "a1".into() }, ctx.clone(), a, vec![]),
                Derivation::new(Rule::Id { label: "a2".into() }, ctx, b, vec![]),
            ],
        );
        for m in [identity_monad(), exception_monad(), ir_monad()] {
            let ds = extract(&s, &m, &d).unwrap();
            assert_eq!(
                type_of(&ds.type_ctx(&m), &ds.realizer).unwrap(),
                monadic_type(&m, &ds.conclusion)
            );
        }
    }

    #[test]
    fn em_rejected_under_non_ir() {
        let s = sig();
        let concl = Formula::em_instance("B4", &[], "y");
        let d = Derivation::new(Rule::Em { pred: "B4".into(), args: vec![] }, vec![], concl, vec![]);
        assert!(matches!(
            extract(&s, &identity_monad(), &d),
            Err(ExtractError::EmNeedsIr(_))
        ));
        extract(&s, &ir_monad(), &d).unwrap();
    }

    #[test]
    fn em_realizer_types_at_the_em_instance() {
        let s = sig();
        let m = ir_monad();
        let em = em_realizer(&s, "B4", &[]).unwrap();
        let concl = Formula::em_instance("B4", &[], "y");
        assert_eq!(
            crate::kernel::type_of_closed(&em).unwrap(),
            monadic_type(&m, &concl)
        );
    }

    #[test]
    fn em_realizer_on_empty_state_takes_universal_branch() {
        let s = sig();
        let em = em_realizer(&s, "B4", &[]).unwrap();
        let v = normalize(
            &s,
            &Term::app(em, Term::StateLit(KnowledgeState::empty())),
            DEFAULT_FUEL,
        )
        .unwrap();
        // inl (inl universal-side realizer)
        match v.spine() {
            (Term::Const(ConstKind::InjL(..)), outer) => match outer[0].spine() {
                (Term::Const(ConstKind::InjL(..)), _) => {}
                other => panic!("expected universal branch, got {other:?}"),
            },
            other => panic!("expected regular value, got {other:?}"),
        }
    }

    #[test]
    fn em_realizer_on_stored_witness_takes_existential_branch() {
        let s = sig();
        let st = KnowledgeState::new(&s, [(WitnessKey::new("B4", vec![]), 9)]).unwrap();
        let em = em_realizer(&s, "B4", &[]).unwrap();
        let v = normalize(&s, &Term::app(em, Term::StateLit(st)), DEFAULT_FUEL).unwrap();
        match v.spine() {
            (Term::Const(ConstKind::InjL(..)), outer) => match outer[0].spine() {
                (Term::Const(ConstKind::InjR(..)), inner) => {
                    // pair 9 W
                    let (ph, pargs) = inner[0].spine();
                    assert!(matches!(ph, Term::Const(ConstKind::Pair(..))));
                    assert_eq!(pargs[0].as_numeral(), Some(9));
                }
                other => panic!("expected existential branch, got {other:?}"),
            },
            other => panic!("expected regular value, got {other:?}"),
        }
    }

    #[test]
    fn induction_extracts_to_the_lifted_guarded_recursor() {
        let s = crate::corpus::signature();
        let m = ir_monad();
        let (_, d) = crate::corpus::derivations()
            .into_iter()
            .find(|(n, _)| *n == "11-ind")
            .unwrap();
        let ds = extract(&s, &m, &d).unwrap();
        // Shape: raise_0 applied to (Rec_inf f).
        let (head, args) = ds.realizer.spine();
        assert!(matches!(head, Term::Abs(..)), "raise_0 is a lambda");
        assert_eq!(args.len(), 1);
        let (rec_head, rec_args) = args[0].spine();
        assert!(
            matches!(rec_head, Term::Const(ConstKind::Rec(crate::kernel::Guard::Inf, _))),
            "expected the recursor with the dummy guard, got {rec_head:?}"
        );
        assert_eq!(rec_args.len(), 1, "Rec applied to the step function only");
        // f = \y. \b. (\ih. r) (\z. raise_0 (\_. b z))
        match rec_args[0] {
            Term::Abs(y, inner) => {
                assert_eq!(y.ty, Type::Nat);
                assert!(matches!(inner.as_ref(), Term::Abs(..)));
            }
            other => panic!("expected the step function, got {other:?}"),
        }
    }

    #[test]
    fn identity_id_node_collapses_to_the_assumption() {
        // Under the identity monad raise_0 reduces to unit = \x.x, so the Id
        // realizer normalizes to the bare assumption variable.
        let s = sig();
        let d = Derivation::new(
            Rule::Id { label: "a".into() },
            vec![("a".into(), lt01())],
            lt01(),
            vec![],
        );
        let ds = extract(&s, &identity_monad(), &d).unwrap();
        let nf = normalize(&s, &ds.realizer, DEFAULT_FUEL).unwrap();
        assert!(alpha_eq(&nf, &Term::var("a", Type::Unit)));
    }
}
