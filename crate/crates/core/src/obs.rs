//! Observational equality testing and the monad-law checker.
//!
//! Laws are checked observationally rather than by syntactic normal-form
//! comparison: the closing steps of the M1/M3 verification use eta and
//! surjective-pairing equalities, which are not kernel reductions, so
//! syntactic comparison would falsely refute correct monads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::{Gen, GenConfig};
use crate::kernel::{alpha_eq, dummy, normalize, ConstKind, KernelError, Term, Type};
use crate::monads::SyntacticMonad;
use crate::sig::Signature;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ObsError {
    #[error("observational comparison requires closed terms; `{0}` is free")]
    NotClosed(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Clone, Copy, Debug)]
pub struct ObsConfig {
    /// Sampled arguments per arrow domain (numerals enumerate exhaustively
    /// up to `numeral_bound` instead).
    pub samples_per_arrow: usize,
    pub numeral_bound: u64,
    pub fuel: u64,
    pub gen: GenConfig,
}

impl Default for ObsConfig {
    fn default() -> Self {
        ObsConfig {
            samples_per_arrow: 6,
            numeral_bound: 10,
            fuel: crate::kernel::DEFAULT_FUEL,
            gen: GenConfig::default(),
        }
    }
}

/// Outcome of an observational comparison. `witness` holds the chain of
/// arguments that exposed a difference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObsOutcome {
    pub equal: bool,
    pub witness: Option<Vec<Term>>,
}

impl ObsOutcome {
    fn eq() -> Self {
        ObsOutcome { equal: true, witness: None }
    }

    fn diff(args: Vec<Term>) -> Self {
        ObsOutcome { equal: false, witness: Some(args) }
    }
}

/// Observational equality at a type: ground values are compared by
/// alpha-equality of normal forms, products and sums structurally, and
/// functions by applying both sides to the same sampled closed arguments
/// (all numerals up to the bound for `Nat`, sampled state/exception literals
/// for the runtime base types) and recursing at the codomain.
pub fn obs_equal(
    sig: &Signature,
    monad: Option<&SyntacticMonad>,
    t1: &Term,
    t2: &Term,
    ty: &Type,
    cfg: &ObsConfig,
    seed: u64,
) -> Result<ObsOutcome, ObsError> {
    for t in [t1, t2] {
        if let Some(v) = t.free_vars().into_iter().next() {
            return Err(ObsError::NotClosed(v));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = Gen::new(sig, monad, cfg.gen);
    let v1 = normalize(sig, t1, cfg.fuel)?;
    let v2 = normalize(sig, t2, cfg.fuel)?;
    compare(sig, &gen, &v1, &v2, ty, cfg, &mut rng)
}

fn args_for(
    gen: &Gen,
    dom: &Type,
    cfg: &ObsConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Term> {
    match dom {
        Type::Nat => (0..=cfg.numeral_bound).map(Term::numeral).collect(),
        Type::Unit => vec![Term::unit_val()],
        _ => {
            let mut out = Vec::new();
            if let Ok(d) = dummy(dom) {
                out.push(d);
            }
            for _ in 0..cfg.samples_per_arrow {
                out.push(gen.closed(dom, rng));
            }
            out
        }
    }
}

fn compare(
    sig: &Signature,
    gen: &Gen,
    v1: &Term,
    v2: &Term,
    ty: &Type,
    cfg: &ObsConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ObsOutcome, ObsError> {
    match ty {
        Type::Arrow(d, c) => {
            for arg in args_for(gen, d, cfg, rng) {
                let a1 = normalize(sig, &Term::app(v1.clone(), arg.clone()), cfg.fuel)?;
                let a2 = normalize(sig, &Term::app(v2.clone(), arg.clone()), cfg.fuel)?;
                let sub = compare(sig, gen, &a1, &a2, c, cfg, rng)?;
                if !sub.equal {
                    let mut w = vec![arg];
                    w.extend(sub.witness.unwrap_or_default());
                    return Ok(ObsOutcome::diff(w));
                }
            }
            Ok(ObsOutcome::eq())
        }
        Type::Prod(l, r) => match (v1.spine(), v2.spine()) {
            ((Term::Const(ConstKind::Pair(..)), a1), (Term::Const(ConstKind::Pair(..)), a2))
                if a1.len() == 2 && a2.len() == 2 =>
            {
                let left = compare(sig, gen, a1[0], a2[0], l, cfg, rng)?;
                if !left.equal {
                    return Ok(left);
                }
                compare(sig, gen, a1[1], a2[1], r, cfg, rng)
            }
            _ => Ok(if alpha_eq(v1, v2) { ObsOutcome::eq() } else { ObsOutcome::diff(vec![]) }),
        },
        Type::Sum(l, r) => {
            let tag = |t: &Term| match t.spine() {
                (Term::Const(ConstKind::InjL(..)), args) if args.len() == 1 => {
                    Some((true, args[0].clone()))
                }
                (Term::Const(ConstKind::InjR(..)), args) if args.len() == 1 => {
                    Some((false, args[0].clone()))
                }
                _ => None,
            };
            match (tag(v1), tag(v2)) {
                (Some((true, a)), Some((true, b))) => compare(sig, gen, &a, &b, l, cfg, rng),
                (Some((false, a)), Some((false, b))) => compare(sig, gen, &a, &b, r, cfg, rng),
                (Some(_), Some(_)) => Ok(ObsOutcome::diff(vec![])),
                _ => Ok(if alpha_eq(v1, v2) { ObsOutcome::eq() } else { ObsOutcome::diff(vec![]) }),
            }
        }
        _ => Ok(if alpha_eq(v1, v2) { ObsOutcome::eq() } else { ObsOutcome::diff(vec![]) }),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Law {
    M1,
    M2,
    M3,
}

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::M1 => "M1",
            Law::M2 => "M2",
            Law::M3 => "M3",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Counterexample {
    pub law: Law,
    pub lhs: Term,
    pub rhs: Term,
    pub ty: Type,
    pub description: String,
}

#[derive(Clone, Debug)]
pub struct LawResult {
    pub law: Law,
    pub samples: usize,
    pub pass: bool,
    pub counterexample: Option<Counterexample>,
}

/// Per-law verdicts for one monad; a failing law carries a reproducible
/// counterexample and the seed is recorded for replay.
#[derive(Clone, Debug)]
pub struct LawReport {
    pub monad: String,
    pub seed: u64,
    pub laws: Vec<LawResult>,
}

impl LawReport {
    pub fn all_pass(&self) -> bool {
        self.laws.iter().all(|l| l.pass)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LawConfig {
    pub samples_per_law: usize,
    pub obs: ObsConfig,
}

impl Default for LawConfig {
    fn default() -> Self {
        LawConfig { samples_per_law: 200, obs: ObsConfig::default() }
    }
}

/// The default type menu: `Nat`, `Unit`, `Nat x Unit`, and `Nat -> T Nat`.
pub fn default_type_menu(m: &SyntacticMonad) -> Vec<Type> {
    vec![
        Type::Nat,
        Type::Unit,
        Type::prod(Type::Nat, Type::Unit),
        Type::arrow(Type::Nat, m.t_apply(&Type::Nat)),
    ]
}

fn fn_sample(
    m: &SyntacticMonad,
    gen: &Gen,
    a: &Type,
    b: &Type,
    rng: &mut ChaCha8Rng,
) -> Term {
    let tb = m.t_apply(b);
    let choice = rng.gen_range(0..5u8);
    if choice == 0 && a == b {
        // The unit embedding itself: a non-constant f whenever A = B.
        return m.unit_at(a);
    }
    if choice == 1 && *a == Type::Nat && *b == Type::Nat {
        return Term::lam(
            "n",
            Type::Nat,
            m.unit_app(
                b,
                Term::app(Term::Const(ConstKind::Succ), Term::var("n", Type::Nat)),
            ),
        );
    }
    if choice == 2 && *a == Type::Nat {
        // A zero-test dispatch through the recursor guard: yields the sampled
        // value at n = 0 and the dummy beyond, so f is non-constant without
        // going through the monad's own builders.
        let h = Term::lam(
            "m",
            Type::Nat,
            Term::lam("rec", Type::arrow(Type::Nat, tb.clone()), gen.closed(&tb, rng)),
        );
        return Term::lam(
            "n",
            Type::Nat,
            Term::apps(
                Term::Const(ConstKind::Rec(crate::kernel::Guard::Fin(1), tb.clone())),
                [h, Term::var("n", Type::Nat)],
            ),
        );
    }
    Term::lam("_", a.clone(), gen.closed(&tb, rng))
}

/// Check M1-M3 for a monad over a type menu by sampling closed terms with
/// the type-directed enumerator and comparing both sides observationally.
pub fn check_monad_laws(
    sig: &Signature,
    m: &SyntacticMonad,
    menu: &[Type],
    cfg: &LawConfig,
    seed: u64,
) -> LawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gen = Gen::new(sig, Some(m), cfg.obs.gen);
    let pairs: Vec<(Type, Type)> = menu
        .iter()
        .flat_map(|a| menu.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let mut laws = Vec::new();

    for law in [Law::M1, Law::M2, Law::M3] {
        let mut result = LawResult { law, samples: 0, pass: true, counterexample: None };
        for i in 0..cfg.samples_per_law {
            let sub_seed = rng.gen::<u64>();
            let outcome = match law {
                Law::M1 => {
                    let a = &menu[i % menu.len()];
                    let ta = m.t_apply(a);
                    let mhat = gen.closed(&ta, &mut rng);
                    let lhs = Term::apps(m.star_at(a, a), [m.unit_at(a), mhat.clone()]);
                    (lhs, mhat, ta, format!("star unit m ~ m at {a:?}"))
                }
                Law::M2 => {
                    let (a, b) = &pairs[i % pairs.len()];
                    let f = fn_sample(m, &gen, a, b, &mut rng);
                    let x = gen.closed(a, &mut rng);
                    let lhs = Term::apps(
                        m.star_at(a, b),
                        [f.clone(), m.unit_app(a, x.clone())],
                    );
                    let rhs = Term::app(f, x);
                    (lhs, rhs, m.t_apply(b), format!("star f (unit a) ~ f a at ({a:?},{b:?})"))
                }
                Law::M3 => {
                    let (a, b) = &pairs[i % pairs.len()];
                    let x = gen.closed(a, &mut rng);
                    let y = gen.closed(b, &mut rng);
                    let lhs = Term::apps(
                        m.merge_at(a, b),
                        [m.unit_app(a, x.clone()), m.unit_app(b, y.clone())],
                    );
                    let prod = Type::prod(a.clone(), b.clone());
                    let rhs = m.unit_app(&prod, Term::pair(a.clone(), b.clone(), x, y));
                    (lhs, rhs, m.t_apply(&prod), format!("merge units ~ unit pair at ({a:?},{b:?})"))
                }
            };
            let (lhs, rhs, ty, desc) = outcome;
            result.samples += 1;
            match obs_equal(sig, Some(m), &lhs, &rhs, &ty, &cfg.obs, sub_seed) {
                Ok(o) if o.equal => {}
                Ok(o) => {
                    result.pass = false;
                    result.counterexample = Some(Counterexample {
                        law,
                        lhs,
                        rhs,
                        ty,
                        description: format!("{desc}; distinguishing arguments {:?}", o.witness),
                    });
                    break;
                }
                Err(e) => {
                    result.pass = false;
                    result.counterexample = Some(Counterexample {
                        law,
                        lhs,
                        rhs,
                        ty,
                        description: format!("{desc}; comparison error: {e}"),
                    });
                    break;
                }
            }
        }
        laws.push(result);
    }
    LawReport { monad: m.name.clone(), seed, laws }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monads::{exception_monad, identity_monad, ir_monad};
    use crate::sig::{BuiltinPred, Interp};
    use std::sync::Arc;

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.declare_pred("LT", 2, Interp::Builtin(BuiltinPred::Lt)).unwrap();
        let rows = (0..=4u64).map(|y| (vec![y], true)).collect();
        s.declare_pred("B4", 1, Interp::Table { default: false, rows }).unwrap();
        s
    }

    #[test]
    fn alpha_equal_functions_are_obs_equal() {
        let s = sig();
        let ty = Type::arrow(Type::Nat, Type::Nat);
        let f = Term::lam("x", Type::Nat, Term::var("x", Type::Nat));
        let g = Term::lam("y", Type::Nat, Term::var("y", Type::Nat));
        let o = obs_equal(&s, None, &f, &g, &ty, &ObsConfig::default(), 1).unwrap();
        assert!(o.equal);
    }

    #[test]
    fn successor_differs_from_identity_with_witness() {
        let s = sig();
        let ty = Type::arrow(Type::Nat, Type::Nat);
        let f = Term::lam(
            "n",
            Type::Nat,
            Term::app(Term::Const(ConstKind::Succ), Term::var("n", Type::Nat)),
        );
        let g = Term::lam("n", Type::Nat, Term::var("n", Type::Nat));
        let o = obs_equal(&s, None, &f, &g, &ty, &ObsConfig::default(), 1).unwrap();
        assert!(!o.equal);
        assert_eq!(o.witness.unwrap()[0], Term::numeral(0));
    }

    #[test]
    fn open_terms_are_rejected() {
        let s = sig();
        let err = obs_equal(
            &s,
            None,
            &Term::var("x", Type::Nat),
            &Term::zero(),
            &Type::Nat,
            &ObsConfig::default(),
            1,
        );
        assert!(matches!(err, Err(ObsError::NotClosed(_))));
    }

    #[test]
    fn unit_projl_composite_equals_unit_for_identity() {
        // unit . (projL . pair-with-unit) vs unit at Nat -> T Nat.
        let s = sig();
        let m = identity_monad();
        let composite = Term::lam(
            "n",
            Type::Nat,
            m.unit_app(
                &Type::Nat,
                Term::prl(
                    Type::Nat,
                    Type::Unit,
                    Term::pair(Type::Nat, Type::Unit, Term::var("n", Type::Nat), Term::unit_val()),
                ),
            ),
        );
        let plain = m.unit_at(&Type::Nat);
        let ty = Type::arrow(Type::Nat, m.t_apply(&Type::Nat));
        let o = obs_equal(&s, Some(&m), &composite, &plain, &ty, &ObsConfig::default(), 2).unwrap();
        assert!(o.equal);
    }

    #[test]
    fn laws_hold_for_all_three_monads_smoke() {
        let s = sig();
        let cfg = LawConfig { samples_per_law: 24, ..LawConfig::default() };
        for m in [identity_monad(), exception_monad(), ir_monad()] {
            let menu = default_type_menu(&m);
            let report = check_monad_laws(&s, &m, &menu, &cfg, 42);
            assert!(report.all_pass(), "{}: {:?}", m.name, report.laws);
        }
    }

    #[test]
    fn broken_unit_fails_m2_with_counterexample() {
        let s = sig();
        let base = ir_monad();
        let shape = base.clone();
        let broken = base.with_unit(
            "ir-dummy-unit",
            Arc::new(move |a: &Type| {
                Term::lam("x", a.clone(), dummy(&shape.t_apply(a)).expect("menu types are inhabited"))
            }),
        );
        let menu = default_type_menu(&broken);
        let cfg = LawConfig { samples_per_law: 60, ..LawConfig::default() };
        let report = check_monad_laws(&s, &broken, &menu, &cfg, 7);
        let m2 = report.laws.iter().find(|l| l.law == Law::M2).unwrap();
        assert!(!m2.pass);
        assert!(m2.counterexample.is_some());
    }

    #[test]
    fn obs_equal_stable_under_seed_reuse() {
        let s = sig();
        let m = ir_monad();
        let ty = Type::arrow(Type::Nat, m.t_apply(&Type::Nat));
        let f = m.unit_at(&Type::Nat);
        let g = Term::lam(
            "n",
            Type::Nat,
            m.unit_app(&Type::Nat, Term::app(Term::Const(ConstKind::Succ), Term::var("n", Type::Nat))),
        );
        let a = obs_equal(&s, Some(&m), &f, &g, &ty, &ObsConfig::default(), 99).unwrap();
        let b = obs_equal(&s, Some(&m), &f, &g, &ty, &ObsConfig::default(), 99).unwrap();
        assert_eq!(a, b);
        assert!(!a.equal);
    }
}
