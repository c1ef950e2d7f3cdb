//! Syntactic monads: a type constructor `T` with closed terms `unit`, `star`
//! and `merge` satisfying the reduction laws M1-M3, plus the derived
//! `star_k`/`raise_k` families used by proof decoration.

use std::sync::Arc;

use crate::kernel::{ConstKind, Term, Type};
use crate::sig::{EX, STATE};

type TypeFn = Arc<dyn Fn(&Type) -> Type + Send + Sync>;
type UnaryBuilder = Arc<dyn Fn(&Type) -> Term + Send + Sync>;
type BinaryBuilder = Arc<dyn Fn(&Type, &Type) -> Term + Send + Sync>;

/// A syntactic monad: `unit[A] : A -> T A`,
/// `star[A,B] : (A -> T B) -> T A -> T B`, and
/// `merge[A,B] : T A -> T B -> T (A x B)`, all closed terms of exactly those
/// types, satisfying M1-M3 observationally.
#[derive(Clone)]
pub struct SyntacticMonad {
    pub name: String,
    t: TypeFn,
    unit: UnaryBuilder,
    star: BinaryBuilder,
    merge: BinaryBuilder,
}

impl std::fmt::Debug for SyntacticMonad {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SyntacticMonad({})", self.name)
    }
}

impl SyntacticMonad {
    pub fn custom(
        name: impl Into<String>,
        t: TypeFn,
        unit: UnaryBuilder,
        star: BinaryBuilder,
        merge: BinaryBuilder,
    ) -> Self {
        SyntacticMonad { name: name.into(), t, unit, star, merge }
    }

    pub fn t_apply(&self, a: &Type) -> Type {
        (self.t)(a)
    }

    pub fn unit_at(&self, a: &Type) -> Term {
        (self.unit)(a)
    }

    pub fn star_at(&self, a: &Type, b: &Type) -> Term {
        (self.star)(a, b)
    }

    pub fn merge_at(&self, a: &Type, b: &Type) -> Term {
        (self.merge)(a, b)
    }

    /// `unit` applied to a term of type `a`.
    pub fn unit_app(&self, a: &Type, t: Term) -> Term {
        Term::app(self.unit_at(a), t)
    }

    /// A variant with one component replaced, for mutation testing.
    pub fn with_unit(&self, name: impl Into<String>, unit: UnaryBuilder) -> Self {
        SyntacticMonad { name: name.into(), unit, ..self.clone() }
    }

    pub fn with_star(&self, name: impl Into<String>, star: BinaryBuilder) -> Self {
        SyntacticMonad { name: name.into(), star, ..self.clone() }
    }

    pub fn with_merge(&self, name: impl Into<String>, merge: BinaryBuilder) -> Self {
        SyntacticMonad { name: name.into(), merge, ..self.clone() }
    }
}

/// The identity monad: `T A = A`, `unit = \x.x`, `star = \f.f`,
/// `merge = pair`.
pub fn identity_monad() -> SyntacticMonad {
    SyntacticMonad::custom(
        "identity",
        Arc::new(|a| a.clone()),
        Arc::new(|a| Term::lam("x", a.clone(), Term::var("x", a.clone()))),
        Arc::new(|a, b| {
            let fty = Type::arrow(a.clone(), b.clone());
            Term::lam("f", fty.clone(), Term::var("f", fty))
        }),
        Arc::new(|a, b| Term::Const(ConstKind::Pair(a.clone(), b.clone()))),
    )
}

/// The exception monad: `T A = A + Ex`; `star` propagates exceptional
/// values, `merge` pairs regular values and combines two exceptional ones
/// with `exmerge`.
pub fn exception_monad() -> SyntacticMonad {
    let t = |a: &Type| Type::sum(a.clone(), Type::ex());
    SyntacticMonad::custom(
        "exception",
        Arc::new(t),
        Arc::new(move |a| {
            Term::lam(
                "x",
                a.clone(),
                Term::inl(a.clone(), Type::ex(), Term::var("x", a.clone())),
            )
        }),
        Arc::new(move |a, b| {
            let tb = t(b);
            let fty = Type::arrow(a.clone(), tb.clone());
            Term::lam(
                "f",
                fty.clone(),
                Term::lam(
                    "m",
                    t(a),
                    Term::case(
                        a.clone(),
                        Type::ex(),
                        tb.clone(),
                        Term::var("m", t(a)),
                        Term::var("f", fty),
                        Term::Const(ConstKind::InjR(b.clone(), Type::ex())),
                    ),
                ),
            )
        }),
        Arc::new(move |a, b| {
            let prod = Type::prod(a.clone(), b.clone());
            let tout = t(&prod);
            let regular = Term::lam(
                "x",
                a.clone(),
                Term::case(
                    b.clone(),
                    Type::ex(),
                    tout.clone(),
                    Term::var("m2", t(b)),
                    Term::lam(
                        "y",
                        b.clone(),
                        Term::inl(
                            prod.clone(),
                            Type::ex(),
                            Term::pair(
                                a.clone(),
                                b.clone(),
                                Term::var("x", a.clone()),
                                Term::var("y", b.clone()),
                            ),
                        ),
                    ),
                    Term::Const(ConstKind::InjR(prod.clone(), Type::ex())),
                ),
            );
            let exceptional = Term::lam(
                "e1",
                Type::ex(),
                Term::case(
                    b.clone(),
                    Type::ex(),
                    tout.clone(),
                    Term::var("m2", t(b)),
                    Term::lam(
                        "y",
                        b.clone(),
                        Term::inr(prod.clone(), Type::ex(), Term::var("e1", Type::ex())),
                    ),
                    Term::lam(
                        "e2",
                        Type::ex(),
                        Term::inr(
                            prod.clone(),
                            Type::ex(),
                            Term::apps(
                                Term::Const(ConstKind::Exmerge),
                                [Term::var("e1", Type::ex()), Term::var("e2", Type::ex())],
                            ),
                        ),
                    ),
                ),
            );
            Term::lam(
                "m1",
                t(a),
                Term::lam(
                    "m2",
                    t(b),
                    Term::case(
                        a.clone(),
                        Type::ex(),
                        tout,
                        Term::var("m1", t(a)),
                        regular,
                        exceptional,
                    ),
                ),
            )
        }),
    )
}

/// The interactive realizability monad: `T A = State -> (A + Ex)`. Values
/// are lifted to state functions that can throw exceptions; `unit` produces
/// a constant state function, `star` evaluates its argument on the state
/// first, and `merge` evaluates both, pairing regular values and combining
/// two exceptions with `exmerge`.
pub fn ir_monad() -> SyntacticMonad {
    let t = |a: &Type| Type::arrow(Type::state(), Type::sum(a.clone(), Type::ex()));
    SyntacticMonad::custom(
        "ir",
        Arc::new(t),
        Arc::new(move |a| {
            Term::lam(
                "x",
                a.clone(),
                Term::lam(
                    "_",
                    Type::state(),
                    Term::inl(a.clone(), Type::ex(), Term::var("x", a.clone())),
                ),
            )
        }),
        Arc::new(move |a, b| {
            let tb = t(b);
            let fty = Type::arrow(a.clone(), tb.clone());
            let out = Type::sum(b.clone(), Type::ex());
            Term::lam(
                "f",
                fty.clone(),
                Term::lam(
                    "m",
                    t(a),
                    Term::lam(
                        "s",
                        Type::state(),
                        Term::case(
                            a.clone(),
                            Type::ex(),
                            out,
                            Term::app(Term::var("m", t(a)), Term::var("s", Type::state())),
                            Term::lam(
                                "x",
                                a.clone(),
                                Term::app(
                                    Term::app(Term::var("f", fty.clone()), Term::var("x", a.clone())),
                                    Term::var("s", Type::state()),
                                ),
                            ),
                            Term::Const(ConstKind::InjR(b.clone(), Type::ex())),
                        ),
                    ),
                ),
            )
        }),
        Arc::new(move |a, b| {
            let prod = Type::prod(a.clone(), b.clone());
            let out = Type::sum(prod.clone(), Type::ex());
            let n_at_s = || Term::app(Term::var("n", t(b)), Term::var("s", Type::state()));
            let regular = Term::lam(
                "x",
                a.clone(),
                Term::case(
                    b.clone(),
                    Type::ex(),
                    out.clone(),
                    n_at_s(),
                    Term::lam(
                        "y",
                        b.clone(),
                        Term::inl(
                            prod.clone(),
                            Type::ex(),
                            Term::pair(
                                a.clone(),
                                b.clone(),
                                Term::var("x", a.clone()),
                                Term::var("y", b.clone()),
                            ),
                        ),
                    ),
                    Term::Const(ConstKind::InjR(prod.clone(), Type::ex())),
                ),
            );
            let exceptional = Term::lam(
                "e1",
                Type::ex(),
                Term::case(
                    b.clone(),
                    Type::ex(),
                    out.clone(),
                    n_at_s(),
                    Term::lam(
                        "_",
                        b.clone(),
                        Term::inr(prod.clone(), Type::ex(), Term::var("e1", Type::ex())),
                    ),
                    Term::lam(
                        "e2",
                        Type::ex(),
                        Term::inr(
                            prod.clone(),
                            Type::ex(),
                            Term::apps(
                                Term::Const(ConstKind::Exmerge),
                                [Term::var("e1", Type::ex()), Term::var("e2", Type::ex())],
                            ),
                        ),
                    ),
                ),
            );
            Term::lam(
                "m",
                t(a),
                Term::lam(
                    "n",
                    t(b),
                    Term::lam(
                        "s",
                        Type::state(),
                        Term::case(
                            a.clone(),
                            Type::ex(),
                            out,
                            Term::app(Term::var("m", t(a)), Term::var("s", Type::state())),
                            regular,
                            exceptional,
                        ),
                    ),
                ),
            )
        }),
    )
}

pub fn monad_by_name(name: &str) -> Option<SyntacticMonad> {
    match name {
        "identity" => Some(identity_monad()),
        "exception" => Some(exception_monad()),
        "ir" => Some(ir_monad()),
        _ => None,
    }
}

/// `star_k : (A1 -> .. -> Ak -> T B) -> (T A1 -> .. -> T Ak -> T B)`,
/// by induction on k: the identity for k = 0, `star` for k = 1, and for
/// k + 2 the uncurrying step through `merge` of the first two arguments.
pub fn star_n(m: &SyntacticMonad, arg_tys: &[Type], b: &Type) -> Term {
    match arg_tys {
        [] => {
            let tb = m.t_apply(b);
            Term::lam("f", tb.clone(), Term::var("f", tb))
        }
        [a] => m.star_at(a, b),
        [a1, a2, rest @ ..] => {
            let fty = Type::arrows(arg_tys.to_vec(), m.t_apply(b));
            let prod = Type::prod(a1.clone(), a2.clone());
            let mut inner_args = vec![prod.clone()];
            inner_args.extend(rest.iter().cloned());
            let z = Term::var("z", prod.clone());
            let inner_fn = Term::lam(
                "z",
                prod.clone(),
                Term::apps(
                    Term::var("f", fty.clone()),
                    [
                        Term::prl(a1.clone(), a2.clone(), z.clone()),
                        Term::prr(a1.clone(), a2.clone(), z),
                    ],
                ),
            );
            let merged = Term::apps(
                m.merge_at(a1, a2),
                [Term::var("x", m.t_apply(a1)), Term::var("y", m.t_apply(a2))],
            );
            Term::lam(
                "f",
                fty,
                Term::lam(
                    "x",
                    m.t_apply(a1),
                    Term::lam(
                        "y",
                        m.t_apply(a2),
                        Term::apps(star_n(m, &inner_args, b), [inner_fn, merged]),
                    ),
                ),
            )
        }
    }
}

/// `raise_k : (A1 -> .. -> Ak -> B) -> (T A1 -> .. -> T Ak -> T B)`, defined
/// through `star_k` by post-composing with `unit`.
pub fn raise_n(m: &SyntacticMonad, arg_tys: &[Type], b: &Type) -> Term {
    let fty = Type::arrows(arg_tys.to_vec(), b.clone());
    let xs: Vec<Term> = arg_tys
        .iter()
        .enumerate()
        .map(|(i, ty)| Term::var(format!("x{}", i + 1), ty.clone()))
        .collect();
    let mut body = m.unit_app(b, Term::apps(Term::var("f", fty.clone()), xs));
    for (i, ty) in arg_tys.iter().enumerate().rev() {
        body = Term::lam(format!("x{}", i + 1), ty.clone(), body);
    }
    Term::lam("f", fty, Term::app(star_n(m, arg_tys, b), body))
}

/// The bind combinator `\m. \f. star f m` of type
/// `T A -> (A -> T B) -> T B`.
pub fn bind_of(m: &SyntacticMonad, a: &Type, b: &Type) -> Term {
    let ta = m.t_apply(a);
    let fty = Type::arrow(a.clone(), m.t_apply(b));
    Term::lam(
        "m",
        ta.clone(),
        Term::lam(
            "f",
            fty.clone(),
            Term::apps(m.star_at(a, b), [Term::var("f", fty), Term::var("m", ta)]),
        ),
    )
}

/// The sum shape `A + Ex`.
pub fn plus_ex(a: &Type) -> Type {
    Type::sum(a.clone(), Type::ex())
}

/// True for the base types `State` and `Ex`.
pub fn is_runtime_base(ty: &Type) -> bool {
    matches!(ty, Type::Base(n) if n == STATE || n == EX)
}
