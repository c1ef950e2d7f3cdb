//! Syntax of System T': types, typed constants, and terms.
//!
//! The constant set is fixed: unit, pair/projections, injections/case,
//! zero/succ, the guarded course-of-value recursor, plus `exmerge` and the
//! `query`/`eval` families. Knowledge states and exceptions are embedded as
//! opaque literals of the base types `State` and `Ex`, so their reductions
//! can fire only on literal arguments.

use std::collections::BTreeSet;

use crate::runtime::{ExceptionValue, KnowledgeState};
use crate::sig::{PredSym, EX, STATE};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Type {
    Unit,
    Nat,
    Base(String),
    Arrow(Box<Type>, Box<Type>),
    Prod(Box<Type>, Box<Type>),
    Sum(Box<Type>, Box<Type>),
}

impl Type {
    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn prod(l: Type, r: Type) -> Type {
        Type::Prod(Box::new(l), Box::new(r))
    }

    pub fn sum(l: Type, r: Type) -> Type {
        Type::Sum(Box::new(l), Box::new(r))
    }

    pub fn state() -> Type {
        Type::Base(STATE.to_string())
    }

    pub fn ex() -> Type {
        Type::Base(EX.to_string())
    }

    /// Right-nested arrow through all of `doms` into `cod`.
    pub fn arrows(doms: impl IntoIterator<Item = Type>, cod: Type) -> Type {
        let doms: Vec<_> = doms.into_iter().collect();
        doms.into_iter().rev().fold(cod, |acc, d| Type::arrow(d, acc))
    }
}

/// Guard of the recursor: a bound on recursion depth, or the dummy guard
/// that gets replaced by an effective one on first unfolding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Guard {
    Fin(u64),
    Inf,
}

impl Guard {
    pub fn admits(self, m: u64) -> bool {
        match self {
            Guard::Inf => true,
            Guard::Fin(n) => m < n,
        }
    }
}

/// The term constants of the calculus, carrying their type instantiation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ConstKind {
    UnitVal,
    Pair(Type, Type),
    ProjL(Type, Type),
    ProjR(Type, Type),
    InjL(Type, Type),
    InjR(Type, Type),
    Case(Type, Type, Type),
    Zero,
    Succ,
    Rec(Guard, Type),
    Exmerge,
    /// `query_P : State -> Nat^k -> Unit + Nat` for a predicate of arity k+1.
    Query(PredSym),
    /// `eval_P : Nat^k -> Nat -> Unit + Ex` for a predicate of arity k+1.
    Eval(PredSym),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Var {
    pub name: String,
    pub ty: Type,
}

impl Var {
    pub fn new(name: impl Into<String>, ty: Type) -> Self {
        Var { name: name.into(), ty }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Term {
    Var(Var),
    Const(ConstKind),
    App(Box<Term>, Box<Term>),
    Abs(Var, Box<Term>),
    StateLit(KnowledgeState),
    ExLit(ExceptionValue),
}

impl Term {
    pub fn var(name: impl Into<String>, ty: Type) -> Term {
        Term::Var(Var::new(name, ty))
    }

    pub fn lam(name: impl Into<String>, ty: Type, body: Term) -> Term {
        Term::Abs(Var::new(name, ty), Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn unit_val() -> Term {
        Term::Const(ConstKind::UnitVal)
    }

    pub fn zero() -> Term {
        Term::Const(ConstKind::Zero)
    }

    /// `succ` applied `n` times to `zero`.
    pub fn numeral(n: u64) -> Term {
        let mut t = Term::zero();
        for _ in 0..n {
            t = Term::app(Term::Const(ConstKind::Succ), t);
        }
        t
    }

    pub fn pair(a: Type, b: Type, l: Term, r: Term) -> Term {
        Term::apps(Term::Const(ConstKind::Pair(a, b)), [l, r])
    }

    pub fn inl(a: Type, b: Type, t: Term) -> Term {
        Term::app(Term::Const(ConstKind::InjL(a, b)), t)
    }

    pub fn inr(a: Type, b: Type, t: Term) -> Term {
        Term::app(Term::Const(ConstKind::InjR(a, b)), t)
    }

    pub fn prl(a: Type, b: Type, t: Term) -> Term {
        Term::app(Term::Const(ConstKind::ProjL(a, b)), t)
    }

    pub fn prr(a: Type, b: Type, t: Term) -> Term {
        Term::app(Term::Const(ConstKind::ProjR(a, b)), t)
    }

    pub fn case(a: Type, b: Type, c: Type, scrut: Term, l: Term, r: Term) -> Term {
        Term::apps(Term::Const(ConstKind::Case(a, b, c)), [scrut, l, r])
    }

    /// The numeral value of this term, if it is one.
    pub fn as_numeral(&self) -> Option<u64> {
        let mut t = self;
        let mut n = 0u64;
        loop {
            match t {
                Term::Const(ConstKind::Zero) => return Some(n),
                Term::App(f, a) if matches!(f.as_ref(), Term::Const(ConstKind::Succ)) => {
                    n += 1;
                    t = a;
                }
                _ => return None,
            }
        }
    }

    /// Application spine: head and arguments, outermost application last.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(a.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// Names of free variables.
    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(t: &Term, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
            match t {
                Term::Var(v) => {
                    if !bound.iter().any(|b| b == &v.name) {
                        acc.insert(v.name.clone());
                    }
                }
                Term::App(f, a) => {
                    go(f, bound, acc);
                    go(a, bound, acc);
                }
                Term::Abs(v, body) => {
                    bound.push(v.name.clone());
                    go(body, bound, acc);
                    bound.pop();
                }
                Term::Const(_) | Term::StateLit(_) | Term::ExLit(_) => {}
            }
        }
        let mut acc = BTreeSet::new();
        go(self, &mut Vec::new(), &mut acc);
        acc
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Symbol count: constants, variables, literals and binders each count
    /// one; applications are free. The numeral for `n` has size `n + 1`.
    pub fn size(&self) -> usize {
        match self {
            Term::App(f, a) => f.size() + a.size(),
            Term::Abs(_, b) => 1 + b.size(),
            _ => 1,
        }
    }
}

/// Equality up to renaming of bound variables. Binder types must match;
/// free variables must match by name and type; literals by value.
pub fn alpha_eq(t1: &Term, t2: &Term) -> bool {
    fn go(t1: &Term, t2: &Term, env1: &mut Vec<(String, usize)>, env2: &mut Vec<(String, usize)>, next: usize) -> bool {
        match (t1, t2) {
            (Term::Var(v1), Term::Var(v2)) => {
                let b1 = env1.iter().rev().find(|(n, _)| n == &v1.name).map(|(_, i)| *i);
                let b2 = env2.iter().rev().find(|(n, _)| n == &v2.name).map(|(_, i)| *i);
                match (b1, b2) {
                    (Some(i), Some(j)) => i == j && v1.ty == v2.ty,
                    (None, None) => v1.name == v2.name && v1.ty == v2.ty,
                    _ => false,
                }
            }
            (Term::Const(c1), Term::Const(c2)) => c1 == c2,
            (Term::StateLit(s1), Term::StateLit(s2)) => s1 == s2,
            (Term::ExLit(e1), Term::ExLit(e2)) => e1 == e2,
            (Term::App(f1, a1), Term::App(f2, a2)) => {
                go(f1, f2, env1, env2, next) && go(a1, a2, env1, env2, next)
            }
            (Term::Abs(v1, b1), Term::Abs(v2, b2)) => {
                if v1.ty != v2.ty {
                    return false;
                }
                env1.push((v1.name.clone(), next));
                env2.push((v2.name.clone(), next));
                let r = go(b1, b2, env1, env2, next + 1);
                env1.pop();
                env2.pop();
                r
            }
            _ => false,
        }
    }
    go(t1, t2, &mut Vec::new(), &mut Vec::new(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerals() {
        assert_eq!(Term::numeral(0), Term::zero());
        let two = Term::numeral(2);
        assert_eq!(two.as_numeral(), Some(2));
        assert_eq!(Term::numeral(5).size(), 6);
        assert_eq!(Term::unit_val().as_numeral(), None);
    }

    #[test]
    fn alpha_eq_examples() {
        let idx = Term::lam("x", Type::Nat, Term::var("x", Type::Nat));
        let idy = Term::lam("y", Type::Nat, Term::var("y", Type::Nat));
        assert!(alpha_eq(&idx, &idy));

        // \x.\y.x vs \y.\x.x differ in binding structure.
        let t1 = Term::lam(
            "x",
            Type::Nat,
            Term::lam("y", Type::Nat, Term::var("x", Type::Nat)),
        );
        let t2 = Term::lam(
            "y",
            Type::Nat,
            Term::lam("x", Type::Nat, Term::var("x", Type::Nat)),
        );
        assert!(!alpha_eq(&t1, &t2));

        assert!(alpha_eq(&Term::zero(), &Term::zero()));

        // Free variables match by name.
        assert!(!alpha_eq(&Term::var("a", Type::Nat), &Term::var("b", Type::Nat)));
    }

    #[test]
    fn spine_collects_args_in_order() {
        let t = Term::apps(Term::var("f", Type::Nat), [Term::zero(), Term::unit_val()]);
        let (head, args) = t.spine();
        assert!(matches!(head, Term::Var(v) if v.name == "f"));
        assert_eq!(args.len(), 2);
        assert_eq!(args[0], &Term::zero());
    }

    #[test]
    fn free_vars_respect_binders() {
        let t = Term::lam("x", Type::Nat, Term::app(Term::var("x", Type::Nat), Term::var("y", Type::Nat)));
        assert_eq!(t.free_vars().into_iter().collect::<Vec<_>>(), vec!["y".to_string()]);
    }
}
