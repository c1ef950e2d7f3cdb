//! Typing: every constant's type scheme and the synthesis of a unique type
//! for each term.

use std::collections::HashMap;

use thiserror::Error;

use crate::kernel::term::{ConstKind, Term, Type};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("variable `{name}` annotated {found:?} but bound at {expected:?}")]
    VarMismatch { name: String, expected: Type, found: Type },
    #[error("cannot apply a term of non-arrow type {0:?}")]
    NotAFunction(Type),
    #[error("argument type mismatch: function expects {expected:?}, argument has {found:?}")]
    ArgMismatch { expected: Type, found: Type },
}

/// Typing context for free variables.
#[derive(Clone, Default, Debug)]
pub struct TypeCtx {
    vars: HashMap<String, Type>,
}

impl TypeCtx {
    pub fn new() -> Self {
        TypeCtx::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, ty: Type) -> &mut Self {
        self.vars.insert(name.into(), ty);
        self
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        self.vars.get(name)
    }
}

pub fn const_type(c: &ConstKind) -> Type {
    match c {
        ConstKind::UnitVal => Type::Unit,
        ConstKind::Pair(a, b) => Type::arrows(
            [a.clone(), b.clone()],
            Type::prod(a.clone(), b.clone()),
        ),
        ConstKind::ProjL(a, b) => Type::arrow(Type::prod(a.clone(), b.clone()), a.clone()),
        ConstKind::ProjR(a, b) => Type::arrow(Type::prod(a.clone(), b.clone()), b.clone()),
        ConstKind::InjL(a, b) => Type::arrow(a.clone(), Type::sum(a.clone(), b.clone())),
        ConstKind::InjR(a, b) => Type::arrow(b.clone(), Type::sum(a.clone(), b.clone())),
        ConstKind::Case(a, b, c) => Type::arrows(
            [
                Type::sum(a.clone(), b.clone()),
                Type::arrow(a.clone(), c.clone()),
                Type::arrow(b.clone(), c.clone()),
            ],
            c.clone(),
        ),
        ConstKind::Zero => Type::Nat,
        ConstKind::Succ => Type::arrow(Type::Nat, Type::Nat),
        ConstKind::Rec(_, c) => Type::arrows(
            [
                Type::arrows([Type::Nat, Type::arrow(Type::Nat, c.clone())], c.clone()),
                Type::Nat,
            ],
            c.clone(),
        ),
        ConstKind::Exmerge => Type::arrows([Type::ex(), Type::ex()], Type::ex()),
        ConstKind::Query(p) => {
            let nats = std::iter::repeat_n(Type::Nat, p.params());
            Type::arrows(
                std::iter::once(Type::state()).chain(nats),
                Type::sum(Type::Unit, Type::Nat),
            )
        }
        ConstKind::Eval(p) => {
            let nats = std::iter::repeat_n(Type::Nat, p.params() + 1);
            Type::arrows(nats, Type::sum(Type::Unit, Type::ex()))
        }
    }
}

fn synth(
    bound: &mut Vec<(String, Type)>,
    ctx: Option<&TypeCtx>,
    seen_free: &mut HashMap<String, Type>,
    t: &Term,
) -> Result<Type, TypeError> {
    match t {
        Term::Var(v) => {
            if let Some((_, ty)) = bound.iter().rev().find(|(n, _)| n == &v.name) {
                if ty != &v.ty {
                    return Err(TypeError::VarMismatch {
                        name: v.name.clone(),
                        expected: ty.clone(),
                        found: v.ty.clone(),
                    });
                }
                return Ok(v.ty.clone());
            }
            match ctx {
                None => {
                    // Self-annotated free variables must agree across
                    // occurrences.
                    if let Some(prev) = seen_free.insert(v.name.clone(), v.ty.clone()) {
                        if prev != v.ty {
                            return Err(TypeError::VarMismatch {
                                name: v.name.clone(),
                                expected: prev,
                                found: v.ty.clone(),
                            });
                        }
                    }
                    Ok(v.ty.clone())
                }
                Some(c) => match c.lookup(&v.name) {
                    Some(ty) if ty == &v.ty => Ok(v.ty.clone()),
                    Some(ty) => Err(TypeError::VarMismatch {
                        name: v.name.clone(),
                        expected: ty.clone(),
                        found: v.ty.clone(),
                    }),
                    None => Err(TypeError::Unbound(v.name.clone())),
                },
            }
        }
        Term::Const(c) => Ok(const_type(c)),
        Term::StateLit(_) => Ok(Type::state()),
        Term::ExLit(_) => Ok(Type::ex()),
        Term::App(f, a) => {
            let tf = synth(bound, ctx, seen_free, f)?;
            let ta = synth(bound, ctx, seen_free, a)?;
            match tf {
                Type::Arrow(dom, cod) => {
                    if *dom == ta {
                        Ok(*cod)
                    } else {
                        Err(TypeError::ArgMismatch { expected: *dom, found: ta })
                    }
                }
                other => Err(TypeError::NotAFunction(other)),
            }
        }
        Term::Abs(v, body) => {
            bound.push((v.name.clone(), v.ty.clone()));
            let tb = synth(bound, ctx, seen_free, body);
            bound.pop();
            Ok(Type::arrow(v.ty.clone(), tb?))
        }
    }
}

/// Type of a term whose free variables must all be bound in `ctx`.
pub fn type_of(ctx: &TypeCtx, t: &Term) -> Result<Type, TypeError> {
    synth(&mut Vec::new(), Some(ctx), &mut HashMap::new(), t)
}

/// Type of a term with self-annotated free variables (each free occurrence
/// supplies its own type; occurrences must agree with each other and with
/// any enclosing binder).
pub fn type_of_open(t: &Term) -> Result<Type, TypeError> {
    synth(&mut Vec::new(), None, &mut HashMap::new(), t)
}

/// Type of a closed term.
pub fn type_of_closed(t: &Term) -> Result<Type, TypeError> {
    type_of(&TypeCtx::new(), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::PredSym;

    #[test]
    fn constructor_typing_per_constant_table() {
        let t = Term::pair(Type::Nat, Type::Unit, Term::zero(), Term::unit_val());
        assert_eq!(type_of_closed(&t).unwrap(), Type::prod(Type::Nat, Type::Unit));
    }

    #[test]
    fn case_typing() {
        // case (inl zero) (\n.n) (\u.zero) : Nat
        let scrut = Term::inl(Type::Nat, Type::Unit, Term::zero());
        let l = Term::lam("n", Type::Nat, Term::var("n", Type::Nat));
        let r = Term::lam("u", Type::Unit, Term::zero());
        let t = Term::case(Type::Nat, Type::Unit, Type::Nat, scrut, l, r);
        assert_eq!(type_of_closed(&t).unwrap(), Type::Nat);
    }

    #[test]
    fn ill_typed_application() {
        let t = Term::app(Term::zero(), Term::zero());
        assert!(matches!(type_of_closed(&t), Err(TypeError::NotAFunction(Type::Nat))));
    }

    #[test]
    fn unbound_and_ctx() {
        let t = Term::var("x", Type::Nat);
        assert!(matches!(type_of_closed(&t), Err(TypeError::Unbound(_))));
        let mut ctx = TypeCtx::new();
        ctx.bind("x", Type::Nat);
        assert_eq!(type_of(&ctx, &t).unwrap(), Type::Nat);
        let mut bad = TypeCtx::new();
        bad.bind("x", Type::Unit);
        assert!(matches!(type_of(&bad, &t), Err(TypeError::VarMismatch { .. })));
    }

    #[test]
    fn open_typing_requires_coherent_free_occurrences() {
        let t = Term::app(
            Term::var("x", Type::arrow(Type::Unit, Type::Nat)),
            Term::app(
                Term::lam("y", Type::Unit, Term::var("y", Type::Unit)),
                Term::var("x", Type::Unit),
            ),
        );
        assert!(matches!(type_of_open(&t), Err(TypeError::VarMismatch { .. })));
    }

    #[test]
    fn query_eval_types() {
        let q = Term::Const(ConstKind::Query(PredSym::new("P", 2)));
        assert_eq!(
            type_of_closed(&q).unwrap(),
            Type::arrows([Type::state(), Type::Nat], Type::sum(Type::Unit, Type::Nat))
        );
        let e = Term::Const(ConstKind::Eval(PredSym::new("P", 2)));
        assert_eq!(
            type_of_closed(&e).unwrap(),
            Type::arrows([Type::Nat, Type::Nat], Type::sum(Type::Unit, Type::ex()))
        );
    }
}
