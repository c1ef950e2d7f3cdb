//! Reduction: one-step leftmost-outermost reduction and full normalization.
//!
//! The rules are beta, the product and sum rules, the guarded recursor rule
//! `Rec_n h m ~> h m (Rec_m h)` when `m < n` or `n = inf` (else the dummy
//! term), and the literal rules for `query`/`eval`/`exmerge`, which fire only
//! when their state/exception arguments are literals and their numeric
//! arguments are numerals. Strong normalization makes the strategy choice
//! observationally irrelevant; one deterministic order keeps tests simple.

use thiserror::Error;

use crate::kernel::subst::subst;
use crate::kernel::term::{ConstKind, Guard, Term, Type};
use crate::kernel::typing::TypeError;
use crate::runtime::{self, ExceptionValue, KnowledgeState, RuntimeError};
use crate::sig::{Signature, EX, STATE};

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("normalization exceeded the fuel budget of {0} steps")]
    FuelExhausted(u64),
    #[error("no dummy term exists for uninhabited base type `{0}`")]
    UninhabitedBase(String),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("no redex at the requested position")]
    NoRedexAt,
}

/// The canonical inhabitant of a type: unit, zero, the empty state or
/// exception literal, a constant function, a pair of dummies, or a left
/// injection.
pub fn dummy(ty: &Type) -> Result<Term, KernelError> {
    Ok(match ty {
        Type::Unit => Term::unit_val(),
        Type::Nat => Term::zero(),
        Type::Base(name) if name == STATE => Term::StateLit(KnowledgeState::empty()),
        Type::Base(name) if name == EX => Term::ExLit(ExceptionValue::empty()),
        Type::Base(name) => return Err(KernelError::UninhabitedBase(name.clone())),
        Type::Arrow(d, c) => Term::lam("_", (**d).clone(), dummy(c)?),
        Type::Prod(l, r) => Term::pair((**l).clone(), (**r).clone(), dummy(l)?, dummy(r)?),
        Type::Sum(l, r) => Term::inl((**l).clone(), (**r).clone(), dummy(l)?),
    })
}

/// `succ` applied `n` times to `zero`.
pub fn mk_numeral(n: u64) -> Term {
    Term::numeral(n)
}

fn query_result(hit: Option<u64>) -> Term {
    match hit {
        None => Term::inl(Type::Unit, Type::Nat, Term::unit_val()),
        Some(m) => Term::inr(Type::Unit, Type::Nat, Term::numeral(m)),
    }
}

fn eval_result(out: Option<ExceptionValue>) -> Term {
    match out {
        None => Term::inl(Type::Unit, Type::ex(), Term::unit_val()),
        Some(e) => Term::inr(Type::Unit, Type::ex(), Term::ExLit(e)),
    }
}

/// Contract the redex at the root, if the root is one.
fn contract_root(sig: &Signature, t: &Term) -> Result<Option<Term>, KernelError> {
    if let Term::App(f, a) = t {
        if let Term::Abs(v, body) = f.as_ref() {
            return Ok(Some(subst(body, &v.name, a)));
        }
    }
    let (head, args) = t.spine();
    let head = match head {
        Term::Const(c) => c,
        _ => return Ok(None),
    };
    match head {
        ConstKind::ProjL(..) | ConstKind::ProjR(..) if args.len() == 1 => {
            let (ph, pargs) = args[0].spine();
            if matches!(ph, Term::Const(ConstKind::Pair(..))) && pargs.len() == 2 {
                let pick = if matches!(head, ConstKind::ProjL(..)) { 0 } else { 1 };
                return Ok(Some(pargs[pick].clone()));
            }
            Ok(None)
        }
        ConstKind::Case(..) if args.len() == 3 => {
            let (sh, sargs) = args[0].spine();
            match sh {
                Term::Const(ConstKind::InjL(..)) if sargs.len() == 1 => {
                    Ok(Some(Term::app(args[1].clone(), sargs[0].clone())))
                }
                Term::Const(ConstKind::InjR(..)) if sargs.len() == 1 => {
                    Ok(Some(Term::app(args[2].clone(), sargs[0].clone())))
                }
                _ => Ok(None),
            }
        }
        ConstKind::Rec(guard, c) if args.len() == 2 => {
            let m = match args[1].as_numeral() {
                Some(m) => m,
                None => return Ok(None),
            };
            if guard.admits(m) {
                let h = args[0].clone();
                let rec_m = Term::Const(ConstKind::Rec(Guard::Fin(m), c.clone()));
                Ok(Some(Term::apps(h.clone(), [args[1].clone(), Term::app(rec_m, h)])))
            } else {
                Ok(Some(dummy(c)?))
            }
        }
        ConstKind::Query(p) if args.len() == p.params() + 1 => {
            let state = match args[0] {
                Term::StateLit(s) => s,
                _ => return Ok(None),
            };
            let mut params = Vec::with_capacity(p.params());
            for a in &args[1..] {
                match a.as_numeral() {
                    Some(n) => params.push(n),
                    None => return Ok(None),
                }
            }
            let hit = runtime::query(sig, &p.name, state, &params)?;
            Ok(Some(query_result(hit)))
        }
        ConstKind::Eval(p) if args.len() == p.params() + 1 => {
            let mut nums = Vec::with_capacity(args.len());
            for a in &args {
                match a.as_numeral() {
                    Some(n) => nums.push(n),
                    None => return Ok(None),
                }
            }
            let candidate = nums.pop().expect("eval has at least the candidate argument");
            let out = runtime::eval_pred(sig, &p.name, &nums, candidate)?;
            Ok(Some(eval_result(out)))
        }
        ConstKind::Exmerge if args.len() == 2 => match (args[0], args[1]) {
            (Term::ExLit(e1), Term::ExLit(e2)) => Ok(Some(Term::ExLit(
                runtime::merge_exceptions(e1, e2, sig.merge_strategy),
            ))),
            _ => Ok(None),
        },
        _ => Ok(None),
    }
}

/// One leftmost-outermost reduction step; `None` when the term is normal.
pub fn step(sig: &Signature, t: &Term) -> Result<Option<Term>, KernelError> {
    if let Some(t2) = contract_root(sig, t)? {
        return Ok(Some(t2));
    }
    match t {
        Term::App(f, a) => {
            if let Some(f2) = step(sig, f)? {
                return Ok(Some(Term::App(Box::new(f2), a.clone())));
            }
            if let Some(a2) = step(sig, a)? {
                return Ok(Some(Term::App(f.clone(), Box::new(a2))));
            }
            Ok(None)
        }
        Term::Abs(v, body) => Ok(step(sig, body)?
            .map(|b2| Term::Abs(v.clone(), Box::new(b2)))),
        _ => Ok(None),
    }
}

/// Normalize within a step budget. Strong normalization guarantees
/// termination, so running out of fuel signals a kernel bug and is reported
/// as an error, never as silent truncation.
pub fn normalize(sig: &Signature, t: &Term, fuel: u64) -> Result<Term, KernelError> {
    let mut cur = t.clone();
    for _ in 0..fuel {
        match step(sig, &cur)? {
            Some(next) => cur = next,
            None => return Ok(cur),
        }
    }
    if step(sig, &cur)?.is_none() {
        return Ok(cur);
    }
    Err(KernelError::FuelExhausted(fuel))
}

/// All intermediate terms of the leftmost-outermost reduction, starting with
/// `t` and ending at the normal form.
pub fn normalize_trace(sig: &Signature, t: &Term, fuel: u64) -> Result<Vec<Term>, KernelError> {
    let mut out = vec![t.clone()];
    let mut cur = t.clone();
    for _ in 0..fuel {
        match step(sig, &cur)? {
            Some(next) => {
                out.push(next.clone());
                cur = next;
            }
            None => return Ok(out),
        }
    }
    Err(KernelError::FuelExhausted(fuel))
}

pub fn is_normal(sig: &Signature, t: &Term) -> Result<bool, KernelError> {
    Ok(step(sig, t)?.is_none())
}

/// Path to a subterm: 0 descends into an application's function or a
/// binder's body, 1 into an application's argument.
pub type Path = Vec<u8>;

/// Positions of all redexes in the term, in depth-first order.
pub fn redex_positions(sig: &Signature, t: &Term) -> Vec<Path> {
    fn go(sig: &Signature, t: &Term, here: &mut Path, acc: &mut Vec<Path>) {
        if matches!(contract_root(sig, t), Ok(Some(_))) {
            acc.push(here.clone());
        }
        match t {
            Term::App(f, a) => {
                here.push(0);
                go(sig, f, here, acc);
                here.pop();
                here.push(1);
                go(sig, a, here, acc);
                here.pop();
            }
            Term::Abs(_, body) => {
                here.push(0);
                go(sig, body, here, acc);
                here.pop();
            }
            _ => {}
        }
    }
    let mut acc = Vec::new();
    go(sig, t, &mut Vec::new(), &mut acc);
    acc
}

/// Contract the redex at `path`.
pub fn reduce_at(sig: &Signature, t: &Term, path: &[u8]) -> Result<Term, KernelError> {
    match path.split_first() {
        None => contract_root(sig, t)?.ok_or(KernelError::NoRedexAt),
        Some((&0, rest)) => match t {
            Term::App(f, a) => Ok(Term::App(Box::new(reduce_at(sig, f, rest)?), a.clone())),
            Term::Abs(v, body) => {
                Ok(Term::Abs(v.clone(), Box::new(reduce_at(sig, body, rest)?)))
            }
            _ => Err(KernelError::NoRedexAt),
        },
        Some((&1, rest)) => match t {
            Term::App(f, a) => Ok(Term::App(f.clone(), Box::new(reduce_at(sig, a, rest)?))),
            _ => Err(KernelError::NoRedexAt),
        },
        Some(_) => Err(KernelError::NoRedexAt),
    }
}
