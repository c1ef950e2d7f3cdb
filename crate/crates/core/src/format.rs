//! Concrete S-expression syntax for every exchanged object: types, terms,
//! formulas, derivations, states, signatures, decorated sequents, and
//! learning traces.
//!
//! Terms print canonically and re-parse to the same term. Polymorphic
//! constants are elaborated from their arguments where possible; injections
//! and other positions whose type indices cannot be synthesized are wrapped
//! in a `(the TYPE ...)` ascription by the printer.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::extract::{inner_type, DecoratedSequent};
use crate::kernel::{const_type, ConstKind, Guard, Term, Type, TypeError};
use crate::learner::{LearnTrace, StepOutcome, Terminal, TraceStep};
use crate::logic::{ArithTerm, Context, Derivation, Formula, Rule};
use crate::monads::monad_by_name;
use crate::runtime::{ExceptionValue, KnowledgeState, RuntimeError, WitnessKey};
use crate::sexp::Sexp;
use crate::sig::{
    AtomicRule, BuiltinPred, FnInterp, Interp, MergeStrategy, RuleAtom, SigError, Signature, EX,
    STATE,
};

#[derive(Error, Debug)]
pub enum FormatError {
    #[error("malformed {what}: {detail} in `{fragment}`")]
    Malformed { what: &'static str, detail: String, fragment: String },
    #[error("unknown identifier `{0}`")]
    Unknown(String),
    #[error("`{0}` is reserved and cannot be used as a name")]
    Reserved(String),
    #[error("cannot infer the type of `{fragment}`; add a `(the TYPE ...)` ascription")]
    NeedsAnnotation { fragment: String },
    #[error("type mismatch: expected {expected:?}, found {found:?} in `{fragment}`")]
    TypeMismatch { expected: Type, found: Type, fragment: String },
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

fn bad(what: &'static str, detail: impl Into<String>, s: &Sexp) -> FormatError {
    FormatError::Malformed { what, detail: detail.into(), fragment: s.to_string() }
}

const RESERVED: &[&str] = &[
    "unit", "zero", "succ", "pair", "prl", "prr", "inl", "inr", "case", "rec", "exmerge",
    "query", "eval", "state", "ex", "lam", "app", "num", "the", "inf", "and", "or", "imp",
    "not", "forall", "exists", "false", "true", "Unit", "Nat", "State", "Ex", "->", "prod",
    "sum", "ctx", "of", "label", "term", "var", "pred", "args", "rule", "base",
];

pub fn check_ident(name: &str) -> Result<(), FormatError> {
    if name.is_empty() || RESERVED.contains(&name) || name.chars().all(|c| c.is_ascii_digit()) {
        return Err(FormatError::Reserved(name.to_string()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

pub fn type_to_sexp(ty: &Type) -> Sexp {
    match ty {
        Type::Unit => Sexp::atom("Unit"),
        Type::Nat => Sexp::atom("Nat"),
        Type::Base(n) if n == STATE || n == EX => Sexp::atom(n.clone()),
        Type::Base(n) => Sexp::list([Sexp::atom("base"), Sexp::atom(n.clone())]),
        Type::Arrow(..) => {
            let mut items = vec![Sexp::atom("->")];
            let mut cur = ty;
            while let Type::Arrow(d, c) = cur {
                items.push(type_to_sexp(d));
                cur = c;
            }
            items.push(type_to_sexp(cur));
            Sexp::List(items)
        }
        Type::Prod(a, b) => Sexp::list([Sexp::atom("prod"), type_to_sexp(a), type_to_sexp(b)]),
        Type::Sum(a, b) => Sexp::list([Sexp::atom("sum"), type_to_sexp(a), type_to_sexp(b)]),
    }
}

pub fn type_from_sexp(s: &Sexp) -> Result<Type, FormatError> {
    match s {
        Sexp::Atom(a) => match a.as_str() {
            "Unit" => Ok(Type::Unit),
            "Nat" => Ok(Type::Nat),
            "State" => Ok(Type::state()),
            "Ex" => Ok(Type::ex()),
            other => Err(FormatError::Unknown(other.to_string())),
        },
        Sexp::List(items) => match s.head() {
            Some("->") if items.len() >= 3 => {
                let parts: Vec<Type> =
                    items[1..].iter().map(type_from_sexp).collect::<Result<_, _>>()?;
                let mut it = parts.into_iter().rev();
                let last = it.next().expect("at least two parts");
                Ok(it.fold(last, |acc, d| Type::arrow(d, acc)))
            }
            Some("prod") if items.len() == 3 => {
                Ok(Type::prod(type_from_sexp(&items[1])?, type_from_sexp(&items[2])?))
            }
            Some("sum") if items.len() == 3 => {
                Ok(Type::sum(type_from_sexp(&items[1])?, type_from_sexp(&items[2])?))
            }
            Some("base") if items.len() == 2 => {
                let n = items[1].as_atom().ok_or_else(|| bad("type", "base name", s))?;
                Ok(Type::Base(n.to_string()))
            }
            _ => Err(bad("type", "unrecognized type form", s)),
        },
    }
}

// ---------------------------------------------------------------------------
// Arithmetic terms and formulas
// ---------------------------------------------------------------------------

pub fn arith_to_sexp(t: &ArithTerm) -> Sexp {
    if let Some(n) = t.as_const() {
        return Sexp::list([Sexp::atom("num"), Sexp::atom(n.to_string())]);
    }
    match t {
        ArithTerm::Var(x) => Sexp::atom(x.clone()),
        ArithTerm::Succ(inner) => Sexp::list([Sexp::atom("succ"), arith_to_sexp(inner)]),
        ArithTerm::Zero => unreachable!("constant handled above"),
        ArithTerm::Fn { name, args } => {
            let mut items = vec![Sexp::atom(name.clone())];
            items.extend(args.iter().map(arith_to_sexp));
            Sexp::List(items)
        }
    }
}

pub fn arith_from_sexp(sig: &Signature, s: &Sexp) -> Result<ArithTerm, FormatError> {
    match s {
        Sexp::Atom(a) => {
            if let Ok(n) = a.parse::<u64>() {
                return Ok(ArithTerm::num(n));
            }
            check_ident(a)?;
            Ok(ArithTerm::var(a.clone()))
        }
        Sexp::List(items) => match s.head() {
            Some("num") if items.len() == 2 => {
                let n = items[1]
                    .as_atom()
                    .and_then(|a| a.parse::<u64>().ok())
                    .ok_or_else(|| bad("arith term", "numeral", s))?;
                Ok(ArithTerm::num(n))
            }
            Some("succ") if items.len() == 2 => {
                Ok(ArithTerm::succ(arith_from_sexp(sig, &items[1])?))
            }
            Some(name) => {
                let interp = sig.fn_interp(name)?;
                if items.len() - 1 != interp.arity() {
                    return Err(bad("arith term", "function arity", s));
                }
                let args = items[1..]
                    .iter()
                    .map(|a| arith_from_sexp(sig, a))
                    .collect::<Result<_, _>>()?;
                Ok(ArithTerm::Fn { name: name.to_string(), args })
            }
            None => Err(bad("arith term", "empty list", s)),
        },
    }
}

pub fn formula_to_sexp(f: &Formula) -> Sexp {
    match f {
        Formula::Atomic { pred, args } => {
            let mut items = vec![Sexp::atom(pred.clone())];
            items.extend(args.iter().map(arith_to_sexp));
            Sexp::List(items)
        }
        Formula::False => Sexp::atom("false"),
        Formula::And(a, b) => Sexp::list([Sexp::atom("and"), formula_to_sexp(a), formula_to_sexp(b)]),
        Formula::Or(a, b) => Sexp::list([Sexp::atom("or"), formula_to_sexp(a), formula_to_sexp(b)]),
        Formula::Implies(a, b) if **b == Formula::False => {
            Sexp::list([Sexp::atom("not"), formula_to_sexp(a)])
        }
        Formula::Implies(a, b) => {
            Sexp::list([Sexp::atom("imp"), formula_to_sexp(a), formula_to_sexp(b)])
        }
        Formula::Forall(x, a) => {
            Sexp::list([Sexp::atom("forall"), Sexp::atom(x.clone()), formula_to_sexp(a)])
        }
        Formula::Exists(x, a) => {
            Sexp::list([Sexp::atom("exists"), Sexp::atom(x.clone()), formula_to_sexp(a)])
        }
    }
}

pub fn formula_from_sexp(sig: &Signature, s: &Sexp) -> Result<Formula, FormatError> {
    match s {
        Sexp::Atom(a) if a == "false" => Ok(Formula::False),
        Sexp::Atom(_) => Err(bad("formula", "bare atom is not a formula", s)),
        Sexp::List(items) => match s.head() {
            Some("and") | Some("or") | Some("imp") if items.len() == 3 => {
                let a = formula_from_sexp(sig, &items[1])?;
                let b = formula_from_sexp(sig, &items[2])?;
                Ok(match s.head().expect("nonempty") {
                    "and" => Formula::and(a, b),
                    "or" => Formula::or(a, b),
                    _ => Formula::implies(a, b),
                })
            }
            Some("not") if items.len() == 2 => {
                Ok(Formula::not(formula_from_sexp(sig, &items[1])?))
            }
            Some("forall") | Some("exists") if items.len() == 3 => {
                let x = items[1].as_atom().ok_or_else(|| bad("formula", "binder", s))?;
                check_ident(x)?;
                let body = formula_from_sexp(sig, &items[2])?;
                Ok(if s.head() == Some("forall") {
                    Formula::forall(x, body)
                } else {
                    Formula::exists(x, body)
                })
            }
            Some(pred) => {
                let decl = sig.pred(pred)?;
                if items.len() - 1 != decl.sym.arity {
                    return Err(bad("formula", "predicate arity", s));
                }
                let args = items[1..]
                    .iter()
                    .map(|a| arith_from_sexp(sig, a))
                    .collect::<Result<_, _>>()?;
                Ok(Formula::atom(pred.to_string(), args))
            }
            None => Err(bad("formula", "empty list", s)),
        },
    }
}

// ---------------------------------------------------------------------------
// States and exceptions
// ---------------------------------------------------------------------------

fn entries_to_sexp(head: &str, entries: impl Iterator<Item = (WitnessKey, u64)>) -> Sexp {
    let mut items = vec![Sexp::atom(head)];
    for (key, w) in entries {
        items.push(Sexp::list([
            Sexp::atom(key.pred.clone()),
            Sexp::List(key.params.iter().map(|p| Sexp::atom(p.to_string())).collect()),
            Sexp::atom(w.to_string()),
        ]));
    }
    Sexp::List(items)
}

pub fn state_to_sexp(s: &KnowledgeState) -> Sexp {
    entries_to_sexp("state", s.entries().map(|(k, w)| (k.clone(), w)))
}

pub fn exception_to_sexp(e: &ExceptionValue) -> Sexp {
    entries_to_sexp("ex", e.claims().map(|(k, w)| (k.clone(), w)))
}

fn entries_from_sexp(
    what: &'static str,
    items: &[Sexp],
    s: &Sexp,
) -> Result<Vec<(WitnessKey, u64)>, FormatError> {
    let mut out = Vec::new();
    for entry in items {
        let triple = entry.as_list().ok_or_else(|| bad(what, "entry", s))?;
        if triple.len() != 3 {
            return Err(bad(what, "entry must be (pred (params) witness)", s));
        }
        let pred = triple[0].as_atom().ok_or_else(|| bad(what, "predicate", s))?;
        let params = triple[1]
            .as_list()
            .ok_or_else(|| bad(what, "params", s))?
            .iter()
            .map(|p| {
                p.as_atom()
                    .and_then(|a| a.parse::<u64>().ok())
                    .ok_or_else(|| bad(what, "param", s))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let witness = triple[2]
            .as_atom()
            .and_then(|a| a.parse::<u64>().ok())
            .ok_or_else(|| bad(what, "witness", s))?;
        out.push((WitnessKey::new(pred, params), witness));
    }
    Ok(out)
}

pub fn state_from_sexp(sig: &Signature, s: &Sexp) -> Result<KnowledgeState, FormatError> {
    let items = s.as_list().ok_or_else(|| bad("state", "expected a list", s))?;
    if s.head() != Some("state") {
        return Err(bad("state", "expected (state ...)", s));
    }
    let entries = entries_from_sexp("state", &items[1..], s)?;
    Ok(KnowledgeState::new(sig, entries)?)
}

pub fn exception_from_sexp(sig: &Signature, s: &Sexp) -> Result<ExceptionValue, FormatError> {
    let items = s.as_list().ok_or_else(|| bad("exception", "expected a list", s))?;
    if s.head() != Some("ex") {
        return Err(bad("exception", "expected (ex ...)", s));
    }
    let entries = entries_from_sexp("exception", &items[1..], s)?;
    Ok(ExceptionValue::new(sig, entries)?)
}

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

pub fn term_to_sexp(t: &Term) -> Sexp {
    if let Some(n) = t.as_numeral() {
        return Sexp::list([Sexp::atom("num"), Sexp::atom(n.to_string())]);
    }
    match t {
        Term::Var(v) => Sexp::atom(v.name.clone()),
        Term::Const(c) => const_to_sexp(c),
        Term::StateLit(s) => state_to_sexp(s),
        Term::ExLit(e) => exception_to_sexp(e),
        Term::Abs(v, body) => Sexp::list([
            Sexp::atom("lam"),
            Sexp::list([Sexp::atom(v.name.clone()), type_to_sexp(&v.ty)]),
            term_to_sexp(body),
        ]),
        Term::App(..) => {
            let (head, args) = t.spine();
            match head {
                Term::Const(ConstKind::Succ) if args.len() == 1 => {
                    Sexp::list([Sexp::atom("succ"), term_to_sexp(args[0])])
                }
                Term::Const(ConstKind::Pair(..)) if args.len() == 2 => Sexp::list([
                    Sexp::atom("pair"),
                    term_to_sexp(args[0]),
                    term_to_sexp(args[1]),
                ]),
                Term::Const(ConstKind::ProjL(..)) if args.len() == 1 => {
                    Sexp::list([Sexp::atom("prl"), term_to_sexp(args[0])])
                }
                Term::Const(ConstKind::ProjR(..)) if args.len() == 1 => {
                    Sexp::list([Sexp::atom("prr"), term_to_sexp(args[0])])
                }
                Term::Const(ConstKind::InjL(a, b)) if args.len() == 1 => Sexp::list([
                    Sexp::atom("the"),
                    type_to_sexp(&Type::sum(a.clone(), b.clone())),
                    Sexp::list([Sexp::atom("inl"), term_to_sexp(args[0])]),
                ]),
                Term::Const(ConstKind::InjR(a, b)) if args.len() == 1 => Sexp::list([
                    Sexp::atom("the"),
                    type_to_sexp(&Type::sum(a.clone(), b.clone())),
                    Sexp::list([Sexp::atom("inr"), term_to_sexp(args[0])]),
                ]),
                Term::Const(ConstKind::Case(..)) if args.len() == 3 => Sexp::list([
                    Sexp::atom("case"),
                    term_to_sexp(args[0]),
                    term_to_sexp(args[1]),
                    term_to_sexp(args[2]),
                ]),
                Term::Const(ConstKind::Rec(g, _)) if matches!(args.len(), 1 | 2) => {
                    let mut items =
                        vec![Sexp::atom("rec"), guard_to_sexp(g), term_to_sexp(args[0])];
                    if let Some(m) = args.get(1) {
                        items.push(term_to_sexp(m));
                    }
                    Sexp::List(items)
                }
                Term::Const(ConstKind::Query(p)) => {
                    let mut items = vec![Sexp::atom("query"), Sexp::atom(p.name.clone())];
                    items.extend(args.iter().map(|a| term_to_sexp(a)));
                    Sexp::List(items)
                }
                Term::Const(ConstKind::Eval(p)) => {
                    let mut items = vec![Sexp::atom("eval"), Sexp::atom(p.name.clone())];
                    items.extend(args.iter().map(|a| term_to_sexp(a)));
                    Sexp::List(items)
                }
                Term::Const(ConstKind::Exmerge) if args.len() == 2 => Sexp::list([
                    Sexp::atom("exmerge"),
                    term_to_sexp(args[0]),
                    term_to_sexp(args[1]),
                ]),
                _ => {
                    let mut items = vec![Sexp::atom("app"), term_to_sexp(head)];
                    items.extend(args.iter().map(|a| term_to_sexp(a)));
                    Sexp::List(items)
                }
            }
        }
    }
}

fn guard_to_sexp(g: &Guard) -> Sexp {
    match g {
        Guard::Inf => Sexp::atom("inf"),
        Guard::Fin(n) => Sexp::atom(n.to_string()),
    }
}

fn guard_from_sexp(s: &Sexp) -> Result<Guard, FormatError> {
    match s.as_atom() {
        Some("inf") => Ok(Guard::Inf),
        Some(a) => a
            .parse::<u64>()
            .map(Guard::Fin)
            .map_err(|_| bad("guard", "expected `inf` or a numeral", s)),
        None => Err(bad("guard", "expected an atom", s)),
    }
}

/// Monomorphic constants print bare; polymorphic ones carry their full type
/// in a `the` ascription so instantiation survives the round trip.
fn const_to_sexp(c: &ConstKind) -> Sexp {
    let bare = |n: &str| Sexp::atom(n);
    match c {
        ConstKind::UnitVal => bare("unit"),
        ConstKind::Zero => bare("zero"),
        ConstKind::Succ => bare("succ"),
        ConstKind::Exmerge => bare("exmerge"),
        ConstKind::Query(p) => Sexp::list([Sexp::atom("query"), Sexp::atom(p.name.clone())]),
        ConstKind::Eval(p) => Sexp::list([Sexp::atom("eval"), Sexp::atom(p.name.clone())]),
        ConstKind::Rec(g, _) => Sexp::list([
            Sexp::atom("the"),
            type_to_sexp(&const_type(c)),
            Sexp::list([Sexp::atom("rec"), guard_to_sexp(g)]),
        ]),
        ConstKind::Pair(..)
        | ConstKind::ProjL(..)
        | ConstKind::ProjR(..)
        | ConstKind::InjL(..)
        | ConstKind::InjR(..)
        | ConstKind::Case(..) => {
            let name = match c {
                ConstKind::Pair(..) => "pair",
                ConstKind::ProjL(..) => "prl",
                ConstKind::ProjR(..) => "prr",
                ConstKind::InjL(..) => "inl",
                ConstKind::InjR(..) => "inr",
                _ => "case",
            };
            Sexp::list([Sexp::atom("the"), type_to_sexp(&const_type(c)), Sexp::atom(name)])
        }
    }
}

/// Environment for elaborating terms: lexical scope, declared free
/// variables, and whether unknown atoms may default to `Nat` variables
/// (used for machine-written realizer files that mention arithmetic
/// variables).
pub struct TermEnv<'a> {
    pub sig: &'a Signature,
    scope: Vec<(String, Type)>,
    pub free: BTreeMap<String, Type>,
    pub free_nat_vars: bool,
}

impl<'a> TermEnv<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        TermEnv { sig, scope: Vec::new(), free: BTreeMap::new(), free_nat_vars: false }
    }

    pub fn with_free(sig: &'a Signature, free: BTreeMap<String, Type>, free_nat_vars: bool) -> Self {
        TermEnv { sig, scope: Vec::new(), free, free_nat_vars }
    }

    fn lookup(&self, name: &str) -> Option<Type> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
            .or_else(|| self.free.get(name).cloned())
    }
}

pub fn term_from_sexp(env: &mut TermEnv, s: &Sexp, expected: Option<&Type>) -> Result<Term, FormatError> {
    let term = elaborate(env, s, expected)?;
    if let Some(want) = expected {
        let found = synth_type(env, &term)?;
        if &found != want {
            return Err(FormatError::TypeMismatch {
                expected: want.clone(),
                found,
                fragment: s.to_string(),
            });
        }
    }
    Ok(term)
}

fn synth_type(_env: &TermEnv, t: &Term) -> Result<Type, FormatError> {
    // Free variables carry their own annotations after elaboration.
    Ok(crate::kernel::type_of_open(t)?)
}

fn elaborate(env: &mut TermEnv, s: &Sexp, expected: Option<&Type>) -> Result<Term, FormatError> {
    match s {
        Sexp::Atom(a) => elaborate_atom(env, a, expected, s),
        Sexp::List(items) => {
            let head = match s.head() {
                Some(h) => h.to_string(),
                None => return Err(bad("term", "empty list", s)),
            };
            match head.as_str() {
                "num" => {
                    let n = items
                        .get(1)
                        .and_then(|x| x.as_atom())
                        .and_then(|a| a.parse::<u64>().ok())
                        .ok_or_else(|| bad("term", "numeral", s))?;
                    Ok(Term::numeral(n))
                }
                "the" => {
                    if items.len() != 3 {
                        return Err(bad("term", "(the TYPE TERM)", s));
                    }
                    let ty = type_from_sexp(&items[1])?;
                    let t = elaborate(env, &items[2], Some(&ty))?;
                    let found = synth_type(env, &t)?;
                    if found != ty {
                        return Err(FormatError::TypeMismatch {
                            expected: ty,
                            found,
                            fragment: s.to_string(),
                        });
                    }
                    Ok(t)
                }
                "lam" => {
                    if items.len() != 3 {
                        return Err(bad("term", "(lam (x TYPE) BODY)", s));
                    }
                    let binder = items[1].as_list().ok_or_else(|| bad("term", "binder", s))?;
                    if binder.len() != 2 {
                        return Err(bad("term", "binder must be (name TYPE)", s));
                    }
                    let name = binder[0].as_atom().ok_or_else(|| bad("term", "binder name", s))?;
                    if name != "_" {
                        check_ident(name)?;
                    }
                    let ty = type_from_sexp(&binder[1])?;
                    let body_expected = match expected {
                        Some(Type::Arrow(d, c)) if **d == ty => Some((**c).clone()),
                        _ => None,
                    };
                    env.scope.push((name.to_string(), ty.clone()));
                    let body = elaborate(env, &items[2], body_expected.as_ref())?;
                    env.scope.pop();
                    Ok(Term::lam(name, ty, body))
                }
                "app" => {
                    if items.len() < 3 {
                        return Err(bad("term", "(app F ARG...)", s));
                    }
                    let f = elaborate(env, &items[1], None)?;
                    apply_args(env, f, &items[2..], s)
                }
                "pair" => {
                    if items.len() != 3 {
                        return Err(bad("term", "(pair A B)", s));
                    }
                    let (ea, eb) = match expected {
                        Some(Type::Prod(l, r)) => (Some((**l).clone()), Some((**r).clone())),
                        _ => (None, None),
                    };
                    let a = elaborate(env, &items[1], ea.as_ref())?;
                    let b = elaborate(env, &items[2], eb.as_ref())?;
                    let ta = synth_type(env, &a)?;
                    let tb = synth_type(env, &b)?;
                    Ok(Term::pair(ta, tb, a, b))
                }
                "prl" | "prr" => {
                    if items.len() != 2 {
                        return Err(bad("term", "(prl P)", s));
                    }
                    let p = elaborate(env, &items[1], None)?;
                    match synth_type(env, &p)? {
                        Type::Prod(l, r) => Ok(if head == "prl" {
                            Term::prl(*l, *r, p)
                        } else {
                            Term::prr(*l, *r, p)
                        }),
                        other => Err(FormatError::TypeMismatch {
                            expected: Type::prod(Type::Unit, Type::Unit),
                            found: other,
                            fragment: s.to_string(),
                        }),
                    }
                }
                "inl" | "inr" => {
                    if items.len() != 2 {
                        return Err(bad("term", "(inl A)", s));
                    }
                    let (l, r) = match expected {
                        Some(Type::Sum(l, r)) => ((**l).clone(), (**r).clone()),
                        _ => return Err(FormatError::NeedsAnnotation { fragment: s.to_string() }),
                    };
                    if head == "inl" {
                        let a = elaborate(env, &items[1], Some(&l))?;
                        Ok(Term::inl(l, r, a))
                    } else {
                        let b = elaborate(env, &items[1], Some(&r))?;
                        Ok(Term::inr(l, r, b))
                    }
                }
                "case" => {
                    if items.len() != 4 {
                        return Err(bad("term", "(case S L R)", s));
                    }
                    let scrut = elaborate(env, &items[1], None)?;
                    let (a, b) = match synth_type(env, &scrut)? {
                        Type::Sum(a, b) => (*a, *b),
                        other => {
                            return Err(FormatError::TypeMismatch {
                                expected: Type::sum(Type::Unit, Type::Unit),
                                found: other,
                                fragment: s.to_string(),
                            })
                        }
                    };
                    let expected_l = expected.map(|z| Type::arrow(a.clone(), z.clone()));
                    let f = elaborate(env, &items[2], expected_l.as_ref())?;
                    let z = match synth_type(env, &f)? {
                        Type::Arrow(_, z) => *z,
                        other => {
                            return Err(FormatError::TypeMismatch {
                                expected: Type::arrow(a, Type::Unit),
                                found: other,
                                fragment: s.to_string(),
                            })
                        }
                    };
                    let g = elaborate(env, &items[3], Some(&Type::arrow(b.clone(), z.clone())))?;
                    Ok(Term::case(a, b, z, scrut, f, g))
                }
                "rec" => {
                    if items.len() < 2 {
                        return Err(bad("term", "(rec GUARD [H [M]])", s));
                    }
                    let guard = guard_from_sexp(&items[1])?;
                    if items.len() == 2 {
                        // Bare recursor: the result type comes from the
                        // expected type (h-type -> Nat -> C).
                        let c = match expected {
                            Some(Type::Arrow(_, cod)) => match cod.as_ref() {
                                Type::Arrow(_, c) => (**c).clone(),
                                _ => {
                                    return Err(FormatError::NeedsAnnotation {
                                        fragment: s.to_string(),
                                    })
                                }
                            },
                            _ => return Err(FormatError::NeedsAnnotation { fragment: s.to_string() }),
                        };
                        return Ok(Term::Const(ConstKind::Rec(guard, c)));
                    }
                    let h = elaborate(env, &items[2], None)?;
                    let c = match synth_type(env, &h)? {
                        Type::Arrow(_, cod) => match *cod {
                            Type::Arrow(_, c) => *c,
                            other => {
                                return Err(FormatError::TypeMismatch {
                                    expected: Type::arrow(
                                        Type::arrow(Type::Nat, Type::Unit),
                                        Type::Unit,
                                    ),
                                    found: other,
                                    fragment: s.to_string(),
                                })
                            }
                        },
                        other => {
                            return Err(FormatError::TypeMismatch {
                                expected: Type::arrow(Type::Nat, Type::Unit),
                                found: other,
                                fragment: s.to_string(),
                            })
                        }
                    };
                    let rec = Term::app(Term::Const(ConstKind::Rec(guard, c)), h);
                    apply_args(env, rec, &items[3..], s)
                }
                "query" | "eval" => {
                    if items.len() < 2 {
                        return Err(bad("term", "(query P ARGS...)", s));
                    }
                    let pred = items[1].as_atom().ok_or_else(|| bad("term", "predicate", s))?;
                    let sym = env.sig.pred(pred)?.sym.clone();
                    let c = if head == "query" {
                        Term::Const(ConstKind::Query(sym))
                    } else {
                        Term::Const(ConstKind::Eval(sym))
                    };
                    apply_args(env, c, &items[2..], s)
                }
                "state" => Ok(Term::StateLit(state_from_sexp(env.sig, s)?)),
                "ex" => Ok(Term::ExLit(exception_from_sexp(env.sig, s)?)),
                "succ" if items.len() == 2 => {
                    let a = elaborate(env, &items[1], Some(&Type::Nat))?;
                    Ok(Term::app(Term::Const(ConstKind::Succ), a))
                }
                "exmerge" => {
                    apply_args(env, Term::Const(ConstKind::Exmerge), &items[1..], s)
                }
                _ => {
                    // General application with an atom or list head.
                    let f = elaborate(env, &items[0], None)?;
                    apply_args(env, f, &items[1..], s)
                }
            }
        }
    }
}

fn elaborate_atom(
    env: &mut TermEnv,
    a: &str,
    expected: Option<&Type>,
    s: &Sexp,
) -> Result<Term, FormatError> {
    if let Ok(n) = a.parse::<u64>() {
        return Ok(Term::numeral(n));
    }
    match a {
        "unit" => Ok(Term::unit_val()),
        "zero" => Ok(Term::zero()),
        "succ" => Ok(Term::Const(ConstKind::Succ)),
        "exmerge" => Ok(Term::Const(ConstKind::Exmerge)),
        "pair" | "prl" | "prr" | "inl" | "inr" | "case" => {
            let want = expected.ok_or_else(|| FormatError::NeedsAnnotation {
                fragment: s.to_string(),
            })?;
            constant_from_scheme(a, want)
                .ok_or_else(|| FormatError::NeedsAnnotation { fragment: s.to_string() })
        }
        _ => {
            if let Some(ty) = env.lookup(a) {
                return Ok(Term::var(a, ty));
            }
            if env.free_nat_vars {
                check_ident(a)?;
                return Ok(Term::var(a, Type::Nat));
            }
            Err(FormatError::Unknown(a.to_string()))
        }
    }
}

/// Recover a polymorphic constant's instantiation from a full type
/// ascription.
fn constant_from_scheme(name: &str, ty: &Type) -> Option<Term> {
    let c = match (name, ty) {
        ("pair", Type::Arrow(a, rest)) => match rest.as_ref() {
            Type::Arrow(b, _) => ConstKind::Pair((**a).clone(), (**b).clone()),
            _ => return None,
        },
        ("prl", Type::Arrow(p, _)) => match p.as_ref() {
            Type::Prod(a, b) => ConstKind::ProjL((**a).clone(), (**b).clone()),
            _ => return None,
        },
        ("prr", Type::Arrow(p, _)) => match p.as_ref() {
            Type::Prod(a, b) => ConstKind::ProjR((**a).clone(), (**b).clone()),
            _ => return None,
        },
        ("inl", Type::Arrow(_, sum)) | ("inr", Type::Arrow(_, sum)) => match sum.as_ref() {
            Type::Sum(a, b) => {
                if name == "inl" {
                    ConstKind::InjL((**a).clone(), (**b).clone())
                } else {
                    ConstKind::InjR((**a).clone(), (**b).clone())
                }
            }
            _ => return None,
        },
        ("case", Type::Arrow(sum, rest)) => match (sum.as_ref(), rest.as_ref()) {
            (Type::Sum(a, b), Type::Arrow(_, rest2)) => match rest2.as_ref() {
                Type::Arrow(_, z) => {
                    ConstKind::Case((**a).clone(), (**b).clone(), (**z).clone())
                }
                _ => return None,
            },
            _ => return None,
        },
        _ => return None,
    };
    let t = Term::Const(c);
    (&const_type(match &t {
        Term::Const(c) => c,
        _ => unreachable!(),
    }) == ty)
        .then_some(t)
}

fn apply_args(
    env: &mut TermEnv,
    f: Term,
    args: &[Sexp],
    s: &Sexp,
) -> Result<Term, FormatError> {
    let mut out = f;
    for a in args {
        let fty = synth_type(env, &out)?;
        let dom = match fty {
            Type::Arrow(d, _) => *d,
            other => {
                return Err(FormatError::TypeMismatch {
                    expected: Type::arrow(Type::Unit, Type::Unit),
                    found: other,
                    fragment: s.to_string(),
                })
            }
        };
        let arg = elaborate(env, a, Some(&dom))?;
        out = Term::app(out, arg);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Derivations
// ---------------------------------------------------------------------------

fn ctx_to_sexp(ctx: &Context) -> Sexp {
    let mut items = vec![Sexp::atom("ctx")];
    for (l, f) in ctx {
        items.push(Sexp::list([Sexp::atom(l.clone()), formula_to_sexp(f)]));
    }
    Sexp::List(items)
}

fn ctx_from_sexp(sig: &Signature, s: &Sexp) -> Result<Context, FormatError> {
    let items = s.as_list().ok_or_else(|| bad("context", "expected (ctx ...)", s))?;
    if s.head() != Some("ctx") {
        return Err(bad("context", "expected (ctx ...)", s));
    }
    let mut out = Vec::new();
    for entry in &items[1..] {
        let pair = entry.as_list().ok_or_else(|| bad("context", "entry", s))?;
        if pair.len() != 2 {
            return Err(bad("context", "entry must be (label FORMULA)", s));
        }
        let label = pair[0].as_atom().ok_or_else(|| bad("context", "label", s))?;
        check_ident(label)?;
        out.push((label.to_string(), formula_from_sexp(sig, &pair[1])?));
    }
    Ok(out)
}

pub fn derivation_to_sexp(d: &Derivation) -> Sexp {
    let mut items = vec![
        Sexp::atom(d.rule.tag()),
        ctx_to_sexp(&d.ctx),
        Sexp::list([Sexp::atom("of"), formula_to_sexp(&d.concl)]),
    ];
    match &d.rule {
        Rule::Id { label } => {
            items.push(Sexp::list([Sexp::atom("label"), Sexp::atom(label.clone())]))
        }
        Rule::Atm { rule, args } => {
            items.push(Sexp::list([Sexp::atom("rule"), Sexp::atom(rule.clone())]));
            let mut a = vec![Sexp::atom("args")];
            a.extend(args.iter().map(arith_to_sexp));
            items.push(Sexp::List(a));
        }
        Rule::ForallE { term } | Rule::ExistsI { term } => {
            items.push(Sexp::list([Sexp::atom("term"), arith_to_sexp(term)]))
        }
        Rule::ExistsE { eigen } | Rule::Ind { eigen } => {
            items.push(Sexp::list([Sexp::atom("var"), Sexp::atom(eigen.clone())]))
        }
        Rule::Em { pred, args } => {
            items.push(Sexp::list([Sexp::atom("pred"), Sexp::atom(pred.clone())]));
            let mut a = vec![Sexp::atom("args")];
            a.extend(args.iter().map(arith_to_sexp));
            items.push(Sexp::List(a));
        }
        _ => {}
    }
    items.extend(d.premises.iter().map(derivation_to_sexp));
    Sexp::List(items)
}

pub fn derivation_from_sexp(sig: &Signature, s: &Sexp) -> Result<Derivation, FormatError> {
    let items = s.as_list().ok_or_else(|| bad("derivation", "expected a list", s))?;
    let tag = s.head().ok_or_else(|| bad("derivation", "missing rule tag", s))?.to_string();
    if items.len() < 3 {
        return Err(bad("derivation", "expected (RULE (ctx ...) (of F) ...)", s));
    }
    let ctx = ctx_from_sexp(sig, &items[1])?;
    let of = items[2].as_list().ok_or_else(|| bad("derivation", "(of F)", s))?;
    if items[2].head() != Some("of") || of.len() != 2 {
        return Err(bad("derivation", "(of F)", s));
    }
    let concl = formula_from_sexp(sig, &of[1])?;
    let mut rest = &items[3..];

    let take_tagged = |rest: &mut &[Sexp], tag: &str| -> Option<Sexp> {
        if let Some(first) = rest.first() {
            if first.head() == Some(tag) {
                let x = first.clone();
                *rest = &rest[1..];
                return Some(x);
            }
        }
        None
    };
    // Single payload of a tagged form like (label a) or (term t).
    let payload = |tagged: &Sexp, what: &'static str| -> Result<Sexp, FormatError> {
        tagged
            .as_list()
            .and_then(|l| l.get(1))
            .cloned()
            .ok_or_else(|| bad("derivation", format!("missing {what} payload"), tagged))
    };
    let payload_atom = |tagged: &Sexp, what: &'static str| -> Result<String, FormatError> {
        payload(tagged, what)?
            .as_atom()
            .map(str::to_string)
            .ok_or_else(|| bad("derivation", format!("{what} must be an atom"), tagged))
    };

    let rule = match tag.as_str() {
        "id" => {
            let l = take_tagged(&mut rest, "label")
                .ok_or_else(|| bad("derivation", "id needs (label ...)", s))?;
            Rule::Id { label: payload_atom(&l, "label")? }
        }
        "atm" => {
            let r = take_tagged(&mut rest, "rule")
                .ok_or_else(|| bad("derivation", "atm needs (rule ...)", s))?;
            let rule_name = payload_atom(&r, "rule name")?;
            let a = take_tagged(&mut rest, "args")
                .ok_or_else(|| bad("derivation", "atm needs (args ...)", s))?;
            let args = a.as_list().expect("tagged form is a list")[1..]
                .iter()
                .map(|x| arith_from_sexp(sig, x))
                .collect::<Result<_, _>>()?;
            Rule::Atm { rule: rule_name, args }
        }
        "and-i" => Rule::AndI,
        "and-el" => Rule::AndEL,
        "and-er" => Rule::AndER,
        "or-il" => Rule::OrIL,
        "or-ir" => Rule::OrIR,
        "or-e" => Rule::OrE,
        "imp-i" => Rule::ImpI,
        "imp-e" => Rule::ImpE,
        "all-i" => Rule::ForallI,
        "all-e" => {
            let t = take_tagged(&mut rest, "term")
                .ok_or_else(|| bad("derivation", "all-e needs (term ...)", s))?;
            Rule::ForallE { term: arith_from_sexp(sig, &payload(&t, "term")?)? }
        }
        "ex-i" => {
            let t = take_tagged(&mut rest, "term")
                .ok_or_else(|| bad("derivation", "ex-i needs (term ...)", s))?;
            Rule::ExistsI { term: arith_from_sexp(sig, &payload(&t, "term")?)? }
        }
        "ex-e" => {
            let v = take_tagged(&mut rest, "var")
                .ok_or_else(|| bad("derivation", "ex-e needs (var ...)", s))?;
            Rule::ExistsE { eigen: payload_atom(&v, "eigenvariable")? }
        }
        "ind" => {
            let v = take_tagged(&mut rest, "var")
                .ok_or_else(|| bad("derivation", "ind needs (var ...)", s))?;
            Rule::Ind { eigen: payload_atom(&v, "eigenvariable")? }
        }
        "em" => {
            let p = take_tagged(&mut rest, "pred")
                .ok_or_else(|| bad("derivation", "em needs (pred ...)", s))?;
            let pred = payload_atom(&p, "predicate")?;
            let a = take_tagged(&mut rest, "args")
                .ok_or_else(|| bad("derivation", "em needs (args ...)", s))?;
            let args = a.as_list().expect("tagged form is a list")[1..]
                .iter()
                .map(|x| arith_from_sexp(sig, x))
                .collect::<Result<_, _>>()?;
            Rule::Em { pred, args }
        }
        other => return Err(bad("derivation", format!("unknown rule `{other}`"), s)),
    };
    let premises = rest
        .iter()
        .map(|p| derivation_from_sexp(sig, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Derivation::new(rule, ctx, concl, premises))
}

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

pub fn signature_to_sexp(sig: &Signature) -> Sexp {
    let mut items = vec![Sexp::atom("signature")];
    for decl in sig.preds() {
        let interp = match &decl.interp {
            Interp::Builtin(b) => Sexp::list([Sexp::atom("builtin"), Sexp::atom(b.name())]),
            Interp::Table { default, rows } => {
                let mut t = vec![
                    Sexp::atom("table"),
                    Sexp::list([Sexp::atom("default"), Sexp::atom(default.to_string())]),
                ];
                for (args, val) in rows {
                    t.push(Sexp::list([
                        Sexp::List(args.iter().map(|a| Sexp::atom(a.to_string())).collect()),
                        Sexp::atom(val.to_string()),
                    ]));
                }
                Sexp::List(t)
            }
        };
        items.push(Sexp::list([
            Sexp::atom("pred"),
            Sexp::atom(decl.sym.name.clone()),
            Sexp::atom(decl.sym.arity.to_string()),
            interp,
        ]));
    }
    for (name, interp) in sig.fns() {
        items.push(Sexp::list([
            Sexp::atom("fn"),
            Sexp::atom(name.clone()),
            Sexp::list([Sexp::atom("builtin"), Sexp::atom(interp.name())]),
        ]));
    }
    for rule in sig.rules() {
        let atom_sexp = |a: &RuleAtom| match a {
            RuleAtom::Pred(p) => Sexp::atom(p.clone()),
            RuleAtom::False => Sexp::atom("false"),
        };
        let mut prem = vec![Sexp::atom("premises")];
        prem.extend(rule.premises.iter().map(atom_sexp));
        items.push(Sexp::list([
            Sexp::atom("rule"),
            Sexp::atom(rule.name.clone()),
            Sexp::List(prem),
            Sexp::list([Sexp::atom("concl"), atom_sexp(&rule.conclusion)]),
        ]));
    }
    if sig.merge_strategy == MergeStrategy::MinWitness {
        items.push(Sexp::list([Sexp::atom("merge"), Sexp::atom("min-witness")]));
    }
    Sexp::List(items)
}

pub fn signature_from_sexp(s: &Sexp) -> Result<Signature, FormatError> {
    let items = s.as_list().ok_or_else(|| bad("signature", "expected (signature ...)", s))?;
    if s.head() != Some("signature") {
        return Err(bad("signature", "expected (signature ...)", s));
    }
    let mut sig = Signature::new();
    for item in &items[1..] {
        match item.head() {
            Some("pred") => {
                let l = item.as_list().unwrap();
                if l.len() != 4 {
                    return Err(bad("signature", "(pred NAME ARITY INTERP)", item));
                }
                let name = l[1].as_atom().ok_or_else(|| bad("signature", "name", item))?;
                check_ident(name)?;
                let arity = l[2]
                    .as_atom()
                    .and_then(|a| a.parse::<usize>().ok())
                    .ok_or_else(|| bad("signature", "arity", item))?;
                let interp = interp_from_sexp(&l[3])?;
                sig.declare_pred(name, arity, interp)?;
            }
            Some("fn") => {
                let l = item.as_list().unwrap();
                if l.len() != 3 {
                    return Err(bad("signature", "(fn NAME (builtin ...))", item));
                }
                let name = l[1].as_atom().ok_or_else(|| bad("signature", "name", item))?;
                check_ident(name)?;
                let b = l[2]
                    .as_list()
                    .filter(|b| l[2].head() == Some("builtin") && b.len() == 2)
                    .and_then(|b| b[1].as_atom())
                    .and_then(FnInterp::from_name)
                    .ok_or_else(|| bad("signature", "function interpretation", item))?;
                sig.declare_fn(name, b)?;
            }
            Some("rule") => {
                let l = item.as_list().unwrap();
                if l.len() != 4 {
                    return Err(bad("signature", "(rule NAME (premises ...) (concl ...))", item));
                }
                let name = l[1].as_atom().ok_or_else(|| bad("signature", "name", item))?;
                let ratom = |x: &Sexp| -> Result<RuleAtom, FormatError> {
                    match x.as_atom() {
                        Some("false") => Ok(RuleAtom::False),
                        Some(p) => Ok(RuleAtom::Pred(p.to_string())),
                        None => Err(bad("signature", "rule atom", item)),
                    }
                };
                let prems = l[2]
                    .as_list()
                    .filter(|_| l[2].head() == Some("premises"))
                    .ok_or_else(|| bad("signature", "(premises ...)", item))?;
                let premises =
                    prems[1..].iter().map(&ratom).collect::<Result<Vec<_>, _>>()?;
                let concl_l = l[3]
                    .as_list()
                    .filter(|c| l[3].head() == Some("concl") && c.len() == 2)
                    .ok_or_else(|| bad("signature", "(concl ...)", item))?;
                let conclusion = ratom(&concl_l[1])?;
                sig.declare_rule(AtomicRule { name: name.to_string(), premises, conclusion })?;
            }
            Some("merge") => {
                let l = item.as_list().unwrap();
                let strat = l
                    .get(1)
                    .and_then(|x| x.as_atom())
                    .ok_or_else(|| bad("signature", "merge strategy", item))?;
                sig.merge_strategy = match strat {
                    "leftmost" => MergeStrategy::Leftmost,
                    "min-witness" => MergeStrategy::MinWitness,
                    _ => return Err(bad("signature", "merge strategy", item)),
                };
            }
            _ => return Err(bad("signature", "unknown clause", item)),
        }
    }
    Ok(sig)
}

fn interp_from_sexp(s: &Sexp) -> Result<Interp, FormatError> {
    match s.head() {
        Some("builtin") => {
            let l = s.as_list().unwrap();
            let b = l
                .get(1)
                .and_then(|x| x.as_atom())
                .and_then(BuiltinPred::from_name)
                .ok_or_else(|| bad("interpretation", "builtin name", s))?;
            Ok(Interp::Builtin(b))
        }
        Some("table") => {
            let l = s.as_list().unwrap();
            let mut default = false;
            let mut rows = BTreeMap::new();
            for item in &l[1..] {
                if item.head() == Some("default") {
                    let v = item
                        .as_list()
                        .and_then(|l| l.get(1))
                        .and_then(|x| x.as_atom())
                        .and_then(|a| a.parse::<bool>().ok())
                        .ok_or_else(|| bad("interpretation", "default", s))?;
                    default = v;
                } else {
                    let row = item.as_list().ok_or_else(|| bad("interpretation", "row", s))?;
                    if row.len() != 2 {
                        return Err(bad("interpretation", "row must be ((args...) bool)", s));
                    }
                    let args = row[0]
                        .as_list()
                        .ok_or_else(|| bad("interpretation", "row args", s))?
                        .iter()
                        .map(|a| {
                            a.as_atom()
                                .and_then(|x| x.parse::<u64>().ok())
                                .ok_or_else(|| bad("interpretation", "row arg", s))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    let val = row[1]
                        .as_atom()
                        .and_then(|a| a.parse::<bool>().ok())
                        .ok_or_else(|| bad("interpretation", "row value", s))?;
                    rows.insert(args, val);
                }
            }
            Ok(Interp::Table { default, rows })
        }
        _ => Err(bad("interpretation", "expected (builtin ...) or (table ...)", s)),
    }
}

// ---------------------------------------------------------------------------
// Decorated sequents and traces
// ---------------------------------------------------------------------------

pub fn decorated_to_sexp(monad: &str, seed: u64, ds: &DecoratedSequent, ty: &Type) -> Sexp {
    let mut ctx_items = vec![Sexp::atom("context")];
    for (l, f) in &ds.context {
        ctx_items.push(Sexp::list([Sexp::atom(l.clone()), formula_to_sexp(f)]));
    }
    Sexp::list([
        Sexp::atom("decorated"),
        Sexp::list([Sexp::atom("monad"), Sexp::atom(monad)]),
        Sexp::list([Sexp::atom("seed"), Sexp::atom(seed.to_string())]),
        Sexp::List(ctx_items),
        Sexp::list([Sexp::atom("conclusion"), formula_to_sexp(&ds.conclusion)]),
        Sexp::list([Sexp::atom("type"), type_to_sexp(ty)]),
        Sexp::list([Sexp::atom("realizer"), term_to_sexp(&ds.realizer)]),
    ])
}

pub fn decorated_from_sexp(
    sig: &Signature,
    s: &Sexp,
) -> Result<(String, u64, DecoratedSequent, Type), FormatError> {
    let items = s.as_list().ok_or_else(|| bad("decorated sequent", "expected a list", s))?;
    if s.head() != Some("decorated") || items.len() != 7 {
        return Err(bad("decorated sequent", "expected (decorated (monad ..) (seed ..) (context ..) (conclusion ..) (type ..) (realizer ..))", s));
    }
    let field = |idx: usize, tag: &str| -> Result<&Sexp, FormatError> {
        let l = items[idx]
            .as_list()
            .filter(|_| items[idx].head() == Some(tag))
            .ok_or_else(|| bad("decorated sequent", format!("expected ({tag} ...)"), s))?;
        l.get(1).ok_or_else(|| bad("decorated sequent", format!("({tag} ...) payload"), s))
    };
    let monad_name = field(1, "monad")?
        .as_atom()
        .ok_or_else(|| bad("decorated sequent", "monad name", s))?
        .to_string();
    let monad = monad_by_name(&monad_name)
        .ok_or_else(|| bad("decorated sequent", format!("unknown monad `{monad_name}`"), s))?;
    let seed = field(2, "seed")?
        .as_atom()
        .and_then(|a| a.parse::<u64>().ok())
        .ok_or_else(|| bad("decorated sequent", "seed", s))?;
    let ctx_list = items[3]
        .as_list()
        .filter(|_| items[3].head() == Some("context"))
        .ok_or_else(|| bad("decorated sequent", "(context ...)", s))?;
    let mut context: Context = Vec::new();
    for entry in &ctx_list[1..] {
        let pair = entry.as_list().ok_or_else(|| bad("decorated sequent", "context entry", s))?;
        if pair.len() != 2 {
            return Err(bad("decorated sequent", "context entry", s));
        }
        let label = pair[0].as_atom().ok_or_else(|| bad("decorated sequent", "label", s))?;
        context.push((label.to_string(), formula_from_sexp(sig, &pair[1])?));
    }
    let conclusion = formula_from_sexp(sig, field(4, "conclusion")?)?;
    let ty = type_from_sexp(field(5, "type")?)?;
    let mut free: BTreeMap<String, Type> = BTreeMap::new();
    for (l, f) in &context {
        free.insert(l.clone(), inner_type(&monad, f));
    }
    let mut env = TermEnv::with_free(sig, free, true);
    let realizer = term_from_sexp(&mut env, field(6, "realizer")?, None)?;
    Ok((monad_name, seed, DecoratedSequent { context, realizer, conclusion }, ty))
}

pub fn outcome_to_sexp(o: &StepOutcome) -> Sexp {
    match o {
        StepOutcome::Regular(t) => {
            Sexp::list([Sexp::atom("outcome"), Sexp::atom("regular"), term_to_sexp(t)])
        }
        StepOutcome::Exceptional(e) => {
            Sexp::list([Sexp::atom("outcome"), Sexp::atom("exceptional"), exception_to_sexp(e)])
        }
    }
}

pub fn trace_to_sexp(seed: u64, trace: &LearnTrace) -> Sexp {
    let mut items = vec![
        Sexp::atom("trace"),
        Sexp::list([Sexp::atom("seed"), Sexp::atom(seed.to_string())]),
    ];
    for step in &trace.steps {
        items.push(Sexp::list([
            Sexp::atom("step"),
            Sexp::list([Sexp::atom("before"), state_to_sexp(&step.before)]),
            outcome_to_sexp(&step.outcome),
            Sexp::list([Sexp::atom("after"), state_to_sexp(&step.after)]),
        ]));
    }
    let terminal = match &trace.terminal {
        Terminal::FixedPoint => Sexp::list([Sexp::atom("terminal"), Sexp::atom("fixed-point")]),
        Terminal::BudgetExhausted => {
            Sexp::list([Sexp::atom("terminal"), Sexp::atom("budget-exhausted")])
        }
        Terminal::Conflict(e) => Sexp::list([
            Sexp::atom("terminal"),
            Sexp::atom("conflict"),
            exception_to_sexp(e),
        ]),
    };
    items.push(terminal);
    Sexp::List(items)
}

/// Multi-line rendering of a trace: the seed, each step, and the terminal
/// on their own lines. Whitespace-insensitive to parse; deterministic, so
/// identical runs produce byte-identical files.
pub fn trace_to_pretty(seed: u64, trace: &LearnTrace) -> String {
    let sexp = trace_to_sexp(seed, trace);
    let items = sexp.as_list().expect("trace is a list");
    let mut out = String::from("(trace\n");
    for item in &items[1..] {
        out.push_str(&format!(" {item}\n"));
    }
    out.push(')');
    out
}

pub fn trace_from_sexp(sig: &Signature, s: &Sexp) -> Result<(u64, LearnTrace), FormatError> {
    let items = s.as_list().ok_or_else(|| bad("trace", "expected (trace ...)", s))?;
    if s.head() != Some("trace") || items.len() < 3 {
        return Err(bad("trace", "expected (trace (seed N) STEP* TERMINAL)", s));
    }
    let seed = items[1]
        .as_list()
        .filter(|_| items[1].head() == Some("seed"))
        .and_then(|l| l.get(1))
        .and_then(|x| x.as_atom())
        .and_then(|a| a.parse::<u64>().ok())
        .ok_or_else(|| bad("trace", "seed", s))?;
    let mut steps = Vec::new();
    let mut terminal = None;
    for item in &items[2..] {
        match item.head() {
            Some("step") => {
                let l = item.as_list().unwrap();
                if l.len() != 4 {
                    return Err(bad("trace", "step", item));
                }
                let before = state_from_sexp(
                    sig,
                    l[1].as_list()
                        .filter(|_| l[1].head() == Some("before"))
                        .and_then(|x| x.get(1))
                        .ok_or_else(|| bad("trace", "before", item))?,
                )?;
                let outcome_l = l[2]
                    .as_list()
                    .filter(|_| l[2].head() == Some("outcome"))
                    .ok_or_else(|| bad("trace", "outcome", item))?;
                let outcome = match outcome_l.get(1).and_then(|x| x.as_atom()) {
                    Some("regular") => {
                        let mut env = TermEnv::new(sig);
                        env.free_nat_vars = false;
                        StepOutcome::Regular(term_from_sexp(
                            &mut env,
                            outcome_l.get(2).ok_or_else(|| bad("trace", "regular term", item))?,
                            None,
                        )?)
                    }
                    Some("exceptional") => StepOutcome::Exceptional(exception_from_sexp(
                        sig,
                        outcome_l.get(2).ok_or_else(|| bad("trace", "exception", item))?,
                    )?),
                    _ => return Err(bad("trace", "outcome kind", item)),
                };
                let after = state_from_sexp(
                    sig,
                    l[3].as_list()
                        .filter(|_| l[3].head() == Some("after"))
                        .and_then(|x| x.get(1))
                        .ok_or_else(|| bad("trace", "after", item))?,
                )?;
                steps.push(TraceStep { before, outcome, after });
            }
            Some("terminal") => {
                let l = item.as_list().unwrap();
                terminal = Some(match l.get(1).and_then(|x| x.as_atom()) {
                    Some("fixed-point") => Terminal::FixedPoint,
                    Some("budget-exhausted") => Terminal::BudgetExhausted,
                    Some("conflict") => Terminal::Conflict(exception_from_sexp(
                        sig,
                        l.get(2).ok_or_else(|| bad("trace", "conflict exception", item))?,
                    )?),
                    _ => return Err(bad("trace", "terminal kind", item)),
                });
            }
            _ => return Err(bad("trace", "unknown clause", item)),
        }
    }
    let terminal = terminal.ok_or_else(|| bad("trace", "missing terminal", s))?;
    Ok((seed, LearnTrace { steps, terminal }))
}

/// Parse a closed term from source against an optional expected type.
pub fn parse_closed_term(
    sig: &Signature,
    s: &Sexp,
    expected: Option<&Type>,
) -> Result<Term, FormatError> {
    let mut env = TermEnv::new(sig);
    term_from_sexp(&mut env, s, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::alpha_eq;
    use crate::sexp::parse;
    use crate::sig::{BuiltinPred, Interp};

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.declare_pred("LT", 2, Interp::Builtin(BuiltinPred::Lt)).unwrap();
        let rows = (0..=4u64).map(|y| (vec![y], true)).collect();
        s.declare_pred("B4", 1, Interp::Table { default: false, rows }).unwrap();
        s.declare_fn("add", FnInterp::Add).unwrap();
        s
    }

    fn roundtrip_term(t: &Term, sig: &Signature) {
        let printed = term_to_sexp(t).to_string();
        let reparsed = parse_closed_term(sig, &parse(&printed).unwrap(), None)
            .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
        assert_eq!(&reparsed, t, "printed as `{printed}`");
        assert_eq!(term_to_sexp(&reparsed).to_string(), printed);
    }

    #[test]
    fn spec_surface_examples_parse() {
        let s = sig();
        let t = parse_closed_term(
            &s,
            &parse("(app (lam (x Nat) x) (num 0))").unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(
            crate::kernel::normalize(&s, &t, 100).unwrap(),
            Term::numeral(0)
        );
        let lam = parse_closed_term(&s, &parse("(lam (x Nat) (succ x))").unwrap(), None).unwrap();
        assert_eq!(
            crate::kernel::type_of_closed(&lam).unwrap(),
            Type::arrow(Type::Nat, Type::Nat)
        );
        parse_closed_term(&s, &parse("(rec inf (lam (m Nat) (lam (r (-> Nat Nat)) m)) (num 3))").unwrap(), None)
            .unwrap();
    }

    #[test]
    fn term_roundtrips() {
        let s = sig();
        let m = crate::monads::ir_monad();
        roundtrip_term(&Term::numeral(5), &s);
        roundtrip_term(&m.unit_at(&Type::Nat), &s);
        roundtrip_term(&m.star_at(&Type::Nat, &Type::Unit), &s);
        roundtrip_term(&m.merge_at(&Type::Nat, &Type::Unit), &s);
        roundtrip_term(&crate::monads::star_n(&m, &[Type::Nat, Type::Unit], &Type::Nat), &s);
        roundtrip_term(&crate::extract::em_realizer(&s, "B4", &[]).unwrap(), &s);
        roundtrip_term(
            &Term::inl(Type::Nat, Type::ex(), Term::numeral(2)),
            &s,
        );
        roundtrip_term(&Term::Const(ConstKind::Pair(Type::Nat, Type::Unit)), &s);
        roundtrip_term(
            &Term::app(
                Term::Const(ConstKind::Rec(Guard::Fin(3), Type::Nat)),
                Term::lam(
                    "m",
                    Type::Nat,
                    Term::lam("r", Type::arrow(Type::Nat, Type::Nat), Term::var("m", Type::Nat)),
                ),
            ),
            &s,
        );
        let st = crate::runtime::KnowledgeState::new(
            &s,
            [(WitnessKey::new("B4", vec![]), 7)],
        )
        .unwrap();
        roundtrip_term(&Term::StateLit(st), &s);
    }

    #[test]
    fn inl_requires_annotation() {
        let s = sig();
        let err = parse_closed_term(&s, &parse("(inl (num 2))").unwrap(), None);
        assert!(matches!(err, Err(FormatError::NeedsAnnotation { .. })));
        let ok = parse_closed_term(
            &s,
            &parse("(the (sum Nat Unit) (inl (num 2)))").unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(ok, Term::inl(Type::Nat, Type::Unit, Term::numeral(2)));
    }

    #[test]
    fn formula_roundtrip() {
        let s = sig();
        let f = Formula::em_instance("B4", &[], "y");
        let printed = formula_to_sexp(&f).to_string();
        let parsed = formula_from_sexp(&s, &parse(&printed).unwrap()).unwrap();
        assert_eq!(parsed, f);
        // not prints back as not.
        let n = Formula::not(Formula::atom("LT", vec![ArithTerm::num(1), ArithTerm::num(2)]));
        assert_eq!(formula_to_sexp(&n).to_string(), "(not (LT (num 1) (num 2)))");
    }

    #[test]
    fn signature_roundtrip() {
        let mut s = sig();
        s.declare_rule(AtomicRule {
            name: "lt-le".into(),
            premises: vec![RuleAtom::Pred("LT".into())],
            conclusion: RuleAtom::Pred("LT".into()),
        })
        .unwrap();
        let printed = signature_to_sexp(&s).to_string();
        let parsed = signature_from_sexp(&parse(&printed).unwrap()).unwrap();
        assert_eq!(signature_to_sexp(&parsed).to_string(), printed);
        assert!(parsed.holds("LT", &[1, 3]).unwrap());
        assert!(parsed.holds("B4", &[2]).unwrap());
    }

    #[test]
    fn derivation_roundtrip() {
        let s = sig();
        let f = Formula::atom("LT", vec![ArithTerm::num(0), ArithTerm::num(1)]);
        let d = Derivation::new(
            Rule::ImpI,
            vec![],
            Formula::implies(f.clone(), f.clone()),
            vec![Derivation::new(
                Rule::Id { label: "a".into() },
                vec![("a".into(), f.clone())],
                f,
                vec![],
            )],
        );
        let printed = derivation_to_sexp(&d).to_string();
        let parsed = derivation_from_sexp(&s, &parse(&printed).unwrap()).unwrap();
        assert_eq!(parsed, d);
    }

    #[test]
    fn decorated_roundtrip_preserves_realizer() {
        let s = sig();
        let m = crate::monads::ir_monad();
        let f = Formula::atom("LT", vec![ArithTerm::num(0), ArithTerm::num(1)]);
        let d = Derivation::new(
            Rule::Id { label: "a".into() },
            vec![("a".into(), f.clone())],
            f,
            vec![],
        );
        let ds = crate::extract::extract(&s, &m, &d).unwrap();
        let ty = crate::extract::monadic_type(&m, &ds.conclusion);
        let printed = decorated_to_sexp("ir", 42, &ds, &ty).to_string();
        let (name, seed, parsed, ty2) =
            decorated_from_sexp(&s, &parse(&printed).unwrap()).unwrap();
        assert_eq!(name, "ir");
        assert_eq!(seed, 42);
        assert_eq!(ty2, ty);
        assert!(alpha_eq(&parsed.realizer, &ds.realizer));
        assert_eq!(parsed.conclusion, ds.conclusion);
    }

    #[test]
    fn truncated_payloads_error_cleanly() {
        let s = sig();
        for src in [
            "(id (ctx) (of false) (label))",
            "(atm (ctx) (of false) (rule) (args))",
            "(all-e (ctx) (of false) (term) (id (ctx) (of false) (label a)))",
            "(ex-e (ctx) (of false) (var))",
            "(em (ctx) (of false) (pred) (args))",
        ] {
            let parsed = parse(src).unwrap();
            assert!(derivation_from_sexp(&s, &parsed).is_err(), "{src} should be rejected");
        }
        let bad_sig = "(signature (pred B4 1 (table (default))))";
        assert!(signature_from_sexp(&parse(bad_sig).unwrap()).is_err());
    }

    #[test]
    fn random_inputs_error_cleanly() {
        use rand::{Rng, SeedableRng};
        let s = sig();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xF022);
        let alphabet: Vec<char> = "()( )abcxyz019 .lamnumtheinl".chars().collect();
        for _ in 0..500 {
            let len = rng.gen_range(0..60);
            let src: String =
                (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
            if let Ok(sx) = parse(&src) {
                // Elaboration may fail, but must not panic.
                let _ = parse_closed_term(&s, &sx, None);
                let _ = formula_from_sexp(&s, &sx);
                let _ = type_from_sexp(&sx);
            }
        }
    }

    #[test]
    fn trace_roundtrip_bit_exact() {
        let s = sig();
        let e = ExceptionValue::singleton(&s, WitnessKey::new("B4", vec![]), 9).unwrap();
        let after = KnowledgeState::new(&s, [(WitnessKey::new("B4", vec![]), 9)]).unwrap();
        let trace = LearnTrace {
            steps: vec![
                TraceStep {
                    before: KnowledgeState::empty(),
                    outcome: StepOutcome::Exceptional(e),
                    after: after.clone(),
                },
                TraceStep {
                    before: after.clone(),
                    outcome: StepOutcome::Regular(Term::unit_val()),
                    after,
                },
            ],
            terminal: Terminal::FixedPoint,
        };
        let printed = trace_to_sexp(7, &trace).to_string();
        let (seed, parsed) = trace_from_sexp(&s, &parse(&printed).unwrap()).unwrap();
        assert_eq!(seed, 7);
        assert_eq!(parsed, trace);
        assert_eq!(trace_to_sexp(7, &parsed).to_string(), printed);
        // The multi-line rendering parses to the same trace and is stable.
        let pretty = trace_to_pretty(7, &trace);
        let (seed2, parsed2) = trace_from_sexp(&s, &parse(&pretty).unwrap()).unwrap();
        assert_eq!((seed2, &parsed2), (7, &trace));
        assert_eq!(trace_to_pretty(7, &parsed2), pretty);
    }
}
