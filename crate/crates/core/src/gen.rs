//! Type-directed generation of closed terms, random well-typed terms for
//! kernel properties, and random closed formulas.

use rand::Rng;

use crate::kernel::{dummy, ConstKind, Guard, Term, Type};
use crate::logic::{ArithTerm, Formula};
use crate::monads::SyntacticMonad;
use crate::runtime::{sample_proper_extension, sample_state, ExceptionValue, KnowledgeState};
use crate::sig::{Signature, EX, STATE};

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    /// Numerals are drawn from `0..=numeral_bound`.
    pub numeral_bound: u64,
    /// Structural recursion depth for generated values.
    pub depth: usize,
    pub state_entries: usize,
    pub state_value_bound: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { numeral_bound: 10, depth: 3, state_entries: 3, state_value_bound: 10 }
    }
}

/// Closed-term generator. When a monad is supplied, types matching its `T`
/// shape additionally get `unit`-built and exceptional samples so monadic
/// branches are exercised.
pub struct Gen<'a> {
    pub sig: &'a Signature,
    pub monad: Option<&'a SyntacticMonad>,
    pub cfg: GenConfig,
}

impl<'a> Gen<'a> {
    pub fn new(sig: &'a Signature, monad: Option<&'a SyntacticMonad>, cfg: GenConfig) -> Self {
        Gen { sig, monad, cfg }
    }

    pub fn sample_state(&self, rng: &mut impl Rng) -> KnowledgeState {
        sample_state(self.sig, rng, self.cfg.state_entries, self.cfg.state_value_bound)
    }

    pub fn sample_exception(&self, rng: &mut impl Rng) -> ExceptionValue {
        sample_proper_extension(
            self.sig,
            &KnowledgeState::empty(),
            rng,
            self.cfg.state_entries.max(1),
            self.cfg.state_value_bound,
        )
        .unwrap_or_else(ExceptionValue::empty)
    }

    /// One closed term of the given type.
    pub fn closed(&self, ty: &Type, rng: &mut impl Rng) -> Term {
        self.go(ty, self.cfg.depth, rng)
    }

    /// Several closed terms of the given type; always includes the dummy
    /// term when one exists.
    pub fn samples(&self, ty: &Type, n: usize, rng: &mut impl Rng) -> Vec<Term> {
        let mut out = Vec::with_capacity(n + 1);
        if let Ok(d) = dummy(ty) {
            out.push(d);
        }
        for _ in 0..n {
            out.push(self.closed(ty, rng));
        }
        out
    }

    fn go(&self, ty: &Type, depth: usize, rng: &mut impl Rng) -> Term {
        if depth == 0 {
            if let Ok(d) = dummy(ty) {
                return d;
            }
        }
        // Occasionally build through the monad's own combinators.
        if depth > 0 && rng.gen_bool(0.25) {
            if let Some(t) = self.monadic_build(ty, depth, rng) {
                return t;
            }
        }
        match ty {
            Type::Unit => Term::unit_val(),
            Type::Nat => Term::numeral(rng.gen_range(0..=self.cfg.numeral_bound)),
            Type::Base(name) if name == STATE => Term::StateLit(self.sample_state(rng)),
            Type::Base(name) if name == EX => Term::ExLit(self.sample_exception(rng)),
            Type::Base(_) => dummy(ty).expect("unknown base types are not generated"),
            Type::Prod(l, r) => Term::pair(
                (**l).clone(),
                (**r).clone(),
                self.go(l, depth.saturating_sub(1), rng),
                self.go(r, depth.saturating_sub(1), rng),
            ),
            Type::Sum(l, r) => {
                if rng.gen_bool(0.5) {
                    Term::inl((**l).clone(), (**r).clone(), self.go(l, depth.saturating_sub(1), rng))
                } else {
                    Term::inr((**l).clone(), (**r).clone(), self.go(r, depth.saturating_sub(1), rng))
                }
            }
            Type::Arrow(d, c) => self.arrow(d, c, depth, rng),
        }
    }

    fn arrow(&self, d: &Type, c: &Type, depth: usize, rng: &mut impl Rng) -> Term {
        // State-inspecting functions exercise genuinely state-dependent
        // behavior; only available when a predicate exists to query.
        if matches!(d, Type::Base(n) if n == STATE) && rng.gen_bool(0.4) {
            if let Some(t) = self.state_inspecting(c, depth, rng) {
                return t;
            }
        }
        if *d == Type::Nat && *c == Type::Nat {
            match rng.gen_range(0..4u8) {
                0 => return Term::lam("n", Type::Nat, Term::var("n", Type::Nat)),
                1 => {
                    return Term::lam(
                        "n",
                        Type::Nat,
                        Term::app(Term::Const(ConstKind::Succ), Term::var("n", Type::Nat)),
                    )
                }
                _ => {}
            }
        }
        match rng.gen_range(0..3u8) {
            0 => dummy(&Type::arrow(d.clone(), c.clone()))
                .unwrap_or_else(|_| Term::lam("_", d.clone(), self.go(c, depth.saturating_sub(1), rng))),
            _ => Term::lam("_", d.clone(), self.go(c, depth.saturating_sub(1), rng)),
        }
    }

    fn state_inspecting(&self, c: &Type, depth: usize, rng: &mut impl Rng) -> Option<Term> {
        let preds: Vec<_> = self.sig.preds().filter(|p| p.sym.arity >= 1).collect();
        if preds.is_empty() {
            return None;
        }
        let decl = preds[rng.gen_range(0..preds.len())];
        let sym = decl.sym.clone();
        let params: Vec<Term> = (0..sym.params())
            .map(|_| Term::numeral(rng.gen_range(0..=self.cfg.state_value_bound)))
            .collect();
        let scrut = Term::apps(
            Term::app(Term::Const(ConstKind::Query(sym)), Term::var("s", Type::state())),
            params,
        );
        let miss = Term::lam("_", Type::Unit, self.go(c, depth.saturating_sub(1), rng));
        let hit = Term::lam("w", Type::Nat, self.go(c, depth.saturating_sub(1), rng));
        Some(Term::lam(
            "s",
            Type::state(),
            Term::case(Type::Unit, Type::Nat, c.clone(), scrut, miss, hit),
        ))
    }

    /// When the type matches the monad's `T` shape for a recognizable source
    /// type, build through `unit` (and sometimes return the bare `unit` term
    /// for arrow shapes `A -> T A`).
    fn monadic_build(&self, ty: &Type, depth: usize, rng: &mut impl Rng) -> Option<Term> {
        let m = self.monad?;
        // A -> T A: the unit builder itself is a sample.
        if let Type::Arrow(d, c) = ty {
            if m.t_apply(d) == **c && rng.gen_bool(0.5) {
                return Some(m.unit_at(d));
            }
        }
        let source = self.invert_t(m, ty)?;
        let inner = self.go(&source, depth.saturating_sub(1), rng);
        Some(m.unit_app(&source, inner))
    }

    /// Guess a source type `A` with `T A == ty`, covering the shapes of the
    /// three shipped monads.
    fn invert_t(&self, m: &SyntacticMonad, ty: &Type) -> Option<Type> {
        let mut guesses: Vec<Type> = vec![ty.clone()];
        if let Type::Sum(l, _) = ty {
            guesses.push((**l).clone());
        }
        if let Type::Arrow(d, c) = ty {
            if matches!(d.as_ref(), Type::Base(n) if n == STATE) {
                if let Type::Sum(l, _) = c.as_ref() {
                    guesses.push((**l).clone());
                }
            }
        }
        guesses.into_iter().find(|a| &m.t_apply(a) == ty)
    }
}

/// Configuration for random well-typed term generation.
#[derive(Clone, Copy, Debug)]
pub struct TypedTermConfig {
    pub type_depth: usize,
    pub term_depth: usize,
    pub numeral_bound: u64,
    pub guard_bound: u64,
}

impl Default for TypedTermConfig {
    fn default() -> Self {
        TypedTermConfig { type_depth: 2, term_depth: 4, numeral_bound: 20, guard_bound: 20 }
    }
}

pub fn random_type(depth: usize, rng: &mut impl Rng) -> Type {
    if depth == 0 {
        return match rng.gen_range(0..4u8) {
            0 => Type::Unit,
            1..=2 => Type::Nat,
            _ => Type::state(),
        };
    }
    match rng.gen_range(0..8u8) {
        0 => Type::Unit,
        1 | 2 => Type::Nat,
        3 => Type::arrow(random_type(depth - 1, rng), random_type(depth - 1, rng)),
        4 | 5 => Type::prod(random_type(depth - 1, rng), random_type(depth - 1, rng)),
        6 => Type::sum(random_type(depth - 1, rng), random_type(depth - 1, rng)),
        _ => Type::ex(),
    }
}

/// A random closed well-typed term, built with redex-rich constructions
/// (beta redexes, projections of pairs, case over injections, guarded
/// recursor unfoldings, query/eval on literals).
pub fn random_typed_term(
    sig: &Signature,
    cfg: &TypedTermConfig,
    rng: &mut impl Rng,
) -> (Term, Type) {
    let ty = random_type(cfg.type_depth, rng);
    let gen = Gen::new(sig, None, GenConfig {
        numeral_bound: cfg.numeral_bound,
        depth: 2,
        ..GenConfig::default()
    });
    let t = rich(sig, &gen, &mut Vec::new(), &ty, cfg.term_depth, cfg, rng);
    (t, ty)
}

fn rich(
    sig: &Signature,
    gen: &Gen,
    scope: &mut Vec<(String, Type)>,
    ty: &Type,
    depth: usize,
    cfg: &TypedTermConfig,
    rng: &mut impl Rng,
) -> Term {
    // A bound variable of the right type, sometimes.
    if depth == 0 || rng.gen_bool(0.15) {
        let hits: Vec<_> = scope.iter().filter(|(_, t)| t == ty).cloned().collect();
        if let Some((name, t)) = hits.first() {
            return Term::var(name.clone(), t.clone());
        }
        if depth == 0 {
            return gen.closed(ty, rng);
        }
    }
    match rng.gen_range(0..10u8) {
        // Beta redex at this type.
        0 | 1 => {
            let dom = random_type(1, rng);
            let fresh = format!("v{}", scope.len());
            scope.push((fresh.clone(), dom.clone()));
            let body = rich(sig, gen, scope, ty, depth - 1, cfg, rng);
            scope.pop();
            let arg = rich(sig, gen, scope, &dom, depth - 1, cfg, rng);
            Term::app(Term::lam(fresh, dom, body), arg)
        }
        // Projection of a pair.
        2 => {
            let other = random_type(1, rng);
            let (a, b, proj) = if rng.gen_bool(0.5) {
                (ty.clone(), other.clone(), ConstKind::ProjL(ty.clone(), other))
            } else {
                (other.clone(), ty.clone(), ConstKind::ProjR(other, ty.clone()))
            };
            let l = rich(sig, gen, scope, &a, depth - 1, cfg, rng);
            let r = rich(sig, gen, scope, &b, depth - 1, cfg, rng);
            Term::app(Term::Const(proj), Term::pair(a, b, l, r))
        }
        // Case over an injection.
        3 | 4 => {
            let a = random_type(1, rng);
            let b = random_type(1, rng);
            let scrut = if rng.gen_bool(0.5) {
                Term::inl(a.clone(), b.clone(), rich(sig, gen, scope, &a, depth - 1, cfg, rng))
            } else {
                Term::inr(a.clone(), b.clone(), rich(sig, gen, scope, &b, depth - 1, cfg, rng))
            };
            let la = format!("l{}", scope.len());
            scope.push((la.clone(), a.clone()));
            let lbody = rich(sig, gen, scope, ty, depth - 1, cfg, rng);
            scope.pop();
            let rb = format!("r{}", scope.len());
            scope.push((rb.clone(), b.clone()));
            let rbody = rich(sig, gen, scope, ty, depth - 1, cfg, rng);
            scope.pop();
            Term::case(
                a.clone(),
                b.clone(),
                ty.clone(),
                scrut,
                Term::lam(la, a, lbody),
                Term::lam(rb, b, rbody),
            )
        }
        // Guarded recursor application.
        5 => {
            let guard = if rng.gen_bool(0.3) {
                Guard::Inf
            } else {
                Guard::Fin(rng.gen_range(0..=cfg.guard_bound))
            };
            let rec_fn_ty = Type::arrow(Type::Nat, ty.clone());
            let base = rich(sig, gen, scope, ty, depth.saturating_sub(2), cfg, rng);
            // h = \m. \rec. either a base value or a recursive call on a
            // fixed smaller numeral; guards bound the unfolding either way.
            let body = if rng.gen_bool(0.5) {
                base
            } else {
                Term::app(Term::var("rec", rec_fn_ty.clone()), Term::numeral(rng.gen_range(0..=2)))
            };
            let h = Term::lam(
                "m",
                Type::Nat,
                Term::lam("rec", rec_fn_ty, body),
            );
            Term::apps(
                Term::Const(ConstKind::Rec(guard, ty.clone())),
                [h, Term::numeral(rng.gen_range(0..=cfg.numeral_bound))],
            )
        }
        // Whole-term abstraction shapes for arrow targets.
        6 if matches!(ty, Type::Arrow(..)) => {
            if let Type::Arrow(d, c) = ty {
                let fresh = format!("x{}", scope.len());
                scope.push((fresh.clone(), (**d).clone()));
                let body = rich(sig, gen, scope, c, depth - 1, cfg, rng);
                scope.pop();
                Term::lam(fresh, (**d).clone(), body)
            } else {
                unreachable!()
            }
        }
        // Query/eval/exmerge redexes where the type allows.
        7 => match ty {
            Type::Sum(l, r) if **l == Type::Unit && **r == Type::Nat => {
                match self_query(sig, gen, rng) {
                    Some(t) => t,
                    None => gen.closed(ty, rng),
                }
            }
            Type::Sum(l, r) if **l == Type::Unit && **r == Type::ex() => {
                match self_eval(sig, rng) {
                    Some(t) => t,
                    None => gen.closed(ty, rng),
                }
            }
            Type::Base(n) if n == EX => Term::apps(
                Term::Const(ConstKind::Exmerge),
                [Term::ExLit(gen.sample_exception(rng)), Term::ExLit(gen.sample_exception(rng))],
            ),
            _ => gen.closed(ty, rng),
        },
        _ => gen.closed(ty, rng),
    }
}

fn self_query(sig: &Signature, gen: &Gen, rng: &mut impl Rng) -> Option<Term> {
    let preds: Vec<_> = sig.preds().filter(|p| p.sym.arity >= 1).collect();
    if preds.is_empty() {
        return None;
    }
    let decl = preds[rng.gen_range(0..preds.len())];
    let params: Vec<Term> =
        (0..decl.sym.params()).map(|_| Term::numeral(rng.gen_range(0..=10))).collect();
    Some(Term::apps(
        Term::app(
            Term::Const(ConstKind::Query(decl.sym.clone())),
            Term::StateLit(gen.sample_state(rng)),
        ),
        params,
    ))
}

fn self_eval(sig: &Signature, rng: &mut impl Rng) -> Option<Term> {
    let preds: Vec<_> = sig.preds().filter(|p| p.sym.arity >= 1).collect();
    if preds.is_empty() {
        return None;
    }
    let decl = preds[rng.gen_range(0..preds.len())];
    let args: Vec<Term> =
        (0..decl.sym.arity).map(|_| Term::numeral(rng.gen_range(0..=10))).collect();
    Some(Term::apps(Term::Const(ConstKind::Eval(decl.sym.clone())), args))
}

/// A random closed formula of bounded connective/quantifier depth over the
/// signature's predicates. Atom arguments mix in-scope variables and
/// numerals, so truth values vary.
pub fn random_closed_formula(
    sig: &Signature,
    depth: usize,
    numeral_bound: u64,
    rng: &mut impl Rng,
) -> Formula {
    fn atom(sig: &Signature, scope: &[String], bound: u64, rng: &mut impl Rng) -> Formula {
        if rng.gen_bool(0.05) {
            return Formula::False;
        }
        let preds: Vec<_> = sig.preds().collect();
        if preds.is_empty() {
            return Formula::False;
        }
        let decl = preds[rng.gen_range(0..preds.len())];
        let args = (0..decl.sym.arity)
            .map(|_| {
                if !scope.is_empty() && rng.gen_bool(0.5) {
                    ArithTerm::var(scope[rng.gen_range(0..scope.len())].clone())
                } else {
                    ArithTerm::num(rng.gen_range(0..=bound))
                }
            })
            .collect();
        Formula::atom(decl.sym.name.clone(), args)
    }
    fn go(
        sig: &Signature,
        scope: &mut Vec<String>,
        depth: usize,
        bound: u64,
        rng: &mut impl Rng,
    ) -> Formula {
        if depth == 0 {
            return atom(sig, scope, bound, rng);
        }
        match rng.gen_range(0..8u8) {
            0 => atom(sig, scope, bound, rng),
            1 | 2 => Formula::and(
                go(sig, scope, depth - 1, bound, rng),
                go(sig, scope, depth - 1, bound, rng),
            ),
            3 => Formula::or(
                go(sig, scope, depth - 1, bound, rng),
                go(sig, scope, depth - 1, bound, rng),
            ),
            4 => Formula::implies(
                go(sig, scope, depth - 1, bound, rng),
                go(sig, scope, depth - 1, bound, rng),
            ),
            5 | 6 => {
                let v = format!("q{}", scope.len());
                scope.push(v.clone());
                let body = go(sig, scope, depth - 1, bound, rng);
                scope.pop();
                if rng.gen_bool(0.5) {
                    Formula::forall(v, body)
                } else {
                    Formula::exists(v, body)
                }
            }
            _ => {
                let v = format!("q{}", scope.len());
                scope.push(v.clone());
                let body = go(sig, scope, depth - 1, bound, rng);
                scope.pop();
                Formula::exists(v, body)
            }
        }
    }
    go(sig, &mut Vec::new(), depth, numeral_bound, rng)
}
