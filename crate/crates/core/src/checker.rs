//! Bounded, testable versions of the interactive realizability relations:
//! the inner (BHK-style) relation, the monadic relation, sequent validity,
//! and the MR1-MR3 property suites.
//!
//! The relations quantify over all naturals and all realizers; the checker
//! bounds universals at `universal_bound` and antecedent realizers at
//! `realizer_budget`, so a `pass` means no violation was found within the
//! bounds, and a `fail` carries a replayable instantiation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extract::inner_type;
use crate::gen::{random_closed_formula, Gen, GenConfig};
use crate::kernel::{
    dummy, normalize, subst, type_of_closed, ConstKind, KernelError, Term, Type, TypeError,
};
use crate::logic::{atomic_truth, subst_formula, ArithTerm, Formula, LogicError};
use crate::monads::{ir_monad, SyntacticMonad};
use crate::runtime::{properly_extends, sample_proper_extension, sample_state, KnowledgeState};
use crate::sig::Signature;

#[derive(Error, Debug)]
pub enum CheckError {
    #[error("realizer has type {found:?}, expected {expected:?}")]
    TypeMismatch { expected: Type, found: Type },
    #[error("formula is not closed (free variable `{0}`)")]
    OpenFormula(String),
    #[error("unexpected normal form in clause {clause}: {detail}")]
    BadNormalForm { clause: &'static str, detail: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Clone, Copy, Debug)]
pub struct CheckBounds {
    /// Universal instances and witness searches range over `0..=universal_bound`.
    pub universal_bound: u64,
    /// Generated antecedent/assumption realizers per position.
    pub realizer_budget: usize,
    pub fuel: u64,
}

impl Default for CheckBounds {
    fn default() -> Self {
        CheckBounds { universal_bound: 8, realizer_budget: 50, fuel: crate::kernel::DEFAULT_FUEL }
    }
}

/// Why a check failed, with enough structure to replay it.
#[derive(Clone, Debug)]
pub enum FailureWitness {
    Clause {
        clause: String,
        detail: String,
        term: Option<Term>,
        formula: Option<Formula>,
    },
    Instantiation {
        omega: Vec<(String, u64)>,
        sigma: Vec<(String, Term)>,
        inner: Box<FailureWitness>,
    },
}

impl FailureWitness {
    pub fn describe(&self) -> String {
        match self {
            FailureWitness::Clause { clause, detail, .. } => format!("{clause}: {detail}"),
            FailureWitness::Instantiation { omega, sigma, inner } => format!(
                "omega {omega:?}, sigma labels {:?} -> {}",
                sigma.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
                inner.describe()
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Pass,
    Fail(Box<FailureWitness>),
    /// A clause could not be decided within the given bounds.
    Inconclusive(String),
}

/// Verdict of a bounded check; `vacuous` records that some implication
/// clause passed because no antecedent realizer was found.
#[derive(Clone, Debug)]
pub struct TestVerdict {
    pub outcome: Outcome,
    pub vacuous: bool,
}

impl TestVerdict {
    pub fn pass() -> Self {
        TestVerdict { outcome: Outcome::Pass, vacuous: false }
    }

    pub fn vacuous_pass() -> Self {
        TestVerdict { outcome: Outcome::Pass, vacuous: true }
    }

    pub fn fail(w: FailureWitness) -> Self {
        TestVerdict { outcome: Outcome::Fail(Box::new(w)), vacuous: false }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self.outcome, Outcome::Pass)
    }

    pub fn is_fail(&self) -> bool {
        matches!(self.outcome, Outcome::Fail(_))
    }
}

fn clause_fail(clause: impl Into<String>, detail: impl Into<String>, term: Option<Term>, formula: Option<Formula>) -> TestVerdict {
    TestVerdict::fail(FailureWitness::Clause {
        clause: clause.into(),
        detail: detail.into(),
        term,
        formula,
    })
}

pub struct Checker<'a> {
    pub sig: &'a Signature,
    pub monad: SyntacticMonad,
    pub bounds: CheckBounds,
}

impl<'a> Checker<'a> {
    pub fn new(sig: &'a Signature, bounds: CheckBounds) -> Self {
        Checker { sig, monad: ir_monad(), bounds }
    }

    fn mt(&self, f: &Formula) -> Type {
        inner_type(&self.monad, f)
    }

    fn nf(&self, t: &Term) -> Result<Term, CheckError> {
        Ok(normalize(self.sig, t, self.bounds.fuel)?)
    }

    /// The inner relation: clause-directed per the BHK reading, with
    /// universals bounded and antecedent realizers generated.
    pub fn inner_realizes(
        &self,
        r: &Term,
        a: &Formula,
        s: &KnowledgeState,
    ) -> Result<TestVerdict, CheckError> {
        if let Some(v) = a.free_vars().into_iter().next() {
            return Err(CheckError::OpenFormula(v));
        }
        let expected = self.mt(a);
        let found = type_of_closed(r)?;
        if found != expected {
            return Err(CheckError::TypeMismatch { expected, found });
        }
        self.inner_clause(r, a, s)
    }

    fn inner_clause(
        &self,
        r: &Term,
        a: &Formula,
        s: &KnowledgeState,
    ) -> Result<TestVerdict, CheckError> {
        let nf = self.nf(r)?;
        match a {
            Formula::Atomic { .. } | Formula::False => {
                if nf != Term::unit_val() {
                    return Err(CheckError::BadNormalForm {
                        clause: "atomic",
                        detail: format!("{nf:?} is not the unit value"),
                    });
                }
                if atomic_truth(a, self.sig)? {
                    Ok(TestVerdict::pass())
                } else {
                    Ok(clause_fail("atomic", "formula is false", Some(nf), Some(a.clone())))
                }
            }
            Formula::And(b, c) => {
                let (tb, tc) = (self.mt(b), self.mt(c));
                let l = Term::prl(tb.clone(), tc.clone(), nf.clone());
                let left = self.inner_clause(&l, b, s)?;
                if !left.is_pass() {
                    return Ok(prefix_clause(left, "and.left"));
                }
                let rt = Term::prr(tb, tc, nf);
                let right = self.inner_clause(&rt, c, s)?;
                Ok(prefix_clause_merge(right, left.vacuous, "and.right"))
            }
            Formula::Or(b, c) => match nf.spine() {
                (Term::Const(ConstKind::InjL(..)), args) if args.len() == 1 => {
                    let sub = self.inner_clause(args[0], b, s)?;
                    Ok(prefix_clause(sub, "or.left"))
                }
                (Term::Const(ConstKind::InjR(..)), args) if args.len() == 1 => {
                    let sub = self.inner_clause(args[0], c, s)?;
                    Ok(prefix_clause(sub, "or.right"))
                }
                _ => Err(CheckError::BadNormalForm {
                    clause: "or",
                    detail: format!("{nf:?} is not an injection"),
                }),
            },
            Formula::Implies(b, c) => {
                let antecedents = self.realizer_generator(b, s, self.bounds.realizer_budget)?;
                if antecedents.is_empty() {
                    return Ok(TestVerdict::vacuous_pass());
                }
                let mut vacuous = false;
                for ant in antecedents {
                    let applied = Term::app(nf.clone(), ant.clone());
                    let sub = self.monadic_clause(&applied, c, s)?;
                    vacuous |= sub.vacuous;
                    if !sub.is_pass() {
                        return Ok(prefix_with(
                            sub,
                            "implies",
                            format!("antecedent realizer {ant:?}"),
                        ));
                    }
                }
                Ok(TestVerdict { outcome: Outcome::Pass, vacuous })
            }
            Formula::Forall(x, b) => {
                let mut vacuous = false;
                for n in 0..=self.bounds.universal_bound {
                    let inst = subst_formula(b, x, &ArithTerm::num(n));
                    let applied = Term::app(nf.clone(), Term::numeral(n));
                    let sub = self.monadic_clause(&applied, &inst, s)?;
                    vacuous |= sub.vacuous;
                    if !sub.is_pass() {
                        return Ok(prefix_with(sub, "forall", format!("instance {n}")));
                    }
                }
                Ok(TestVerdict { outcome: Outcome::Pass, vacuous })
            }
            Formula::Exists(x, b) => {
                let (witness, payload) = match nf.spine() {
                    (Term::Const(ConstKind::Pair(..)), args) if args.len() == 2 => {
                        (args[0].clone(), args[1].clone())
                    }
                    _ => {
                        return Err(CheckError::BadNormalForm {
                            clause: "exists",
                            detail: format!("{nf:?} is not a pair"),
                        })
                    }
                };
                let n = witness.as_numeral().ok_or(CheckError::BadNormalForm {
                    clause: "exists",
                    detail: "first projection is not a numeral".to_string(),
                })?;
                let inst = subst_formula(b, x, &ArithTerm::num(n));
                let sub = self.inner_clause(&payload, &inst, s)?;
                Ok(prefix_with(sub, "exists", format!("witness {n}")))
            }
        }
    }

    /// The monadic relation: apply the realizer to the state; a regular
    /// value must inner-realize the formula, an exceptional value must
    /// properly extend the state.
    pub fn monadic_realizes(
        &self,
        r: &Term,
        a: &Formula,
        s: &KnowledgeState,
    ) -> Result<TestVerdict, CheckError> {
        if let Some(v) = a.free_vars().into_iter().next() {
            return Err(CheckError::OpenFormula(v));
        }
        let expected = self.monad.t_apply(&self.mt(a));
        let found = type_of_closed(r)?;
        if found != expected {
            return Err(CheckError::TypeMismatch { expected, found });
        }
        self.monadic_clause(r, a, s)
    }

    fn monadic_clause(
        &self,
        r: &Term,
        a: &Formula,
        s: &KnowledgeState,
    ) -> Result<TestVerdict, CheckError> {
        let v = self.nf(&Term::app(r.clone(), Term::StateLit(s.clone())))?;
        match v.spine() {
            (Term::Const(ConstKind::InjL(..)), args) if args.len() == 1 => {
                self.inner_clause(args[0], a, s)
            }
            (Term::Const(ConstKind::InjR(..)), args) if args.len() == 1 => match args[0] {
                Term::ExLit(e) => {
                    if properly_extends(e, s) {
                        Ok(TestVerdict::pass())
                    } else {
                        Ok(clause_fail(
                            "monadic.exceptional",
                            "exception does not properly extend the state",
                            Some(args[0].clone()),
                            Some(a.clone()),
                        ))
                    }
                }
                other => Err(CheckError::BadNormalForm {
                    clause: "monadic",
                    detail: format!("exceptional payload {other:?} is not a literal"),
                }),
            },
            _ => Err(CheckError::BadNormalForm {
                clause: "monadic",
                detail: format!("{v:?} is neither a regular nor an exceptional value"),
            }),
        }
    }

    /// Candidate inner realizers of a closed formula, each verified with
    /// `inner_realizes` before being emitted. Witness-bearing candidates are
    /// found by search up to the universal bound; the canonical realizer (the
    /// first-witness, unit-shaped one) is emitted first when it exists.
    pub fn realizer_generator(
        &self,
        a: &Formula,
        s: &KnowledgeState,
        budget: usize,
    ) -> Result<Vec<Term>, CheckError> {
        let mut counter = 0usize;
        let candidates = self.candidates(a, &mut counter);
        let mut out = Vec::new();
        for c in candidates {
            if out.len() >= budget {
                break;
            }
            if type_of_closed(&c).map(|t| t == self.mt(a)).unwrap_or(false)
                && self.inner_clause(&c, a, s)?.is_pass()
            {
                out.push(c);
            }
        }
        Ok(out)
    }

    const CANDIDATE_CAP: usize = 160;

    fn candidates(&self, a: &Formula, counter: &mut usize) -> Vec<Term> {
        let mut out = self.open_candidates(a, counter);
        if let Ok(d) = dummy(&self.mt(a)) {
            out.push(d);
        }
        out.truncate(Self::CANDIDATE_CAP);
        out
    }

    /// Structural candidates; sub-candidates under binders may mention the
    /// bound `Nat` variables through schematic witness terms.
    fn open_candidates(&self, a: &Formula, counter: &mut usize) -> Vec<Term> {
        let cap = Self::CANDIDATE_CAP;
        match a {
            Formula::Atomic { .. } | Formula::False => vec![Term::unit_val()],
            Formula::And(b, c) => {
                let (tb, tc) = (self.mt(b), self.mt(c));
                let ls = self.open_candidates(b, counter);
                let rs = self.open_candidates(c, counter);
                let mut out = Vec::new();
                'outer: for l in &ls {
                    for r in &rs {
                        out.push(Term::pair(tb.clone(), tc.clone(), l.clone(), r.clone()));
                        if out.len() >= cap {
                            break 'outer;
                        }
                    }
                }
                out
            }
            Formula::Or(b, c) => {
                let (tb, tc) = (self.mt(b), self.mt(c));
                let mut out: Vec<Term> = self
                    .open_candidates(b, counter)
                    .into_iter()
                    .map(|l| Term::inl(tb.clone(), tc.clone(), l))
                    .collect();
                out.extend(
                    self.open_candidates(c, counter)
                        .into_iter()
                        .map(|r| Term::inr(tb.clone(), tc.clone(), r)),
                );
                out.truncate(cap);
                out
            }
            Formula::Exists(x, b) => {
                let mut out = Vec::new();
                let witnesses = self.witness_terms(b);
                'outer: for w in witnesses {
                    let inst = subst_formula(b, x, &w);
                    let wt = match crate::extract::embed_arith(self.sig, &w) {
                        Ok(t) => t,
                        Err(_) => continue,
                    };
                    for c in self.open_candidates(&inst, counter) {
                        out.push(Term::pair(Type::Nat, self.mt(b), wt.clone(), c));
                        if out.len() >= cap {
                            break 'outer;
                        }
                    }
                }
                out
            }
            Formula::Implies(b, c) => {
                let tb = self.mt(b);
                let mut out = Vec::new();
                for body in self.open_candidates(c, counter) {
                    *counter += 1;
                    let name = format!("h{counter}");
                    out.push(Term::lam(
                        name,
                        tb.clone(),
                        self.monad.unit_app(&self.mt(c), body),
                    ));
                    if out.len() >= cap {
                        break;
                    }
                }
                if let Ok(d) = dummy(&self.mt(a)) {
                    out.push(d);
                }
                out
            }
            Formula::Forall(x, b) => {
                let mut out = Vec::new();
                for body in self.open_candidates(b, counter) {
                    out.push(Term::lam(
                        x.clone(),
                        Type::Nat,
                        self.monad.unit_app(&self.mt(b), body),
                    ));
                    if out.len() >= cap {
                        break;
                    }
                }
                if let Ok(d) = dummy(&self.mt(a)) {
                    out.push(d);
                }
                out
            }
        }
    }

    /// Schematic witness terms for an existential: numerals up to the bound
    /// plus small successor chains over the free variables in scope.
    fn witness_terms(&self, body: &Formula) -> Vec<ArithTerm> {
        let mut out: Vec<ArithTerm> =
            (0..=self.bounds.universal_bound).map(ArithTerm::num).collect();
        for v in body.free_vars() {
            out.push(ArithTerm::var(v.clone()));
            out.push(ArithTerm::succ(ArithTerm::var(v.clone())));
            out.push(ArithTerm::succ(ArithTerm::succ(ArithTerm::var(v))));
        }
        out
    }
}

fn prefix_clause(v: TestVerdict, clause: &str) -> TestVerdict {
    prefix_with(v, clause, String::new())
}

fn prefix_clause_merge(v: TestVerdict, earlier_vacuous: bool, clause: &str) -> TestVerdict {
    let mut out = prefix_with(v, clause, String::new());
    out.vacuous |= earlier_vacuous;
    out
}

fn prefix_with(v: TestVerdict, clause: &str, note: String) -> TestVerdict {
    match v.outcome {
        Outcome::Fail(w) => TestVerdict {
            outcome: Outcome::Fail(Box::new(FailureWitness::Clause {
                clause: clause.to_string(),
                detail: if note.is_empty() { w.describe() } else { format!("{note}; {}", w.describe()) },
                term: None,
                formula: None,
            })),
            vacuous: v.vacuous,
        },
        _ => v,
    }
}

/// Extra, caller-supplied inner realizers per assumption label; verified
/// before use.
pub type SuppliedRealizers = BTreeMap<String, Vec<Term>>;

/// Validity of a decorated sequent at a state: enumerate numeral
/// substitutions for the free arithmetic variables and generated inner
/// realizers for the assumptions, and require the instantiated realizer to
/// monadically realize the instantiated conclusion.
pub fn sequent_valid(
    sig: &Signature,
    ds: &crate::extract::DecoratedSequent,
    s: &KnowledgeState,
    bounds: CheckBounds,
    supplied: &SuppliedRealizers,
) -> Result<TestVerdict, CheckError> {
    let checker = Checker::new(sig, bounds);
    let mut omega_vars: Vec<String> = ds.conclusion.free_vars().into_iter().collect();
    for (_, f) in &ds.context {
        for v in f.free_vars() {
            if !omega_vars.contains(&v) {
                omega_vars.push(v);
            }
        }
    }
    for v in ds.realizer.free_vars() {
        if !ds.context.iter().any(|(l, _)| l == &v) && !omega_vars.contains(&v) {
            omega_vars.push(v);
        }
    }
    omega_vars.sort();

    let span = bounds.universal_bound + 1;
    let combos = span.checked_pow(omega_vars.len() as u32).filter(|&c| c <= 20_000);
    let combos = match combos {
        Some(c) => c,
        None => {
            return Ok(TestVerdict {
                outcome: Outcome::Inconclusive(format!(
                    "too many numeral substitutions for {} free variables",
                    omega_vars.len()
                )),
                vacuous: false,
            })
        }
    };

    let mut vacuous = false;
    for idx in 0..combos {
        let mut rest = idx;
        let mut omega: Vec<(String, u64)> = Vec::with_capacity(omega_vars.len());
        for v in &omega_vars {
            omega.push((v.clone(), rest % span));
            rest /= span;
        }
        let mut concl = ds.conclusion.clone();
        let mut realizer = ds.realizer.clone();
        for (v, n) in &omega {
            concl = subst_formula(&concl, v, &ArithTerm::num(*n));
            realizer = subst(&realizer, v, &Term::numeral(*n));
        }
        let mut assumption_realizers: Vec<(String, Vec<Term>)> = Vec::new();
        let mut impossible = false;
        for (label, f) in &ds.context {
            let mut inst = f.clone();
            for (v, n) in &omega {
                inst = subst_formula(&inst, v, &ArithTerm::num(*n));
            }
            let mut rs = checker.realizer_generator(&inst, s, bounds.realizer_budget)?;
            if let Some(extra) = supplied.get(label) {
                for t in extra {
                    if type_of_closed(t).map(|ty| ty == checker.mt(&inst)).unwrap_or(false)
                        && checker.inner_clause(t, &inst, s)?.is_pass()
                    {
                        rs.push(t.clone());
                    }
                }
            }
            if rs.is_empty() {
                impossible = true;
                break;
            }
            rs.truncate(bounds.realizer_budget);
            assumption_realizers.push((label.clone(), rs));
        }
        if impossible {
            vacuous = true;
            continue;
        }
        // Cartesian product over the assumptions, capped.
        let total: usize = assumption_realizers.iter().map(|(_, rs)| rs.len()).product();
        let capped = total.min(256);
        for tuple_idx in 0..capped.max(1) {
            let mut rest_t = tuple_idx;
            let mut sigma: Vec<(String, Term)> = Vec::new();
            let mut instantiated = realizer.clone();
            for (label, rs) in &assumption_realizers {
                let pick = &rs[rest_t % rs.len()];
                rest_t /= rs.len().max(1);
                sigma.push((label.clone(), pick.clone()));
                instantiated = subst(&instantiated, label, pick);
            }
            let verdict = checker.monadic_clause(&instantiated, &concl, s)?;
            vacuous |= verdict.vacuous;
            if let Outcome::Fail(w) = verdict.outcome {
                return Ok(TestVerdict {
                    outcome: Outcome::Fail(Box::new(FailureWitness::Instantiation {
                        omega,
                        sigma,
                        inner: w,
                    })),
                    vacuous,
                });
            }
        }
    }
    Ok(TestVerdict { outcome: Outcome::Pass, vacuous })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PropStat {
    pub checked: usize,
    pub passed: usize,
}

/// Report of the MR1-MR3 property run. `mr3_cases` counts the
/// regular/exceptional combinations hit by MR3, in the order
/// (reg,reg), (reg,exc), (exc,reg), (exc,exc).
#[derive(Clone, Debug, Default)]
pub struct MrReport {
    pub seed: u64,
    pub mr1: PropStat,
    pub mr2: PropStat,
    pub mr3: PropStat,
    pub mr3_cases: [usize; 4],
    pub failures: Vec<String>,
}

impl MrReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
            && self.mr1.checked == self.mr1.passed
            && self.mr2.checked == self.mr2.passed
            && self.mr3.checked == self.mr3.passed
    }
}

/// Sample a monadic realizer of `a` at `s`: either `unit` of a generated
/// inner realizer or a constant exceptional state function whose exception
/// properly extends `s`.
fn monadic_sample(
    checker: &Checker,
    a: &Formula,
    s: &KnowledgeState,
    exceptional: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Term>, CheckError> {
    let m = &checker.monad;
    if exceptional {
        let e = match sample_proper_extension(checker.sig, s, rng, 2, checker.bounds.universal_bound)
        {
            Some(e) => e,
            None => return Ok(None),
        };
        let payload = Term::inr(checker.mt(a), Type::ex(), Term::ExLit(e));
        Ok(Some(Term::lam("_", Type::state(), payload)))
    } else {
        let rs = checker.realizer_generator(a, s, 4)?;
        if rs.is_empty() {
            return Ok(None);
        }
        let pick = rs[rng.gen_range(0..rs.len())].clone();
        Ok(Some(m.unit_app(&checker.mt(a), pick)))
    }
}

/// Property suite for MR1-MR3 over sampled formulas, states, and realizers.
pub fn check_mr_properties(
    sig: &Signature,
    bounds: CheckBounds,
    samples: usize,
    formula_depth: usize,
    seed: u64,
) -> Result<MrReport, CheckError> {
    let checker = Checker::new(sig, bounds);
    let m = checker.monad.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MrReport { seed, ..MrReport::default() };
    let gen_cfg = GenConfig::default();
    let _ = Gen::new(sig, Some(&m), gen_cfg);

    let mut attempts = 0usize;
    while report.mr1.checked < samples && attempts < samples * 20 {
        attempts += 1;
        let a = random_closed_formula(sig, formula_depth, bounds.universal_bound, &mut rng);
        let s = sample_state(sig, &mut rng, 3, bounds.universal_bound);
        let rs = checker.realizer_generator(&a, &s, 3)?;
        let Some(r) = rs.first() else { continue };
        report.mr1.checked += 1;
        let lifted = m.unit_app(&checker.mt(&a), r.clone());
        let v = checker.monadic_clause(&lifted, &a, &s)?;
        if v.is_pass() {
            report.mr1.passed += 1;
        } else {
            report.failures.push(format!("MR1 failed on {a:?}: {:?}", v.outcome));
        }
    }

    attempts = 0;
    while report.mr2.checked < samples && attempts < samples * 30 {
        attempts += 1;
        let a = random_closed_formula(sig, formula_depth.saturating_sub(1), bounds.universal_bound, &mut rng);
        let b = random_closed_formula(sig, formula_depth.saturating_sub(1), bounds.universal_bound, &mut rng);
        let imp = Formula::implies(a.clone(), b.clone());
        let s = sample_state(sig, &mut rng, 3, bounds.universal_bound);
        let rs = checker.realizer_generator(&imp, &s, 3)?;
        let Some(r) = rs.first() else { continue };
        let exceptional = rng.gen_bool(0.4);
        let Some(ahat) = monadic_sample(&checker, &a, &s, exceptional, &mut rng)? else {
            continue;
        };
        report.mr2.checked += 1;
        let star = Term::apps(
            m.star_at(&checker.mt(&a), &checker.mt(&b)),
            [r.clone(), ahat],
        );
        let v = checker.monadic_clause(&star, &b, &s)?;
        if v.is_pass() {
            report.mr2.passed += 1;
        } else {
            report.failures.push(format!("MR2 failed on {imp:?}: {:?}", v.outcome));
        }
    }

    attempts = 0;
    while report.mr3.checked < samples && attempts < samples * 30 {
        attempts += 1;
        let a = random_closed_formula(sig, formula_depth.saturating_sub(1), bounds.universal_bound, &mut rng);
        let b = random_closed_formula(sig, formula_depth.saturating_sub(1), bounds.universal_bound, &mut rng);
        let s = sample_state(sig, &mut rng, 3, bounds.universal_bound);
        // Round-robin over the four regular/exceptional combinations.
        let case = report.mr3.checked % 4;
        let (exc_a, exc_b) = [(false, false), (false, true), (true, false), (true, true)][case];
        let Some(ahat) = monadic_sample(&checker, &a, &s, exc_a, &mut rng)? else { continue };
        let Some(bhat) = monadic_sample(&checker, &b, &s, exc_b, &mut rng)? else { continue };
        report.mr3.checked += 1;
        report.mr3_cases[case] += 1;
        let merged = Term::apps(
            m.merge_at(&checker.mt(&a), &checker.mt(&b)),
            [ahat, bhat],
        );
        let conj = Formula::and(a, b);
        let v = checker.monadic_clause(&merged, &conj, &s)?;
        if v.is_pass() {
            report.mr3.passed += 1;
        } else {
            report.failures.push(format!("MR3 case {case} failed on {conj:?}: {:?}", v.outcome));
        }
    }

    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::{em_realizer, DecoratedSequent};
    use crate::runtime::{ExceptionValue, WitnessKey};
    use crate::sig::{BuiltinPred, Interp};

    fn sig() -> Signature {
        let mut s = Signature::new();
        s.declare_pred("LT", 2, Interp::Builtin(BuiltinPred::Lt)).unwrap();
        let rows = (0..=4u64).map(|y| (vec![y], true)).collect();
        s.declare_pred("B4", 1, Interp::Table { default: false, rows }).unwrap();
        s
    }

    fn lt(a: u64, b: u64) -> Formula {
        Formula::atom("LT", vec![ArithTerm::num(a), ArithTerm::num(b)])
    }

    #[test]
    fn atomic_clause() {
        let s = sig();
        let checker = Checker::new(&s, CheckBounds::default());
        let st = KnowledgeState::empty();
        assert!(checker.inner_realizes(&Term::unit_val(), &lt(2, 5), &st).unwrap().is_pass());
        assert!(checker.inner_realizes(&Term::unit_val(), &lt(5, 2), &st).unwrap().is_fail());
        assert!(checker.inner_realizes(&Term::unit_val(), &Formula::False, &st).unwrap().is_fail());
    }

    #[test]
    fn exists_clause_unfolds_to_atomic_truth() {
        let s = sig();
        let checker = Checker::new(&s, CheckBounds::default());
        let st = KnowledgeState::empty();
        let f = Formula::exists("y", Formula::atom("LT", vec![ArithTerm::num(2), ArithTerm::var("y")]));
        let good = Term::pair(Type::Nat, Type::Unit, Term::numeral(3), Term::unit_val());
        assert!(checker.inner_realizes(&good, &f, &st).unwrap().is_pass());
        let bad = Term::pair(Type::Nat, Type::Unit, Term::numeral(1), Term::unit_val());
        assert!(checker.inner_realizes(&bad, &f, &st).unwrap().is_fail());
    }

    #[test]
    fn monadic_clauses() {
        let s = sig();
        let checker = Checker::new(&s, CheckBounds::default());
        let st = KnowledgeState::empty();
        let m = ir_monad();
        // unit unit-value realizes a true atomic at any state.
        let r = m.unit_app(&Type::Unit, Term::unit_val());
        assert!(checker.monadic_realizes(&r, &lt(2, 5), &st).unwrap().is_pass());

        // A constant exceptional function passes iff the exception properly extends.
        let e = ExceptionValue::singleton(&s, WitnessKey::new("B4", vec![]), 9).unwrap();
        let exc = Term::lam(
            "_",
            Type::state(),
            Term::inr(Type::Unit, Type::ex(), Term::ExLit(e.clone())),
        );
        assert!(checker.monadic_realizes(&exc, &lt(2, 5), &st).unwrap().is_pass());
        let bigger = KnowledgeState::new(&s, [(WitnessKey::new("B4", vec![]), 9)]).unwrap();
        assert!(checker.monadic_realizes(&exc, &lt(2, 5), &bigger).unwrap().is_fail());
    }

    #[test]
    fn generator_emits_canonical_witness() {
        let s = sig();
        let bounds = CheckBounds { universal_bound: 10, ..CheckBounds::default() };
        let checker = Checker::new(&s, bounds);
        let st = KnowledgeState::empty();
        let f = Formula::exists("y", Formula::atom("LT", vec![ArithTerm::num(2), ArithTerm::var("y")]));
        let rs = checker.realizer_generator(&f, &st, 10).unwrap();
        assert!(!rs.is_empty());
        let canonical = Term::pair(Type::Nat, Type::Unit, Term::numeral(3), Term::unit_val());
        assert_eq!(rs[0], canonical);
    }

    #[test]
    fn generator_emits_nothing_for_false_atomics() {
        let s = sig();
        let checker = Checker::new(&s, CheckBounds::default());
        let st = KnowledgeState::empty();
        assert!(checker.realizer_generator(&lt(5, 2), &st, 10).unwrap().is_empty());
        assert!(checker
            .realizer_generator(&lt(2, 5), &st, 10)
            .unwrap()
            .contains(&Term::unit_val()));
    }

    #[test]
    fn vacuous_implication_flagged() {
        let s = sig();
        let checker = Checker::new(&s, CheckBounds::default());
        let st = KnowledgeState::empty();
        let f = Formula::not(lt(5, 2));
        let w = Term::lam(
            "u",
            Type::Unit,
            ir_monad().unit_app(&Type::Unit, Term::unit_val()),
        );
        let v = checker.inner_realizes(&w, &f, &st).unwrap();
        assert!(v.is_pass());
        assert!(v.vacuous);
    }

    #[test]
    fn em_sequent_valid_on_samples() {
        let s = sig();
        let em = em_realizer(&s, "B4", &[]).unwrap();
        let ds = DecoratedSequent {
            context: vec![],
            realizer: em,
            conclusion: Formula::em_instance("B4", &[], "y"),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..8 {
            let st = sample_state(&s, &mut rng, 2, 10);
            let v = sequent_valid(&s, &ds, &st, CheckBounds::default(), &SuppliedRealizers::new())
                .unwrap();
            assert!(v.is_pass(), "failed at state {st:?}: {:?}", v.outcome);
        }
    }

    #[test]
    fn mutated_em_with_swapped_branches_fails() {
        // Swapping the query branches produces the universal side exactly when
        // a witness is stored; the checker finds the refuting state.
        let s = sig();
        let sym = s.pred("B4").unwrap().sym.clone();
        let t_unit = Type::arrow(Type::state(), Type::sum(Type::Unit, Type::ex()));
        let m_univ = Type::arrow(Type::Nat, t_unit.clone());
        let m_not = Type::arrow(Type::Unit, t_unit);
        let m_exis = Type::prod(Type::Nat, m_not.clone());
        let m_em = Type::sum(m_univ.clone(), m_exis.clone());
        let r_forall = Term::lam(
            "y",
            Type::Nat,
            Term::lam(
                "_",
                Type::state(),
                Term::app(Term::Const(ConstKind::Eval(sym.clone())), Term::var("y", Type::Nat)),
            ),
        );
        // Branches swapped: a stored witness now produces the universal side.
        let swapped = Term::lam(
            "s",
            Type::state(),
            Term::inl(
                m_em.clone(),
                Type::ex(),
                Term::case(
                    Type::Unit,
                    Type::Nat,
                    m_em,
                    Term::app(
                        Term::Const(ConstKind::Query(sym)),
                        Term::var("s", Type::state()),
                    ),
                    Term::lam(
                        "_",
                        Type::Unit,
                        Term::inr(
                            m_univ.clone(),
                            m_exis.clone(),
                            Term::pair(
                                Type::Nat,
                                m_not.clone(),
                                Term::zero(),
                                dummy(&m_not).unwrap(),
                            ),
                        ),
                    ),
                    Term::lam("w", Type::Nat, Term::inl(m_univ, m_exis, r_forall)),
                ),
            ),
        );
        let ds = DecoratedSequent {
            context: vec![],
            realizer: swapped,
            conclusion: Formula::em_instance("B4", &[], "y"),
        };
        // At a state holding a witness the universal side is produced and
        // refuted by eval at the stored counterexample.
        let st = KnowledgeState::new(&s, [(WitnessKey::new("B4", vec![]), 7)]).unwrap();
        let v = sequent_valid(&s, &ds, &st, CheckBounds::default(), &SuppliedRealizers::new())
            .unwrap();
        assert!(v.is_fail());
    }

    #[test]
    fn mr_properties_smoke() {
        let s = sig();
        let report = check_mr_properties(&s, CheckBounds::default(), 40, 2, 5).unwrap();
        assert!(report.all_pass(), "{:?}", report.failures);
        assert!(report.mr3_cases.iter().all(|&c| c > 0), "{:?}", report.mr3_cases);
    }
}
