//! First-order arithmetic: terms, formulas, and natural-deduction
//! derivations for HA extended with the restricted excluded middle axiom.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::sig::{RuleAtom, SigError, Signature};

/// Arithmetic terms: variables, zero, successor, and optional configured
/// function symbols.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ArithTerm {
    Var(String),
    Zero,
    Succ(Box<ArithTerm>),
    Fn { name: String, args: Vec<ArithTerm> },
}

impl ArithTerm {
    pub fn var(name: impl Into<String>) -> Self {
        ArithTerm::Var(name.into())
    }

    pub fn num(n: u64) -> Self {
        let mut t = ArithTerm::Zero;
        for _ in 0..n {
            t = ArithTerm::Succ(Box::new(t));
        }
        t
    }

    pub fn succ(t: ArithTerm) -> Self {
        ArithTerm::Succ(Box::new(t))
    }

    pub fn as_const(&self) -> Option<u64> {
        match self {
            ArithTerm::Zero => Some(0),
            ArithTerm::Succ(t) => t.as_const().map(|n| n + 1),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut acc = BTreeSet::new();
        self.collect_vars(&mut acc);
        acc
    }

    fn collect_vars(&self, acc: &mut BTreeSet<String>) {
        match self {
            ArithTerm::Var(x) => {
                acc.insert(x.clone());
            }
            ArithTerm::Zero => {}
            ArithTerm::Succ(t) => t.collect_vars(acc),
            ArithTerm::Fn { args, .. } => args.iter().for_each(|a| a.collect_vars(acc)),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Substitute `x := s` (arithmetic terms have no binders).
    pub fn subst(&self, x: &str, s: &ArithTerm) -> ArithTerm {
        match self {
            ArithTerm::Var(y) if y == x => s.clone(),
            ArithTerm::Var(_) | ArithTerm::Zero => self.clone(),
            ArithTerm::Succ(t) => ArithTerm::Succ(Box::new(t.subst(x, s))),
            ArithTerm::Fn { name, args } => ArithTerm::Fn {
                name: name.clone(),
                args: args.iter().map(|a| a.subst(x, s)).collect(),
            },
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("unbound arithmetic variable `{0}`")]
    UnboundVar(String),
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error("formula is not closed: free variable `{0}`")]
    NotClosed(String),
    #[error("formula is not atomic")]
    NotAtomic,
}

/// Value of an arithmetic term under an environment for its free variables.
pub fn eval_arith(
    t: &ArithTerm,
    env: &dyn Fn(&str) -> Option<u64>,
    sig: &Signature,
) -> Result<u64, LogicError> {
    match t {
        ArithTerm::Var(x) => env(x).ok_or_else(|| LogicError::UnboundVar(x.clone())),
        ArithTerm::Zero => Ok(0),
        ArithTerm::Succ(inner) => Ok(eval_arith(inner, env, sig)?.wrapping_add(1)),
        ArithTerm::Fn { name, args } => {
            let interp = sig.fn_interp(name)?;
            let vals = args
                .iter()
                .map(|a| eval_arith(a, env, sig))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(interp.apply(&vals))
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Atomic { pred: String, args: Vec<ArithTerm> },
    False,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: impl Into<String>, args: Vec<ArithTerm>) -> Formula {
        Formula::Atomic { pred: pred.into(), args }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// `not A` is notation for `A -> False`.
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::implies(a, Formula::False)
    }

    pub fn forall(x: impl Into<String>, a: Formula) -> Formula {
        Formula::Forall(x.into(), Box::new(a))
    }

    pub fn exists(x: impl Into<String>, a: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(a))
    }

    /// The excluded-middle instance for a predicate of arity k+1 applied to
    /// k parameter terms: `(forall y. P(ts, y)) or (exists y. not P(ts, y))`.
    pub fn em_instance(pred: &str, args: &[ArithTerm], y: &str) -> Formula {
        let mut full = args.to_vec();
        full.push(ArithTerm::var(y));
        let matrix = Formula::atom(pred, full);
        Formula::or(
            Formula::forall(y, matrix.clone()),
            Formula::exists(y, Formula::not(matrix)),
        )
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atomic { .. } | Formula::False)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, acc: &mut BTreeSet<String>) {
            match f {
                Formula::Atomic { args, .. } => {
                    for a in args {
                        for v in a.free_vars() {
                            if !bound.iter().any(|b| b == &v) {
                                acc.insert(v);
                            }
                        }
                    }
                }
                Formula::False => {}
                Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                    go(a, bound, acc);
                    go(b, bound, acc);
                }
                Formula::Forall(x, a) | Formula::Exists(x, a) => {
                    bound.push(x.clone());
                    go(a, bound, acc);
                    bound.pop();
                }
            }
        }
        let mut acc = BTreeSet::new();
        go(self, &mut Vec::new(), &mut acc);
        acc
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }
}

/// Capture-avoiding substitution of an arithmetic term into a formula.
pub fn subst_formula(f: &Formula, x: &str, t: &ArithTerm) -> Formula {
    match f {
        Formula::Atomic { pred, args } => Formula::Atomic {
            pred: pred.clone(),
            args: args.iter().map(|a| a.subst(x, t)).collect(),
        },
        Formula::False => Formula::False,
        Formula::And(a, b) => Formula::and(subst_formula(a, x, t), subst_formula(b, x, t)),
        Formula::Or(a, b) => Formula::or(subst_formula(a, x, t), subst_formula(b, x, t)),
        Formula::Implies(a, b) => {
            Formula::implies(subst_formula(a, x, t), subst_formula(b, x, t))
        }
        Formula::Forall(y, a) | Formula::Exists(y, a) => {
            let make = |y: String, a: Formula| match f {
                Formula::Forall(..) => Formula::forall(y, a),
                _ => Formula::exists(y, a),
            };
            if y == x {
                return f.clone();
            }
            if !a.free_vars().contains(x) {
                return f.clone();
            }
            if t.free_vars().contains(y) {
                let mut avoid: BTreeSet<String> = t.free_vars();
                avoid.extend(a.free_vars());
                avoid.insert(x.to_string());
                let fresh = crate::kernel::fresh_name(y, &avoid);
                let renamed = subst_formula(a, y, &ArithTerm::var(fresh.clone()));
                make(fresh, subst_formula(&renamed, x, t))
            } else {
                make(y.clone(), subst_formula(a, x, t))
            }
        }
    }
}

/// Truth of a closed atomic formula: the interpretation applied to the
/// evaluated arguments; `False` is never true.
pub fn atomic_truth(f: &Formula, sig: &Signature) -> Result<bool, LogicError> {
    match f {
        Formula::False => Ok(false),
        Formula::Atomic { pred, args } => {
            let vals = args
                .iter()
                .map(|a| eval_arith(a, &|_| None, sig))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(sig.holds(pred, &vals)?)
        }
        _ => Err(LogicError::NotAtomic),
    }
}

/// Rule tag plus rule-specific payload of a derivation node.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Rule {
    Id { label: String },
    Atm { rule: String, args: Vec<ArithTerm> },
    AndI,
    AndEL,
    AndER,
    OrIL,
    OrIR,
    OrE,
    ImpI,
    ImpE,
    ForallI,
    ForallE { term: ArithTerm },
    ExistsI { term: ArithTerm },
    ExistsE { eigen: String },
    Ind { eigen: String },
    Em { pred: String, args: Vec<ArithTerm> },
}

impl Rule {
    pub fn tag(&self) -> &'static str {
        match self {
            Rule::Id { .. } => "id",
            Rule::Atm { .. } => "atm",
            Rule::AndI => "and-i",
            Rule::AndEL => "and-el",
            Rule::AndER => "and-er",
            Rule::OrIL => "or-il",
            Rule::OrIR => "or-ir",
            Rule::OrE => "or-e",
            Rule::ImpI => "imp-i",
            Rule::ImpE => "imp-e",
            Rule::ForallI => "all-i",
            Rule::ForallE { .. } => "all-e",
            Rule::ExistsI { .. } => "ex-i",
            Rule::ExistsE { .. } => "ex-e",
            Rule::Ind { .. } => "ind",
            Rule::Em { .. } => "em",
        }
    }
}

pub type Context = Vec<(String, Formula)>;

/// A natural-deduction derivation node. Every node carries its full sequent;
/// the checker verifies the relationships between the nodes.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub ctx: Context,
    pub concl: Formula,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn new(rule: Rule, ctx: Context, concl: Formula, premises: Vec<Derivation>) -> Self {
        Derivation { rule, ctx, concl, premises }
    }

    /// All rule tags used anywhere in the derivation.
    pub fn rules_used(&self) -> BTreeSet<&'static str> {
        let mut acc = BTreeSet::new();
        fn go(d: &Derivation, acc: &mut BTreeSet<&'static str>) {
            acc.insert(d.rule.tag());
            d.premises.iter().for_each(|p| go(p, acc));
        }
        go(self, &mut acc);
        acc
    }

    pub fn uses_em(&self) -> bool {
        self.rules_used().contains("em")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Diagnostic {
    /// Premise indices from the root to the offending node.
    pub path: Vec<usize>,
    pub rule: &'static str,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "at {:?} ({}): {}", self.path, self.rule, self.message)
    }
}

/// Well-formedness report for a derivation.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Report {
    pub errors: Vec<Diagnostic>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

struct Checker<'a> {
    sig: &'a Signature,
    errors: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn fail(&mut self, path: &[usize], rule: &'static str, msg: impl Into<String>) {
        self.errors.push(Diagnostic { path: path.to_vec(), rule, message: msg.into() });
    }

    fn expect_premises(&mut self, d: &Derivation, path: &[usize], n: usize) -> bool {
        if d.premises.len() != n {
            self.fail(
                path,
                d.rule.tag(),
                format!("expected {n} premises, found {}", d.premises.len()),
            );
            false
        } else {
            true
        }
    }

    /// Premise context must be the conclusion context plus one discharged
    /// assumption at the end, with a label fresh for the conclusion context.
    fn check_discharge<'d>(
        &mut self,
        d: &'d Derivation,
        path: &[usize],
        premise: &'d Derivation,
        which: &str,
    ) -> Option<(&'d String, &'d Formula)> {
        let rule = d.rule.tag();
        if premise.ctx.len() != d.ctx.len() + 1 {
            self.fail(
                path,
                rule,
                format!("{which} premise must extend the context by one assumption"),
            );
            return None;
        }
        if premise.ctx[..d.ctx.len()] != d.ctx[..] {
            self.fail(path, rule, format!("{which} premise context does not extend the conclusion context"));
            return None;
        }
        let (label, formula) = premise.ctx.last().expect("nonempty by the length check");
        if d.ctx.iter().any(|(l, _)| l == label) {
            self.fail(path, rule, format!("discharged label `{label}` shadows an open assumption"));
            return None;
        }
        Some((label, formula))
    }

    fn check_same_ctx(&mut self, d: &Derivation, path: &[usize], premise: &Derivation, which: &str) {
        if premise.ctx != d.ctx {
            self.fail(path, d.rule.tag(), format!("{which} premise context differs from the conclusion context"));
        }
    }

    fn eigen_fresh(&mut self, d: &Derivation, path: &[usize], var: &str, also: &[&Formula]) {
        for (label, f) in &d.ctx {
            if f.free_vars().contains(var) {
                self.fail(
                    path,
                    d.rule.tag(),
                    format!("eigenvariable `{var}` occurs free in open assumption `{label}`"),
                );
            }
        }
        for f in also {
            if f.free_vars().contains(var) {
                self.fail(path, d.rule.tag(), format!("eigenvariable `{var}` occurs free in the conclusion"));
            }
        }
    }

    fn check_node(&mut self, d: &Derivation, path: &mut Vec<usize>) {
        let mut labels = BTreeSet::new();
        for (l, _) in &d.ctx {
            if !labels.insert(l.clone()) {
                self.fail(path, d.rule.tag(), format!("duplicate assumption label `{l}`"));
            }
        }
        // Labels share a namespace with arithmetic variables in decorated
        // realizers, so a label equal to a free variable of the sequent
        // would be captured by the wrong binder.
        let mut arith_vars = d.concl.free_vars();
        for (_, f) in &d.ctx {
            arith_vars.extend(f.free_vars());
        }
        for l in &labels {
            if arith_vars.contains(l) {
                self.fail(
                    path,
                    d.rule.tag(),
                    format!("assumption label `{l}` collides with an arithmetic variable"),
                );
            }
        }
        match &d.rule {
            Rule::Id { label } => {
                self.expect_premises(d, path, 0);
                match d.ctx.iter().find(|(l, _)| l == label) {
                    None => self.fail(path, "id", format!("label `{label}` not in context")),
                    Some((_, f)) if f != &d.concl => {
                        self.fail(path, "id", "conclusion differs from the labeled assumption")
                    }
                    _ => {}
                }
            }
            Rule::Atm { rule, args } => {
                let decl = match self.sig.rule(rule) {
                    Some(r) => r.clone(),
                    None => {
                        self.fail(path, "atm", format!("unknown atomic rule `{rule}`"));
                        return;
                    }
                };
                if self.expect_premises(d, path, decl.premises.len()) {
                    for (i, (p, atom)) in d.premises.iter().zip(&decl.premises).enumerate() {
                        self.check_same_ctx(d, path, p, "atm");
                        if !p.concl.is_atomic() {
                            self.fail(path, "atm", format!("premise {i} is not atomic"));
                        }
                        let expected = self.rule_atom_formula(atom, args);
                        if p.concl != expected {
                            self.fail(path, "atm", format!("premise {i} does not match the rule instance"));
                        }
                    }
                }
                let expected = self.rule_atom_formula(&decl.conclusion, args);
                if d.concl != expected {
                    self.fail(path, "atm", "conclusion does not match the rule instance");
                }
            }
            Rule::AndI => {
                if self.expect_premises(d, path, 2) {
                    self.check_same_ctx(d, path, &d.premises[0], "left");
                    self.check_same_ctx(d, path, &d.premises[1], "right");
                    match &d.concl {
                        Formula::And(a, b) => {
                            if d.premises[0].concl != **a {
                                self.fail(path, "and-i", "left premise mismatch");
                            }
                            if d.premises[1].concl != **b {
                                self.fail(path, "and-i", "right premise mismatch");
                            }
                        }
                        _ => self.fail(path, "and-i", "conclusion is not a conjunction"),
                    }
                }
            }
            Rule::AndEL | Rule::AndER => {
                if self.expect_premises(d, path, 1) {
                    self.check_same_ctx(d, path, &d.premises[0], "the");
                    match &d.premises[0].concl {
                        Formula::And(a, b) => {
                            let pick = if matches!(d.rule, Rule::AndEL) { a } else { b };
                            if d.concl != **pick {
                                self.fail(path, d.rule.tag(), "conclusion is not the selected conjunct");
                            }
                        }
                        _ => self.fail(path, d.rule.tag(), "premise is not a conjunction"),
                    }
                }
            }
            Rule::OrIL | Rule::OrIR => {
                if self.expect_premises(d, path, 1) {
                    self.check_same_ctx(d, path, &d.premises[0], "the");
                    match &d.concl {
                        Formula::Or(a, b) => {
                            let pick = if matches!(d.rule, Rule::OrIL) { a } else { b };
                            if d.premises[0].concl != **pick {
                                self.fail(path, d.rule.tag(), "premise is not the introduced disjunct");
                            }
                        }
                        _ => self.fail(path, d.rule.tag(), "conclusion is not a disjunction"),
                    }
                }
            }
            Rule::OrE => {
                if self.expect_premises(d, path, 3) {
                    self.check_same_ctx(d, path, &d.premises[0], "major");
                    let (a, b) = match &d.premises[0].concl {
                        Formula::Or(a, b) => ((**a).clone(), (**b).clone()),
                        _ => {
                            self.fail(path, "or-e", "major premise is not a disjunction");
                            return;
                        }
                    };
                    if let Some((_, f)) = self.check_discharge(d, path, &d.premises[1], "left") {
                        if f != &a {
                            self.fail(path, "or-e", "left branch discharges the wrong formula");
                        }
                    }
                    if let Some((_, f)) = self.check_discharge(d, path, &d.premises[2], "right") {
                        if f != &b {
                            self.fail(path, "or-e", "right branch discharges the wrong formula");
                        }
                    }
                    if d.premises[1].concl != d.concl || d.premises[2].concl != d.concl {
                        self.fail(path, "or-e", "branch conclusions differ from the conclusion");
                    }
                }
            }
            Rule::ImpI => {
                if self.expect_premises(d, path, 1) {
                    match &d.concl {
                        Formula::Implies(a, b) => {
                            if let Some((_, f)) = self.check_discharge(d, path, &d.premises[0], "the") {
                                if f != a.as_ref() {
                                    self.fail(path, "imp-i", "discharged formula is not the antecedent");
                                }
                            }
                            if d.premises[0].concl != **b {
                                self.fail(path, "imp-i", "premise conclusion is not the consequent");
                            }
                        }
                        _ => self.fail(path, "imp-i", "conclusion is not an implication"),
                    }
                }
            }
            Rule::ImpE => {
                if self.expect_premises(d, path, 2) {
                    self.check_same_ctx(d, path, &d.premises[0], "major");
                    self.check_same_ctx(d, path, &d.premises[1], "minor");
                    match &d.premises[0].concl {
                        Formula::Implies(a, b) => {
                            if d.premises[1].concl != **a {
                                self.fail(path, "imp-e", "minor premise is not the antecedent of the major");
                            }
                            if d.concl != **b {
                                self.fail(path, "imp-e", "conclusion is not the consequent of the major");
                            }
                        }
                        _ => self.fail(path, "imp-e", "major premise is not an implication"),
                    }
                }
            }
            Rule::ForallI => {
                if self.expect_premises(d, path, 1) {
                    self.check_same_ctx(d, path, &d.premises[0], "the");
                    match &d.concl {
                        Formula::Forall(x, a) => {
                            if d.premises[0].concl != **a {
                                self.fail(path, "all-i", "premise is not the quantified body");
                            }
                            self.eigen_fresh(d, path, x, &[]);
                        }
                        _ => self.fail(path, "all-i", "conclusion is not universally quantified"),
                    }
                }
            }
            Rule::ForallE { term } => {
                if self.expect_premises(d, path, 1) {
                    self.check_same_ctx(d, path, &d.premises[0], "the");
                    match &d.premises[0].concl {
                        Formula::Forall(x, a) => {
                            if d.concl != subst_formula(a, x, term) {
                                self.fail(path, "all-e", "conclusion is not the instantiated body");
                            }
                        }
                        _ => self.fail(path, "all-e", "premise is not universally quantified"),
                    }
                }
            }
            Rule::ExistsI { term } => {
                if self.expect_premises(d, path, 1) {
                    self.check_same_ctx(d, path, &d.premises[0], "the");
                    match &d.concl {
                        Formula::Exists(x, a) => {
                            if d.premises[0].concl != subst_formula(a, x, term) {
                                self.fail(path, "ex-i", "premise is not the witness instance");
                            }
                        }
                        _ => self.fail(path, "ex-i", "conclusion is not existentially quantified"),
                    }
                }
            }
            Rule::ExistsE { eigen } => {
                if self.expect_premises(d, path, 2) {
                    self.check_same_ctx(d, path, &d.premises[0], "major");
                    let (x, a) = match &d.premises[0].concl {
                        Formula::Exists(x, a) => (x.clone(), (**a).clone()),
                        _ => {
                            self.fail(path, "ex-e", "major premise is not existentially quantified");
                            return;
                        }
                    };
                    if let Some((_, f)) = self.check_discharge(d, path, &d.premises[1], "minor") {
                        let expected = subst_formula(&a, &x, &ArithTerm::var(eigen.clone()));
                        if f != &expected {
                            self.fail(path, "ex-e", "discharged formula is not the eigen instance");
                        }
                    }
                    if d.premises[1].concl != d.concl {
                        self.fail(path, "ex-e", "minor conclusion differs from the conclusion");
                    }
                    self.eigen_fresh(d, path, eigen, &[&d.concl]);
                }
            }
            Rule::Ind { eigen } => {
                if self.expect_premises(d, path, 1) {
                    let (x, a) = match &d.concl {
                        Formula::Forall(x, a) => (x.clone(), (**a).clone()),
                        _ => {
                            self.fail(path, "ind", "conclusion is not universally quantified");
                            return;
                        }
                    };
                    let premise = &d.premises[0];
                    // Premise: Gamma, alpha : forall z (z < y -> A[x:=z]) |- A[x:=y].
                    let expected_concl = subst_formula(&a, &x, &ArithTerm::var(eigen.clone()));
                    if premise.concl != expected_concl {
                        self.fail(path, "ind", "premise conclusion is not the eigen instance");
                    }
                    let hyp = match self.check_discharge(d, path, premise, "the") {
                        Some((_, f)) => f.clone(),
                        None => return,
                    };
                    let ok = match &hyp {
                        Formula::Forall(z, body) => match body.as_ref() {
                            Formula::Implies(guard, inst) => {
                                let guard_ok = match guard.as_ref() {
                                    Formula::Atomic { pred, args } if args.len() == 2 => {
                                        self.sig.is_strict_order(pred)
                                            && args[0] == ArithTerm::var(z.clone())
                                            && args[1] == ArithTerm::var(eigen.clone())
                                    }
                                    _ => false,
                                };
                                let inst_ok = **inst == subst_formula(&a, &x, &ArithTerm::var(z.clone()));
                                guard_ok && inst_ok && z != eigen
                            }
                            _ => false,
                        },
                        _ => false,
                    };
                    if !ok {
                        self.fail(
                            path,
                            "ind",
                            "hypothesis is not `forall z (z < y -> A[x:=z])` for a strict-order predicate",
                        );
                    }
                    self.eigen_fresh(d, path, eigen, &[&d.concl]);
                }
            }
            Rule::Em { pred, args } => {
                self.expect_premises(d, path, 0);
                match self.sig.pred(pred) {
                    Err(e) => self.fail(path, "em", e.to_string()),
                    Ok(decl) => {
                        if decl.sym.params() != args.len() {
                            self.fail(
                                path,
                                "em",
                                format!(
                                    "predicate `{pred}` takes {} parameters, got {}",
                                    decl.sym.params(),
                                    args.len()
                                ),
                            );
                        }
                    }
                }
                let matches_shape = match &d.concl {
                    Formula::Or(l, r) => match (l.as_ref(), r.as_ref()) {
                        (Formula::Forall(y, _), Formula::Exists(y2, _)) if y == y2 => {
                            // The quantified variable must be fresh for the
                            // argument terms, or they would be captured.
                            if args.iter().any(|t| t.free_vars().contains(y)) {
                                self.fail(
                                    path,
                                    "em",
                                    format!("argument terms capture the quantified variable `{y}`"),
                                );
                            }
                            d.concl == Formula::em_instance(pred, args, y)
                        }
                        _ => false,
                    },
                    _ => false,
                };
                if !matches_shape {
                    self.fail(path, "em", "conclusion is not the excluded-middle instance for the payload");
                }
            }
        }
        for (i, p) in d.premises.iter().enumerate() {
            path.push(i);
            self.check_node(p, path);
            path.pop();
        }
    }

    fn rule_atom_formula(&self, atom: &RuleAtom, args: &[ArithTerm]) -> Formula {
        match atom {
            RuleAtom::False => Formula::False,
            RuleAtom::Pred(p) => Formula::atom(p.clone(), args.to_vec()),
        }
    }
}

/// Verify local well-formedness of every node: formula shapes, context
/// discipline, discharge, eigenvariable conditions, atomicity for `Atm`.
pub fn check_derivation(sig: &Signature, d: &Derivation) -> Report {
    let mut checker = Checker { sig, errors: Vec::new() };
    checker.check_node(d, &mut Vec::new());
    Report { errors: checker.errors }
}
