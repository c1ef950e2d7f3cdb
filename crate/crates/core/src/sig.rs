//! Signatures: predicate symbols with decidable interpretations, arithmetic
//! function symbols, and atomic rules.
//!
//! A [`Signature`] is the ambient context every other module works against.
//! It fixes the base types (`State` and `Ex` are always present), the
//! predicate symbols with their total decidable interpretations, optional
//! extra function symbols for arithmetic terms, and the atomic rules usable
//! by `Atm` derivation nodes.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub const STATE: &str = "State";
pub const EX: &str = "Ex";

/// A predicate symbol together with its full arity.
///
/// Predicates used by `query`/`eval` constants have arity `k+1`: `k`
/// parameters plus the quantified position.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PredSym {
    pub name: String,
    pub arity: usize,
}

impl PredSym {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredSym { name: name.into(), arity }
    }

    /// Number of parameter positions (full arity minus the witness position).
    pub fn params(&self) -> usize {
        self.arity.saturating_sub(1)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BuiltinPred {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
    /// True on every argument tuple.
    True,
    /// False on every argument tuple.
    False,
}

impl BuiltinPred {
    pub fn name(self) -> &'static str {
        match self {
            BuiltinPred::Lt => "lt",
            BuiltinPred::Le => "le",
            BuiltinPred::Eq => "eq",
            BuiltinPred::Ne => "ne",
            BuiltinPred::Gt => "gt",
            BuiltinPred::Ge => "ge",
            BuiltinPred::True => "true",
            BuiltinPred::False => "false",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "lt" => Some(BuiltinPred::Lt),
            "le" => Some(BuiltinPred::Le),
            "eq" => Some(BuiltinPred::Eq),
            "ne" => Some(BuiltinPred::Ne),
            "gt" => Some(BuiltinPred::Gt),
            "ge" => Some(BuiltinPred::Ge),
            "true" => Some(BuiltinPred::True),
            "false" => Some(BuiltinPred::False),
            _ => None,
        }
    }
}

/// A total decidable interpretation of a predicate symbol.
#[derive(Clone, Debug)]
pub enum Interp {
    Builtin(BuiltinPred),
    /// Bounded table: listed tuples get their listed truth value, everything
    /// else gets `default`. Totality is immediate.
    Table { default: bool, rows: BTreeMap<Vec<u64>, bool> },
}

impl Interp {
    fn apply(&self, args: &[u64]) -> bool {
        match self {
            Interp::Builtin(b) => match b {
                BuiltinPred::Lt => args[0] < args[1],
                BuiltinPred::Le => args[0] <= args[1],
                BuiltinPred::Eq => args[0] == args[1],
                BuiltinPred::Ne => args[0] != args[1],
                BuiltinPred::Gt => args[0] > args[1],
                BuiltinPred::Ge => args[0] >= args[1],
                BuiltinPred::True => true,
                BuiltinPred::False => false,
            },
            Interp::Table { default, rows } => rows.get(args).copied().unwrap_or(*default),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PredDecl {
    pub sym: PredSym,
    pub interp: Interp,
}

/// Interpretations for extra arithmetic function symbols.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FnInterp {
    Add,
    Mul,
}

impl FnInterp {
    pub fn name(self) -> &'static str {
        match self {
            FnInterp::Add => "add",
            FnInterp::Mul => "mul",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "add" => Some(FnInterp::Add),
            "mul" => Some(FnInterp::Mul),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        2
    }

    pub fn apply(self, args: &[u64]) -> u64 {
        match self {
            FnInterp::Add => args[0].wrapping_add(args[1]),
            FnInterp::Mul => args[0].wrapping_mul(args[1]),
        }
    }
}

/// One atom slot in an atomic rule: a predicate applied to the rule's shared
/// argument vector, or the absurdity.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RuleAtom {
    Pred(String),
    False,
}

/// An atomic rule of HA: from premises `P1(xs) .. Pn(xs)` conclude `Q(xs)`,
/// all atoms over one shared argument vector. Soundness (premises true imply
/// conclusion true under the interpretation) is checked exhaustively up to
/// [`RULE_SOUNDNESS_BOUND`] when the rule is declared.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AtomicRule {
    pub name: String,
    pub premises: Vec<RuleAtom>,
    pub conclusion: RuleAtom,
}

pub const RULE_SOUNDNESS_BOUND: u64 = 50;

/// How `exmerge` resolves conflicting witnesses for the same key.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum MergeStrategy {
    /// Keep the left exception's witness.
    #[default]
    Leftmost,
    /// Keep the smaller witness.
    MinWitness,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SigError {
    #[error("unknown predicate symbol `{0}`")]
    UnknownPred(String),
    #[error("predicate `{name}` has arity {expected}, got {found} arguments")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("unknown function symbol `{0}`")]
    UnknownFn(String),
    #[error("builtin `{builtin}` requires arity {expected}, but `{name}` was declared with arity {found}")]
    BuiltinArity { builtin: String, name: String, expected: usize, found: usize },
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("atomic rule `{rule}`: predicates must share one arity, found {a} and {b}")]
    RuleArity { rule: String, a: usize, b: usize },
    #[error("atomic rule `{rule}` is unsound: premises hold but conclusion fails at {args:?}")]
    UnsoundRule { rule: String, args: Vec<u64> },
    #[error("atomic rule `{rule}`: soundness check space too large (arity {arity})")]
    RuleTooWide { rule: String, arity: usize },
    #[error("reserved name `{0}`")]
    Reserved(String),
}

/// The ambient signature: base types, interpreted predicates, function
/// symbols, atomic rules, and the exception-merge strategy.
#[derive(Clone, Debug)]
pub struct Signature {
    base_types: BTreeSet<String>,
    preds: BTreeMap<String, PredDecl>,
    fns: BTreeMap<String, FnInterp>,
    rules: Vec<AtomicRule>,
    pub merge_strategy: MergeStrategy,
}

impl Default for Signature {
    fn default() -> Self {
        Self::new()
    }
}

impl Signature {
    /// Empty signature; `State` and `Ex` base types are always present.
    pub fn new() -> Self {
        let mut base_types = BTreeSet::new();
        base_types.insert(STATE.to_string());
        base_types.insert(EX.to_string());
        Signature {
            base_types,
            preds: BTreeMap::new(),
            fns: BTreeMap::new(),
            rules: Vec::new(),
            merge_strategy: MergeStrategy::Leftmost,
        }
    }

    pub fn has_base_type(&self, name: &str) -> bool {
        self.base_types.contains(name)
    }

    pub fn declare_pred(
        &mut self,
        name: impl Into<String>,
        arity: usize,
        interp: Interp,
    ) -> Result<(), SigError> {
        let name = name.into();
        if self.preds.contains_key(&name) {
            return Err(SigError::Duplicate(name));
        }
        if let Interp::Builtin(b) = &interp {
            let needs_two = !matches!(b, BuiltinPred::True | BuiltinPred::False);
            if needs_two && arity != 2 {
                return Err(SigError::BuiltinArity {
                    builtin: b.name().to_string(),
                    name,
                    expected: 2,
                    found: arity,
                });
            }
        }
        self.preds.insert(name.clone(), PredDecl { sym: PredSym::new(name, arity), interp });
        Ok(())
    }

    pub fn declare_fn(&mut self, name: impl Into<String>, interp: FnInterp) -> Result<(), SigError> {
        let name = name.into();
        if self.fns.contains_key(&name) {
            return Err(SigError::Duplicate(name));
        }
        self.fns.insert(name, interp);
        Ok(())
    }

    /// Declare an atomic rule, rejecting it if the exhaustive soundness check
    /// up to [`RULE_SOUNDNESS_BOUND`] finds a counterexample.
    pub fn declare_rule(&mut self, rule: AtomicRule) -> Result<(), SigError> {
        self.check_rule_soundness(&rule)?;
        self.rules.push(rule);
        Ok(())
    }

    pub fn check_rule_soundness(&self, rule: &AtomicRule) -> Result<(), SigError> {
        let mut arity: Option<usize> = None;
        for atom in rule.premises.iter().chain(std::iter::once(&rule.conclusion)) {
            if let RuleAtom::Pred(p) = atom {
                let decl = self.pred(p)?;
                match arity {
                    None => arity = Some(decl.sym.arity),
                    Some(a) if a != decl.sym.arity => {
                        return Err(SigError::RuleArity { rule: rule.name.clone(), a, b: decl.sym.arity })
                    }
                    _ => {}
                }
            }
        }
        let arity = match arity {
            // Every atom is False; trivially sound.
            None => return Ok(()),
            Some(a) => a,
        };
        let span = RULE_SOUNDNESS_BOUND + 1;
        let total = span.checked_pow(arity as u32).filter(|&t| t <= 200_000);
        let total = total.ok_or(SigError::RuleTooWide { rule: rule.name.clone(), arity })?;
        let mut args = vec![0u64; arity];
        for idx in 0..total {
            let mut rest = idx;
            for slot in args.iter_mut() {
                *slot = rest % span;
                rest /= span;
            }
            let truth = |atom: &RuleAtom| -> Result<bool, SigError> {
                match atom {
                    RuleAtom::False => Ok(false),
                    RuleAtom::Pred(p) => self.holds(p, &args),
                }
            };
            let premises_hold = rule
                .premises
                .iter()
                .map(&truth)
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .all(|b| b);
            if premises_hold && !truth(&rule.conclusion)? {
                return Err(SigError::UnsoundRule { rule: rule.name.clone(), args });
            }
        }
        Ok(())
    }

    pub fn pred(&self, name: &str) -> Result<&PredDecl, SigError> {
        self.preds.get(name).ok_or_else(|| SigError::UnknownPred(name.to_string()))
    }

    pub fn preds(&self) -> impl Iterator<Item = &PredDecl> {
        self.preds.values()
    }

    pub fn fn_interp(&self, name: &str) -> Result<FnInterp, SigError> {
        self.fns.get(name).copied().ok_or_else(|| SigError::UnknownFn(name.to_string()))
    }

    pub fn fns(&self) -> impl Iterator<Item = (&String, &FnInterp)> {
        self.fns.iter()
    }

    pub fn rules(&self) -> &[AtomicRule] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&AtomicRule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Truth of a predicate instance under the interpretation.
    pub fn holds(&self, pred: &str, args: &[u64]) -> Result<bool, SigError> {
        let decl = self.pred(pred)?;
        if decl.sym.arity != args.len() {
            return Err(SigError::ArityMismatch {
                name: pred.to_string(),
                expected: decl.sym.arity,
                found: args.len(),
            });
        }
        Ok(decl.interp.apply(args))
    }

    /// The witness condition for a stored entry `(P, params) -> m`: the
    /// universal-disjunct instance at `m` is false, i.e. `m` is a
    /// counterexample to `forall y. P(params, y)`.
    pub fn witness_ok(&self, pred: &str, params: &[u64], witness: u64) -> Result<bool, SigError> {
        let mut args = params.to_vec();
        args.push(witness);
        Ok(!self.holds(pred, &args)?)
    }

    /// True when a predicate's interpretation has strict less-than semantics,
    /// which is what the complete-induction rule's guard requires.
    pub fn is_strict_order(&self, pred: &str) -> bool {
        matches!(
            self.preds.get(pred),
            Some(PredDecl { interp: Interp::Builtin(BuiltinPred::Lt), sym }) if sym.arity == 2
        )
    }
}
