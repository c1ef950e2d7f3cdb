//! The learning loop: evaluate a monadic realizer at the current state; a
//! regular value is a fixed point, an exceptional value extends the state
//! and the evaluation restarts from scratch on the new state.

use thiserror::Error;

use crate::checker::{CheckBounds, Checker, CheckError};
use crate::kernel::{normalize, ConstKind, KernelError, Term};
use crate::logic::{subst_formula, ArithTerm, Formula};
use crate::runtime::{apply_exception, state_leq, ExceptionValue, KnowledgeState};
use crate::sig::Signature;

#[derive(Error, Debug)]
pub enum LearnError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("evaluation produced a normal form that is neither regular nor exceptional: {0}")]
    BadNormalForm(String),
    #[error("exceptional payload is not a literal")]
    NonLiteralException,
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("witness extraction requires a checker-verified realizer: {0}")]
    NotARealizer(String),
}

/// Outcome of one evaluation of the realizer at a state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Regular(Term),
    Exceptional(ExceptionValue),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub before: KnowledgeState,
    pub outcome: StepOutcome,
    pub after: KnowledgeState,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminal {
    /// A regular value was produced: the state is a fixed point of the
    /// learning function.
    FixedPoint,
    BudgetExhausted,
    /// The thrown exception conflicts with the state, signaling that the
    /// term is not a realizer at this state.
    Conflict(ExceptionValue),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnTrace {
    pub steps: Vec<TraceStep>,
    pub terminal: Terminal,
}

impl LearnTrace {
    pub fn final_state(&self) -> KnowledgeState {
        self.steps.last().map(|s| s.after.clone()).unwrap_or_default()
    }

    /// The regular inner realizer produced at the fixed point, if any.
    pub fn result(&self) -> Option<&Term> {
        match (&self.terminal, self.steps.last()) {
            (Terminal::FixedPoint, Some(TraceStep { outcome: StepOutcome::Regular(t), .. })) => {
                Some(t)
            }
            _ => None,
        }
    }
}

/// One step of the learning function: normalize the realizer applied to the
/// state literal; the state is unchanged on a regular value and extended by
/// the exception otherwise.
pub fn learn_step(
    sig: &Signature,
    r: &Term,
    s: &KnowledgeState,
    fuel: u64,
) -> Result<(KnowledgeState, StepOutcome), LearnError> {
    let v = normalize(sig, &Term::app(r.clone(), Term::StateLit(s.clone())), fuel)?;
    match v.spine() {
        (Term::Const(ConstKind::InjL(..)), args) if args.len() == 1 => {
            Ok((s.clone(), StepOutcome::Regular(args[0].clone())))
        }
        (Term::Const(ConstKind::InjR(..)), args) if args.len() == 1 => match args[0] {
            Term::ExLit(e) => match apply_exception(e, s) {
                Some(next) => Ok((next, StepOutcome::Exceptional(e.clone()))),
                None => Err(LearnError::NotARealizer(format!(
                    "exception {e:?} conflicts with the state"
                ))),
            },
            _ => Err(LearnError::NonLiteralException),
        },
        _ => Err(LearnError::BadNormalForm(format!("{v:?}"))),
    }
}

/// Iterate the learning function from `s0` until a regular outcome (fixed
/// point), a conflict, or the iteration budget. Each iteration restarts
/// normalization from scratch on the extended state.
pub fn learn(
    sig: &Signature,
    r: &Term,
    s0: &KnowledgeState,
    max_iters: u64,
    fuel: u64,
) -> Result<LearnTrace, LearnError> {
    let mut steps = Vec::new();
    let mut state = s0.clone();
    for _ in 0..max_iters {
        let before = state.clone();
        let v = normalize(sig, &Term::app(r.clone(), Term::StateLit(before.clone())), fuel)?;
        match v.spine() {
            (Term::Const(ConstKind::InjL(..)), args) if args.len() == 1 => {
                steps.push(TraceStep {
                    before: before.clone(),
                    outcome: StepOutcome::Regular(args[0].clone()),
                    after: before,
                });
                return Ok(LearnTrace { steps, terminal: Terminal::FixedPoint });
            }
            (Term::Const(ConstKind::InjR(..)), args) if args.len() == 1 => match args[0] {
                Term::ExLit(e) => match apply_exception(e, &before) {
                    Some(next) => {
                        debug_assert!(state_leq(&before, &next));
                        steps.push(TraceStep {
                            before,
                            outcome: StepOutcome::Exceptional(e.clone()),
                            after: next.clone(),
                        });
                        state = next;
                    }
                    None => {
                        steps.push(TraceStep {
                            before: before.clone(),
                            outcome: StepOutcome::Exceptional(e.clone()),
                            after: before,
                        });
                        return Ok(LearnTrace { steps, terminal: Terminal::Conflict(e.clone()) });
                    }
                },
                _ => return Err(LearnError::NonLiteralException),
            },
            _ => return Err(LearnError::BadNormalForm(format!("{v:?}"))),
        }
    }
    Ok(LearnTrace { steps, terminal: Terminal::BudgetExhausted })
}

/// A human-readable account of the evidence carried by an inner realizer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessReport {
    Atomic { formula: String },
    Both(Box<WitnessReport>, Box<WitnessReport>),
    Branch { left: bool, inner: Box<WitnessReport> },
    Witness { value: u64, inner: Box<WitnessReport> },
    Function { formula: String },
}

impl WitnessReport {
    fn render(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        match self {
            WitnessReport::Atomic { formula } => {
                out.push_str(&format!("{pad}atomic holds: {formula}\n"))
            }
            WitnessReport::Both(l, r) => {
                out.push_str(&format!("{pad}both:\n"));
                l.render(out, indent + 1);
                r.render(out, indent + 1);
            }
            WitnessReport::Branch { left, inner } => {
                out.push_str(&format!("{pad}{} branch:\n", if *left { "left" } else { "right" }));
                inner.render(out, indent + 1);
            }
            WitnessReport::Witness { value, inner } => {
                out.push_str(&format!("{pad}witness {value}:\n"));
                inner.render(out, indent + 1);
            }
            WitnessReport::Function { formula } => {
                out.push_str(&format!("{pad}function realizer for {formula}\n"))
            }
        }
    }
}

impl std::fmt::Display for WitnessReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut s = String::new();
        self.render(&mut s, 0);
        write!(f, "{}", s.trim_end())
    }
}

/// Walk a checker-verified inner realizer and report the witnesses it
/// carries: the numeral at each existential, the branch at each
/// disjunction, truth at atomics.
pub fn extract_witness(
    sig: &Signature,
    t: &Term,
    a: &Formula,
    s: &KnowledgeState,
    bounds: CheckBounds,
) -> Result<WitnessReport, LearnError> {
    let checker = Checker::new(sig, bounds);
    let verdict = checker.inner_realizes(t, a, s)?;
    if !verdict.is_pass() {
        return Err(LearnError::NotARealizer(format!("{:?}", verdict.outcome)));
    }
    walk(sig, t, a, bounds)
}

fn walk(
    sig: &Signature,
    t: &Term,
    a: &Formula,
    bounds: CheckBounds,
) -> Result<WitnessReport, LearnError> {
    let nf = normalize(sig, t, bounds.fuel)?;
    Ok(match a {
        Formula::Atomic { .. } | Formula::False => {
            WitnessReport::Atomic { formula: crate::format::formula_to_sexp(a).to_string() }
        }
        Formula::And(b, c) => {
            let (tb, tc) = match nf.spine() {
                (Term::Const(ConstKind::Pair(..)), args) if args.len() == 2 => {
                    (args[0].clone(), args[1].clone())
                }
                _ => return Err(LearnError::BadNormalForm(format!("{nf:?}"))),
            };
            WitnessReport::Both(
                Box::new(walk(sig, &tb, b, bounds)?),
                Box::new(walk(sig, &tc, c, bounds)?),
            )
        }
        Formula::Or(b, c) => match nf.spine() {
            (Term::Const(ConstKind::InjL(..)), args) if args.len() == 1 => WitnessReport::Branch {
                left: true,
                inner: Box::new(walk(sig, args[0], b, bounds)?),
            },
            (Term::Const(ConstKind::InjR(..)), args) if args.len() == 1 => WitnessReport::Branch {
                left: false,
                inner: Box::new(walk(sig, args[0], c, bounds)?),
            },
            _ => return Err(LearnError::BadNormalForm(format!("{nf:?}"))),
        },
        Formula::Exists(x, b) => match nf.spine() {
            (Term::Const(ConstKind::Pair(..)), args) if args.len() == 2 => {
                let value = args[0]
                    .as_numeral()
                    .ok_or_else(|| LearnError::BadNormalForm("non-numeral witness".into()))?;
                let inst = subst_formula(b, x, &ArithTerm::num(value));
                WitnessReport::Witness {
                    value,
                    inner: Box::new(walk(sig, args[1], &inst, bounds)?),
                }
            }
            _ => return Err(LearnError::BadNormalForm(format!("{nf:?}"))),
        },
        Formula::Implies(..) | Formula::Forall(..) => {
            WitnessReport::Function { formula: crate::format::formula_to_sexp(a).to_string() }
        }
    })
}
