//! Interactive realizability toolkit.
//!
//! A System T' kernel (sums, products, guarded course-of-value recursion)
//! hosts realizers extracted from natural-deduction derivations of first-order
//! arithmetic with excluded middle over simply existential formulas. The
//! syntactic-monad framework structures the realizers; the interactive
//! realizability monad combines state and exceptions so that evaluation
//! either produces BHK-style evidence or learns a new witness, and the
//! learning loop iterates that step to a fixed point.

pub mod checker;
pub mod corpus;
pub mod extract;
pub mod format;
pub mod gen;
pub mod kernel;
pub mod learner;
pub mod logic;
pub mod monads;
pub mod obs;
pub mod runtime;
pub mod sexp;
pub mod sig;

pub use kernel::{KernelError, Term, Type};
pub use runtime::{ExceptionValue, KnowledgeState, WitnessKey};
pub use sig::Signature;
