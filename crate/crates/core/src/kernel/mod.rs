//! System T' kernel: syntax, typing, substitution, and normalization.

pub mod reduce;
pub mod subst;
pub mod term;
pub mod typing;

pub use reduce::{
    dummy, is_normal, mk_numeral, normalize, normalize_trace, redex_positions, reduce_at, step,
    KernelError, Path, DEFAULT_FUEL,
};
pub use subst::{fresh_name, subst, substitute};
pub use term::{alpha_eq, ConstKind, Guard, Term, Type, Var};
pub use typing::{const_type, type_of, type_of_closed, type_of_open, TypeCtx, TypeError};
