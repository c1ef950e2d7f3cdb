//! Capture-avoiding substitution.

use std::collections::BTreeSet;

use crate::kernel::term::{Term, Var};
use crate::kernel::typing::{type_of_open, TypeError};

/// A name not occurring in `avoid`, derived from `base` by bumping a numeric
/// suffix.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let stem = match base.rfind('_') {
        Some(i) if base[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < base.len() => {
            &base[..i]
        }
        _ => base,
    };
    let mut n = 2u64;
    loop {
        let cand = format!("{stem}_{n}");
        if !avoid.contains(&cand) {
            return cand;
        }
        n += 1;
    }
}

/// `t[x := s]`, renaming binders as needed so no free variable of `s` is
/// captured. No typing precondition is checked; see [`substitute`] for the
/// checked entry point.
pub fn subst(t: &Term, x: &str, s: &Term) -> Term {
    match t {
        Term::Var(v) => {
            if v.name == x {
                s.clone()
            } else {
                t.clone()
            }
        }
        Term::Const(_) | Term::StateLit(_) | Term::ExLit(_) => t.clone(),
        Term::App(f, a) => Term::app(subst(f, x, s), subst(a, x, s)),
        Term::Abs(v, body) => {
            if v.name == x {
                return t.clone();
            }
            if !body.free_vars().contains(x) {
                // No occurrence to replace; keep the binder untouched.
                return t.clone();
            }
            let fv_s = s.free_vars();
            if fv_s.contains(&v.name) {
                let mut avoid: BTreeSet<String> = fv_s;
                avoid.extend(body.free_vars());
                avoid.insert(x.to_string());
                let fresh = fresh_name(&v.name, &avoid);
                let renamed = subst(body, &v.name, &Term::var(fresh.clone(), v.ty.clone()));
                Term::Abs(Var::new(fresh, v.ty.clone()), Box::new(subst(&renamed, x, s)))
            } else {
                Term::Abs(v.clone(), Box::new(subst(body, x, s)))
            }
        }
    }
}

/// Substitution with the typing precondition checked: the type of `s` must
/// equal the declared type of `x`.
pub fn substitute(t: &Term, x: &Var, s: &Term) -> Result<Term, TypeError> {
    let ts = type_of_open(s)?;
    if ts != x.ty {
        return Err(TypeError::ArgMismatch { expected: x.ty.clone(), found: ts });
    }
    Ok(subst(t, &x.name, s))
}
