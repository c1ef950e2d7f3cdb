//! Knowledge states and exceptions: the stateful substrate of interactive
//! realizability.
//!
//! A knowledge state is a finite sound map from `(predicate, parameters)` to
//! a stored witness; an exception is a finite record of newly discovered
//! witnesses, read as a partial state-extension function. The polarity
//! convention is fixed here once and used everywhere: a stored witness `m`
//! for `(P, params)` is a counterexample to the universal disjunct, i.e.
//! `P(params, m)` is false under the interpretation (equivalently the
//! existential disjunct's matrix `not P(params, m)` is true).

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::sig::{MergeStrategy, SigError, Signature};

/// Key of a stored witness: a predicate symbol of arity `k+1` and its `k`
/// parameters.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct WitnessKey {
    pub pred: String,
    pub params: Vec<u64>,
}

impl WitnessKey {
    pub fn new(pred: impl Into<String>, params: Vec<u64>) -> Self {
        WitnessKey { pred: pred.into(), params }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error(transparent)]
    Sig(#[from] SigError),
    #[error("unsound entry: ({pred}, {params:?}) -> {witness} violates the witness condition")]
    Unsound { pred: String, params: Vec<u64>, witness: u64 },
    #[error("predicate `{pred}` has {expected} parameter positions, got {found}")]
    ParamArity { pred: String, expected: usize, found: usize },
}

fn check_entry(sig: &Signature, key: &WitnessKey, witness: u64) -> Result<(), RuntimeError> {
    let decl = sig.pred(&key.pred)?;
    if decl.sym.params() != key.params.len() {
        return Err(RuntimeError::ParamArity {
            pred: key.pred.clone(),
            expected: decl.sym.params(),
            found: key.params.len(),
        });
    }
    if !sig.witness_ok(&key.pred, &key.params, witness)? {
        return Err(RuntimeError::Unsound {
            pred: key.pred.clone(),
            params: key.params.clone(),
            witness,
        });
    }
    Ok(())
}

/// A finite sound knowledge state, ordered by extension.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct KnowledgeState {
    entries: BTreeMap<WitnessKey, u64>,
}

impl KnowledgeState {
    pub fn empty() -> Self {
        KnowledgeState::default()
    }

    /// Build a state, checking arity and the witness condition for every
    /// entry eagerly.
    pub fn new(
        sig: &Signature,
        entries: impl IntoIterator<Item = (WitnessKey, u64)>,
    ) -> Result<Self, RuntimeError> {
        let mut map = BTreeMap::new();
        for (key, witness) in entries {
            check_entry(sig, &key, witness)?;
            map.insert(key, witness);
        }
        Ok(KnowledgeState { entries: map })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&WitnessKey, u64)> {
        self.entries.iter().map(|(k, &w)| (k, w))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &WitnessKey) -> Option<u64> {
        self.entries.get(key).copied()
    }

    /// Re-check soundness of every entry against the interpretation.
    pub fn is_sound(&self, sig: &Signature) -> bool {
        self.entries
            .iter()
            .all(|(k, &w)| sig.witness_ok(&k.pred, &k.params, w).unwrap_or(false))
    }
}

/// `s1 <= s2`: every entry of `s1` appears in `s2` with the same witness.
pub fn state_leq(s1: &KnowledgeState, s2: &KnowledgeState) -> bool {
    s1.entries.iter().all(|(k, w)| s2.entries.get(k) == Some(w))
}

/// An exception: a finite record of discovered witnesses. The empty record
/// exists only as the canonical inhabitant of the `Ex` base type (used by
/// `dummy`); exceptions produced by `eval` are singletons and merging keeps
/// them nonempty.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct ExceptionValue {
    claims: BTreeMap<WitnessKey, u64>,
}

impl ExceptionValue {
    pub fn empty() -> Self {
        ExceptionValue::default()
    }

    pub fn singleton(
        sig: &Signature,
        key: WitnessKey,
        witness: u64,
    ) -> Result<Self, RuntimeError> {
        check_entry(sig, &key, witness)?;
        let mut claims = BTreeMap::new();
        claims.insert(key, witness);
        Ok(ExceptionValue { claims })
    }

    pub fn new(
        sig: &Signature,
        claims: impl IntoIterator<Item = (WitnessKey, u64)>,
    ) -> Result<Self, RuntimeError> {
        let mut map = BTreeMap::new();
        for (key, witness) in claims {
            check_entry(sig, &key, witness)?;
            map.insert(key, witness);
        }
        Ok(ExceptionValue { claims: map })
    }

    pub fn claims(&self) -> impl Iterator<Item = (&WitnessKey, u64)> {
        self.claims.iter().map(|(k, &w)| (k, w))
    }

    pub fn len(&self) -> usize {
        self.claims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.claims.is_empty()
    }

    pub fn is_sound(&self, sig: &Signature) -> bool {
        self.claims
            .iter()
            .all(|(k, &w)| sig.witness_ok(&k.pred, &k.params, w).unwrap_or(false))
    }
}

/// Apply an exception to a state. Defined iff every claim whose key is
/// already present agrees with the stored witness; the result is the union,
/// so `s <= apply_exception(e, s)` whenever defined.
pub fn apply_exception(e: &ExceptionValue, s: &KnowledgeState) -> Option<KnowledgeState> {
    let mut out = s.entries.clone();
    for (key, &w) in &e.claims {
        match out.get(key) {
            Some(&w0) if w0 != w => return None,
            Some(_) => {}
            None => {
                out.insert(key.clone(), w);
            }
        }
    }
    Some(KnowledgeState { entries: out })
}

/// `e` properly extends `s`: `e(s)` is defined and strictly larger.
pub fn properly_extends(e: &ExceptionValue, s: &KnowledgeState) -> bool {
    match apply_exception(e, s) {
        Some(s2) => s2.len() > s.len(),
        None => false,
    }
}

/// Combine the information of two exceptions into one. On key conflicts the
/// strategy picks the surviving witness (leftmost by default).
pub fn merge_exceptions(
    e1: &ExceptionValue,
    e2: &ExceptionValue,
    strategy: MergeStrategy,
) -> ExceptionValue {
    let mut claims = e1.claims.clone();
    for (key, &w2) in &e2.claims {
        match claims.get_mut(key) {
            None => {
                claims.insert(key.clone(), w2);
            }
            Some(w1) => {
                if strategy == MergeStrategy::MinWitness && w2 < *w1 {
                    *w1 = w2;
                }
            }
        }
    }
    ExceptionValue { claims }
}

/// Consult the state for a stored witness. `Ok(Some(m))` plays `inr m`,
/// `Ok(None)` plays `inl unit`.
pub fn query(
    sig: &Signature,
    pred: &str,
    state: &KnowledgeState,
    params: &[u64],
) -> Result<Option<u64>, RuntimeError> {
    let decl = sig.pred(pred)?;
    if decl.sym.params() != params.len() {
        return Err(RuntimeError::ParamArity {
            pred: pred.to_string(),
            expected: decl.sym.params(),
            found: params.len(),
        });
    }
    Ok(state.get(&WitnessKey::new(pred, params.to_vec())))
}

/// Test a universal-disjunct instance. `Ok(None)` plays `inl unit` (the
/// instance holds); `Ok(Some(e))` plays `inr e`, recording the candidate as a
/// discovered witness.
pub fn eval_pred(
    sig: &Signature,
    pred: &str,
    params: &[u64],
    candidate: u64,
) -> Result<Option<ExceptionValue>, RuntimeError> {
    let decl = sig.pred(pred)?;
    if decl.sym.params() != params.len() {
        return Err(RuntimeError::ParamArity {
            pred: pred.to_string(),
            expected: decl.sym.params(),
            found: params.len(),
        });
    }
    let mut args = params.to_vec();
    args.push(candidate);
    if sig.holds(pred, &args)? {
        Ok(None)
    } else {
        Ok(Some(ExceptionValue::singleton(
            sig,
            WitnessKey::new(pred, params.to_vec()),
            candidate,
        )?))
    }
}

/// Sample a sound state: for randomly chosen predicates and parameter tuples,
/// search a small range for a value violating the universal instance and
/// store it. Only sound entries can be produced.
pub fn sample_state(
    sig: &Signature,
    rng: &mut impl Rng,
    max_entries: usize,
    value_bound: u64,
) -> KnowledgeState {
    let preds: Vec<_> = sig.preds().filter(|d| d.sym.arity >= 1).collect();
    let mut entries = BTreeMap::new();
    if preds.is_empty() {
        return KnowledgeState { entries };
    }
    let want = rng.gen_range(0..=max_entries);
    for _ in 0..want * 3 {
        if entries.len() >= want {
            break;
        }
        let decl = preds[rng.gen_range(0..preds.len())];
        let params: Vec<u64> =
            (0..decl.sym.params()).map(|_| rng.gen_range(0..=value_bound)).collect();
        let start = rng.gen_range(0..=value_bound);
        let found = (0..=value_bound)
            .map(|off| (start + off) % (value_bound + 1))
            .find(|&m| sig.witness_ok(&decl.sym.name, &params, m).unwrap_or(false));
        if let Some(m) = found {
            entries.insert(WitnessKey::new(decl.sym.name.clone(), params), m);
        }
    }
    KnowledgeState { entries }
}

/// Sample an exception that properly extends `s`: claims agree with `s` on
/// shared keys and include at least one fresh key. Returns `None` when the
/// signature admits no fresh sound claim within the bound.
pub fn sample_proper_extension(
    sig: &Signature,
    s: &KnowledgeState,
    rng: &mut impl Rng,
    extra: usize,
    value_bound: u64,
) -> Option<ExceptionValue> {
    let preds: Vec<_> = sig.preds().filter(|d| d.sym.arity >= 1).collect();
    if preds.is_empty() {
        return None;
    }
    let mut claims = BTreeMap::new();
    // Optionally repeat some entries already in the state.
    for (k, w) in s.entries() {
        if rng.gen_bool(0.3) {
            claims.insert(k.clone(), w);
        }
    }
    let mut fresh = 0usize;
    for _ in 0..(extra.max(1)) * 8 {
        if fresh >= extra.max(1) {
            break;
        }
        let decl = preds[rng.gen_range(0..preds.len())];
        let params: Vec<u64> =
            (0..decl.sym.params()).map(|_| rng.gen_range(0..=value_bound)).collect();
        let key = WitnessKey::new(decl.sym.name.clone(), params.clone());
        if s.get(&key).is_some() || claims.contains_key(&key) {
            continue;
        }
        let found = (0..=value_bound)
            .find(|&m| sig.witness_ok(&decl.sym.name, &params, m).unwrap_or(false));
        if let Some(m) = found {
            claims.insert(key, m);
            fresh += 1;
        }
    }
    if fresh == 0 {
        return None;
    }
    Some(ExceptionValue { claims })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sig::{BuiltinPred, Interp};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig() -> Signature {
        let mut s = Signature::new();
        // Universal side true iff y <= 4.
        let rows = (0..=4u64).map(|y| (vec![y], true)).collect();
        s.declare_pred("B4", 1, Interp::Table { default: false, rows }).unwrap();
        s.declare_pred("LT", 2, Interp::Builtin(BuiltinPred::Lt)).unwrap();
        s
    }

    fn key(p: &str, params: &[u64]) -> WitnessKey {
        WitnessKey::new(p, params.to_vec())
    }

    #[test]
    fn state_leq_examples() {
        let s = sig();
        let empty = KnowledgeState::empty();
        let s1 = KnowledgeState::new(&s, [(key("B4", &[]), 7)]).unwrap();
        let s2 = KnowledgeState::new(&s, [(key("B4", &[]), 7), (key("LT", &[1]), 0)]).unwrap();
        let s3 = KnowledgeState::new(&s, [(key("B4", &[]), 9)]).unwrap();
        assert!(state_leq(&empty, &s1));
        assert!(state_leq(&s1, &s2));
        assert!(!state_leq(&s1, &s3));
    }

    #[test]
    fn construction_rejects_unsound_entries() {
        let s = sig();
        // 3 <= 4, so B4(3) holds: 3 is not a counterexample witness.
        let err = KnowledgeState::new(&s, [(key("B4", &[]), 3)]);
        assert!(matches!(err, Err(RuntimeError::Unsound { .. })));
    }

    #[test]
    fn apply_exception_cases() {
        let s = sig();
        let e = ExceptionValue::singleton(&s, key("B4", &[]), 5).unwrap();
        let empty = KnowledgeState::empty();
        let applied = apply_exception(&e, &empty).unwrap();
        assert_eq!(applied.get(&key("B4", &[])), Some(5));
        assert!(state_leq(&empty, &applied));

        // Same witness already present: state unchanged.
        let same = apply_exception(&e, &applied).unwrap();
        assert_eq!(same, applied);
        assert!(!properly_extends(&e, &applied));

        // Conflicting witness: undefined.
        let other = KnowledgeState::new(&s, [(key("B4", &[]), 7)]).unwrap();
        assert_eq!(apply_exception(&e, &other), None);
    }

    #[test]
    fn merge_prefers_leftmost() {
        let s = sig();
        let e1 = ExceptionValue::singleton(&s, key("B4", &[]), 5).unwrap();
        let e2 = ExceptionValue::singleton(&s, key("B4", &[]), 9).unwrap();
        let m = merge_exceptions(&e1, &e2, MergeStrategy::Leftmost);
        assert_eq!(m.claims().collect::<Vec<_>>(), vec![(&key("B4", &[]), 5)]);
        let m2 = merge_exceptions(&e2, &e1, MergeStrategy::Leftmost);
        assert_eq!(m2.claims().collect::<Vec<_>>(), vec![(&key("B4", &[]), 9)]);
        let m3 = merge_exceptions(&e2, &e1, MergeStrategy::MinWitness);
        assert_eq!(m3.claims().collect::<Vec<_>>(), vec![(&key("B4", &[]), 5)]);
        // Idempotence of left-biased union.
        assert_eq!(merge_exceptions(&e1, &e1, MergeStrategy::Leftmost), e1);
    }

    #[test]
    fn merge_disjoint_is_union() {
        let s = sig();
        let e1 = ExceptionValue::singleton(&s, key("B4", &[]), 5).unwrap();
        let e2 = ExceptionValue::singleton(&s, key("LT", &[3]), 3).unwrap();
        let m = merge_exceptions(&e1, &e2, MergeStrategy::Leftmost);
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn query_examples() {
        let s = sig();
        let empty = KnowledgeState::empty();
        assert_eq!(query(&s, "B4", &empty, &[]).unwrap(), None);
        let st = KnowledgeState::new(&s, [(key("LT", &[2]), 2)]).unwrap();
        assert_eq!(query(&s, "LT", &st, &[2]).unwrap(), Some(2));
        assert_eq!(query(&s, "LT", &st, &[3]).unwrap(), None);
        assert!(matches!(query(&s, "LT", &st, &[1, 2]), Err(RuntimeError::ParamArity { .. })));
    }

    #[test]
    fn eval_examples() {
        let s = sig();
        // Universal instance B4(1) holds: regular answer.
        assert_eq!(eval_pred(&s, "B4", &[], 1).unwrap(), None);
        // B4(7) fails: the counterexample becomes the discovered witness.
        let e = eval_pred(&s, "B4", &[], 7).unwrap().unwrap();
        assert_eq!(e.claims().collect::<Vec<_>>(), vec![(&key("B4", &[]), 7)]);
        // Purity: same inputs, same verdict.
        assert_eq!(eval_pred(&s, "B4", &[], 7).unwrap().unwrap(), e);
    }

    #[test]
    fn ir3_shape_holds() {
        // query miss plus eval exception implies proper extension.
        let s = sig();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let st = sample_state(&s, &mut rng, 3, 10);
            let c = rng.gen_range(0..=10u64);
            if query(&s, "B4", &st, &[]).unwrap().is_none() {
                if let Some(e) = eval_pred(&s, "B4", &[], c).unwrap() {
                    assert!(properly_extends(&e, &st));
                }
            }
        }
    }

    #[test]
    fn sampler_only_emits_sound_states() {
        let s = sig();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let st = sample_state(&s, &mut rng, 4, 12);
            assert!(st.is_sound(&s));
        }
    }
}
