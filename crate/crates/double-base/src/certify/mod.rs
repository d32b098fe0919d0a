//! Negative-direction machinery: prove that an integer has *no* double-base
//! representation of a given length, and package the proof as a certificate
//! that an independent verifier can recheck from scratch.
//!
//! The reduction behind every certificate is a four-way case analysis: an
//! integer `n` has a length-r representation (r ≥ 2) iff at least one of
//!
//! 1. `n` has a *doubly-primitive* length-r representation;
//! 2. `6 | n+1` and `(n+1)/6` has a length-(r−1) representation;
//! 3. `6 | n−1` and `(n−1)/6` has a length-(r−1) representation;
//! 4. some {2,3}-integer `d > 1` divides `n` and `n/d` has a *primitive*
//!    length-r representation
//!
//! holds. Case (1) is refuted modulo a well-chosen modulus (directly, or
//! through a lift when the modulus exceeds a machine word); cases (2)–(4)
//! recurse on smaller integers or shorter lengths. A refutation of
//! *primitive* representations is the same analysis without case (4), since
//! a primitive representation that is not doubly primitive must have a ±1
//! summand with every other summand divisible by 6.

pub mod meet;

mod lift;
mod pool;
mod tree;
mod verify;

pub use meet::{dp_enumerate, dp_refute_direct, DpTuple};
pub use pool::{ModulusPool, PoolEntry};
pub use tree::{CertMeta, CertNode, Certificate, DpRefutation, LiftedTuple, SplitCase};
pub use verify::{verify_certificate, verify_report, VerifyReport};

use crate::limits::Limits;
use crate::modular::ModContext;
use crate::rep::{canonicalize, Representation};
use crate::search::{self, SearchBounds, SearchError};
use lift::FiberIndex;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

/// Errors from refutation and certificate machinery.
#[derive(Debug, thiserror::Error)]
pub enum CertifyError {
    #[error("r must be at least 2 (got {r})")]
    DegreeTooSmall { r: u32 },
    #[error("resource cap exceeded: {what}")]
    ResourceExceeded { what: String },
    #[error("{m0} does not divide {m}")]
    NotADivisor { m0: u128, m: u128 },
    #[error("malformed certificate at {path}: {detail}")]
    Malformed { path: String, detail: String },
    #[error("refutation targets must be nonnegative (got {n})")]
    NegativeTarget { n: BigInt },
    #[error(transparent)]
    Mod(#[from] crate::modular::ModError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Rep(#[from] crate::rep::RepError),
}

/// Run one lift refutation: enumerate every doubly-primitive length-r tuple
/// of `n` modulo `m0` and check whether any lifts to a tuple of `n` modulo
/// `m`. `Some` (with the per-tuple attestations) iff none lifts — which,
/// since genuine representations always reduce and lift, proves `n` has no
/// doubly-primitive length-r representation. `None` means a tuple lifted:
/// no conclusion.
pub fn lift_refute(
    n: &BigInt,
    r: u32,
    ctx_m0: &ModContext,
    ctx_m: &ModContext,
    limits: &Limits,
) -> Result<Option<DpRefutation>, CertifyError> {
    let fibers = FiberIndex::new(ctx_m, ctx_m0.modulus())?;
    let residue_m0 = ctx_m0.reduce(n);
    let residue_m = ctx_m.reduce(n);
    let tuples = meet::dp_enumerate(ctx_m0, residue_m0, r, limits)?;
    let mut attested = Vec::with_capacity(tuples.len());
    for tuple in tuples {
        let (lifts, checked) = fibers.try_lift(&tuple, residue_m);
        if lifts {
            return Ok(None);
        }
        attested.push(LiftedTuple {
            tuple,
            lifts_checked: checked,
        });
    }
    Ok(Some(DpRefutation::Lifted {
        m: ctx_m.modulus(),
        m0: ctx_m0.modulus(),
        residue_m,
        residue_m0,
        tuples: attested,
    }))
}

/// The {2,3}-integer divisors `d > 1` of `n`, ascending. There are exactly
/// `(v2+1)(v3+1) − 1` of them.
fn smooth_divisors(n: &BigInt) -> Vec<BigInt> {
    let mut v2 = 0u32;
    let mut rest = n.abs();
    while rest.is_even() && !rest.is_zero() {
        rest /= 2;
        v2 += 1;
    }
    let three = BigInt::from(3);
    let mut v3 = 0u32;
    while (&rest % &three).is_zero() && !rest.is_zero() {
        rest /= &three;
        v3 += 1;
    }
    let mut out = Vec::new();
    for i in 0..=v2 {
        for j in 0..=v3 {
            if i == 0 && j == 0 {
                continue;
            }
            out.push(BigInt::from(2).pow(i) * BigInt::from(3).pow(j));
        }
    }
    out.sort();
    out
}

/// Attempt a full refutation: a certificate that `n ≥ 0` has no double-base
/// representation of length `r`. `None` is *inconclusive* — the pool could
/// not discharge some subgoal — and never a claim of representability.
pub fn refute_length(
    n: &BigInt,
    r: u32,
    pool: &ModulusPool,
) -> Result<Option<Certificate>, CertifyError> {
    if n.is_negative() {
        return Err(CertifyError::NegativeTarget { n: n.clone() });
    }
    let start = std::time::Instant::now();
    let root = refute_node(n, r, false, pool)?;
    Ok(root.map(|root| Certificate::new(root, pool, start.elapsed())))
}

/// The recursive worker. `primitive` restricts the claim to primitive
/// representations (case-4 subgoals), which drops the divisor case.
fn refute_node(
    n: &BigInt,
    r: u32,
    primitive: bool,
    pool: &ModulusPool,
) -> Result<Option<CertNode>, CertifyError> {
    // 0 = 2 − 2 (and lengthenings) is representable at every length ≥ 2,
    // and is not a {2,3}-integer, so only the length-1 refutation succeeds.
    if n.is_zero() {
        return Ok((r == 1).then(|| CertNode::NoLength1 { n: n.clone() }));
    }
    if r == 0 {
        // the empty sum is 0 ≠ n
        return Ok(Some(CertNode::EmptySum { n: n.clone() }));
    }
    if r == 1 {
        return Ok(canonicalize(n)
            .is_none()
            .then(|| CertNode::NoLength1 { n: n.clone() }));
    }

    // case 1: refute doubly-primitive representations of n at length r
    let Some(dp) = pool.refute_dp(n, r)? else {
        return Ok(None);
    };
    let dp_node = CertNode::NoDp {
        n: n.clone(),
        r,
        refutation: dp,
    };

    // cases 2 and 3: (n ± 1)/6 at length r − 1
    let mut six_children = Vec::with_capacity(2);
    for case in [SplitCase::Plus, SplitCase::Minus] {
        let shifted: BigInt = match case {
            SplitCase::Plus => n + 1,
            SplitCase::Minus => n - 1,
        };
        let (quot, rem) = shifted.div_rem(&BigInt::from(6));
        let child = if rem.is_zero() {
            match refute_node(&quot, r - 1, false, pool)? {
                Some(c) => c,
                None => return Ok(None),
            }
        } else {
            CertNode::Vacuous {
                n: n.clone(),
                case,
            }
        };
        six_children.push(child);
    }
    let minus = six_children.pop().unwrap();
    let plus = six_children.pop().unwrap();

    if primitive {
        return Ok(Some(CertNode::PrimitiveSplit {
            n: n.clone(),
            r,
            dp: Box::new(dp_node),
            plus: Box::new(plus),
            minus: Box::new(minus),
        }));
    }

    // case 4: primitive refutations of n/d for every {2,3}-divisor d > 1
    let mut divisors = Vec::new();
    for d in smooth_divisors(n) {
        let quotient = n / &d;
        match refute_node(&quotient, r, true, pool)? {
            Some(child) => divisors.push((d, child)),
            None => return Ok(None),
        }
    }

    Ok(Some(CertNode::CaseSplit {
        n: n.clone(),
        r,
        dp: Box::new(dp_node),
        plus: Box::new(plus),
        minus: Box::new(minus),
        divisors,
    }))
}

/// Proof status of a [`SpanResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanStatus {
    /// Witness valid and the lower-bound certificate verifies the length
    /// below the witness is impossible.
    Proved,
    /// Only the constructive upper bound is established.
    UpperBoundOnly,
}

/// An exact (or best-effort) span computation: a witness representation as
/// the upper bound, and a certificate refuting the next shorter length as
/// the lower bound.
#[derive(Debug, Clone)]
pub struct SpanResult {
    pub n: BigInt,
    pub span: u32,
    pub witness: Representation,
    /// Refutation of length `span − 1` (for `|n|`; spans are symmetric
    /// under negation). Absent when only the upper bound is known.
    pub certificate: Option<Certificate>,
    pub status: SpanStatus,
}

/// Compute the span of `n ≠ 0` exactly if the pool can refute length
/// `span − 1`, upper-bound-only otherwise.
pub fn span_exact(
    n: &BigInt,
    pool: &ModulusPool,
    bounds: &SearchBounds,
    span_cap: u32,
) -> Result<SpanResult, CertifyError> {
    let abs = n.abs();
    let (r_up, witness_abs) = search::span_upper(&abs, bounds, span_cap)?;
    let witness = if n.is_negative() {
        witness_abs.negate()
    } else {
        witness_abs
    };
    let certificate = if r_up == 1 {
        // nonzero n is not the empty sum; length 0 is vacuously refuted
        Some(Certificate::new(
            CertNode::EmptySum { n: abs.clone() },
            pool,
            std::time::Duration::ZERO,
        ))
    } else {
        refute_length(&abs, r_up - 1, pool)?
    };
    let status = if certificate.is_some() {
        SpanStatus::Proved
    } else {
        SpanStatus::UpperBoundOnly
    };
    Ok(SpanResult {
        n: n.clone(),
        span: r_up,
        witness,
        certificate,
        status,
    })
}

#[cfg(test)]
pub(crate) mod test_pool {
    use super::*;
    use std::sync::OnceLock;

    /// One shared built-in pool for the whole test run.
    pub(crate) fn shared() -> &'static ModulusPool {
        static POOL: OnceLock<ModulusPool> = OnceLock::new();
        POOL.get_or_init(|| ModulusPool::builtin(Limits::default()).unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn pool() -> &'static ModulusPool {
        test_pool::shared()
    }

    #[test]
    fn smooth_divisor_sets() {
        let d = smooth_divisors(&BigInt::from(23622)); // 2 · 3 · 31 · 127
        assert_eq!(
            d,
            vec![BigInt::from(2), BigInt::from(3), BigInt::from(6)]
        );
        assert!(smooth_divisors(&BigInt::from(103)).is_empty());
        let d = smooth_divisors(&BigInt::from(12)); // 2^2 · 3
        assert_eq!(
            d,
            [2, 3, 4, 6, 12].map(BigInt::from).to_vec()
        );
    }

    #[test]
    fn refute_103_at_length_2() {
        let pool = pool();
        let cert = refute_length(&BigInt::from(103), 2, &pool)
            .unwrap()
            .expect("103 has span 3");
        match cert.root() {
            CertNode::CaseSplit { n, r, divisors, .. } => {
                assert_eq!(n, &BigInt::from(103));
                assert_eq!(*r, 2);
                assert!(divisors.is_empty());
            }
            other => panic!("unexpected root {other:?}"),
        }
    }

    #[test]
    fn refute_is_sound_for_representable_integers() {
        let pool = pool();
        // these all have known representations of the stated length
        for (n, r) in [(5i64, 2u32), (103, 3), (12, 1), (7, 2), (4985, 4)] {
            assert!(
                refute_length(&BigInt::from(n), r, &pool).unwrap().is_none(),
                "refuted representable ({n}, {r})"
            );
        }
    }

    #[test]
    fn refute_rejects_negative_targets() {
        let err = refute_length(&BigInt::from(-5), 2, &pool()).unwrap_err();
        assert!(matches!(err, CertifyError::NegativeTarget { .. }));
    }

    #[test]
    fn span_exact_small_values() {
        let pool = pool();
        let bounds = SearchBounds::default();
        let s = span_exact(&BigInt::from(103), &pool, &bounds, 8).unwrap();
        assert_eq!(s.span, 3);
        assert_eq!(s.status, SpanStatus::Proved);

        let s = span_exact(&BigInt::from(5), &pool, &bounds, 8).unwrap();
        assert_eq!(s.span, 2);
        assert_eq!(s.status, SpanStatus::Proved);

        let s = span_exact(&BigInt::from(6), &pool, &bounds, 8).unwrap();
        assert_eq!(s.span, 1);
        assert_eq!(s.status, SpanStatus::Proved);
        assert!(matches!(
            s.certificate.as_ref().unwrap().root(),
            CertNode::EmptySum { .. }
        ));

        let s = span_exact(&BigInt::from(-103), &pool, &bounds, 8).unwrap();
        assert_eq!(s.span, 3);
        assert_eq!(s.witness.target(), &BigInt::from(-103));
    }

    #[test]
    fn first_spans_match_census_boundaries() {
        // spans of 1..=10: 1,1,1,1,2,1,2,1,1,2
        let pool = pool();
        let bounds = SearchBounds::default();
        let expect = [1u32, 1, 1, 1, 2, 1, 2, 1, 1, 2];
        for (i, &e) in expect.iter().enumerate() {
            let s = span_exact(&BigInt::from(i as i64 + 1), &pool, &bounds, 8).unwrap();
            assert_eq!(s.span, e, "span({})", i + 1);
            assert_eq!(s.status, SpanStatus::Proved);
        }
    }
}
