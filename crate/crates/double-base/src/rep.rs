//! Exact arithmetic on {2,3}-integers and double-base representations.
//!
//! A *{2,3}-integer* is a nonzero integer of the form `±2^a · 3^b`. A
//! *double-base representation* of `n` is an expression of `n` as a sum of
//! {2,3}-integers; its *length* is the number of summands. The *span* of `n`
//! is the minimum length over all of its representations.
//!
//! Everything in this module is plain integer arithmetic: values are
//! materialized as [`BigInt`] only at the boundaries, while the exponent pair
//! `(a, b)` is stored exactly in machine words.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Errors from representation arithmetic.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RepError {
    /// The summands of a representation do not add up to its target.
    #[error("summands sum to {actual}, expected target {expected}")]
    SumMismatch { expected: BigInt, actual: BigInt },
    /// A representation must have at least one summand.
    #[error("a representation needs at least one summand")]
    Empty,
    /// Summand index out of range.
    #[error("summand index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Sign of a {2,3}-integer. Ordered with `Neg < Pos`, matching the
/// deterministic candidate order `(|value|, sign, a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Neg,
    #[serde(rename = "+")]
    Pos,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
        }
    }

    pub fn to_i32(self) -> i32 {
        match self {
            Sign::Neg => -1,
            Sign::Pos => 1,
        }
    }
}

/// A nonzero integer of the form `sign · 2^a · 3^b`, stored in canonical form.
///
/// Canonicity: unique factorization makes `(sign, a, b)` unique per value, so
/// equality of `TwoThreeInteger`s is equality of the integers they denote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoThreeInteger {
    sign: Sign,
    a: u32,
    b: u32,
}

impl TwoThreeInteger {
    pub fn new(sign: Sign, a: u32, b: u32) -> Self {
        TwoThreeInteger { sign, a, b }
    }

    /// Convenience constructor from small integers, for literals in tests and
    /// examples. Returns `None` when `n` is zero or has another prime factor.
    pub fn from_i64(n: i64) -> Option<Self> {
        canonicalize(&BigInt::from(n))
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Exponent of 2.
    pub fn a(&self) -> u32 {
        self.a
    }

    /// Exponent of 3.
    pub fn b(&self) -> u32 {
        self.b
    }

    /// The integer this denotes: `sign · 2^a · 3^b`.
    pub fn value(&self) -> BigInt {
        let mag = self.magnitude();
        match self.sign {
            Sign::Pos => BigInt::from(mag),
            Sign::Neg => -BigInt::from(mag),
        }
    }

    /// `2^a · 3^b` as an unsigned big integer.
    pub fn magnitude(&self) -> BigUint {
        (BigUint::one() << self.a) * BigUint::from(3u32).pow(self.b)
    }

    /// Magnitude as `u128`, when it fits.
    pub fn magnitude_u128(&self) -> Option<u128> {
        // 2^a * 3^b < 2^128 iff a + b*log2(3) < 128; do it exactly.
        let mut v: u128 = 1u128.checked_shl(self.a)?;
        if self.a >= 128 {
            return None;
        }
        for _ in 0..self.b {
            v = v.checked_mul(3)?;
        }
        Some(v)
    }

    pub fn negate(&self) -> Self {
        TwoThreeInteger {
            sign: self.sign.flip(),
            ..*self
        }
    }

    /// True when the value is odd (not divisible by 2), i.e. `a == 0`.
    pub fn is_odd(&self) -> bool {
        self.a == 0
    }

    /// True when the value is coprime to 3, i.e. `b == 0`.
    pub fn is_coprime_to_3(&self) -> bool {
        self.b == 0
    }

    /// Compare magnitudes `2^a 3^b` exactly without materializing big
    /// integers in the common case.
    fn magnitude_cmp(&self, other: &Self) -> Ordering {
        if self.a == other.a && self.b == other.b {
            return Ordering::Equal;
        }
        if self.a >= other.a && self.b >= other.b {
            return Ordering::Greater;
        }
        if self.a <= other.a && self.b <= other.b {
            return Ordering::Less;
        }
        match (self.magnitude_u128(), other.magnitude_u128()) {
            (Some(x), Some(y)) => x.cmp(&y),
            _ => self.magnitude().cmp(&other.magnitude()),
        }
    }

    /// The key of the deterministic candidate order: ascending
    /// `(|value|, sign, a, b)`. Since `(a, b)` is determined by `|value|`,
    /// the trailing components never actually break a tie, but the order is
    /// stated in full so it can be relied on verbatim.
    pub fn order_key_cmp(&self, other: &Self) -> Ordering {
        self.magnitude_cmp(other)
            .then(self.sign.cmp(&other.sign))
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

impl PartialOrd for TwoThreeInteger {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TwoThreeInteger {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key_cmp(other)
    }
}

impl fmt::Display for TwoThreeInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// Write a nonzero integer as `±2^a · 3^b` if possible.
///
/// Returns `None` for zero and for any integer with a prime factor other
/// than 2 or 3. This is the membership test for {2,3}-integers; composed
/// with [`TwoThreeInteger::value`] it is the identity on them.
pub fn canonicalize(n: &BigInt) -> Option<TwoThreeInteger> {
    if n.is_zero() {
        return None;
    }
    let sign = if n.is_negative() { Sign::Neg } else { Sign::Pos };
    let mut mag = n.magnitude().clone();
    let a = mag.trailing_zeros().unwrap_or(0) as u32;
    mag >>= a;
    let three = BigUint::from(3u32);
    let mut b = 0u32;
    while (&mag % &three).is_zero() {
        mag /= &three;
        b += 1;
    }
    if mag.is_one() {
        Some(TwoThreeInteger::new(sign, a, b))
    } else {
        None
    }
}

/// Classification of a double-base representation.
///
/// As predicates these nest: every doubly-primitive representation is
/// primitive, and every primitive one is general.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReprClass {
    /// No constraint beyond being a valid representation.
    General,
    /// The gcd of the summands is 1.
    Primitive,
    /// Some summand is odd and a *different* summand is coprime to 3.
    DoublyPrimitive,
}

/// A target integer together with an ordered, nonempty list of
/// {2,3}-integer summands that add up to it.
///
/// The sum invariant is enforced at construction, so a `Representation`
/// in hand is always valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representation {
    target: BigInt,
    summands: Vec<TwoThreeInteger>,
}

impl Representation {
    /// Build a representation, rejecting an empty summand list or a summand
    /// sum that misses the target.
    pub fn new(target: BigInt, summands: Vec<TwoThreeInteger>) -> Result<Self, RepError> {
        if summands.is_empty() {
            return Err(RepError::Empty);
        }
        let actual: BigInt = summands.iter().map(|s| s.value()).sum();
        if actual != target {
            return Err(RepError::SumMismatch {
                expected: target,
                actual,
            });
        }
        Ok(Representation { target, summands })
    }

    /// Build a representation of whatever the summands add up to.
    pub fn from_summands(summands: Vec<TwoThreeInteger>) -> Result<Self, RepError> {
        if summands.is_empty() {
            return Err(RepError::Empty);
        }
        let target: BigInt = summands.iter().map(|s| s.value()).sum();
        Ok(Representation { target, summands })
    }

    pub fn target(&self) -> &BigInt {
        &self.target
    }

    pub fn summands(&self) -> &[TwoThreeInteger] {
        &self.summands
    }

    /// Number of summands.
    pub fn len(&self) -> usize {
        self.summands.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty summand lists
    }

    /// Negate the target and every summand. The class of the representation
    /// is unchanged.
    pub fn negate(&self) -> Self {
        Representation {
            target: -&self.target,
            summands: self.summands.iter().map(|s| s.negate()).collect(),
        }
    }

    /// Classify this representation.
    ///
    /// Doubly primitive: some summand has `a = 0` and a different summand has
    /// `b = 0`. Primitive: the gcd of the summand values is 1 (equivalently,
    /// both `min a` and `min b` over the summands are 0). General otherwise.
    pub fn classify(&self) -> ReprClass {
        let has_pair = self.summands.iter().enumerate().any(|(i, s)| {
            s.a == 0
                && self
                    .summands
                    .iter()
                    .enumerate()
                    .any(|(j, t)| j != i && t.b == 0)
        });
        if has_pair {
            return ReprClass::DoublyPrimitive;
        }
        let min_a = self.summands.iter().map(|s| s.a).min().unwrap();
        let min_b = self.summands.iter().map(|s| s.b).min().unwrap();
        if min_a == 0 && min_b == 0 {
            // A primitive representation that is not doubly primitive must
            // consist of one summand equal to ±1 with every other summand
            // divisible by 6.
            debug_assert_eq!(
                self.summands
                    .iter()
                    .filter(|s| s.a == 0 && s.b == 0)
                    .count(),
                1
            );
            debug_assert!(self
                .summands
                .iter()
                .filter(|s| !(s.a == 0 && s.b == 0))
                .all(|s| s.a >= 1 && s.b >= 1));
            ReprClass::Primitive
        } else {
            ReprClass::General
        }
    }

    /// Replace the summand at `index` by the pair `(3·s, −2·s)`.
    ///
    /// The result has the same target and exactly one more summand, so any
    /// integer with a length-`r` representation has representations of every
    /// length `≥ r`.
    pub fn lengthen(&self, index: usize) -> Result<Self, RepError> {
        let s = *self
            .summands
            .get(index)
            .ok_or(RepError::IndexOutOfRange {
                index,
                len: self.summands.len(),
            })?;
        let tripled = TwoThreeInteger::new(s.sign, s.a, s.b + 1);
        let doubled_neg = TwoThreeInteger::new(s.sign.flip(), s.a + 1, s.b);
        let mut summands = self.summands.clone();
        summands[index] = tripled;
        summands.insert(index + 1, doubled_neg);
        Ok(Representation {
            target: self.target.clone(),
            summands,
        })
    }

    /// Render as `target = s1 + s2 - s3 ...`.
    pub fn display_equation(&self) -> String {
        let mut out = format!("{} = ", self.target);
        for (i, s) in self.summands.iter().enumerate() {
            let v = s.value();
            if i == 0 {
                out.push_str(&v.to_string());
            } else if v.is_negative() {
                out.push_str(&format!(" - {}", v.magnitude()));
            } else {
                out.push_str(&format!(" + {}", v));
            }
        }
        out
    }
}

/// True iff `n` is itself a {2,3}-integer, i.e. has a length-1 representation.
pub fn is_length1(n: &BigInt) -> bool {
    canonicalize(n).is_some()
}

/// The gcd of the summand values of a representation (always `2^i 3^j`).
pub fn summand_gcd(rep: &Representation) -> BigUint {
    let min_a = rep.summands().iter().map(|s| s.a()).min().unwrap();
    let min_b = rep.summands().iter().map(|s| s.b()).min().unwrap();
    TwoThreeInteger::new(Sign::Pos, min_a, min_b).magnitude()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tti(n: i64) -> TwoThreeInteger {
        TwoThreeInteger::from_i64(n).unwrap()
    }

    fn rep(target: i64, summands: &[i64]) -> Representation {
        Representation::new(
            BigInt::from(target),
            summands.iter().map(|&s| tti(s)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(tti(12), TwoThreeInteger::new(Sign::Pos, 2, 1));
        assert_eq!(tti(-48), TwoThreeInteger::new(Sign::Neg, 4, 1));
        assert_eq!(canonicalize(&BigInt::from(5)), None);
        assert_eq!(tti(1), TwoThreeInteger::new(Sign::Pos, 0, 0));
        assert_eq!(canonicalize(&BigInt::from(0)), None);
        assert_eq!(canonicalize(&BigInt::from(-10)), None);
    }

    #[test]
    fn value_examples() {
        assert_eq!(TwoThreeInteger::new(Sign::Pos, 0, 0).value(), BigInt::from(1));
        assert_eq!(TwoThreeInteger::new(Sign::Neg, 4, 1).value(), BigInt::from(-48));
        assert_eq!(TwoThreeInteger::new(Sign::Pos, 6, 0).value(), BigInt::from(64));
    }

    #[test]
    fn canonicalize_value_roundtrip_small() {
        for a in 0..12 {
            for b in 0..8 {
                for sign in [Sign::Pos, Sign::Neg] {
                    let t = TwoThreeInteger::new(sign, a, b);
                    assert_eq!(canonicalize(&t.value()), Some(t));
                }
            }
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(rep(5, &[2, 3]).classify(), ReprClass::DoublyPrimitive);
        assert_eq!(rep(10, &[4, 6]).classify(), ReprClass::General);
        assert_eq!(rep(7, &[1, 6]).classify(), ReprClass::Primitive);
        // two ±1 summands can serve as both witnesses
        assert_eq!(rep(2, &[1, 1]).classify(), ReprClass::DoublyPrimitive);
        // every summand of 2 − 2 is even, so the gcd is 2
        assert_eq!(rep(0, &[2, -2]).classify(), ReprClass::General);
    }

    #[test]
    fn constructor_rejects_sum_mismatch() {
        let err = Representation::new(BigInt::from(6), vec![tti(2), tti(3)]).unwrap_err();
        assert!(matches!(err, RepError::SumMismatch { .. }));
        let err = Representation::new(BigInt::from(1), vec![]).unwrap_err();
        assert_eq!(err, RepError::Empty);
    }

    #[test]
    fn lengthen_examples() {
        let r = rep(5, &[2, 3]);
        let l = r.lengthen(0).unwrap();
        assert_eq!(l.target(), &BigInt::from(5));
        assert_eq!(
            l.summands().iter().map(|s| s.value()).collect::<Vec<_>>(),
            vec![BigInt::from(6), BigInt::from(-4), BigInt::from(3)]
        );

        let one = rep(1, &[1]);
        let l = one.lengthen(0).unwrap();
        assert_eq!(
            l.summands().iter().map(|s| s.value()).collect::<Vec<_>>(),
            vec![BigInt::from(3), BigInt::from(-2)]
        );

        assert!(matches!(
            one.lengthen(3),
            Err(RepError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn lengthen_iterated_preserves_validity() {
        let mut r = rep(7, &[1, 6]);
        for k in 0..10 {
            assert_eq!(r.len(), 2 + k);
            assert_eq!(r.target(), &BigInt::from(7));
            // re-validate through the constructor
            let rechecked =
                Representation::new(r.target().clone(), r.summands().to_vec()).unwrap();
            assert_eq!(rechecked, r);
            r = r.lengthen(k % r.len()).unwrap();
        }
    }

    #[test]
    fn classify_negation_invariant() {
        for (t, s) in [
            (5i64, vec![2i64, 3]),
            (10, vec![4, 6]),
            (7, vec![1, 6]),
            (103, vec![64, 36, 3]),
        ] {
            let r = rep(t, &s);
            assert_eq!(r.classify(), r.negate().classify());
        }
    }

    #[test]
    fn order_key_is_by_magnitude_then_sign() {
        let mut v = vec![tti(3), tti(-2), tti(2), tti(-3), tti(1), tti(4)];
        v.sort();
        let vals: Vec<i64> = v
            .iter()
            .map(|t| i64::try_from(t.value()).unwrap())
            .collect();
        assert_eq!(vals, vec![1, -2, 2, -3, 3, 4]);
    }

    #[test]
    fn magnitude_cmp_mixed_exponents() {
        // 2^10 = 1024 vs 3^6 = 729; 2^19 vs 3^12 (524288 vs 531441)
        assert!(tti(1024) > tti(729));
        let a = TwoThreeInteger::new(Sign::Pos, 19, 0);
        let b = TwoThreeInteger::new(Sign::Pos, 0, 12);
        assert!(a < b);
    }

    #[test]
    fn is_length1_examples() {
        assert!(is_length1(&BigInt::from(12)));
        assert!(!is_length1(&BigInt::from(5)));
        assert!(!is_length1(&BigInt::from(0)));
    }
}
