//! Lift refutations: prove emptiness modulo a large `m` by enumerating
//! doubly-primitive tuples modulo a divisor `m0 < 2^63` and showing that
//! none of them extends to a tuple modulo `m`.
//!
//! Soundness: a genuine doubly-primitive length-r representation of `n`
//! reduces to one mod `m`, which in turn reduces to one mod `m0` compatible
//! with it. So if every mod-`m0` tuple fails to lift, no mod-`m` tuple — and
//! hence no genuine representation — exists. The residue sets mod `m` are
//! finite, so lifting a tuple means choosing, for each coordinate, a
//! preimage in the corresponding fiber `{y ∈ T(m) : y ≡ x (mod m0)}` such
//! that the coordinates sum to `n mod m`.

use super::meet::DpTuple;
use super::CertifyError;
use crate::modular::ModContext;
use std::collections::{HashMap, HashSet};

/// `T(m)`, `T2(m)`, `T3(m)` indexed by residue mod `m0`.
pub(crate) struct FiberIndex {
    pub m: u128,

    t_by_m0: HashMap<u64, Vec<u128>>,
    t2_by_m0: HashMap<u64, Vec<u128>>,
    t3_by_m0: HashMap<u64, Vec<u128>>,
    t_set: HashSet<u128>,
}

impl FiberIndex {
    pub fn new(ctx_m: &ModContext, m0: u128) -> Result<Self, CertifyError> {
        let m = ctx_m.modulus();
        if m0 == 0 || m % m0 != 0 {
            return Err(CertifyError::NotADivisor { m0, m });
        }
        let index = |xs: &[u128]| {
            let mut map: HashMap<u64, Vec<u128>> = HashMap::new();
            for &x in xs {
                map.entry((x % m0) as u64).or_default().push(x);
            }
            map
        };
        Ok(FiberIndex {
            m,

            t_by_m0: index(ctx_m.residues()),
            t2_by_m0: index(ctx_m.residues_pow2()),
            t3_by_m0: index(ctx_m.residues_pow3()),
            t_set: ctx_m.residues().iter().copied().collect(),
        })
    }

    fn fiber<'a>(map: &'a HashMap<u64, Vec<u128>>, x: u128) -> &'a [u128] {
        map.get(&(x as u64)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Try to lift one mod-`m0` tuple to a tuple summing to `target_m`
    /// mod `m`. Returns `(lifted?, combinations checked)`. The last tail
    /// coordinate is resolved by membership: its required value is already
    /// congruent to the right fiber, so a single `T(m)` lookup decides it.
    pub fn try_lift(&self, tuple: &DpTuple, target_m: u128) -> (bool, u64) {
        let m = self.m;
        let mut checked: u64 = 0;
        let fib2 = Self::fiber(&self.t2_by_m0, tuple.pow2);
        let fib3 = Self::fiber(&self.t3_by_m0, tuple.pow3);
        let (last, mid) = match tuple.tail.split_last() {
            Some((l, m)) => (Some(*l), m),
            None => (None, &[] as &[u128]),
        };
        let mid_fibers: Vec<&[u128]> = mid
            .iter()
            .map(|&x| Self::fiber(&self.t_by_m0, x))
            .collect();
        // DFS over (pow2, pow3, mid tail...) accumulating the partial sum
        let mut stack: Vec<(usize, u128)> = Vec::new(); // (depth, partial)
        for &y2 in fib2 {
            for &y3 in fib3 {
                stack.push((0, (y2 + y3) % m));
                while let Some((depth, partial)) = stack.pop() {
                    if depth == mid_fibers.len() {
                        checked += 1;
                        match last {
                            None => {
                                if partial == target_m {
                                    return (true, checked);
                                }
                            }
                            Some(_) => {
                                // the needed last value is determined; it is
                                // automatically ≡ the tuple's last coordinate
                                // mod m0, so membership in T(m) suffices
                                let need = (target_m + m - partial) % m;
                                if self.t_set.contains(&need) {
                                    return (true, checked);
                                }
                            }
                        }
                    } else {
                        for &y in mid_fibers[depth] {
                            stack.push((depth + 1, (partial + y) % m));
                        }
                    }
                }
            }
        }
        (false, checked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::meet::dp_enumerate;
    use crate::certify::{dp_refute_direct, lift_refute, DpRefutation};
    use crate::limits::Limits;
    use num_bigint::BigInt;

    #[test]
    fn toy_lift_agrees_with_direct_check() {
        // m0 = 8, m = 24: the lift through the fibers must decide exactly
        // what the direct degree-2 check decides mod 24
        let ctx_m = ModContext::build(24).unwrap();
        let ctx_m0 = ModContext::build(8).unwrap();
        let lim = Limits::default();
        for n in 0i64..48 {
            let direct = dp_refute_direct(&ctx_m, (n % 24) as u128, 2, &lim).unwrap();
            let lifted = lift_refute(&BigInt::from(n), 2, &ctx_m0, &ctx_m, &lim).unwrap();
            assert_eq!(direct, lifted.is_some(), "n={n}");
            if let Some(DpRefutation::Lifted { tuples, .. }) = lifted {
                // recorded tuples must be the complete mod-8 enumeration
                let expect = dp_enumerate(&ctx_m0, (n % 8) as u128, 2, &lim).unwrap();
                assert_eq!(
                    tuples.iter().map(|t| t.tuple.clone()).collect::<Vec<_>>(),
                    expect
                );
            }
        }
    }

    #[test]
    fn toy_lift_degree3() {
        let ctx_m = ModContext::build(504).unwrap(); // 504 = 8 · 63
        let ctx_m0 = ModContext::build(63).unwrap();
        let lim = Limits::default();
        for n in [1i64, 5, 103, 200, 252, 400] {
            let direct = dp_refute_direct(&ctx_m, (n % 504) as u128, 3, &lim).unwrap();
            let lifted = lift_refute(&BigInt::from(n), 3, &ctx_m0, &ctx_m, &lim).unwrap();
            assert_eq!(direct, lifted.is_some(), "n={n}");
        }
    }

    #[test]
    fn genuine_rep_always_lifts() {
        // 5 = 2 + 3 and 103 = 64 + 36 + 3 are genuine, so no refutation
        let ctx_m = ModContext::build(504).unwrap();
        let ctx_m0 = ModContext::build(8).unwrap();
        let lim = Limits::default();
        assert!(lift_refute(&BigInt::from(5), 2, &ctx_m0, &ctx_m, &lim)
            .unwrap()
            .is_none());
        assert!(lift_refute(&BigInt::from(103), 3, &ctx_m0, &ctx_m, &lim)
            .unwrap()
            .is_none());
    }

    #[test]
    fn divisibility_precondition_enforced() {
        let ctx_m = ModContext::build(24).unwrap();
        let ctx_m0 = ModContext::build(7).unwrap();
        let err = lift_refute(
            &BigInt::from(1),
            2,
            &ctx_m0,
            &ctx_m,
            &Limits::default(),
        )
        .unwrap_err();
        assert!(matches!(err, CertifyError::NotADivisor { .. }));
    }
}
