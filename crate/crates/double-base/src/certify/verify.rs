//! Independent certificate verification.
//!
//! Everything here recomputes a certificate's claims from scratch: contexts
//! are rebuilt, case coverage is re-derived from the target itself, and
//! every modular leaf is rechecked with this module's own residue
//! arithmetic, partitioning, enumeration, and lift-walk code — none of it
//! shared with the refutation engine (the context builder is the one common
//! dependency). Metadata is ignored.

use super::meet::DpTuple;
use super::tree::{CertNode, Certificate, DpRefutation, SplitCase};
use super::CertifyError;
use crate::limits::Limits;
use crate::modular::ModContext;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use std::collections::HashMap;

/// One verification failure, located by a JSON-pointer-style path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub path: String,
    pub reason: String,
}

/// The outcome of verifying a certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    pub fn valid(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Recheck every node of a certificate. `Ok(true)` iff the tree is a
/// complete, sound refutation of its root claim.
pub fn verify_certificate(cert: &Certificate, limits: &Limits) -> Result<bool, CertifyError> {
    Ok(verify_report(cert, limits)?.valid())
}

/// Like [`verify_certificate`], but reporting what failed and where.
pub fn verify_report(cert: &Certificate, limits: &Limits) -> Result<VerifyReport, CertifyError> {
    let mut v = Verifier {
        limits: *limits,
        contexts: HashMap::new(),
        failures: Vec::new(),
    };
    v.check_node(cert.root(), "$.root");
    Ok(VerifyReport {
        failures: v.failures,
    })
}

struct Verifier {
    limits: Limits,
    contexts: HashMap<u128, std::sync::Arc<ModContext>>,
    failures: Vec<Failure>,
}

impl Verifier {
    fn fail(&mut self, path: &str, reason: impl Into<String>) {
        self.failures.push(Failure {
            path: path.to_string(),
            reason: reason.into(),
        });
    }

    fn context(&mut self, m: u128, path: &str) -> Option<std::sync::Arc<ModContext>> {
        if let Some(c) = self.contexts.get(&m) {
            return Some(std::sync::Arc::clone(c));
        }
        match ModContext::build_with_cap(m, self.limits.closure_cap) {
            Ok(c) => {
                let c = std::sync::Arc::new(c);
                self.contexts.insert(m, std::sync::Arc::clone(&c));
                Some(c)
            }
            Err(e) => {
                self.fail(path, format!("cannot rebuild context for m={m}: {e}"));
                None
            }
        }
    }

    fn check_node(&mut self, node: &CertNode, path: &str) {
        match node {
            CertNode::EmptySum { n } => {
                if n.is_zero() {
                    self.fail(path, "0 is the empty sum; the length-0 case is not refutable");
                }
            }
            CertNode::NoLength1 { n } => {
                if is_pow23(n) {
                    self.fail(path, format!("{n} is a {{2,3}}-integer"));
                }
            }
            CertNode::Vacuous { n, case } => {
                let shifted: BigInt = match case {
                    SplitCase::Plus => n + 1,
                    SplitCase::Minus => n - 1,
                };
                if (&shifted % BigInt::from(6)).is_zero() {
                    self.fail(path, format!("6 divides {shifted}; the case is not vacuous"));
                }
            }
            CertNode::NoDp { n, r, refutation } => {
                self.check_no_dp(n, *r, refutation, path);
            }
            CertNode::CaseSplit {
                n,
                r,
                dp,
                plus,
                minus,
                divisors,
            } => {
                if *r < 2 {
                    self.fail(path, "case split needs r ≥ 2");
                    return;
                }
                self.check_dp_child(n, *r, dp, &format!("{path}.dp"));
                self.check_six_child(n, *r, SplitCase::Plus, plus, &format!("{path}.plus"));
                self.check_six_child(n, *r, SplitCase::Minus, minus, &format!("{path}.minus"));
                // divisor coverage: exactly the {2,3}-divisors d > 1 of n
                let expected = expected_divisors(n);
                let got: Vec<BigInt> = divisors.iter().map(|(d, _)| d.clone()).collect();
                let mut got_sorted = got.clone();
                got_sorted.sort();
                got_sorted.dedup();
                if got_sorted != expected {
                    self.fail(
                        path,
                        format!(
                            "divisor children cover {got:?}, expected exactly {expected:?}"
                        ),
                    );
                }
                for (i, (d, child)) in divisors.iter().enumerate() {
                    let cpath = format!("{path}.divisors[{i}]");
                    let quotient = n / d;
                    match child {
                        CertNode::PrimitiveSplit { n: cn, r: cr, .. } => {
                            if cn != &quotient || cr != r {
                                self.fail(
                                    &cpath,
                                    format!("child claims ({cn}, {cr}), expected ({quotient}, {r})"),
                                );
                            }
                        }
                        other => {
                            self.fail(
                                &cpath,
                                format!("expected a primitive split, found {}", kind_name(other)),
                            );
                        }
                    }
                    self.check_node(child, &cpath);
                }
            }
            CertNode::PrimitiveSplit {
                n,
                r,
                dp,
                plus,
                minus,
            } => {
                if *r < 2 {
                    self.fail(path, "primitive split needs r ≥ 2");
                    return;
                }
                self.check_dp_child(n, *r, dp, &format!("{path}.dp"));
                self.check_six_child(n, *r, SplitCase::Plus, plus, &format!("{path}.plus"));
                self.check_six_child(n, *r, SplitCase::Minus, minus, &format!("{path}.minus"));
            }
        }
    }

    fn check_dp_child(&mut self, n: &BigInt, r: u32, child: &CertNode, path: &str) {
        match child {
            CertNode::NoDp {
                n: cn,
                r: cr,
                refutation,
            } => {
                if cn != n || *cr != r {
                    self.fail(path, format!("dp child claims ({cn}, {cr}), expected ({n}, {r})"));
                }
                self.check_no_dp(n, r, refutation, path);
            }
            other => self.fail(
                path,
                format!("expected a doubly-primitive refutation, found {}", kind_name(other)),
            ),
        }
    }

    /// The `(n±1)/6` children: either genuinely vacuous, or a refutation of
    /// the right quotient at length r − 1.
    fn check_six_child(
        &mut self,
        n: &BigInt,
        r: u32,
        case: SplitCase,
        child: &CertNode,
        path: &str,
    ) {
        let shifted: BigInt = match case {
            SplitCase::Plus => n + 1,
            SplitCase::Minus => n - 1,
        };
        let (quot, rem) = shifted.div_rem(&BigInt::from(6));
        if rem.is_zero() {
            let (cn, cr) = match child {
                CertNode::CaseSplit { n, r, .. } => (n.clone(), *r),
                CertNode::NoLength1 { n } => (n.clone(), 1),
                other => {
                    self.fail(
                        path,
                        format!(
                            "6 divides the shifted target; expected a refutation child, found {}",
                            kind_name(other)
                        ),
                    );
                    return;
                }
            };
            if cn != quot || cr != r - 1 {
                self.fail(
                    path,
                    format!("child claims ({cn}, {cr}), expected ({quot}, {})", r - 1),
                );
            }
            self.check_node(child, path);
        } else {
            match child {
                CertNode::Vacuous { n: cn, case: cc } if cn == n && *cc == case => {
                    self.check_node(child, path)
                }
                other => self.fail(
                    path,
                    format!("expected a vacuous marker for {n}, found {}", kind_name(other)),
                ),
            }
        }
    }

    fn check_no_dp(&mut self, n: &BigInt, r: u32, refutation: &DpRefutation, path: &str) {
        if r < 2 {
            self.fail(path, "doubly-primitive refutations need r ≥ 2");
            return;
        }
        match refutation {
            DpRefutation::Direct { m, residue } => {
                let Some(ctx) = self.context(*m, path) else {
                    return;
                };
                if ctx.reduce(n) != *residue {
                    self.fail(path, format!("{residue} is not {n} mod {m}"));
                    return;
                }
                match recheck_no_dp(&ctx, *residue, r, &self.limits) {
                    Ok(true) => {}
                    Ok(false) => self.fail(
                        path,
                        format!("residue {residue} mod {m} has a doubly-primitive length-{r} tuple"),
                    ),
                    Err(e) => self.fail(path, format!("recheck failed: {e}")),
                }
            }
            DpRefutation::Lifted {
                m,
                m0,
                residue_m,
                residue_m0,
                tuples,
            } => {
                if *m0 == 0 || m % m0 != 0 {
                    self.fail(path, format!("{m0} does not divide {m}"));
                    return;
                }
                let Some(ctx_m) = self.context(*m, path) else {
                    return;
                };
                let Some(ctx_m0) = self.context(*m0, path) else {
                    return;
                };
                if ctx_m.reduce(n) != *residue_m || ctx_m0.reduce(n) != *residue_m0 {
                    self.fail(path, "recorded residues do not match the target");
                    return;
                }
                // completeness: the recorded list must be exactly the
                // enumeration mod m0
                let mut expected = match recheck_enumerate(&ctx_m0, *residue_m0, r, &self.limits)
                {
                    Ok(t) => t,
                    Err(e) => {
                        self.fail(path, format!("re-enumeration failed: {e}"));
                        return;
                    }
                };
                expected.sort();
                let mut recorded: Vec<DpTuple> =
                    tuples.iter().map(|lt| lt.tuple.clone()).collect();
                recorded.sort();
                recorded.dedup();
                if recorded != expected {
                    self.fail(
                        path,
                        format!(
                            "recorded tuple list ({}) differs from the re-enumeration ({})",
                            recorded.len(),
                            expected.len()
                        ),
                    );
                    return;
                }
                // soundness: no recorded tuple lifts
                let walker = LiftWalker::new(&ctx_m, *m0);
                for (i, lt) in tuples.iter().enumerate() {
                    if walker.lifts(&lt.tuple, *residue_m) {
                        self.fail(
                            &format!("{path}.tuples[{i}]"),
                            "tuple lifts to a representation of the full modulus",
                        );
                        return;
                    }
                }
            }
        }
    }
}

fn kind_name(node: &CertNode) -> &'static str {
    match node {
        CertNode::EmptySum { .. } => "empty_sum",
        CertNode::NoLength1 { .. } => "no_length1",
        CertNode::Vacuous { .. } => "vacuous",
        CertNode::NoDp { .. } => "no_dp",
        CertNode::CaseSplit { .. } => "case_split",
        CertNode::PrimitiveSplit { .. } => "primitive_split",
    }
}

/// Independent {2,3}-integer test.
fn is_pow23(n: &BigInt) -> bool {
    if n.is_zero() {
        return false;
    }
    let mut v = n.abs();
    for p in [2u32, 3] {
        let p = BigInt::from(p);
        while (&v % &p).is_zero() {
            v /= &p;
        }
    }
    v == BigInt::from(1)
}

/// The {2,3}-divisors `d > 1` of `n`, ascending — derived here from scratch.
fn expected_divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let abs = n.abs();
    if abs.is_zero() {
        return out;
    }
    let mut d2 = BigInt::from(2);
    loop {
        let mut d = d2.clone();
        loop {
            if (&abs % &d).is_zero() {
                out.push(d.clone());
            } else {
                break;
            }
            d *= 3;
        }
        if (&abs % &d2).is_zero() {
            d2 *= 2;
        } else {
            break;
        }
    }
    // the loop above misses pure powers of 3
    let mut d = BigInt::from(3);
    while (&abs % &d).is_zero() {
        out.push(d.clone());
        d *= 3;
    }
    out.sort();
    out.dedup();
    out
}

// ---------------------------------------------------------------------------
// The verifier's own residue engine.
// ---------------------------------------------------------------------------

/// Minimal word abstraction for the verifier's arithmetic (kept separate
/// from the refutation engine's on purpose).
trait VWord: Copy + Ord + Send + Sync {
    fn narrow(v: u128) -> Self;
    fn widen(self) -> u128;
    fn addm(self, other: Self, m: Self) -> Self;
    fn subm(self, other: Self, m: Self) -> Self;
}

impl VWord for u64 {
    fn narrow(v: u128) -> Self {
        v as u64
    }
    fn widen(self) -> u128 {
        self as u128
    }
    fn addm(self, other: Self, m: Self) -> Self {
        let s = self.wrapping_add(other);
        if s >= m || s < self {
            s.wrapping_sub(m)
        } else {
            s
        }
    }
    fn subm(self, other: Self, m: Self) -> Self {
        if self >= other {
            self - other
        } else {
            m - other + self
        }
    }
}

impl VWord for u128 {
    fn narrow(v: u128) -> Self {
        v
    }
    fn widen(self) -> u128 {
        self
    }
    fn addm(self, other: Self, m: Self) -> Self {
        let s = self + other;
        if s >= m {
            s - m
        } else {
            s
        }
    }
    fn subm(self, other: Self, m: Self) -> Self {
        if self >= other {
            self - other
        } else {
            m - other + self
        }
    }
}

struct VSets<W> {
    m: W,
    t: Vec<W>,
    t2: Vec<W>,
    t3: Vec<W>,
}

impl<W: VWord> VSets<W> {
    fn new(ctx: &ModContext) -> Self {
        let take = |xs: &[u128]| xs.iter().map(|&x| W::narrow(x)).collect::<Vec<W>>();
        VSets {
            m: W::narrow(ctx.modulus()),
            t: take(ctx.residues()),
            t2: take(ctx.residues_pow2()),
            t3: take(ctx.residues_pow3()),
        }
    }

    fn in_t(&self, x: W) -> bool {
        self.t.binary_search(&x).is_ok()
    }

    /// Positions of `t` whose values fall in `[lo, hi]` wrapped mod m.
    fn windows(&self, lo: W, hi: W) -> Vec<(usize, usize)> {
        let cut = |a: W, b: W| {
            (
                self.t.partition_point(|&x| x < a),
                self.t.partition_point(|&x| x <= b),
            )
        };
        if lo <= hi {
            vec![cut(lo, hi)]
        } else {
            let mut v = vec![cut(lo, self.m.subm(W::narrow(1), self.m))];
            v.push(cut(W::narrow(0), hi));
            v
        }
    }
}

/// Does any doubly-primitive length-r tuple of `residue` exist? Rechecked
/// with this module's own loops and partitioning.
fn recheck_no_dp(
    ctx: &ModContext,
    residue: u128,
    r: u32,
    limits: &Limits,
) -> Result<bool, CertifyError> {
    if ctx.modulus() < 1 << 63 {
        v_refuted::<u64>(&VSets::new(ctx), u64::narrow(residue), r, limits)
    } else {
        v_refuted::<u128>(&VSets::new(ctx), residue, r, limits)
    }
}

/// The complete doubly-primitive tuple list, rechecked independently.
fn recheck_enumerate(
    ctx: &ModContext,
    residue: u128,
    r: u32,
    limits: &Limits,
) -> Result<Vec<DpTuple>, CertifyError> {
    if ctx.modulus() < 1 << 63 {
        v_enumerate::<u64>(&VSets::new(ctx), u64::narrow(residue), r, limits)
    } else {
        v_enumerate::<u128>(&VSets::new(ctx), residue, r, limits)
    }
}

fn v_refuted<W: VWord>(
    s: &VSets<W>,
    residue: W,
    r: u32,
    limits: &Limits,
) -> Result<bool, CertifyError> {
    match r {
        0 | 1 => Err(CertifyError::DegreeTooSmall { r }),
        2 => Ok(!s
            .t3
            .iter()
            .any(|&b| s.t2.binary_search(&residue.subm(b, s.m)).is_ok())),
        3 => {
            for &b in &s.t3 {
                let partial = residue.subm(b, s.m);
                if s.t2.iter().any(|&a| s.in_t(partial.subm(a, s.m))) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        4 | 5 => Ok(v_match_values(s, residue, r, limits, true)?.is_empty()),
        _ => Err(CertifyError::ResourceExceeded {
            what: format!("independent recheck not implemented beyond degree 5 (got {r})"),
        }),
    }
}

/// Matched split values for degrees 4 and 5, by the verifier's own
/// partitioned probing: power-of-two bucket count, ceiling widths,
/// multiplicative-hash prefilter, std sorting.
fn v_match_values<W: VWord>(
    s: &VSets<W>,
    residue: W,
    r: u32,
    limits: &Limits,
    stop_on_first: bool,
) -> Result<Vec<W>, CertifyError> {
    let m = s.m;
    // left base: degree 4 → T2; degree 5 → distinct T2 ⊕ T3
    let left_base: Vec<W> = match r {
        4 => s.t2.clone(),
        5 => {
            let mut q = Vec::with_capacity(s.t2.len() * s.t3.len());
            for &a in &s.t2 {
                for &b in &s.t3 {
                    q.push(a.addm(b, m));
                }
            }
            q.sort_unstable();
            q.dedup();
            q
        }
        _ => unreachable!(),
    };
    let word = std::mem::size_of::<W>() as u64;
    let threads = rayon::current_num_threads().max(1) as u64;
    let right_mult = if r == 4 {
        s.t3.len() as u64
    } else {
        s.t.len() as u64 / 2
    };
    let right_total = right_mult.saturating_mul(s.t.len() as u64).max(1);
    let cache_slice: u64 = 3 << 20;
    let budget_slice = (limits.memory_budget_bytes / (4 * word * threads)).max(1 << 16);
    let buckets = right_total
        .div_ceil(cache_slice.min(budget_slice))
        .next_power_of_two();
    let width = s.m.widen().div_ceil(buckets as u128);

    let hits: Vec<Vec<W>> = (0..buckets)
        .into_par_iter()
        .map(|k| {
            let lo128 = k as u128 * width;
            if lo128 >= m.widen() {
                return Vec::new();
            }
            let lo = W::narrow(lo128);
            let hi = W::narrow(((k as u128 + 1) * width - 1).min(m.widen() - 1));
            // right side values w with residue − w ∈ right half
            let mut slice: Vec<W> = Vec::new();
            match r {
                4 => {
                    for &b in &s.t3 {
                        let c = residue.subm(b, m);
                        for (i, j) in s.windows(c.subm(hi, m), c.subm(lo, m)) {
                            for &x in &s.t[i..j] {
                                slice.push(c.subm(x, m));
                            }
                        }
                    }
                }
                5 => {
                    for (bi, &b) in s.t.iter().enumerate() {
                        let c = residue.subm(b, m);
                        for (i, j) in s.windows(c.subm(hi, m), c.subm(lo, m)) {
                            let start = i.max(bi);
                            for &x in &s.t[start..j.max(start)] {
                                slice.push(c.subm(x, m));
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
            if slice.is_empty() {
                return Vec::new();
            }
            slice.sort_unstable();
            slice.dedup();
            // multiplicative-hash tag filter in front of the sorted slice
            let tag_bits = (slice.len() * 8).next_power_of_two().max(1 << 10);
            let shift = 64 - tag_bits.trailing_zeros();
            let mut tags = vec![0u64; tag_bits / 64];
            const MIX: u64 = 0x9e3779b97f4a7c15;
            let hash = |v: W| ((v.widen() as u64).wrapping_mul(MIX) >> shift) as usize;
            for &w in &slice {
                let h = hash(w);
                tags[h >> 6] |= 1 << (h & 63);
            }
            let mut found = Vec::new();
            'left: for &q in &left_base {
                for (i, j) in s.windows(lo.subm(q, m), hi.subm(q, m)) {
                    for &x in &s.t[i..j] {
                        let v = q.addm(x, m);
                        let h = hash(v);
                        if tags[h >> 6] & (1 << (h & 63)) != 0
                            && slice.binary_search(&v).is_ok()
                        {
                            found.push(v);
                            if stop_on_first {
                                break 'left;
                            }
                        }
                    }
                }
            }
            found
        })
        .collect();
    let mut out: Vec<W> = hits.into_iter().flatten().collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// The verifier's own ceiling on enumeration size.
const V_TUPLE_CAP: usize = 10_000_000;

fn v_enumerate<W: VWord>(
    s: &VSets<W>,
    residue: W,
    r: u32,
    limits: &Limits,
) -> Result<Vec<DpTuple>, CertifyError> {
    let m = s.m;
    let mut out: Vec<DpTuple> = Vec::new();
    match r {
        2 => {
            for &b in &s.t3 {
                let a = residue.subm(b, m);
                if s.t2.binary_search(&a).is_ok() {
                    out.push(DpTuple {
                        pow2: a.widen(),
                        pow3: b.widen(),
                        tail: vec![],
                    });
                }
            }
        }
        3 => {
            for &b in &s.t3 {
                for &a in &s.t2 {
                    let c = residue.subm(a.addm(b, m), m);
                    if s.in_t(c) {
                        out.push(DpTuple {
                            pow2: a.widen(),
                            pow3: b.widen(),
                            tail: vec![c.widen()],
                        });
                    }
                }
            }
        }
        4 | 5 => {
            let values = v_match_values(s, residue, r, limits, false)?;
            for &v in &values {
                if out.len() > V_TUPLE_CAP {
                    return Err(CertifyError::ResourceExceeded {
                        what: format!("more than {V_TUPLE_CAP} tuples in the recheck"),
                    });
                }
                let w = residue.subm(v, m);
                if r == 4 {
                    // v = pow2 + ta, w = pow3 + tb
                    for &a in &s.t2 {
                        let ta = v.subm(a, m);
                        if !s.in_t(ta) {
                            continue;
                        }
                        for &b in &s.t3 {
                            let tb = w.subm(b, m);
                            if s.in_t(tb) {
                                let mut tail = [ta.widen(), tb.widen()];
                                tail.sort_unstable();
                                out.push(DpTuple {
                                    pow2: a.widen(),
                                    pow3: b.widen(),
                                    tail: tail.to_vec(),
                                });
                            }
                        }
                    }
                } else {
                    // v = pow2 + pow3 + ta, w = tb + tc (tb ≤ tc): since
                    // residues live in [0, m), the integer sum is w or w + m;
                    // two-pointer sweep over the sorted distinct residues
                    let mut pairs = Vec::new();
                    for target in [w.widen(), w.widen() + m.widen()] {
                        let mut i = 0usize;
                        let mut j = s.t.len() - 1;
                        while i <= j {
                            let sum = s.t[i].widen() + s.t[j].widen();
                            if sum == target {
                                pairs.push((s.t[i], s.t[j]));
                            }
                            if sum >= target {
                                if j == 0 {
                                    break;
                                }
                                j -= 1;
                            } else {
                                i += 1;
                            }
                        }
                    }
                    if pairs.is_empty() {
                        continue;
                    }
                    for &b in &s.t3 {
                        let va = v.subm(b, m);
                        for &a in &s.t2 {
                            let ta = va.subm(a, m);
                            if !s.in_t(ta) {
                                continue;
                            }
                            for &(tb, tc) in &pairs {
                                let mut tail = [ta.widen(), tb.widen(), tc.widen()];
                                tail.sort_unstable();
                                out.push(DpTuple {
                                    pow2: a.widen(),
                                    pow3: b.widen(),
                                    tail: tail.to_vec(),
                                });
                            }
                        }
                    }
                }
            }
        }
        _ => {
            return Err(CertifyError::ResourceExceeded {
                what: format!("independent enumeration not implemented beyond degree 5 (got {r})"),
            })
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// The verifier's lift walk: fibers are contiguous runs of `T(m)` sorted by
/// residue mod `m0`.
struct LiftWalker {
    m: u128,
    keyed_t: Vec<(u64, u128)>,
    keyed_t2: Vec<(u64, u128)>,
    keyed_t3: Vec<(u64, u128)>,
    t_sorted: Vec<u128>,
}

impl LiftWalker {
    fn new(ctx_m: &ModContext, m0: u128) -> Self {
        let keyed = |xs: &[u128]| {
            let mut v: Vec<(u64, u128)> = xs.iter().map(|&x| ((x % m0) as u64, x)).collect();
            v.sort_unstable();
            v
        };
        LiftWalker {
            m: ctx_m.modulus(),
            keyed_t: keyed(ctx_m.residues()),
            keyed_t2: keyed(ctx_m.residues_pow2()),
            keyed_t3: keyed(ctx_m.residues_pow3()),
            t_sorted: ctx_m.residues().to_vec(),
        }
    }

    fn fiber<'a>(keyed: &'a [(u64, u128)], x: u128) -> &'a [(u64, u128)] {
        let key = x as u64;
        let lo = keyed.partition_point(|&(k, _)| k < key);
        let hi = keyed.partition_point(|&(k, _)| k <= key);
        &keyed[lo..hi]
    }

    /// Can the tuple be completed to a sum ≡ `target` mod m? The last tail
    /// coordinate is decided by membership.
    fn lifts(&self, tuple: &DpTuple, target: u128) -> bool {
        let f2 = Self::fiber(&self.keyed_t2, tuple.pow2);
        let f3 = Self::fiber(&self.keyed_t3, tuple.pow3);
        let (tail_last, tail_mid) = match tuple.tail.split_last() {
            Some((l, mid)) => (Some(*l), mid),
            None => (None, &[] as &[u128]),
        };
        let mid_fibers: Vec<&[(u64, u128)]> = tail_mid
            .iter()
            .map(|&x| Self::fiber(&self.keyed_t, x))
            .collect();
        self.walk(f2, f3, &mid_fibers, tail_last, 0, 0, target)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        f2: &[(u64, u128)],
        f3: &[(u64, u128)],
        mids: &[&[(u64, u128)]],
        last: Option<u128>,
        depth: usize,
        partial: u128,
        target: u128,
    ) -> bool {
        if depth == 0 {
            return f2.iter().any(|&(_, y)| {
                self.walk(f2, f3, mids, last, 1, y % self.m, target)
            });
        }
        if depth == 1 {
            return f3.iter().any(|&(_, y)| {
                self.walk(f2, f3, mids, last, 2, (partial + y) % self.m, target)
            });
        }
        let mid_idx = depth - 2;
        if mid_idx < mids.len() {
            return mids[mid_idx].iter().any(|&(_, y)| {
                self.walk(f2, f3, mids, last, depth + 1, (partial + y) % self.m, target)
            });
        }
        match last {
            None => partial == target,
            Some(_) => {
                let need = (target + self.m - partial) % self.m;
                self.t_sorted.binary_search(&need).is_ok()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{refute_length, ModulusPool};
    use num_bigint::BigInt;

    fn pool() -> &'static ModulusPool {
        crate::certify::test_pool::shared()
    }

    #[test]
    fn verify_roundtrip_103() {
        let pool = pool();
        let cert = refute_length(&BigInt::from(103), 2, &pool).unwrap().unwrap();
        let report = verify_report(&cert, &Limits::default()).unwrap();
        assert!(report.valid(), "{:?}", report.failures);

        // serialize → parse → verify
        let parsed = Certificate::from_json_str(&cert.to_json_string()).unwrap();
        assert!(verify_certificate(&parsed, &Limits::default()).unwrap());
    }

    #[test]
    fn tampered_modulus_fails() {
        let pool = pool();
        let cert = refute_length(&BigInt::from(103), 2, &pool).unwrap().unwrap();
        let mut v = cert.to_json();
        // claim a different residue under the same modulus
        v["root"]["children"][0]["residue"] = serde_json::Value::String("104".into());
        let tampered = Certificate::from_json(&v).unwrap();
        let report = verify_report(&tampered, &Limits::default()).unwrap();
        assert!(!report.valid());
    }

    #[test]
    fn deleted_divisor_child_fails() {
        let pool = pool();
        // 4985·2 = 9970 has divisor 2, giving a case-4 child to delete
        let cert = refute_length(&BigInt::from(9970), 3, &pool).unwrap().unwrap();
        let mut v = cert.to_json();
        let children = v["root"]["children"].as_array_mut().unwrap();
        let before = children.len();
        children.retain(|c| c["case"] != "divisor");
        assert!(children.len() < before, "no divisor child to delete");
        let tampered = Certificate::from_json(&v).unwrap();
        let report = verify_report(&tampered, &Limits::default()).unwrap();
        assert!(!report.valid());
        assert!(report.failures[0].reason.contains("divisor"));
    }

    #[test]
    fn expected_divisors_match() {
        assert_eq!(
            expected_divisors(&BigInt::from(12)),
            [2, 3, 4, 6, 12].map(BigInt::from).to_vec()
        );
        assert!(expected_divisors(&BigInt::from(103)).is_empty());
        assert_eq!(
            expected_divisors(&BigInt::from(9)),
            [3, 9].map(BigInt::from).to_vec()
        );
    }

    #[test]
    fn verifier_engine_agrees_with_prover_engine_small() {
        let lim = Limits::default();
        // emptiness agreement across degrees; dense moduli are cheap here
        // because both engines stop at the first hit
        for m in [24u128, 97, 252, 500] {
            let ctx = ModContext::build(m).unwrap();
            for r in [2u32, 3, 4, 5] {
                for residue in (0..m).step_by(11) {
                    let prover = crate::certify::dp_refute_direct(&ctx, residue, r, &lim).unwrap();
                    let verifier = recheck_no_dp(&ctx, residue, r, &lim).unwrap();
                    assert_eq!(prover, verifier, "m={m} r={r} residue={residue}");
                }
            }
        }
    }

    #[test]
    fn verifier_enumeration_agrees_with_prover() {
        let lim = Limits::default();
        // full-tuple agreement; degrees 4 and 5 only on sparse moduli where
        // the complete lists stay small
        for (m, degrees, step) in [
            (97u128, &[2u32, 3][..], 7usize),
            (500, &[2, 3][..], 41),
            (24, &[2, 3, 4, 5][..], 1),
            (252, &[2, 3, 4, 5][..], 29),
        ] {
            let ctx = ModContext::build(m).unwrap();
            for &r in degrees {
                for residue in (0..m).step_by(step) {
                    let pe = crate::certify::dp_enumerate(&ctx, residue, r, &lim).unwrap();
                    let ve = recheck_enumerate(&ctx, residue, r, &lim).unwrap();
                    assert_eq!(pe, ve, "enumeration m={m} r={r} residue={residue}");
                }
            }
        }
    }
}
