//! Half-sum intersection over Z/mZ: the engine that decides whether a
//! residue has a doubly-primitive length-r representation, and enumerates
//! the representations when asked.
//!
//! For degree r the residue tuple space splits into two halves:
//!
//! * odd `r = 2u+1`: `S1 = T2 ⊕ T3 ⊕ T^(u−1)`, `S2 = T^u`;
//! * even `r = 2u`:  `S1 = T2 ⊕ T^(u−1)`,      `S2 = T3 ⊕ T^(u−1)`.
//!
//! A residue `n` has a doubly-primitive length-r representation iff
//! `S1 ∩ (n − S2)` is nonempty. For `r ≤ 3` the check is a direct loop. For
//! `r ∈ {4, 5}` both halves have the shape `Base ⊕ T`, and the intersection
//! runs bucket by bucket over value intervals of `[0, m)`: the right side's
//! bucket slice is materialized and sorted, while the left side streams
//! through the bucket as presorted runs (for a fixed base element `q`, the
//! values `q + x` over a window of sorted `T` are already in order). Each
//! side is therefore enumerated exactly once across all buckets, and the
//! bucket count is chosen so a slice fits the memory budget. Degrees ≥ 6
//! fall back to exhaustive bitset convolution, which is only viable for
//! small moduli.

use super::CertifyError;
use crate::limits::Limits;
use crate::modular::ModContext;
use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};

/// A doubly-primitive residue tuple mod `m`: one element of `T2`, one of
/// `T3`, and `r − 2` elements of `T` in nondecreasing order (the dedup
/// convention for tails).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DpTuple {
    pub pow2: u128,
    pub pow3: u128,
    pub tail: Vec<u128>,
}

impl DpTuple {
    pub fn sum_mod(&self, m: u128) -> u128 {
        let mut s = (self.pow2 + self.pow3) % m;
        for &x in &self.tail {
            s = (s + x) % m;
        }
        s
    }
}

/// Residue word: `u64` for moduli below 2^63 (sums of two residues stay in
/// range), `u128` above.
pub(crate) trait Word:
    Copy + Ord + Send + Sync + std::fmt::Debug + std::hash::Hash + 'static
{
    fn from_u128(v: u128) -> Self;
    fn to_u128(self) -> u128;
    fn add_mod(self, other: Self, m: Self) -> Self;
    fn sub_mod(self, other: Self, m: Self) -> Self;
    fn sort(values: &mut [Self]);
}

impl Word for u64 {
    fn from_u128(v: u128) -> Self {
        v as u64
    }
    fn to_u128(self) -> u128 {
        self as u128
    }
    fn add_mod(self, other: Self, m: Self) -> Self {
        let s = self + other;
        if s >= m {
            s - m
        } else {
            s
        }
    }
    fn sub_mod(self, other: Self, m: Self) -> Self {
        if self >= other {
            self - other
        } else {
            self + m - other
        }
    }
    fn sort(values: &mut [Self]) {
        radix_sort_u64(values);
    }
}

impl Word for u128 {
    fn from_u128(v: u128) -> Self {
        v
    }
    fn to_u128(self) -> u128 {
        self
    }
    fn add_mod(self, other: Self, m: Self) -> Self {
        let s = self + other;
        if s >= m {
            s - m
        } else {
            s
        }
    }
    fn sub_mod(self, other: Self, m: Self) -> Self {
        if self >= other {
            self - other
        } else {
            self + m - other
        }
    }
    fn sort(values: &mut [Self]) {
        values.sort_unstable();
    }
}

/// LSD radix sort on 11-bit digits. The 2048 scatter streams keep the
/// active output cache lines small enough to stay resident, which matters
/// when slices hold tens of millions of residues.
fn radix_sort_u64(values: &mut [u64]) {
    const DIGIT_BITS: usize = 11;
    const DIGITS: usize = 1 << DIGIT_BITS;
    const MASK: u64 = (DIGITS - 1) as u64;
    if values.len() < 1 << 12 {
        values.sort_unstable();
        return;
    }
    let max = values.iter().copied().max().unwrap_or(0);
    let bits = 64 - max.leading_zeros() as usize;
    let passes = bits.div_ceil(DIGIT_BITS);
    let mut buf = vec![0u64; values.len()];
    let mut src_is_values = true;
    for pass in 0..passes {
        let shift = pass * DIGIT_BITS;
        let (src, dst): (&mut [u64], &mut [u64]) = if src_is_values {
            (values, &mut buf)
        } else {
            (&mut buf, values)
        };
        let mut counts = [0usize; DIGITS];
        for &v in src.iter() {
            counts[((v >> shift) & MASK) as usize] += 1;
        }
        let mut pos = 0usize;
        for c in counts.iter_mut() {
            let n = *c;
            *c = pos;
            pos += n;
        }
        for &v in src.iter() {
            let d = ((v >> shift) & MASK) as usize;
            dst[counts[d]] = v;
            counts[d] += 1;
        }
        src_is_values = !src_is_values;
    }
    if !src_is_values {
        values.copy_from_slice(&buf);
    }
}

/// Hint the CPU to pull a cache line before it is needed. Purely a
/// performance hint; no-op off x86-64.
#[inline(always)]
fn prefetch<T>(p: *const T) {
    #[cfg(target_arch = "x86_64")]
    // SAFETY: prefetch performs no memory access visible to the program.
    unsafe {
        core::arch::x86_64::_mm_prefetch(p as *const i8, core::arch::x86_64::_MM_HINT_T0)
    }
    #[cfg(not(target_arch = "x86_64"))]
    let _ = p;
}

/// Per-context residue index in the word width of the modulus.
#[derive(Debug)]
pub(crate) struct DpIndex<W: Word> {
    pub m: W,
    pub t: Vec<W>,
    pub t2: Vec<W>,
    pub t3: Vec<W>,
    /// Sorted distinct values of `T2 ⊕ T3` (the degree-3/5 left base).
    q: std::sync::OnceLock<Vec<W>>,
}

impl<W: Word> DpIndex<W> {
    fn new(ctx: &ModContext) -> Self {
        let conv = |xs: &[u128]| xs.iter().map(|&x| W::from_u128(x)).collect::<Vec<W>>();
        DpIndex {
            m: W::from_u128(ctx.modulus()),
            t: conv(ctx.residues()),
            t2: conv(ctx.residues_pow2()),
            t3: conv(ctx.residues_pow3()),
            q: std::sync::OnceLock::new(),
        }
    }

    fn q(&self) -> &[W] {
        self.q.get_or_init(|| {
            let mut q: Vec<W> =
                Vec::with_capacity(self.t2.len() * self.t3.len());
            for &a in &self.t2 {
                for &b in &self.t3 {
                    q.push(a.add_mod(b, self.m));
                }
            }
            W::sort(&mut q);
            q.dedup();
            q
        })
    }

    fn contains_t(&self, x: W) -> bool {
        self.t.binary_search(&x).is_ok()
    }
}

/// The index for a context, in whichever width its modulus needs.
#[derive(Debug)]
pub(crate) enum AnyIndex {
    W64(DpIndex<u64>),
    W128(DpIndex<u128>),
}

impl AnyIndex {
    pub fn new(ctx: &ModContext) -> Self {
        if ctx.modulus() < 1 << 63 {
            AnyIndex::W64(DpIndex::new(ctx))
        } else {
            AnyIndex::W128(DpIndex::new(ctx))
        }
    }
}

/// The half shapes for the streamed intersection: each half is
/// `base ⊕ T` where `base` names one of the index's sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BaseSet {
    Pow2,
    Pow3,
    PairSums,
    Full,
}

fn base<'a, W: Word>(idx: &'a DpIndex<W>, which: BaseSet) -> &'a [W] {
    match which {
        BaseSet::Pow2 => &idx.t2,
        BaseSet::Pow3 => &idx.t3,
        BaseSet::PairSums => idx.q(),
        BaseSet::Full => &idx.t,
    }
}

/// Contiguous index ranges of sorted `arr` whose values lie in the circular
/// interval `[lo, hi]` of `[0, m)` (inclusive; `lo > hi` means it wraps).
fn circular_ranges<W: Word>(arr: &[W], lo: W, hi: W) -> [(usize, usize); 2] {
    let span = |a: W, b: W| {
        let i = arr.partition_point(|&x| x < a);
        let j = arr.partition_point(|&x| x <= b);
        (i, j)
    };
    if lo <= hi {
        [span(lo, hi), (0, 0)]
    } else {
        let max = match arr.last() {
            Some(&x) => x,
            None => return [(0, 0), (0, 0)],
        };
        [span(lo, max), span(W::from_u128(0), hi)]
    }
}

/// Outcome of a value-level intersection.
pub(crate) struct MatchValues<W> {
    pub values: Vec<W>,
    pub complete: bool,
}

/// All values `v ∈ [0, m)` with `v ∈ baseL ⊕ T` and `target − v ∈ baseR ⊕ T`,
/// via interval-bucketed probing. For each value bucket of `[0, m)`, the
/// (smaller) right side's slice is generated by window lookups into sorted
/// `T`, sorted, and fronted by a low-bits membership bitmap; the left side
/// is then *streamed* through the bucket, never materialized: each candidate
/// value probes the bitmap and, on a hit, confirms by binary search. Each
/// side is enumerated exactly once across all buckets; the bucket count is
/// chosen so a right slice and its bitmap stay cache-sized. With
/// `early_exit`, remaining buckets are skipped once any match exists
/// (`complete` is then false on a hit).
fn bucketed_match_values<W: Word>(
    idx: &DpIndex<W>,
    target: W,
    base_l: BaseSet,
    base_r: BaseSet,
    limits: &Limits,
    early_exit: bool,
) -> MatchValues<W> {
    let m = idx.m;
    let bl = base(idx, base_l);
    let br = base(idx, base_r);
    // identical base and tail sets make the right side a set of unordered
    // pairs; generating b + x only for x ≥ b halves the work
    let right_unordered = base_r == BaseSet::Full;
    let word = std::mem::size_of::<W>() as u64;
    let threads = rayon::current_num_threads().max(1) as u64;
    let right_count = {
        let full = (br.len() as u64).saturating_mul(idx.t.len() as u64);
        if right_unordered {
            full / 2
        } else {
            full
        }
    };
    // ~2M-entry slices keep the bitmap and the hot levels of the confirm
    // search in cache; memory is a secondary constraint (slices are small)
    const TARGET_SLICE: u64 = 2 << 20;
    let slice_cap = (limits.memory_budget_bytes / (4 * word * threads)).max(1 << 16);
    let buckets = right_count
        .div_ceil(TARGET_SLICE.min(slice_cap))
        .max(1);
    let m128 = m.to_u128();
    let width = (m128 / buckets as u128).max(1);

    let trace = std::env::var_os("DBASE_TRACE").is_some();
    if trace {
        eprintln!("[meet] m={m128} buckets={buckets} right~{right_count}");
    }
    let found = AtomicBool::new(false);
    let per_bucket: Vec<Vec<W>> = (0..buckets)
        .into_par_iter()
        .map(|k| {
            if early_exit && found.load(AtomicOrdering::Relaxed) {
                return Vec::new();
            }
            let bucket_start = std::time::Instant::now();
            let blo128 = width * k as u128;
            if blo128 >= m128 {
                return Vec::new();
            }
            let blo = W::from_u128(blo128);
            let bhi = if k + 1 == buckets {
                W::from_u128(m128 - 1)
            } else {
                W::from_u128((width * (k as u128 + 1) - 1).min(m128 - 1))
            };
            // right slice: v = target − (b + x) ∈ [blo, bhi]
            //              ⇔  x ∈ [target − b − bhi, target − b − blo]
            let mut right: Vec<W> =
                Vec::with_capacity((right_count / buckets) as usize * 9 / 8);
            for &b in br {
                let c = target.sub_mod(b, m);
                let (xlo, xhi) = (c.sub_mod(bhi, m), c.sub_mod(blo, m));
                for (i, j) in circular_ranges(&idx.t, xlo, xhi) {
                    let i = if right_unordered {
                        i.max(idx.t.partition_point(|&x| x < b))
                    } else {
                        i
                    };
                    for &x in &idx.t[i..j.max(i)] {
                        right.push(c.sub_mod(x, m));
                    }
                }
            }
            if right.is_empty() {
                return Vec::new();
            }
            W::sort(&mut right);
            right.dedup();
            // low-bits bitmap sized ~16 bits per entry (≈6% false positives)
            let bits = (right.len() * 16).next_power_of_two().max(1 << 10);
            let mask = (bits - 1) as u128;
            let mut bitmap = vec![0u64; bits / 64];
            for &w in &right {
                let h = (w.to_u128() & mask) as usize;
                bitmap[h >> 6] |= 1 << (h & 63);
            }
            // stream the left side: v = q + x ∈ [blo, bhi]. The probes land
            // all over the bitmap, so batch them and prefetch a chunk of
            // addresses before testing — the loads then overlap instead of
            // serializing on memory latency.
            let mut matches: Vec<W> = Vec::new();
            let mut vbuf = [W::from_u128(0); 64];
            'outer: for &q in bl {
                let (xlo, xhi) = (blo.sub_mod(q, m), bhi.sub_mod(q, m));
                for (i, j) in circular_ranges(&idx.t, xlo, xhi) {
                    for chunk in idx.t[i..j].chunks(vbuf.len()) {
                        for (s, &x) in chunk.iter().enumerate() {
                            let v = q.add_mod(x, m);
                            vbuf[s] = v;
                            prefetch(&bitmap[((v.to_u128() & mask) as usize) >> 6]);
                        }
                        for &v in &vbuf[..chunk.len()] {
                            let h = (v.to_u128() & mask) as usize;
                            if bitmap[h >> 6] & (1 << (h & 63)) != 0
                                && right.binary_search(&v).is_ok()
                            {
                                matches.push(v);
                                if early_exit {
                                    found.store(true, AtomicOrdering::Relaxed);
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
            }
            if trace && k % 64 == 0 {
                eprintln!(
                    "[meet] bucket {k}/{buckets}: right={} matches={} in {:?}",
                    right.len(),
                    matches.len(),
                    bucket_start.elapsed()
                );
            }
            matches
        })
        .collect();
    let mut values: Vec<W> = per_bucket.into_iter().flatten().collect();
    W::sort(&mut values);
    values.dedup();
    MatchValues {
        complete: !early_exit || values.is_empty(),
        values,
    }
}

/// Degree shape dispatch: which bases to use for each half.
fn shapes(r: u32) -> Option<(BaseSet, BaseSet)> {
    match r {
        4 => Some((BaseSet::Pow2, BaseSet::Pow3)),
        5 => Some((BaseSet::PairSums, BaseSet::Full)),
        _ => None,
    }
}

/// Internal: does `target` have a doubly-primitive length-r representation
/// mod m? (i.e. is the intersection nonempty?)
pub(crate) fn has_dp_rep<W: Word>(
    idx: &DpIndex<W>,
    target: W,
    r: u32,
    limits: &Limits,
) -> Result<bool, CertifyError> {
    let m = idx.m;
    match r {
        0 | 1 => Err(CertifyError::DegreeTooSmall { r }),
        2 => Ok(idx
            .t2
            .iter()
            .any(|&a| idx.t3.binary_search(&target.sub_mod(a, m)).is_ok())),
        3 => Ok(idx
            .q()
            .iter()
            .any(|&q| idx.contains_t(target.sub_mod(q, m)))),
        4 | 5 => {
            let (l, rr) = shapes(r).unwrap();
            let mv = bucketed_match_values(idx, target, l, rr, limits, true);
            Ok(!mv.values.is_empty())
        }
        _ => has_dp_rep_exhaustive(idx, target, r, limits),
    }
}

/// Degrees ≥ 6: exhaustive boolean sumset convolution, small moduli only.
fn has_dp_rep_exhaustive<W: Word>(
    idx: &DpIndex<W>,
    target: W,
    r: u32,
    limits: &Limits,
) -> Result<bool, CertifyError> {
    let reach = dp_reach_sets(idx, r, limits)?;
    let m = idx.m;
    let (s1, s2) = (&reach.0, &reach.1);
    Ok((0..s1.len()).any(|v| s1[v] && s2[target.sub_mod(W::from_u128(v as u128), m).to_u128() as usize]))
}

/// `(S1, S2)` membership tables for degree r by repeated sumset folding.
fn dp_reach_sets<W: Word>(
    idx: &DpIndex<W>,
    r: u32,
    limits: &Limits,
) -> Result<(Vec<bool>, Vec<bool>), CertifyError> {
    let m128 = idx.m.to_u128();
    let work = m128.saturating_mul(idx.t.len() as u128) * r as u128;
    if m128 > limits.enumeration_cap || work > 1 << 34 {
        return Err(CertifyError::ResourceExceeded {
            what: format!(
                "degree-{r} exhaustive check needs ~{work} operations at m={m128}"
            ),
        });
    }
    let m = m128 as usize;
    let to_bits = |xs: &[W]| {
        let mut v = vec![false; m];
        for &x in xs {
            v[x.to_u128() as usize] = true;
        }
        v
    };
    let fold = |acc: &[bool], xs: &[W]| {
        let mut next = vec![false; m];
        for (a, _) in acc.iter().enumerate().filter(|(_, &set)| set) {
            for &x in xs {
                let s = a + x.to_u128() as usize;
                next[if s >= m { s - m } else { s }] = true;
            }
        }
        next
    };
    let u = if r % 2 == 1 { (r - 1) / 2 } else { r / 2 };
    let (mut s1, mut s2);
    if r % 2 == 1 {
        s1 = fold(&to_bits(&idx.t2), &idx.t3);
        for _ in 0..u - 1 {
            s1 = fold(&s1, &idx.t);
        }
        s2 = to_bits(&idx.t);
        for _ in 0..u - 1 {
            s2 = fold(&s2, &idx.t);
        }
    } else {
        s1 = to_bits(&idx.t2);
        s2 = to_bits(&idx.t3);
        for _ in 0..u - 1 {
            s1 = fold(&s1, &idx.t);
            s2 = fold(&s2, &idx.t);
        }
    }
    Ok((s1, s2))
}

/// Cap on the number of tuples an enumeration may produce.
const TUPLE_CAP: usize = 10_000_000;

/// Enumerate every doubly-primitive length-r tuple of `target` mod m:
/// `(pow2 ∈ T2, pow3 ∈ T3, tail ∈ T^(r−2))` with the tail nondecreasing,
/// duplicate-free, sorted.
pub(crate) fn enumerate_dp<W: Word>(
    idx: &DpIndex<W>,
    target: W,
    r: u32,
    limits: &Limits,
) -> Result<Vec<DpTuple>, CertifyError> {
    let m = idx.m;
    let mut out: std::collections::BTreeSet<DpTuple> = Default::default();
    let push = |t: DpTuple, out: &mut std::collections::BTreeSet<DpTuple>| {
        out.insert(t);
        if out.len() > TUPLE_CAP {
            return Err(CertifyError::ResourceExceeded {
                what: format!("more than {TUPLE_CAP} doubly-primitive tuples"),
            });
        }
        Ok(())
    };
    match r {
        0 | 1 => return Err(CertifyError::DegreeTooSmall { r }),
        2 => {
            for &a in &idx.t2 {
                let b = target.sub_mod(a, m);
                if idx.t3.binary_search(&b).is_ok() {
                    push(
                        DpTuple {
                            pow2: a.to_u128(),
                            pow3: b.to_u128(),
                            tail: vec![],
                        },
                        &mut out,
                    )?;
                }
            }
        }
        3 => {
            for &a in &idx.t2 {
                for &b in &idx.t3 {
                    let c = target.sub_mod(a.add_mod(b, m), m);
                    if idx.contains_t(c) {
                        push(
                            DpTuple {
                                pow2: a.to_u128(),
                                pow3: b.to_u128(),
                                tail: vec![c.to_u128()],
                            },
                            &mut out,
                        )?;
                    }
                }
            }
        }
        4 | 5 => {
            let (l, rr) = shapes(r).unwrap();
            let mv = bucketed_match_values(idx, target, l, rr, limits, false);
            debug_assert!(mv.complete);
            for &v in &mv.values {
                reconstruct_tuples(idx, target, r, v, &mut out)?;
            }
        }
        _ => {
            enumerate_exhaustive(idx, target, r, limits, &mut out)?;
        }
    }
    Ok(out.into_iter().collect())
}

/// Expand a matched split value `v` into full tuples.
/// Degree 4: `v = pow2 + ta`, `target − v = pow3 + tb`.
/// Degree 5: `v = pow2 + pow3 + ta`, `target − v = tb + tc`.
fn reconstruct_tuples<W: Word>(
    idx: &DpIndex<W>,
    target: W,
    r: u32,
    v: W,
    out: &mut std::collections::BTreeSet<DpTuple>,
) -> Result<(), CertifyError> {
    let m = idx.m;
    let w = target.sub_mod(v, m);
    let overflow = || CertifyError::ResourceExceeded {
        what: format!("more than {TUPLE_CAP} doubly-primitive tuples"),
    };
    match r {
        4 => {
            let mut lefts = Vec::new();
            for &a in &idx.t2 {
                let ta = v.sub_mod(a, m);
                if idx.contains_t(ta) {
                    lefts.push((a, ta));
                }
            }
            for &b in &idx.t3 {
                let tb = w.sub_mod(b, m);
                if !idx.contains_t(tb) {
                    continue;
                }
                for &(a, ta) in &lefts {
                    let mut tail = [ta.to_u128(), tb.to_u128()];
                    tail.sort_unstable();
                    out.insert(DpTuple {
                        pow2: a.to_u128(),
                        pow3: b.to_u128(),
                        tail: tail.to_vec(),
                    });
                    if out.len() > TUPLE_CAP {
                        return Err(overflow());
                    }
                }
            }
        }
        5 => {
            let mut rights = Vec::new();
            for &tb in &idx.t {
                let tc = w.sub_mod(tb, m);
                if tb <= tc && idx.contains_t(tc) {
                    rights.push((tb, tc));
                }
            }
            if rights.is_empty() {
                return Ok(());
            }
            for &a in &idx.t2 {
                let va = v.sub_mod(a, m);
                for &b in &idx.t3 {
                    let ta = va.sub_mod(b, m);
                    if !idx.contains_t(ta) {
                        continue;
                    }
                    for &(tb, tc) in &rights {
                        let mut tail = [ta.to_u128(), tb.to_u128(), tc.to_u128()];
                        tail.sort_unstable();
                        out.insert(DpTuple {
                            pow2: a.to_u128(),
                            pow3: b.to_u128(),
                            tail: tail.to_vec(),
                        });
                        if out.len() > TUPLE_CAP {
                            return Err(overflow());
                        }
                    }
                }
            }
        }
        _ => unreachable!("reconstruct_tuples only serves degrees 4 and 5"),
    }
    Ok(())
}

/// Degrees ≥ 6: DFS over the tail with reachability pruning.
fn enumerate_exhaustive<W: Word>(
    idx: &DpIndex<W>,
    target: W,
    r: u32,
    limits: &Limits,
    out: &mut std::collections::BTreeSet<DpTuple>,
) -> Result<(), CertifyError> {
    // reach[k][v]: v is a sum of exactly k elements of T
    let m128 = idx.m.to_u128();
    let tail_len = (r - 2) as usize;
    let work = m128.saturating_mul(idx.t.len() as u128) * r as u128;
    if m128 > limits.enumeration_cap || work > 1 << 34 {
        return Err(CertifyError::ResourceExceeded {
            what: format!("degree-{r} exhaustive enumeration at m={m128}"),
        });
    }
    let m = m128 as usize;
    let mut reach: Vec<Vec<bool>> = vec![vec![false; m]; tail_len + 1];
    reach[0][0] = true;
    for k in 1..=tail_len {
        for v in 0..m {
            if reach[k - 1][v] {
                for &x in &idx.t {
                    let s = v + x.to_u128() as usize;
                    reach[k][if s >= m { s - m } else { s }] = true;
                }
            }
        }
    }
    fn dfs<W: Word>(
        idx: &DpIndex<W>,
        reach: &[Vec<bool>],
        remaining: W,
        k: usize,
        min_idx: usize,
        tail: &mut Vec<u128>,
        pow2: u128,
        pow3: u128,
        out: &mut std::collections::BTreeSet<DpTuple>,
    ) -> Result<(), CertifyError> {
        if k == 0 {
            if remaining.to_u128() == 0 {
                out.insert(DpTuple {
                    pow2,
                    pow3,
                    tail: tail.clone(),
                });
                if out.len() > TUPLE_CAP {
                    return Err(CertifyError::ResourceExceeded {
                        what: format!("more than {TUPLE_CAP} doubly-primitive tuples"),
                    });
                }
            }
            return Ok(());
        }
        for (i, &x) in idx.t.iter().enumerate().skip(min_idx) {
            let rest = remaining.sub_mod(x, idx.m);
            if reach[k - 1][rest.to_u128() as usize] {
                tail.push(x.to_u128());
                dfs(idx, reach, rest, k - 1, i, tail, pow2, pow3, out)?;
                tail.pop();
            }
        }
        Ok(())
    }
    for &a in &idx.t2 {
        for &b in &idx.t3 {
            let rem = target.sub_mod(a.add_mod(b, idx.m), idx.m);
            if reach[tail_len][rem.to_u128() as usize] {
                let mut tail = Vec::with_capacity(tail_len);
                dfs(
                    idx,
                    &reach,
                    rem,
                    tail_len,
                    0,
                    &mut tail,
                    a.to_u128(),
                    b.to_u128(),
                    out,
                )?;
            }
        }
    }
    Ok(())
}

/// Public entry: true iff `residue` has **no** doubly-primitive length-r
/// representation mod the context's modulus, decided exactly.
pub fn dp_refute_direct(
    ctx: &ModContext,
    residue: u128,
    r: u32,
    limits: &Limits,
) -> Result<bool, CertifyError> {
    let idx = AnyIndex::new(ctx);
    dp_refute_with_index(&idx, residue, r, limits)
}

pub(crate) fn dp_refute_with_index(
    idx: &AnyIndex,
    residue: u128,
    r: u32,
    limits: &Limits,
) -> Result<bool, CertifyError> {
    match idx {
        AnyIndex::W64(i) => Ok(!has_dp_rep(i, u64::from_u128(residue), r, limits)?),
        AnyIndex::W128(i) => Ok(!has_dp_rep(i, residue, r, limits)?),
    }
}

/// Public entry: the complete duplicate-free list of doubly-primitive
/// length-r tuples of `residue` mod the context's modulus.
pub fn dp_enumerate(
    ctx: &ModContext,
    residue: u128,
    r: u32,
    limits: &Limits,
) -> Result<Vec<DpTuple>, CertifyError> {
    let idx = AnyIndex::new(ctx);
    dp_enumerate_with_index(&idx, residue, r, limits)
}

pub(crate) fn dp_enumerate_with_index(
    idx: &AnyIndex,
    residue: u128,
    r: u32,
    limits: &Limits,
) -> Result<Vec<DpTuple>, CertifyError> {
    match idx {
        AnyIndex::W64(i) => enumerate_dp(i, u64::from_u128(residue), r, limits),
        AnyIndex::W128(i) => enumerate_dp(i, residue, r, limits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> Limits {
        Limits::default()
    }

    /// Nested-loop oracle over T2 × T3 × T^(r−2).
    fn oracle_has_dp(ctx: &ModContext, residue: u128, r: u32) -> bool {
        let m = ctx.modulus();
        match r {
            2 => ctx.residues_pow2().iter().any(|&a| {
                ctx.residues_pow3()
                    .iter()
                    .any(|&b| (a + b) % m == residue)
            }),
            3 => ctx.residues_pow2().iter().any(|&a| {
                ctx.residues_pow3().iter().any(|&b| {
                    ctx.residues()
                        .iter()
                        .any(|&c| (a + b + c) % m == residue)
                })
            }),
            _ => unimplemented!(),
        }
    }

    #[test]
    fn radix_sort_matches_std() {
        let mut v: Vec<u64> = (0..20000u64)
            .map(|i| i.wrapping_mul(0x9e3779b97f4a7c15))
            .collect();
        let mut w = v.clone();
        v.sort_unstable();
        radix_sort_u64(&mut w);
        assert_eq!(v, w);
    }

    #[test]
    fn refute_matches_oracle_small_moduli() {
        for m in [2u128, 5, 8, 24, 97, 144, 252] {
            let ctx = ModContext::build(m).unwrap();
            for r in [2u32, 3] {
                for residue in 0..m {
                    let got = dp_refute_direct(&ctx, residue, r, &limits()).unwrap();
                    let oracle = !oracle_has_dp(&ctx, residue, r);
                    assert_eq!(got, oracle, "m={m} r={r} residue={residue}");
                }
            }
        }
    }

    #[test]
    fn residue_252_103_is_refuted_at_degree_2() {
        let ctx = ModContext::build(252).unwrap();
        assert!(dp_refute_direct(&ctx, 103, 2, &limits()).unwrap());
        assert!(!dp_refute_direct(&ctx, 5, 2, &limits()).unwrap());
    }

    #[test]
    fn genuine_rep_is_never_refuted() {
        // 5 = 2 + 3 reduces into every modulus
        for m in [7u128, 24, 1000, 1099511627760] {
            let ctx = ModContext::build(m).unwrap();
            assert!(!dp_refute_direct(&ctx, 5 % m, 2, &limits()).unwrap(), "m={m}");
        }
    }

    #[test]
    fn enumerate_includes_the_obvious_pair() {
        let ctx = ModContext::build(1000).unwrap();
        let tuples = dp_enumerate(&ctx, 5, 2, &limits()).unwrap();
        assert!(tuples
            .iter()
            .any(|t| t.pow2 == 2 && t.pow3 == 3 && t.tail.is_empty()));
    }

    #[test]
    fn enumerate_empty_iff_refuted() {
        for m in [24u128, 97, 252, 500] {
            let ctx = ModContext::build(m).unwrap();
            for r in [2u32, 3] {
                for residue in (0..m).step_by(7) {
                    let refuted = dp_refute_direct(&ctx, residue, r, &limits()).unwrap();
                    let tuples = dp_enumerate(&ctx, residue, r, &limits()).unwrap();
                    assert_eq!(refuted, tuples.is_empty(), "m={m} r={r} residue={residue}");
                    for t in &tuples {
                        assert_eq!(t.sum_mod(m), residue);
                    }
                }
            }
        }
    }

    #[test]
    fn enumerate_counts_match_nested_loop_small() {
        // count multisets the oracle way for r=3: (a, b, c) with the single
        // tail element c, so tuples are (a, b, [c]) exactly
        for m in [24u128, 97, 180] {
            let ctx = ModContext::build(m).unwrap();
            for residue in 0..m.min(60) {
                let mut oracle = std::collections::BTreeSet::new();
                for &a in ctx.residues_pow2() {
                    for &b in ctx.residues_pow3() {
                        let c = (residue + 2 * m - (a + b) % m) % m;
                        if ctx.contains(c) {
                            oracle.insert((a, b, c));
                        }
                    }
                }
                let got = dp_enumerate(&ctx, residue, 3, &limits()).unwrap();
                assert_eq!(got.len(), oracle.len(), "m={m} residue={residue}");
            }
        }
    }

    #[test]
    fn degree4_matches_exhaustive_small() {
        for m in [24u128, 97, 252] {
            let ctx = ModContext::build(m).unwrap();
            let idx = AnyIndex::new(&ctx);
            for residue in 0..m {
                let via_meet = dp_refute_with_index(&idx, residue, 4, &limits()).unwrap();
                // oracle: S1 = T2 ⊕ T, S2 = T3 ⊕ T nested loops
                let mut hit = false;
                'o: for &a in ctx.residues_pow2() {
                    for &x in ctx.residues() {
                        let v = (a + x) % m;
                        let w = (residue + 2 * m - v) % m;
                        for &b in ctx.residues_pow3() {
                            let y = (w + m - b % m) % m;
                            if ctx.contains(y) {
                                hit = true;
                                break 'o;
                            }
                        }
                    }
                }
                assert_eq!(via_meet, !hit, "m={m} residue={residue}");
            }
        }
    }

    #[test]
    fn degree5_enumerate_small_modulus() {
        let ctx = ModContext::build(97).unwrap();
        for residue in 0..97 {
            let tuples = dp_enumerate(&ctx, residue, 5, &limits()).unwrap();
            for t in &tuples {
                assert_eq!(t.sum_mod(97), residue);
                assert_eq!(t.tail.len(), 3);
                assert!(t.tail.windows(2).all(|w| w[0] <= w[1]));
                assert!(ctx.residues_pow2().binary_search(&t.pow2).is_ok());
                assert!(ctx.residues_pow3().binary_search(&t.pow3).is_ok());
            }
            let refuted = dp_refute_direct(&ctx, residue, 5, &limits()).unwrap();
            assert_eq!(refuted, tuples.is_empty());
        }
    }

    #[test]
    #[ignore = "sizing probe for the large lifted refutation"]
    fn probe_big_m0_degree5_enumeration() {
        let m0: u128 = 4441033200890842920;
        let n: u128 = 326552783;
        let t0 = std::time::Instant::now();
        let ctx = ModContext::build(m0).unwrap();
        eprintln!(
            "ctx built in {:?}: t={} t2={} t3={}",
            t0.elapsed(),
            ctx.t(),
            ctx.t2(),
            ctx.t3()
        );
        let lim = Limits::with_memory_budget(3 << 30);
        let t1 = std::time::Instant::now();
        let tuples = dp_enumerate(&ctx, n % m0, 5, &lim).unwrap();
        eprintln!("enumeration took {:?}, {} tuples", t1.elapsed(), tuples.len());
        for t in &tuples {
            eprintln!("  {} {} {:?}", t.pow2, t.pow3, t.tail);
            assert_eq!(t.sum_mod(m0), n % m0);
        }
    }

    #[test]
    fn degree6_exhaustive_agrees_with_bitset_path() {
        let ctx = ModContext::build(144).unwrap();
        for residue in 0..144 {
            let got = dp_refute_direct(&ctx, residue, 6, &limits()).unwrap();
            let tuples = dp_enumerate(&ctx, residue, 6, &limits()).unwrap();
            assert_eq!(got, tuples.is_empty(), "residue={residue}");
        }
    }
}
