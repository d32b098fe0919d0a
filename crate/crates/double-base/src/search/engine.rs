//! The meet-in-the-middle engine behind representation search and censuses.
//!
//! Candidates are {2,3}-integers bounded by `max_abs_summand`. A length-r
//! target is split into halves of ⌈r/2⌉ and ⌊r/2⌋ summands; each half ranges
//! over a *half-sum set* whose values are capped at the partial-sum bound.
//! The half-sum sets are:
//!
//! * `k = 1`: the candidates themselves;
//! * `k = 2`: all pairwise sums (kept in full — there are only a few million
//!   pairs — with capped views taken as subslices);
//! * `k = 3`: built exactly from unordered triples `x ≤ y ≤ z` by looping
//!   over pairs and window-searching the third summand, so triples of huge
//!   near-cancelling summands are not lost to intermediate caps;
//! * `k = 4`: heuristic (capped pair sums of capped pair sums), used only
//!   for lengths ≥ 7.
//!
//! Degree-3 sums are generated in value bands when the full set would
//! exceed the memory budget, so census marking degrades to multi-pass
//! instead of failing.

use super::SearchError;
use crate::limits::Limits;
use crate::rep::{Representation, Sign, TwoThreeInteger};
use num_bigint::BigInt;
use std::cmp::Ordering;

/// Largest magnitude the engine accepts for summands and partial sums;
/// keeps every window computation inside i64.
pub(crate) const VALUE_LIMIT: u64 = 1 << 61;

/// All {2,3}-integers with magnitude ≤ `bound`, in two orders.
#[derive(Debug)]
pub(crate) struct SummandSet {
    /// Ascending by signed value (for windows).
    pub by_value: Vec<i64>,
    /// Ascending by the candidate order `(|value|, sign)` (for witnesses).
    pub by_key: Vec<i64>,
}

/// Candidate order: ascending `(|value|, sign, a, b)`; the exponents never
/// actually break ties because `|value|` determines them.
pub(crate) fn key_cmp(x: i64, y: i64) -> Ordering {
    x.unsigned_abs()
        .cmp(&y.unsigned_abs())
        .then(x.signum().cmp(&y.signum()))
}

impl SummandSet {
    pub fn new(bound: u64) -> Self {
        let bound = bound.min(VALUE_LIMIT) as i64;
        let mut mags: Vec<i64> = Vec::new();
        let mut p3: i64 = 1;
        loop {
            let mut v = p3;
            loop {
                mags.push(v);
                match v.checked_mul(2) {
                    Some(next) if next <= bound => v = next,
                    _ => break,
                }
            }
            match p3.checked_mul(3) {
                Some(next) if next <= bound => p3 = next,
                _ => break,
            }
        }
        let mut by_value: Vec<i64> = mags.iter().flat_map(|&v| [v, -v]).collect();
        by_value.sort_unstable();
        let mut by_key = by_value.clone();
        by_key.sort_unstable_by(|&x, &y| key_cmp(x, y));
        SummandSet { by_value, by_key }
    }
}

/// `slice[lo..hi]` indices such that values lie in `[vlo, vhi]`.
fn window(sorted: &[i64], vlo: i64, vhi: i64) -> &[i64] {
    if vlo > vhi {
        return &[];
    }
    let lo = sorted.partition_point(|&x| x < vlo);
    let hi = sorted.partition_point(|&x| x <= vhi);
    &sorted[lo..hi]
}

fn contains(sorted: &[i64], v: i64) -> bool {
    sorted.binary_search(&v).is_ok()
}

/// Degree-3 sums, either fully materialized or generated in value bands.
#[derive(Debug)]
enum Triples {
    Full(Vec<i64>),
    Banded { band_width: i64 },
}

#[derive(Debug)]
pub(crate) struct SearchEngine {
    pub cands: SummandSet,
    /// Partial sums are capped at this magnitude.
    pub partial_cap: i64,
    pub max_abs_summand: i64,
    /// All pairwise sums, uncapped, sorted and deduplicated.
    v2_full: Vec<i64>,
    triples: std::sync::OnceLock<Triples>,
    limits: Limits,
}

impl SearchEngine {
    pub fn new(
        max_abs_summand: u64,
        partial_cap: u64,
        limits: Limits,
    ) -> Result<Self, SearchError> {
        if max_abs_summand == 0 || partial_cap == 0 {
            return Err(SearchError::InvalidBounds(
                "bounds must be positive".into(),
            ));
        }
        if max_abs_summand > i64::MAX as u64 {
            return Err(SearchError::BoundOverflow {
                what: format!("max_abs_summand {max_abs_summand} exceeds the signed 64-bit range"),
            });
        }
        if partial_cap > 2 * VALUE_LIMIT {
            return Err(SearchError::BoundOverflow {
                what: format!("partial-sum cap {partial_cap} exceeds the engine's 2^62 window range"),
            });
        }
        let cands = SummandSet::new(max_abs_summand);
        let mut v2_full: Vec<i64> = Vec::new();
        let vals = &cands.by_value;
        for (i, &x) in vals.iter().enumerate() {
            for &y in &vals[i..] {
                v2_full.push(x + y);
            }
        }
        v2_full.sort_unstable();
        v2_full.dedup();
        Ok(SearchEngine {
            cands,
            partial_cap: partial_cap.min(2 * VALUE_LIMIT) as i64,
            max_abs_summand: max_abs_summand.min(VALUE_LIMIT) as i64,
            v2_full,
            triples: std::sync::OnceLock::new(),
            limits,
        })
    }

    /// Candidates within the partial cap (a half of one summand is itself a
    /// partial sum).
    pub fn v1(&self) -> &[i64] {
        window(&self.cands.by_value, -self.partial_cap, self.partial_cap)
    }

    /// Capped pair sums: a contiguous view of the full pair-sum set.
    pub fn v2(&self) -> &[i64] {
        window(&self.v2_full, -self.partial_cap, self.partial_cap)
    }

    pub(crate) fn v2_uncapped(&self) -> &[i64] {
        &self.v2_full
    }

    /// Estimate of the capped triple-sum count, by sampling third-summand
    /// windows over the pair loop.
    fn estimate_triples(&self) -> u64 {
        let vals = &self.cands.by_value;
        let n = vals.len();
        let step = (n * n / 20_000).max(1);
        let mut sampled: u64 = 0;
        let mut samples: u64 = 0;
        let mut idx = 0usize;
        while idx < n * n {
            let (i, j) = (idx / n, idx % n);
            if j >= i {
                let p = vals[i] + vals[j];
                let lo = (-self.partial_cap).saturating_sub(p).max(vals[j]);
                let hi = self.partial_cap.saturating_sub(p);
                sampled += window(vals, lo, hi).len() as u64;
                samples += 1;
            }
            idx += step;
        }
        if samples == 0 {
            return 0;
        }
        let total_pairs = (n as u64 * (n as u64 + 1)) / 2;
        sampled * total_pairs / samples
    }

    /// Generate the sorted, deduplicated degree-3 sums with values in
    /// `[vlo, vhi]` (all of them: the pair loop carries no intermediate cap).
    pub(crate) fn gen_triples_in(&self, vlo: i64, vhi: i64) -> Vec<i64> {
        use rayon::prelude::*;
        let vals = &self.cands.by_value;
        let vlo = vlo.max(-self.partial_cap);
        let vhi = vhi.min(self.partial_cap);
        if vlo > vhi {
            return Vec::new();
        }
        let mut out: Vec<i64> = vals
            .par_iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut local = Vec::new();
                for &y in &vals[i..] {
                    let p = x + y;
                    let lo = vlo.saturating_sub(p).max(y);
                    let hi = vhi.saturating_sub(p);
                    for &z in window(vals, lo, hi) {
                        local.push(p + z);
                    }
                }
                local
            })
            .reduce(Vec::new, |mut a, mut b| {
                a.append(&mut b);
                a
            });
        out.sort_unstable();
        out.dedup();
        out
    }

    fn triples(&self) -> &Triples {
        self.triples.get_or_init(|| {
            let est = self.estimate_triples();
            let budget_elems = self.limits.memory_budget_bytes / 16;
            if est <= budget_elems {
                Triples::Full(self.gen_triples_in(-self.partial_cap, self.partial_cap))
            } else {
                let bands = (est / budget_elems + 1) as i64;
                let width = (2 * self.partial_cap) / bands + 1;
                Triples::Banded { band_width: width }
            }
        })
    }

    /// Run `f` over the sorted degree-3 sums, band by band (a single band
    /// when the whole set fits the budget). `f` gets each band's value range
    /// and its sorted contents.
    pub(crate) fn for_each_triple_band(&self, mut f: impl FnMut(i64, i64, &[i64])) {
        match self.triples() {
            Triples::Full(v) => f(-self.partial_cap, self.partial_cap, v),
            Triples::Banded { band_width } => {
                let mut lo = -self.partial_cap;
                while lo <= self.partial_cap {
                    let hi = lo.saturating_add(band_width - 1).min(self.partial_cap);
                    let band = self.gen_triples_in(lo, hi);
                    f(lo, hi, &band);
                    lo = match lo.checked_add(*band_width) {
                        Some(v) => v,
                        None => break,
                    };
                }
            }
        }
    }

    /// Membership in the exact degree-3 sums. Requires the materialized set.
    fn v3_full(&self) -> Result<&[i64], SearchError> {
        match self.triples() {
            Triples::Full(v) => Ok(v),
            Triples::Banded { .. } => Err(SearchError::ResourceExceeded {
                what: "degree-3 half-sum set exceeds the memory budget; \
                       only banded census marking is available at this size"
                    .into(),
            }),
        }
    }

    /// Heuristic degree-4 sums: capped pair sums of capped pair sums.
    fn v4_heuristic(&self) -> Vec<i64> {
        let v2 = self.v2();
        let mut out = Vec::new();
        for (i, &x) in v2.iter().enumerate() {
            let lo = (-self.partial_cap).saturating_sub(x).max(x);
            let hi = self.partial_cap.saturating_sub(x);
            let lo_idx = i + v2[i..].partition_point(|&y| y < lo);
            let hi_idx = i + v2[i..].partition_point(|&y| y <= hi);
            for &y in &v2[lo_idx..hi_idx] {
                out.push(x + y);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Does `n` have a length-exactly-`r` representation visible to the
    /// bounded half-sum split? (One-sided: `false` only means "not found".)
    pub fn exists_exact(&self, n: i64, r: u32) -> Result<bool, SearchError> {
        Ok(!self.matches(n, r, 1)?.is_empty())
    }

    /// Matched half-sum pairs `(a, b)` with `a + b = n`, `a` from the
    /// ⌈r/2⌉-half and `b` from the ⌊r/2⌋-half, in ascending `b` order,
    /// up to `max_matches`.
    fn matches(&self, n: i64, r: u32, max_matches: usize) -> Result<Vec<(i64, i64)>, SearchError> {
        let mut out = Vec::new();
        match r {
            0 => {}
            1 => {
                if contains(self.v1(), n) {
                    out.push((n, 0));
                }
            }
            2 => {
                // 1 + 1
                for &b in self.v1() {
                    if contains(self.v1(), n - b) {
                        out.push((n - b, b));
                        if out.len() >= max_matches {
                            break;
                        }
                    }
                }
            }
            3 => {
                // 2 + 1
                for &b in self.v1() {
                    if contains(self.v2(), n - b) {
                        out.push((n - b, b));
                        if out.len() >= max_matches {
                            break;
                        }
                    }
                }
            }
            4 => {
                // 2 + 2
                for &b in self.v2() {
                    if contains(self.v2(), n - b) {
                        out.push((n - b, b));
                        if out.len() >= max_matches {
                            break;
                        }
                    }
                }
            }
            5 => {
                // 3 + 2: probe the triple bands with the sorted pair targets
                let v2 = self.v2();
                let mut probes: Vec<(i64, i64)> = v2
                    .iter()
                    .map(|&b| (n.saturating_sub(b), b))
                    .collect();
                probes.sort_unstable();
                self.for_each_triple_band(|blo, bhi, band| {
                    if out.len() >= max_matches {
                        return;
                    }
                    let lo = probes.partition_point(|&(a, _)| a < blo);
                    for &(a, b) in &probes[lo..] {
                        if a > bhi {
                            break;
                        }
                        if contains(band, a) {
                            out.push((a, b));
                            if out.len() >= max_matches {
                                break;
                            }
                        }
                    }
                });
                // restore deterministic ascending-b order
                out.sort_unstable_by_key(|&(_, b)| b);
            }
            6 => {
                // 3 + 3
                let v3 = self.v3_full()?;
                for &b in v3 {
                    if contains(v3, n - b) {
                        out.push((n - b, b));
                        if out.len() >= max_matches {
                            break;
                        }
                    }
                }
            }
            7 | 8 => {
                // 4 + 3 / 4 + 4 with the heuristic degree-4 set
                let v4 = self.v4_heuristic();
                let other: &[i64] = if r == 7 { self.v3_full()? } else { &v4 };
                for &b in other {
                    if contains(&v4, n - b) {
                        out.push((n - b, b));
                        if out.len() >= max_matches {
                            break;
                        }
                    }
                }
            }
            _ => {
                return Err(SearchError::InvalidLength { r });
            }
        }
        Ok(out)
    }

    /// Lexicographically minimal `k`-summand multiset (in the candidate
    /// order) for value `v`, by DFS with exact reachability pruning for
    /// k ≤ 3. For k ≥ 4 the decomposition recurses through pair splits and
    /// is deterministic but not necessarily globally minimal.
    fn decompose(&self, v: i64, k: u32, min_key_idx: usize) -> Option<Vec<i64>> {
        let by_key = &self.cands.by_key;
        match k {
            0 => (v == 0).then(Vec::new),
            1 => by_key[min_key_idx..]
                .iter()
                .find(|&&s| s == v)
                .map(|&s| vec![s]),
            2 | 3 => {
                let reach: &[i64] = if k == 2 {
                    &self.cands.by_value
                } else {
                    self.v2_uncapped()
                };
                for (idx, &s) in by_key.iter().enumerate().skip(min_key_idx) {
                    if contains(reach, v - s) {
                        if let Some(mut rest) = self.decompose(v - s, k - 1, idx) {
                            let mut out = vec![s];
                            out.append(&mut rest);
                            return Some(out);
                        }
                    }
                }
                None
            }
            _ => {
                // split k = 2 + (k−2) through the uncapped pair sums
                for (idx, &s) in by_key.iter().enumerate().skip(min_key_idx) {
                    let rest_needed = v - s;
                    let reachable = match k - 1 {
                        3 => {
                            // s2+s3+s4 exists iff some candidate pairs with a pair
                            self.cands
                                .by_value
                                .iter()
                                .any(|&w| contains(self.v2_uncapped(), rest_needed - w))
                        }
                        _ => true,
                    };
                    if reachable {
                        if let Some(mut rest) = self.decompose(rest_needed, k - 1, idx) {
                            let mut out = vec![s];
                            out.append(&mut rest);
                            return Some(out);
                        }
                    }
                }
                None
            }
        }
    }

    /// Find a length-exactly-`r` representation of `n`, returning the
    /// stable witness: over the scanned half-sum matches (capped at
    /// `MATCH_SCAN_CAP`, each half decomposed by the deterministic DFS), the
    /// multiset minimizing the largest summand in the candidate order, then
    /// the next largest, and so on.
    pub fn find_exact(&self, n: i64, r: u32) -> Result<Option<Representation>, SearchError> {
        const MATCH_SCAN_CAP: usize = 10_000;
        if r == 0 {
            return Err(SearchError::InvalidLength { r });
        }
        let rl = r.div_ceil(2);
        let rr = r / 2;
        let matches = self.matches(n, r, MATCH_SCAN_CAP)?;
        let mut best: Option<Vec<i64>> = None;
        for (a, b) in matches {
            let Some(da) = self.decompose(a, rl, 0) else {
                continue;
            };
            let mut multiset = da;
            if rr > 0 {
                let Some(db) = self.decompose(b, rr, 0) else {
                    continue;
                };
                multiset.extend(db);
            }
            multiset.sort_unstable_by(|&x, &y| key_cmp(x, y));
            let better = match &best {
                None => true,
                Some(cur) => multiset_key_lt(&multiset, cur),
            };
            if better {
                best = Some(multiset);
            }
        }
        match best {
            None => Ok(None),
            Some(vals) => {
                let summands: Vec<TwoThreeInteger> =
                    vals.iter().map(|&v| to_tti(v)).collect();
                let rep = Representation::new(BigInt::from(n), summands)?;
                debug_assert_eq!(rep.len() as u32, r);
                Ok(Some(rep))
            }
        }
    }

    /// `find_exact`, falling back to lengthening a shorter representation so
    /// success is monotone in `r`.
    pub fn find(&self, n: i64, r: u32) -> Result<Option<Representation>, SearchError> {
        if let Some(rep) = self.find_exact(n, r)? {
            return Ok(Some(rep));
        }
        if r >= 2 {
            if let Some(shorter) = self.find(n, r - 1)? {
                // lengthen the summand with the smallest magnitude whose
                // tripled value still fits the summand bound
                let mut order: Vec<usize> = (0..shorter.len()).collect();
                order.sort_by(|&i, &j| {
                    shorter.summands()[i]
                        .order_key_cmp(&shorter.summands()[j])
                        .then(i.cmp(&j))
                });
                for idx in order {
                    let s = shorter.summands()[idx];
                    if let Some(mag) = s.magnitude_u128() {
                        if 3 * mag <= self.max_abs_summand as u128 {
                            return Ok(Some(shorter.lengthen(idx)?));
                        }
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Compare two equal-length multisets (already sorted ascending by the
/// candidate order) largest-summand-first: the preferred witness is the one
/// whose biggest summand is smallest in the candidate order, then the next
/// biggest, and so on. This is what makes `5 = 2 + 3` beat `5 = 6 − 1`.
fn multiset_key_lt(a: &[i64], b: &[i64]) -> bool {
    for (&x, &y) in a.iter().rev().zip(b.iter().rev()) {
        match key_cmp(x, y) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Convert a nonzero `±2^a 3^b` machine word into its canonical form.
pub(crate) fn to_tti(v: i64) -> TwoThreeInteger {
    debug_assert!(v != 0);
    let sign = if v < 0 { Sign::Neg } else { Sign::Pos };
    let mut mag = v.unsigned_abs();
    let a = mag.trailing_zeros();
    mag >>= a;
    let mut b = 0;
    while mag % 3 == 0 {
        mag /= 3;
        b += 1;
    }
    debug_assert_eq!(mag, 1, "summand {v} is not a {{2,3}}-integer");
    TwoThreeInteger::new(sign, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summand_set_small_bound() {
        let s = SummandSet::new(12);
        assert_eq!(s.by_value, vec![-12, -9, -8, -6, -4, -3, -2, -1, 1, 2, 3, 4, 6, 8, 9, 12]);
        assert_eq!(&s.by_key[..6], &[-1, 1, -2, 2, -3, 3]);
    }

    #[test]
    fn engine_finds_trivial_reps() {
        let eng = SearchEngine::new(1 << 20, 1 << 21, Limits::default()).unwrap();
        let rep = eng.find_exact(5, 2).unwrap().unwrap();
        assert_eq!(
            rep.summands().iter().map(|s| s.value()).collect::<Vec<_>>(),
            vec![BigInt::from(2), BigInt::from(3)]
        );
        assert!(eng.find_exact(103, 2).unwrap().is_none());
        let rep103 = eng.find_exact(103, 3).unwrap().unwrap();
        assert_eq!(rep103.target(), &BigInt::from(103));
        assert_eq!(rep103.len(), 3);
    }

    #[test]
    fn triple_band_generation_matches_full() {
        let eng = SearchEngine::new(1 << 12, 200, Limits::default()).unwrap();
        let full = eng.gen_triples_in(-200, 200);
        let mut banded = Vec::new();
        let mut lo = -200;
        while lo <= 200 {
            banded.extend(eng.gen_triples_in(lo, lo + 49));
            lo += 50;
        }
        banded.sort_unstable();
        banded.dedup();
        assert_eq!(full, banded);
    }

    #[test]
    fn triples_include_huge_cancellations() {
        // 2^40 + (−3·2^38) + z sums small even though 2^40 − 3·2^38 = 2^38
        // exceeds no cap; the generator must not prune the intermediate pair
        let eng = SearchEngine::new(1 << 41, 1 << 40, Limits::default()).unwrap();
        let t = eng.gen_triples_in(0, 0);
        assert!(t.contains(&0));
    }
}
