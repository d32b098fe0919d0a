//! Positive-direction search: find double-base representations and run
//! range censuses.
//!
//! Everything here is one-sided by construction. The search is exhaustive
//! only within its bounds — summand magnitudes capped at
//! [`SearchBounds::max_abs_summand`] and half-sums capped at twice the
//! target — so an integer missing from a census or a `None` from
//! [`find_representation`] means *not found within bounds*, never a proof
//! of non-representability. Proofs are the `certify` module's job.

mod engine;
pub mod checkpoint;

pub(crate) use engine::SearchEngine;

use crate::limits::Limits;
use crate::rep::{canonicalize, Representation};
use checkpoint::{CheckpointError, CheckpointFile, CheckpointHeader, ChunkRecord};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Errors from the search engines.
#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("bound overflow: {what}")]
    BoundOverflow { what: String },
    #[error("unsupported representation length {r}")]
    InvalidLength { r: u32 },
    #[error("resource cap exceeded: {what}")]
    ResourceExceeded { what: String },
    #[error("no representation of length ≤ {cap} found for {n} within bounds")]
    SpanCapExceeded { n: BigInt, cap: u32 },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Rep(#[from] crate::rep::RepError),
}

/// Bounds for the meet-in-the-middle search.
///
/// `max_abs_summand` caps individual summand magnitudes (default `2^61`).
/// `max_abs_partial` caps half-sum magnitudes; the default, chosen per
/// target, is twice the target's magnitude. The partial cap is a
/// completeness-affecting heuristic and is surfaced in every census report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub max_abs_summand: u64,
    /// `None` means "2 × |target|, per target".
    pub max_abs_partial: Option<u64>,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_abs_summand: 1 << 61,
            max_abs_partial: None,
        }
    }
}

impl SearchBounds {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.max_abs_summand == 0 || self.max_abs_partial == Some(0) {
            return Err(SearchError::InvalidBounds("bounds must be positive".into()));
        }
        if self.max_abs_summand > i64::MAX as u64 {
            return Err(SearchError::BoundOverflow {
                what: "max_abs_summand exceeds 2^63 − 1".into(),
            });
        }
        Ok(())
    }

    /// The effective partial-sum cap for a target of magnitude `target_abs`.
    pub fn partial_cap(&self, target_abs: u64) -> u64 {
        self.max_abs_partial
            .unwrap_or_else(|| (2 * target_abs).max(2))
    }
}

/// True iff `n` is a {2,3}-integer. Exact and unbounded.
pub fn is_length1(n: &BigInt) -> bool {
    canonicalize(n).is_some()
}

fn target_to_i64(n: &BigInt) -> Result<i64, SearchError> {
    let abs = n.abs().to_u64().filter(|&v| v <= engine_value_limit());
    match (abs, n.to_i64()) {
        (Some(_), Some(v)) => Ok(v),
        _ => Err(SearchError::BoundOverflow {
            what: format!("target {n} exceeds the 2^61 search range"),
        }),
    }
}

pub(crate) fn engine_value_limit() -> u64 {
    engine::VALUE_LIMIT
}

/// Find a length-exactly-`r` double-base representation of `n` within
/// `bounds`, or `None` if the bounded deterministic search does not reach
/// one. Absence is *not* a proof of non-existence.
///
/// The search splits `r` into ⌈r/2⌉ + ⌊r/2⌋ half-sums; candidate order is
/// ascending `(|value|, sign, a, b)`, and the returned witness is the stable
/// minimum over the scanned matches in that order. If the exact-length
/// search fails, a shorter representation is lengthened (a summand `s` is
/// replaced by `3s − 2s`), which makes success monotone in `r`.
pub fn find_representation(
    n: &BigInt,
    r: u32,
    bounds: &SearchBounds,
) -> Result<Option<Representation>, SearchError> {
    find_representation_with_limits(n, r, bounds, Limits::default())
}

pub fn find_representation_with_limits(
    n: &BigInt,
    r: u32,
    bounds: &SearchBounds,
    limits: Limits,
) -> Result<Option<Representation>, SearchError> {
    bounds.validate()?;
    if r == 0 {
        return Err(SearchError::InvalidLength { r });
    }
    let n_small = target_to_i64(n)?;
    let eng = SearchEngine::new(
        bounds.max_abs_summand,
        bounds.partial_cap(n_small.unsigned_abs()),
        limits,
    )?;
    eng.find(n_small, r)
}

/// The smallest `r ≤ cap` for which the bounded search finds a
/// representation of `n`, with the witness. An upper bound on the span.
///
/// The length-1 case is decided exactly (it is just the {2,3}-integer
/// membership test); lengths ≥ 2 use the bounded search.
pub fn span_upper(
    n: &BigInt,
    bounds: &SearchBounds,
    cap: u32,
) -> Result<(u32, Representation), SearchError> {
    span_upper_with_limits(n, bounds, cap, Limits::default())
}

pub fn span_upper_with_limits(
    n: &BigInt,
    bounds: &SearchBounds,
    cap: u32,
    limits: Limits,
) -> Result<(u32, Representation), SearchError> {
    bounds.validate()?;
    if n.is_zero() {
        return Err(SearchError::InvalidBounds(
            "0 has no length-1 representation; its span is 2 by convention".into(),
        ));
    }
    if let Some(t) = canonicalize(n) {
        return Ok((1, Representation::new(n.clone(), vec![t])?));
    }
    let n_small = target_to_i64(n)?;
    let eng = SearchEngine::new(
        bounds.max_abs_summand,
        bounds.partial_cap(n_small.unsigned_abs()),
        limits,
    )?;
    for r in 2..=cap {
        if let Some(rep) = eng.find_exact(n_small, r)? {
            return Ok((r, rep));
        }
    }
    Err(SearchError::SpanCapExceeded { n: n.clone(), cap })
}

/// Checkpoint metadata echoed into a census report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub path: String,
    pub chunk_size: u64,
    pub chunks_total: u64,
    pub chunks_resumed: u64,
}

/// Outcome of a range census: which integers in `lo..=hi` were *not* given
/// a representation of length ≤ `r` by the bounded search.
///
/// Every integer in range and not listed in `misses` has a verified
/// representation of length ≤ `r` (spot-checkable with
/// [`find_representation`]). The converse claim is deliberately absent:
/// a miss is only "not found within bounds".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CensusReport {
    pub lo: i64,
    pub hi: i64,
    pub r: u32,
    pub max_abs_summand: u64,
    /// The half-sum cap actually used (the completeness-affecting heuristic).
    pub partial_sum_cap: u64,
    pub misses: Vec<i64>,
    pub checkpoint: Option<CheckpointMeta>,
}

impl CensusReport {
    pub fn complete(&self) -> bool {
        self.misses.is_empty()
    }

    /// Wire form with every integer value as a decimal string.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lo": self.lo.to_string(),
            "hi": self.hi.to_string(),
            "length": self.r,
            "max_abs_summand": self.max_abs_summand.to_string(),
            "partial_sum_cap": self.partial_sum_cap.to_string(),
            "misses": self.misses.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "complete": self.complete(),
            "note": "bounded search: a miss is 'not found within bounds', not a proof of non-representability",
            "checkpoint": self.checkpoint,
        })
    }
}

/// Options for [`census`].
#[derive(Debug, Clone)]
pub struct CensusOptions {
    pub checkpoint: Option<PathBuf>,
    pub resume: bool,
    pub chunk_size: u64,
    pub limits: Limits,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            checkpoint: None,
            resume: false,
            chunk_size: 1 << 16,
            limits: Limits::default(),
        }
    }
}

/// Sweep `lo..=hi`, marking every integer the bounded search can represent
/// with ≤ `r` summands, and report the ones it cannot.
///
/// The half-sum sets are built once for the whole range (each target `n` is
/// reached as a sum of two half-sums), then every chunk of the range is
/// marked by sliding windows over the sorted half-sum arrays. Chunks are
/// checkpointed as they complete when a checkpoint path is given.
pub fn census(
    lo: i64,
    hi: i64,
    r: u32,
    bounds: &SearchBounds,
    opts: &CensusOptions,
) -> Result<CensusReport, SearchError> {
    bounds.validate()?;
    if lo > hi {
        return Err(SearchError::InvalidBounds(format!(
            "census range {lo}..{hi} is empty"
        )));
    }
    if r == 0 || r > 8 {
        return Err(SearchError::InvalidLength { r });
    }
    let abs_max = lo.unsigned_abs().max(hi.unsigned_abs());
    if abs_max > engine_value_limit() {
        return Err(SearchError::BoundOverflow {
            what: format!("census endpoint beyond the 2^61 search range"),
        });
    }
    let partial_cap = bounds.partial_cap(abs_max);
    let eng = SearchEngine::new(bounds.max_abs_summand, partial_cap, opts.limits)?;

    let mut ckpt = match &opts.checkpoint {
        Some(path) => Some(CheckpointFile::open(
            path,
            CheckpointHeader {
                lo,
                hi,
                r,
                max_abs_summand: bounds.max_abs_summand,
                partial_cap,
                chunk_size: opts.chunk_size,
            },
            opts.resume,
        )?),
        None => None,
    };
    let resumed = ckpt.as_ref().map(|c| c.completed.len() as u64).unwrap_or(0);

    let mut misses: Vec<i64> = ckpt
        .iter()
        .flat_map(|c| c.completed.values())
        .flat_map(|rec| rec.misses.iter().copied())
        .collect();

    let chunk = opts.chunk_size.max(1) as i64;
    let mut chunks_total = 0u64;
    let mut clo = lo;
    while clo <= hi {
        let chi = clo.saturating_add(chunk - 1).min(hi);
        chunks_total += 1;
        let already = ckpt
            .as_ref()
            .map(|c| c.completed.contains_key(&clo))
            .unwrap_or(false);
        if !already {
            let chunk_misses = census_chunk(&eng, clo, chi, r);
            if let Some(c) = ckpt.as_mut() {
                c.record(ChunkRecord {
                    lo: clo,
                    hi: chi,
                    misses: chunk_misses.clone(),
                })?;
            }
            misses.extend(chunk_misses);
        }
        clo = match clo.checked_add(chunk) {
            Some(v) => v,
            None => break,
        };
    }
    misses.sort_unstable();
    misses.dedup();

    Ok(CensusReport {
        lo,
        hi,
        r,
        max_abs_summand: bounds.max_abs_summand,
        partial_sum_cap: partial_cap,
        misses,
        checkpoint: ckpt.map(|c| CheckpointMeta {
            path: c.path().display().to_string(),
            chunk_size: opts.chunk_size,
            chunks_total,
            chunks_resumed: resumed,
        }),
    })
}

/// Mark coverage of `[clo, chi]` for all lengths ≤ r and return the misses.
fn census_chunk(eng: &SearchEngine, clo: i64, chi: i64, r: u32) -> Vec<i64> {
    let width = (chi - clo) as usize + 1;
    let mut cov = vec![false; width];
    let mark_windowed = |cov: &mut [bool], outer: &[i64], inner: &[i64]| {
        for &b in outer {
            let lo_idx = inner.partition_point(|&a| a < clo.saturating_sub(b));
            let hi_idx = inner.partition_point(|&a| a <= chi.saturating_sub(b));
            for &a in &inner[lo_idx..hi_idx] {
                cov[(a + b - clo) as usize] = true;
            }
        }
    };
    let mark_direct = |cov: &mut [bool], set: &[i64]| {
        let lo_idx = set.partition_point(|&a| a < clo);
        let hi_idx = set.partition_point(|&a| a <= chi);
        for &a in &set[lo_idx..hi_idx] {
            cov[(a - clo) as usize] = true;
        }
    };
    for k in 1..=r {
        match k {
            1 => mark_direct(&mut cov, eng.v1()),
            2 => mark_direct(&mut cov, eng.v2()),
            3 => mark_windowed(&mut cov, eng.v1(), eng.v2()),
            4 => mark_windowed(&mut cov, eng.v2(), eng.v2()),
            5 => {
                // b over pairs, a over triple bands
                let v2 = eng.v2();
                eng.for_each_triple_band(|_, _, band| {
                    mark_windowed(&mut cov, v2, band);
                });
            }
            6 => {
                // both halves are triples: stream one side band by band
                eng.for_each_triple_band(|_, _, outer_band| {
                    eng.for_each_triple_band(|_, _, inner_band| {
                        mark_windowed(&mut cov, outer_band, inner_band);
                    });
                });
            }
            _ => {
                // lengths 7 and 8 go through the heuristic degree-4 set via
                // the generic exact-length probe below
            }
        }
        if k >= 7 {
            for n in clo..=chi {
                if !cov[(n - clo) as usize] && eng.exists_exact(n, k).unwrap_or(false) {
                    cov[(n - clo) as usize] = true;
                }
            }
        }
    }
    cov.iter()
        .enumerate()
        .filter(|(_, &c)| !c)
        .map(|(i, _)| clo + i as i64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    #[test]
    fn is_length1_examples() {
        assert!(is_length1(&BigInt::from(12)));
        assert!(!is_length1(&BigInt::from(5)));
        assert!(!is_length1(&BigInt::from(0)));
    }

    #[test]
    fn find_representation_examples() {
        let b = SearchBounds::default();
        let rep = find_representation(&BigInt::from(5), 2, &b).unwrap().unwrap();
        assert_eq!(rep.display_equation(), "5 = 2 + 3");

        let rep = find_representation(&BigInt::from(103), 3, &b).unwrap().unwrap();
        assert_eq!(rep.len(), 3);
        assert_eq!(rep.target(), &BigInt::from(103));

        assert!(find_representation(&BigInt::from(103), 2, &b).unwrap().is_none());
    }

    #[test]
    fn find_representation_zero_target() {
        let b = SearchBounds::default();
        assert!(find_representation(&BigInt::from(0), 1, &b).unwrap().is_none());
        let rep = find_representation(&BigInt::from(0), 2, &b).unwrap().unwrap();
        assert_eq!(rep.target(), &BigInt::from(0));
        assert_eq!(rep.len(), 2);
    }

    #[test]
    fn find_monotone_in_r() {
        let b = SearchBounds::default();
        for n in [5i64, 7, 10, 103, 511, 1000, 4985] {
            let mut prev = false;
            for r in 1..=6 {
                let found = find_representation(&BigInt::from(n), r, &b)
                    .unwrap()
                    .is_some();
                if prev {
                    assert!(found, "monotonicity broken at n={n} r={r}");
                }
                prev = found;
            }
        }
    }

    #[test]
    fn span_upper_examples() {
        let b = SearchBounds::default();
        let (r, rep) = span_upper(&BigInt::from(1), &b, 8).unwrap();
        assert_eq!(r, 1);
        assert_eq!(rep.display_equation(), "1 = 1");

        let (r, rep) = span_upper(&BigInt::from(5), &b, 8).unwrap();
        assert_eq!(r, 2);
        assert_eq!(rep.display_equation(), "5 = 2 + 3");

        let (r, _) = span_upper(&BigInt::from(103), &b, 8).unwrap();
        assert_eq!(r, 3);
    }

    #[test]
    fn span_upper_rejects_zero() {
        assert!(span_upper(&BigInt::from(0), &SearchBounds::default(), 8).is_err());
    }

    #[test]
    fn census_small_ranges() {
        let b = SearchBounds::default();
        let rep = census(1, 102, 2, &b, &CensusOptions::default()).unwrap();
        assert!(rep.complete(), "misses: {:?}", rep.misses);

        let rep = census(100, 110, 2, &b, &CensusOptions::default()).unwrap();
        assert_eq!(rep.misses, vec![103]);
    }

    #[test]
    fn census_matches_pointwise() {
        let b = SearchBounds::default();
        let rep = census(1, 600, 3, &b, &CensusOptions::default()).unwrap();
        let missset: std::collections::HashSet<i64> = rep.misses.iter().copied().collect();
        for n in (1..=600).step_by(23) {
            let found = find_representation(&BigInt::from(n), 3, &b).unwrap().is_some();
            assert_eq!(found, !missset.contains(&n), "n={n}");
        }
    }

    #[test]
    fn census_checkpoint_resume() {
        let b = SearchBounds::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("census.ckpt");
        let opts = CensusOptions {
            checkpoint: Some(path.clone()),
            resume: false,
            chunk_size: 40,
            limits: Limits::default(),
        };
        let first = census(1, 200, 2, &b, &opts).unwrap();
        let meta = first.checkpoint.clone().unwrap();
        assert_eq!(meta.chunks_total, 5);
        assert_eq!(meta.chunks_resumed, 0);

        let opts_resume = CensusOptions {
            resume: true,
            ..opts
        };
        let second = census(1, 200, 2, &b, &opts_resume).unwrap();
        assert_eq!(second.misses, first.misses);
        assert_eq!(second.checkpoint.unwrap().chunks_resumed, 5);
    }

    #[test]
    fn census_report_json_uses_decimal_strings() {
        let b = SearchBounds::default();
        let rep = census(100, 110, 2, &b, &CensusOptions::default()).unwrap();
        let v = rep.to_json();
        assert_eq!(v["misses"][0], "103");
        assert_eq!(v["lo"], "100");
        assert_eq!(v["complete"], false);
    }
}
