//! The modulus pool: which moduli to try for a doubly-primitive refutation,
//! in what order, and when to go through a lift.

use super::meet::{self, AnyIndex};
use super::tree::DpRefutation;
use super::{lift_refute, CertifyError};
use crate::limits::Limits;
use crate::modular::{modulus_from_exponents, ModContext};
use num_bigint::BigInt;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Residue arithmetic in a single machine word tops out here; larger moduli
/// go through a lift when a divisor below the line is configured.
pub const WORD_LIMIT: u128 = 1 << 63;

/// Moduli whose estimated half-sum work exceeds this are skipped for the
/// degree in question.
const WORK_CAP_LN: f64 = 25.4; // ≈ ln 1e11

/// One modulus available for refutations.
#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub m: u128,
    /// Divisor of `m` below [`WORD_LIMIT`] through which refutations are
    /// lifted when `m` itself exceeds the word limit.
    pub lift_m0: Option<u128>,
    /// The exponent pair that produced `m`, when it came from the recipe.
    pub exponents: Option<(u32, u32)>,
}

struct Cached {
    ctx: Arc<ModContext>,
    index: Arc<AnyIndex>,
    /// ln w_r per degree, filled on demand.
    work_ln: Mutex<HashMap<u32, f64>>,
}

/// A prioritized collection of moduli with shared caches: contexts, residue
/// indexes, and per-(m, residue, r) refutation outcomes.
pub struct ModulusPool {
    entries: Vec<PoolEntry>,
    cached: Vec<Cached>,
    limits: Limits,
    lift_ctx: Mutex<HashMap<u128, Arc<ModContext>>>,
    outcomes: Mutex<HashMap<(u128, u128, u32), Option<DpRefutation>>>,
}

impl ModulusPool {
    /// The built-in pool: the six recipe moduli, with the largest one lifted
    /// through `m / 408` (the division is exact for that modulus).
    pub fn builtin(limits: Limits) -> Result<Self, CertifyError> {
        let mut entries = Vec::new();
        for (a, b) in crate::modular::DEFAULT_EXPONENT_PAIRS {
            let profile = modulus_from_exponents(a, b, 2..=2)?;
            let m = profile.m_u128().ok_or_else(|| CertifyError::ResourceExceeded {
                what: format!("modulus for ({a},{b}) exceeds 128 bits"),
            })?;
            let lift_m0 = (m >= WORD_LIMIT && m % 408 == 0).then(|| m / 408);
            entries.push(PoolEntry {
                m,
                lift_m0,
                exponents: Some((a, b)),
            });
        }
        Self::new(entries, limits)
    }

    pub fn new(entries: Vec<PoolEntry>, limits: Limits) -> Result<Self, CertifyError> {
        if entries.is_empty() {
            return Err(CertifyError::ResourceExceeded {
                what: "empty modulus pool".into(),
            });
        }
        let mut cached = Vec::with_capacity(entries.len());
        for e in &entries {
            let ctx = Arc::new(ModContext::build_with_cap(e.m, limits.closure_cap)?);
            let index = Arc::new(AnyIndex::new(&ctx));
            cached.push(Cached {
                ctx,
                index,
                work_ln: Mutex::new(HashMap::new()),
            });
        }
        Ok(ModulusPool {
            entries,
            cached,
            limits,
            lift_ctx: Mutex::new(HashMap::new()),
            outcomes: Mutex::new(HashMap::new()),
        })
    }

    /// Parse a pool description: `{"moduli": [{"a": 144, "b": 432,
    /// "lift_divisor": "408"} | {"m": "24"} ...]}`. `lift_divisor` is only
    /// meaningful where `m` exceeds the word limit and must divide it.
    pub fn from_json_str(s: &str, limits: Limits) -> Result<Self, CertifyError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| CertifyError::Malformed {
                path: "$".into(),
                detail: e.to_string(),
            })?;
        let list = v
            .get("moduli")
            .and_then(|x| x.as_array())
            .ok_or_else(|| CertifyError::Malformed {
                path: "$.moduli".into(),
                detail: "expected an array".into(),
            })?;
        let mut entries = Vec::new();
        for (i, item) in list.iter().enumerate() {
            let path = format!("$.moduli[{i}]");
            let bad = |detail: String| CertifyError::Malformed {
                path: path.clone(),
                detail,
            };
            let m: u128 = if let Some(ms) = item.get("m").and_then(|x| x.as_str()) {
                ms.parse().map_err(|e| bad(format!("bad m: {e}")))?
            } else {
                let a = item.get("a").and_then(|x| x.as_u64()).ok_or_else(|| {
                    bad("need either \"m\" or exponents \"a\"/\"b\"".into())
                })? as u32;
                let b = item
                    .get("b")
                    .and_then(|x| x.as_u64())
                    .ok_or_else(|| bad("missing \"b\"".into()))? as u32;
                modulus_from_exponents(a, b, 2..=2)?
                    .m_u128()
                    .ok_or_else(|| bad("modulus exceeds 128 bits".into()))?
            };
            let lift_m0 = match item.get("lift_divisor") {
                None => (m >= WORD_LIMIT && m % 408 == 0).then(|| m / 408),
                Some(serde_json::Value::Null) => None,
                Some(d) => {
                    let ds = d
                        .as_str()
                        .map(str::to_string)
                        .or_else(|| d.as_u64().map(|x| x.to_string()))
                        .ok_or_else(|| bad("lift_divisor must be a decimal string".into()))?;
                    let div: u128 = ds.parse().map_err(|e| bad(format!("bad lift_divisor: {e}")))?;
                    if div == 0 || m % div != 0 {
                        return Err(bad(format!("lift_divisor {div} does not divide m")));
                    }
                    Some(m / div)
                }
            };
            let exponents = match (item.get("a"), item.get("b")) {
                (Some(a), Some(b)) => a
                    .as_u64()
                    .zip(b.as_u64())
                    .map(|(a, b)| (a as u32, b as u32)),
                _ => None,
            };
            entries.push(PoolEntry {
                m,
                lift_m0,
                exponents,
            });
        }
        Self::new(entries, limits)
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    /// Identifiers for certificate metadata: the moduli as decimal strings.
    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.m.to_string()).collect()
    }

    pub fn context(&self, m: u128) -> Option<Arc<ModContext>> {
        self.entries
            .iter()
            .position(|e| e.m == m)
            .map(|i| Arc::clone(&self.cached[i].ctx))
    }

    fn work_ln(&self, i: usize, r: u32) -> f64 {
        let mut cache = self.cached[i].work_ln.lock().unwrap();
        *cache
            .entry(r)
            .or_insert_with(|| self.cached[i].ctx.work_factor_ln(r).unwrap_or(f64::INFINITY))
    }

    /// Entry order for a degree: ascending estimated work.
    fn order_for(&self, r: u32) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| {
            self.work_ln(a, r)
                .partial_cmp(&self.work_ln(b, r))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        order
    }

    fn lift_context(&self, m0: u128) -> Result<Arc<ModContext>, CertifyError> {
        if let Some(ctx) = self.lift_ctx.lock().unwrap().get(&m0) {
            return Ok(Arc::clone(ctx));
        }
        let ctx = Arc::new(ModContext::build_with_cap(m0, self.limits.closure_cap)?);
        self.lift_ctx
            .lock()
            .unwrap()
            .entry(m0)
            .or_insert_with(|| Arc::clone(&ctx));
        Ok(ctx)
    }

    /// Try to refute doubly-primitive length-r representations of `n`,
    /// walking the pool in ascending work order. Lift mode engages whenever
    /// the modulus exceeds the word limit and a lift divisor is configured.
    /// `None` means no pool modulus discharged the subgoal.
    pub fn refute_dp(&self, n: &BigInt, r: u32) -> Result<Option<DpRefutation>, CertifyError> {
        for i in self.order_for(r) {
            let entry = &self.entries[i];
            if self.work_ln(i, r) > WORK_CAP_LN {
                continue;
            }
            let ctx = &self.cached[i].ctx;
            let residue = ctx.reduce(n);
            let key = (entry.m, residue, r);
            if let Some(cached) = self.outcomes.lock().unwrap().get(&key) {
                match cached {
                    Some(refutation) => return Ok(Some(refutation.clone())),
                    None => continue,
                }
            }
            let outcome = if entry.m >= WORD_LIMIT && entry.lift_m0.is_some() {
                let m0 = entry.lift_m0.unwrap();
                let ctx_m0 = self.lift_context(m0)?;
                match lift_refute(n, r, &ctx_m0, ctx, &self.limits) {
                    Ok(res) => res,
                    Err(CertifyError::ResourceExceeded { .. }) => continue,
                    Err(e) => return Err(e),
                }
            } else {
                match meet::dp_refute_with_index(&self.cached[i].index, residue, r, &self.limits)
                {
                    Ok(true) => Some(DpRefutation::Direct {
                        m: entry.m,
                        residue,
                    }),
                    Ok(false) => None,
                    Err(CertifyError::ResourceExceeded { .. }) => continue,
                    Err(e) => return Err(e),
                }
            };
            self.outcomes
                .lock()
                .unwrap()
                .insert(key, outcome.clone());
            if outcome.is_some() {
                return Ok(outcome);
            }
        }
        Ok(None)
    }
}

impl std::fmt::Debug for ModulusPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModulusPool")
            .field("entries", &self.entries)
            .finish_non_exhaustive()
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_pool_moduli() {
        let pool = ModulusPool::builtin(Limits::default()).unwrap();
        let ms: Vec<u128> = pool.entries().iter().map(|e| e.m).collect();
        assert_eq!(
            ms,
            vec![
                1811941545963463911360,
                7409469211410651840,
                38391032183474880,
                952177069640160,
                54610287600960,
                1099511627760,
            ]
        );
        // only the >2^63 modulus gets a lift divisor
        let lifts: Vec<Option<u128>> = pool.entries().iter().map(|e| e.lift_m0).collect();
        assert_eq!(lifts[0], Some(4441033200890842920));
        assert!(lifts[1..].iter().all(|l| l.is_none()));
    }

    #[test]
    fn order_prefers_cheap_moduli() {
        let pool = ModulusPool::builtin(Limits::default()).unwrap();
        let order = pool.order_for(3);
        // the smallest modulus has the smallest work factor at every degree
        assert_eq!(pool.entries()[order[0]].m, 1099511627760);
    }

    #[test]
    fn pool_json_roundtrip() {
        let s = r#"{"moduli": [
            {"a": 36, "b": 108},
            {"m": "24"},
            {"a": 144, "b": 432, "lift_divisor": "408"}
        ]}"#;
        let pool = ModulusPool::from_json_str(s, Limits::default()).unwrap();
        assert_eq!(pool.entries()[0].m, 1099511627760);
        assert_eq!(pool.entries()[1].m, 24);
        assert_eq!(
            pool.entries()[2].lift_m0,
            Some(1811941545963463911360 / 408)
        );
    }

    #[test]
    fn pool_json_rejects_bad_divisor() {
        let s = r#"{"moduli": [{"m": "24", "lift_divisor": "7"}]}"#;
        assert!(ModulusPool::from_json_str(s, Limits::default()).is_err());
    }

    #[test]
    fn refute_dp_discharges_103() {
        let pool = ModulusPool::builtin(Limits::default()).unwrap();
        let got = pool.refute_dp(&BigInt::from(103), 2).unwrap().unwrap();
        match got {
            DpRefutation::Direct { m, residue } => {
                assert_eq!(m, 1099511627760);
                assert_eq!(residue, 103);
            }
            other => panic!("{other:?}"),
        }
        // 5 = 2 + 3 is doubly primitive, so no modulus can refute it
        assert!(pool.refute_dp(&BigInt::from(5), 2).unwrap().is_none());
    }
}
