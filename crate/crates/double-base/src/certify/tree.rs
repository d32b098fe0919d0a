//! Certificate trees and their JSON wire format.
//!
//! A certificate is a recursive proof tree whose leaves are modular
//! refutations (direct or lifted), length-1 checks, or divisibility-vacuous
//! markers, and whose inner nodes record the four-way case split. Every
//! integer crosses the wire as a decimal string.

use super::meet::DpTuple;
use super::pool::ModulusPool;
use super::CertifyError;
use num_bigint::BigInt;
use num_traits::Num;
use serde_json::{json, Map, Value};
use std::time::Duration;

/// Which neighbour case a node refers to: `plus` is `(n+1)/6`, `minus` is
/// `(n−1)/6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitCase {
    Plus,
    Minus,
}

impl SplitCase {
    fn as_str(self) -> &'static str {
        match self {
            SplitCase::Plus => "plus",
            SplitCase::Minus => "minus",
        }
    }
}

/// A refutation of doubly-primitive length-r representations modulo `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DpRefutation {
    /// The half-sum intersection for `residue` mod `m` is empty.
    Direct { m: u128, residue: u128 },
    /// Every doubly-primitive tuple modulo `m0` (the complete list is
    /// recorded) fails to lift to a tuple modulo `m`.
    Lifted {
        m: u128,
        m0: u128,
        residue_m: u128,
        residue_m0: u128,
        tuples: Vec<LiftedTuple>,
    },
}

/// One enumerated mod-`m0` tuple with its lift-failure attestation: how
/// many fiber combinations were exhausted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedTuple {
    pub tuple: DpTuple,
    pub lifts_checked: u64,
}

/// A node of the proof tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertNode {
    /// `n ≠ 0`, so the empty sum does not represent it (length-0 case).
    EmptySum { n: BigInt },
    /// `n` is not a {2,3}-integer (or is 0), so it has no length-1
    /// representation.
    NoLength1 { n: BigInt },
    /// Divisibility marker: `6 ∤ n+1` (case `plus`) or `6 ∤ n−1` (`minus`),
    /// so the corresponding case is vacuous.
    Vacuous { n: BigInt, case: SplitCase },
    /// `n` has no doubly-primitive length-r representation.
    NoDp {
        n: BigInt,
        r: u32,
        refutation: DpRefutation,
    },
    /// Full refutation of length-r representations of `n`: all four cases
    /// fail.
    CaseSplit {
        n: BigInt,
        r: u32,
        dp: Box<CertNode>,
        plus: Box<CertNode>,
        minus: Box<CertNode>,
        divisors: Vec<(BigInt, CertNode)>,
    },
    /// Refutation of *primitive* length-r representations of `n` (a case-4
    /// subgoal): the doubly-primitive case and both ±1 cases fail.
    PrimitiveSplit {
        n: BigInt,
        r: u32,
        dp: Box<CertNode>,
        plus: Box<CertNode>,
        minus: Box<CertNode>,
    },
}

/// Provenance metadata. Ignored by verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertMeta {
    pub tool_version: String,
    pub pool: Vec<String>,
    pub created_unix_ms: u128,
    pub wall_ms: u128,
}

/// A complete, self-describing proof that the root's `n` has no
/// representation of the root's length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    root: CertNode,
    meta: CertMeta,
}

const FORMAT: &str = "double-base-certificate/1";

impl Certificate {
    pub(crate) fn new(root: CertNode, pool: &ModulusPool, wall: Duration) -> Self {
        Certificate {
            root,
            meta: CertMeta {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                pool: pool.ids(),
                created_unix_ms: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_millis())
                    .unwrap_or(0),
                wall_ms: wall.as_millis(),
            },
        }
    }

    pub fn from_parts(root: CertNode, meta: CertMeta) -> Self {
        Certificate { root, meta }
    }

    pub fn root(&self) -> &CertNode {
        &self.root
    }

    pub fn meta(&self) -> &CertMeta {
        &self.meta
    }

    /// The target and length the certificate claims to refute.
    pub fn claim(&self) -> Option<(&BigInt, u32)> {
        match &self.root {
            CertNode::EmptySum { n } => Some((n, 0)),
            CertNode::NoLength1 { n } => Some((n, 1)),
            CertNode::NoDp { n, r, .. } => Some((n, *r)),
            CertNode::CaseSplit { n, r, .. } => Some((n, *r)),
            CertNode::PrimitiveSplit { n, r, .. } => Some((n, *r)),
            CertNode::Vacuous { .. } => None,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "format": FORMAT,
            "meta": {
                "tool_version": self.meta.tool_version,
                "pool": self.meta.pool,
                "created_unix_ms": self.meta.created_unix_ms.to_string(),
                "wall_ms": self.meta.wall_ms.to_string(),
            },
            "root": node_to_json(&self.root),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("certificate serialization")
    }

    pub fn from_json_str(s: &str) -> Result<Self, CertifyError> {
        let v: Value = serde_json::from_str(s).map_err(|e| CertifyError::Malformed {
            path: "$".into(),
            detail: e.to_string(),
        })?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self, CertifyError> {
        let obj = as_object(v, "$")?;
        let format = get_str(obj, "format", "$")?;
        if format != FORMAT {
            return Err(malformed("$.format", format!("unknown format {format:?}")));
        }
        let meta_v = obj
            .get("meta")
            .ok_or_else(|| malformed("$.meta", "missing".into()))?;
        let meta_o = as_object(meta_v, "$.meta")?;
        let meta = CertMeta {
            tool_version: get_str(meta_o, "tool_version", "$.meta")?.to_string(),
            pool: meta_o
                .get("pool")
                .and_then(|p| p.as_array())
                .map(|a| {
                    a.iter()
                        .filter_map(|x| x.as_str().map(str::to_string))
                        .collect()
                })
                .unwrap_or_default(),
            created_unix_ms: parse_u128_field(meta_o, "created_unix_ms", "$.meta").unwrap_or(0),
            wall_ms: parse_u128_field(meta_o, "wall_ms", "$.meta").unwrap_or(0),
        };
        let root_v = obj
            .get("root")
            .ok_or_else(|| malformed("$.root", "missing".into()))?;
        let root = node_from_json(root_v, "$.root")?;
        Ok(Certificate { root, meta })
    }
}

fn node_to_json(node: &CertNode) -> Value {
    match node {
        CertNode::EmptySum { n } => json!({"kind": "empty_sum", "n": n.to_string()}),
        CertNode::NoLength1 { n } => json!({"kind": "no_length1", "n": n.to_string()}),
        CertNode::Vacuous { n, case } => {
            json!({"kind": "vacuous", "n": n.to_string(), "case": case.as_str()})
        }
        CertNode::NoDp { n, r, refutation } => {
            let mut o = Map::new();
            o.insert("kind".into(), "no_dp".into());
            o.insert("n".into(), n.to_string().into());
            o.insert("r".into(), (*r).into());
            match refutation {
                DpRefutation::Direct { m, residue } => {
                    o.insert("mode".into(), "direct".into());
                    o.insert("m".into(), m.to_string().into());
                    o.insert("residue".into(), residue.to_string().into());
                }
                DpRefutation::Lifted {
                    m,
                    m0,
                    residue_m,
                    residue_m0,
                    tuples,
                } => {
                    o.insert("mode".into(), "lifted".into());
                    o.insert("m".into(), m.to_string().into());
                    o.insert("m0".into(), m0.to_string().into());
                    o.insert("residue_m".into(), residue_m.to_string().into());
                    o.insert("residue_m0".into(), residue_m0.to_string().into());
                    o.insert("tuple_count".into(), tuples.len().into());
                    let ts: Vec<Value> = tuples
                        .iter()
                        .map(|lt| {
                            json!({
                                "pow2": lt.tuple.pow2.to_string(),
                                "pow3": lt.tuple.pow3.to_string(),
                                "tail": lt.tuple.tail.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                                "lifts_checked": lt.lifts_checked,
                            })
                        })
                        .collect();
                    o.insert("tuples".into(), ts.into());
                }
            }
            Value::Object(o)
        }
        CertNode::CaseSplit {
            n,
            r,
            dp,
            plus,
            minus,
            divisors,
        } => {
            let mut children = vec![
                child_json("dp", None, dp),
                child_json("plus", None, plus),
                child_json("minus", None, minus),
            ];
            for (d, node) in divisors {
                children.push(child_json("divisor", Some(d), node));
            }
            json!({
                "kind": "case_split",
                "n": n.to_string(),
                "r": r,
                "children": children,
            })
        }
        CertNode::PrimitiveSplit {
            n,
            r,
            dp,
            plus,
            minus,
        } => {
            let children = vec![
                child_json("dp", None, dp),
                child_json("plus", None, plus),
                child_json("minus", None, minus),
            ];
            json!({
                "kind": "primitive_split",
                "n": n.to_string(),
                "r": r,
                "children": children,
            })
        }
    }
}

fn child_json(case: &str, d: Option<&BigInt>, node: &CertNode) -> Value {
    let mut o = match node_to_json(node) {
        Value::Object(o) => o,
        _ => unreachable!(),
    };
    o.insert("case".into(), case.into());
    if let Some(d) = d {
        o.insert("d".into(), d.to_string().into());
    }
    Value::Object(o)
}

fn malformed(path: impl Into<String>, detail: String) -> CertifyError {
    CertifyError::Malformed {
        path: path.into(),
        detail,
    }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CertifyError> {
    v.as_object()
        .ok_or_else(|| malformed(path, "expected an object".into()))
}

fn get_str<'a>(o: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a str, CertifyError> {
    o.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("{path}.{key}"), "expected a string".into()))
}

fn parse_bigint(o: &Map<String, Value>, key: &str, path: &str) -> Result<BigInt, CertifyError> {
    let s = get_str(o, key, path)?;
    BigInt::from_str_radix(s, 10)
        .map_err(|e| malformed(format!("{path}.{key}"), format!("bad integer: {e}")))
}

fn parse_u128_field(o: &Map<String, Value>, key: &str, path: &str) -> Result<u128, CertifyError> {
    let s = get_str(o, key, path)?;
    s.parse::<u128>()
        .map_err(|e| malformed(format!("{path}.{key}"), format!("bad integer: {e}")))
}

fn get_u32(o: &Map<String, Value>, key: &str, path: &str) -> Result<u32, CertifyError> {
    o.get(key)
        .and_then(Value::as_u64)
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| malformed(format!("{path}.{key}"), "expected a small integer".into()))
}

fn node_from_json(v: &Value, path: &str) -> Result<CertNode, CertifyError> {
    let o = as_object(v, path)?;
    let kind = get_str(o, "kind", path)?;
    match kind {
        "empty_sum" => Ok(CertNode::EmptySum {
            n: parse_bigint(o, "n", path)?,
        }),
        "no_length1" => Ok(CertNode::NoLength1 {
            n: parse_bigint(o, "n", path)?,
        }),
        "vacuous" => {
            let case = match get_str(o, "case", path)? {
                "plus" => SplitCase::Plus,
                "minus" => SplitCase::Minus,
                other => {
                    return Err(malformed(
                        format!("{path}.case"),
                        format!("unknown case {other:?}"),
                    ))
                }
            };
            Ok(CertNode::Vacuous {
                n: parse_bigint(o, "n", path)?,
                case,
            })
        }
        "no_dp" => {
            let n = parse_bigint(o, "n", path)?;
            let r = get_u32(o, "r", path)?;
            let refutation = match get_str(o, "mode", path)? {
                "direct" => DpRefutation::Direct {
                    m: parse_u128_field(o, "m", path)?,
                    residue: parse_u128_field(o, "residue", path)?,
                },
                "lifted" => {
                    let tuples_v = o
                        .get("tuples")
                        .and_then(Value::as_array)
                        .ok_or_else(|| malformed(format!("{path}.tuples"), "expected an array".into()))?;
                    let mut tuples = Vec::with_capacity(tuples_v.len());
                    for (i, tv) in tuples_v.iter().enumerate() {
                        let tpath = format!("{path}.tuples[{i}]");
                        let to = as_object(tv, &tpath)?;
                        let tail_v = to
                            .get("tail")
                            .and_then(Value::as_array)
                            .ok_or_else(|| malformed(format!("{tpath}.tail"), "expected an array".into()))?;
                        let mut tail = Vec::with_capacity(tail_v.len());
                        for (j, x) in tail_v.iter().enumerate() {
                            let s = x.as_str().ok_or_else(|| {
                                malformed(format!("{tpath}.tail[{j}]"), "expected a string".into())
                            })?;
                            tail.push(s.parse::<u128>().map_err(|e| {
                                malformed(format!("{tpath}.tail[{j}]"), e.to_string())
                            })?);
                        }
                        tuples.push(LiftedTuple {
                            tuple: DpTuple {
                                pow2: parse_u128_field(to, "pow2", &tpath)?,
                                pow3: parse_u128_field(to, "pow3", &tpath)?,
                                tail,
                            },
                            lifts_checked: to
                                .get("lifts_checked")
                                .and_then(Value::as_u64)
                                .unwrap_or(0),
                        });
                    }
                    DpRefutation::Lifted {
                        m: parse_u128_field(o, "m", path)?,
                        m0: parse_u128_field(o, "m0", path)?,
                        residue_m: parse_u128_field(o, "residue_m", path)?,
                        residue_m0: parse_u128_field(o, "residue_m0", path)?,
                        tuples,
                    }
                }
                other => {
                    return Err(malformed(
                        format!("{path}.mode"),
                        format!("unknown mode {other:?}"),
                    ))
                }
            };
            Ok(CertNode::NoDp { n, r, refutation })
        }
        "case_split" | "primitive_split" => {
            let n = parse_bigint(o, "n", path)?;
            let r = get_u32(o, "r", path)?;
            let children = o
                .get("children")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed(format!("{path}.children"), "expected an array".into()))?;
            let mut dp: Option<CertNode> = None;
            let mut plus: Option<CertNode> = None;
            let mut minus: Option<CertNode> = None;
            let mut divisors: Vec<(BigInt, CertNode)> = Vec::new();
            for (i, cv) in children.iter().enumerate() {
                let cpath = format!("{path}.children[{i}]");
                let co = as_object(cv, &cpath)?;
                let case = get_str(co, "case", &cpath)?;
                let node = node_from_json(cv, &cpath)?;
                match case {
                    "dp" if dp.is_none() => dp = Some(node),
                    "plus" if plus.is_none() => plus = Some(node),
                    "minus" if minus.is_none() => minus = Some(node),
                    "divisor" if kind == "case_split" => {
                        divisors.push((parse_bigint(co, "d", &cpath)?, node));
                    }
                    other => {
                        return Err(malformed(
                            format!("{cpath}.case"),
                            format!("unexpected or duplicate case {other:?}"),
                        ))
                    }
                }
            }
            let dp = Box::new(dp.ok_or_else(|| malformed(path, "missing dp child".into()))?);
            let plus = Box::new(plus.ok_or_else(|| malformed(path, "missing plus child".into()))?);
            let minus =
                Box::new(minus.ok_or_else(|| malformed(path, "missing minus child".into()))?);
            if kind == "case_split" {
                Ok(CertNode::CaseSplit {
                    n,
                    r,
                    dp,
                    plus,
                    minus,
                    divisors,
                })
            } else {
                Ok(CertNode::PrimitiveSplit {
                    n,
                    r,
                    dp,
                    plus,
                    minus,
                })
            }
        }
        other => Err(malformed(
            format!("{path}.kind"),
            format!("unknown node kind {other:?}"),
        )),
    }
}
