//! JSON specs for bases, digit streams and MFF families.
//!
//! Base schema:
//! `{"kind":"constant","value":10}`, `{"kind":"affine","a":1,"d":1}`,
//! `{"kind":"geometric","a":2,"r":2}`, `{"kind":"periodic","values":[3,2]}`,
//! `{"kind":"explicit","prefix":[...],"tail":{...}}`,
//! `{"kind":"iid","lo":2,"hi":10,"seed":42}`, `{"kind":"qnex"}`, `{"kind":"rdn"}`.
//!
//! Integers may be JSON numbers or decimal strings.

use std::sync::Arc;

use cantor_core::digits::{expand_rational, Tail};
use cantor_core::foundry::{default_eps, qnex_stream, rdn_q, MffSpec, MffStage, StageBlock, StageParams};
use cantor_core::{BasicSeq, DigitStream, MeasureSpec, Nat, Rat};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{Map, Value};

use crate::CliError;

/// Horizon up to which rational inputs are expanded eagerly.
pub const EXPAND_HORIZON: u64 = 4096;

fn err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Spec(format!("{path}: {msg}"))
}

fn core_err(path: &str, e: cantor_core::Error) -> CliError {
    match e {
        cantor_core::Error::Hypothesis(m) => CliError::Hypothesis(format!("{path}: {m}")),
        e => err(path, e),
    }
}

/// Parses JSON text, reporting syntax errors with line and column.
pub fn parse_json(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Spec(format!("$: malformed JSON at line {} column {}: {e}", e.line(), e.column())))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn field<'a>(o: &'a Map<String, Value>, path: &str, key: &str) -> Result<&'a Value, CliError> {
    o.get(key).ok_or_else(|| err(path, format!("missing field \"{key}\"")))
}

fn only_fields(o: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), CliError> {
    match o.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(err(&format!("{path}.{k}"), "unknown field")),
        None => Ok(()),
    }
}

fn kind<'a>(o: &'a Map<String, Value>, path: &str) -> Result<&'a str, CliError> {
    field(o, path, "kind")?.as_str().ok_or_else(|| err(&format!("{path}.kind"), "expected a string"))
}

/// A nonnegative integer given as a JSON number or a decimal string.
pub fn nat(v: &Value, path: &str) -> Result<Nat, CliError> {
    match v {
        Value::Number(n) => n.as_u64().map(Nat::from).ok_or_else(|| err(path, "expected a nonnegative integer")),
        Value::String(s) => s.parse::<Nat>().map_err(|_| err(path, "expected a nonnegative decimal integer")),
        _ => Err(err(path, "expected a nonnegative integer")),
    }
}

fn int(v: &Value, path: &str) -> Result<BigInt, CliError> {
    match v {
        Value::Number(n) => n.as_i64().map(BigInt::from).ok_or_else(|| err(path, "expected an integer")),
        Value::String(s) => s.parse::<BigInt>().map_err(|_| err(path, "expected a decimal integer")),
        _ => Err(err(path, "expected an integer")),
    }
}

fn u64_field(o: &Map<String, Value>, path: &str, key: &str) -> Result<u64, CliError> {
    let p = format!("{path}.{key}");
    field(o, path, key)?.as_u64().ok_or_else(|| err(&p, "expected a nonnegative integer below 2^64"))
}

fn nat_list(v: &Value, path: &str) -> Result<Vec<Nat>, CliError> {
    let a = v.as_array().ok_or_else(|| err(path, "expected an array"))?;
    a.iter().enumerate().map(|(i, x)| nat(x, &format!("{path}[{i}]"))).collect()
}

/// Parses and validates a base spec.
pub fn parse_seq_spec(text: &str) -> Result<BasicSeq, CliError> {
    seq_from_value(&parse_json(text)?, "$")
}

pub fn seq_from_value(v: &Value, path: &str) -> Result<BasicSeq, CliError> {
    let o = object(v, path)?;
    let k = kind(o, path)?;
    let check = |r: cantor_core::Result<BasicSeq>| r.map_err(|e| core_err(path, e));
    match k {
        "constant" => {
            only_fields(o, path, &["kind", "value"])?;
            check(BasicSeq::constant(nat(field(o, path, "value")?, &format!("{path}.value"))?))
        }
        "affine" => {
            only_fields(o, path, &["kind", "a", "d"])?;
            let a = int(field(o, path, "a")?, &format!("{path}.a"))?;
            let d = nat(field(o, path, "d")?, &format!("{path}.d"))?;
            check(BasicSeq::affine(a, d))
        }
        "geometric" => {
            only_fields(o, path, &["kind", "a", "r"])?;
            let a = nat(field(o, path, "a")?, &format!("{path}.a"))?;
            let r = nat(field(o, path, "r")?, &format!("{path}.r"))?;
            check(BasicSeq::geometric(a, r))
        }
        "periodic" => {
            only_fields(o, path, &["kind", "values"])?;
            check(BasicSeq::periodic(nat_list(field(o, path, "values")?, &format!("{path}.values"))?))
        }
        "explicit" => {
            only_fields(o, path, &["kind", "prefix", "tail"])?;
            let prefix = nat_list(field(o, path, "prefix")?, &format!("{path}.prefix"))?;
            let tail = seq_from_value(field(o, path, "tail")?, &format!("{path}.tail"))?;
            check(BasicSeq::explicit(prefix, tail))
        }
        "iid" => {
            only_fields(o, path, &["kind", "lo", "hi", "seed"])?;
            let m = MeasureSpec::new(u64_field(o, path, "lo")?, u64_field(o, path, "hi")?, u64_field(o, path, "seed")?);
            Ok(BasicSeq::iid(m.map_err(|e| core_err(path, e))?))
        }
        "qnex" => {
            only_fields(o, path, &["kind"])?;
            Ok(qnex_stream(StageParams::default()).map_err(|e| core_err(path, e))?.0)
        }
        "rdn" => {
            only_fields(o, path, &["kind"])?;
            check(rdn_q(StageParams::default()))
        }
        other => Err(err(&format!("{path}.kind"), format!("unknown kind \"{other}\""))),
    }
}

/// Parses `num/den`, an integer, or a finite decimal.
pub fn parse_rational(s: &str) -> Result<Rat, CliError> {
    let s = s.trim();
    let bad = || CliError::Spec(format!("\"{s}\": expected a rational such as 7/8 or 0.375"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(a, b));
    }
    if let Some((w, f)) = s.split_once('.') {
        if f.is_empty() || !f.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = w.starts_with('-');
        let w: BigInt = if w.is_empty() || w == "-" { BigInt::zero() } else { w.parse().map_err(|_| bad())? };
        let den = BigInt::from(10u8).pow(f.len() as u32);
        let frac: BigInt = f.parse().map_err(|_| bad())?;
        let mag = Rat::new(w.magnitude().clone().into(), BigInt::one()) + Rat::new(frac, den);
        return Ok(if neg { -mag } else { mag });
    }
    Ok(Rat::from_integer(s.parse().map_err(|_| bad())?))
}

/// Digit stream schema over a given base:
/// `{"kind":"rational","value":"7/8"}`,
/// `{"kind":"digits","int":0,"prefix":[...],"cycle":[...]}` (cycle optional, zeros by default),
/// `{"kind":"random","seed":1}` (digit `n` uniform below `q_n`).
///
/// A bare string is read as a rational.
pub fn parse_digit_spec(text: &str, base: &BasicSeq) -> Result<DigitStream, CliError> {
    let t = text.trim();
    if !t.starts_with('{') {
        let x = parse_rational(t)?;
        return expand_rational(&x, base, EXPAND_HORIZON).map_err(|e| core_err("$", e));
    }
    digits_from_value(&parse_json(t)?, "$", base)
}

pub fn digits_from_value(v: &Value, path: &str, base: &BasicSeq) -> Result<DigitStream, CliError> {
    if let Value::String(s) = v {
        let x = parse_rational(s)?;
        return expand_rational(&x, base, EXPAND_HORIZON).map_err(|e| core_err(path, e));
    }
    let o = object(v, path)?;
    match kind(o, path)? {
        "rational" => {
            only_fields(o, path, &["kind", "value"])?;
            let s = field(o, path, "value")?.as_str().ok_or_else(|| err(&format!("{path}.value"), "expected a string"))?;
            let x = parse_rational(s)?;
            expand_rational(&x, base, EXPAND_HORIZON).map_err(|e| core_err(path, e))
        }
        "digits" => {
            only_fields(o, path, &["kind", "int", "prefix", "cycle"])?;
            let e0 = match o.get("int") {
                Some(v) => int(v, &format!("{path}.int"))?,
                None => BigInt::zero(),
            };
            let prefix = nat_list(field(o, path, "prefix")?, &format!("{path}.prefix"))?;
            let r = match o.get("cycle") {
                Some(c) => DigitStream::from_periodic_digits(base.clone(), e0, prefix, nat_list(c, &format!("{path}.cycle"))?),
                None => DigitStream::from_digits(base.clone(), e0, prefix, Tail::Zeros),
            };
            r.map_err(|e| core_err(path, e))
        }
        "random" => {
            only_fields(o, path, &["kind", "seed"])?;
            let m = MeasureSpec::new(2, u64::MAX, u64_field(o, path, "seed")?).map_err(|e| core_err(path, e))?;
            let b = base.clone();
            Ok(DigitStream::from_fn(base.clone(), "random", move |n| {
                let q = b.q_at(n).unwrap_or_else(|_| Nat::from(2u8));
                Nat::from(m.draw(n) - 2) % q
            }))
        }
        other => Err(err(&format!("{path}.kind"), format!("unknown kind \"{other}\""))),
    }
}

/// Finite MFF: `{"stages":[{"l":1,"b":2,"x":[0,1]}, ...]}` with optional `"eps":"num/den"`.
pub fn parse_mff_spec(text: &str) -> Result<MffSpec, CliError> {
    let v = parse_json(text)?;
    let o = object(&v, "$")?;
    only_fields(o, "$", &["stages"])?;
    let arr = field(o, "$", "stages")?.as_array().ok_or_else(|| err("$.stages", "expected an array"))?;
    let mut stages = Vec::with_capacity(arr.len());
    for (i, s) in arr.iter().enumerate() {
        let path = format!("$.stages[{i}]");
        let so = object(s, &path)?;
        only_fields(so, &path, &["l", "b", "x", "eps"])?;
        let eps = match so.get("eps") {
            Some(Value::String(e)) => parse_rational(e)?,
            Some(_) => return Err(err(&format!("{path}.eps"), "expected a rational string")),
            None => default_eps(i as u32 + 1),
        };
        stages.push(MffStage {
            l: nat(field(so, &path, "l")?, &format!("{path}.l"))?,
            b: nat(field(so, &path, "b")?, &format!("{path}.b"))?,
            eps,
            x: StageBlock::Explicit(Arc::new(nat_list(field(so, &path, "x")?, &format!("{path}.x"))?)),
        });
    }
    MffSpec::finite(stages).map_err(|e| core_err("$", e))
}

/// Inline JSON, or the contents of a file when prefixed with `@`.
pub fn read_arg(s: &str) -> Result<String, CliError> {
    match s.strip_prefix('@') {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Spec(format!("{p}: {e}"))),
        None => Ok(s.to_string()),
    }
}
