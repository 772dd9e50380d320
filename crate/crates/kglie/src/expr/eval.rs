//! Numeric evaluation.
//!
//! Two paths: exact rational evaluation for expressions built from
//! rationals, variables, and integer powers, and high precision floating
//! point (MPFR, default 256 bits) for everything else. The float path
//! tracks the largest intermediate magnitude so zero tests can use a
//! relative tolerance.
//!
//! Abstract function symbols are evaluated through a deterministic oracle
//! modeling a random function evaluated pointwise: the value depends only on
//! (seed, function name, derivative multi-index, the numerical values of the
//! arguments quantized well below working precision, sample index). Calls
//! whose arguments agree numerically therefore get equal values inside one
//! identity check, regardless of how the arguments are written, while
//! unrelated jets decouple.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use rug::Float;

use super::{Builtin, Expr, Node, Rat};
use crate::error::{Error, Result};

/// A rational assignment of values to variables.
#[derive(Debug, Clone, Default)]
pub struct Point {
    pub vars: BTreeMap<String, Rat>,
}

impl Point {
    pub fn new() -> Point {
        Point::default()
    }

    pub fn set(&mut self, var: &str, val: Rat) {
        self.vars.insert(var.to_string(), val);
    }

    pub fn of(pairs: &[(&str, Rat)]) -> Point {
        let mut p = Point::new();
        for (v, r) in pairs {
            p.set(v, r.clone());
        }
        p
    }
}

/// Oracle identity for abstract function values.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    pub seed: u64,
    pub index: u32,
}

#[derive(Debug, Clone)]
pub struct EvalOut {
    pub value: Float,
    /// Largest |intermediate| seen while evaluating, as f64.
    pub max_mag: f64,
}

pub fn eval(e: &Expr, pt: &Point, oracle: Option<&Oracle>, prec: u32) -> Result<EvalOut> {
    let mut max_mag = 0.0f64;
    let value = go(e, pt, oracle, prec, &mut max_mag)?;
    Ok(EvalOut { value, max_mag })
}

fn rat_to_float(r: &Rat, prec: u32) -> Float {
    let rr = rug::Rational::from_str_radix(&r.to_string(), 10).expect("rational literal");
    Float::with_val(prec, rr)
}

fn track(v: Float, max_mag: &mut f64) -> Result<Float> {
    if !v.is_finite() {
        return Err(Error::Singular("non-finite intermediate value".into()));
    }
    let m = v.to_f64().abs();
    if m > *max_mag {
        *max_mag = m;
    }
    Ok(v)
}

fn go(
    e: &Expr,
    pt: &Point,
    oracle: Option<&Oracle>,
    prec: u32,
    max_mag: &mut f64,
) -> Result<Float> {
    let v = match e.node() {
        Node::Rat(r) => rat_to_float(r, prec),
        Node::Var(name) => match pt.vars.get(name) {
            Some(r) => rat_to_float(r, prec),
            None => return Err(Error::UnboundVar(name.clone())),
        },
        Node::Sum(ts) => {
            let mut acc = Float::with_val(prec, 0);
            for t in ts {
                acc += go(t, pt, oracle, prec, max_mag)?;
            }
            acc
        }
        Node::Prod(fs) => {
            let mut acc = Float::with_val(prec, 1);
            for f in fs {
                acc *= go(f, pt, oracle, prec, max_mag)?;
            }
            acc
        }
        Node::Pow(b, ex) => {
            let bb = go(b, pt, oracle, prec, max_mag)?;
            if let Node::Rat(r) = ex.node() {
                if r.is_integer() {
                    if let Some(i) = r.to_integer().to_i32() {
                        if bb.is_zero() && i < 0 {
                            return Err(Error::Singular("zero base with negative exponent".into()));
                        }
                        return track(rug::ops::Pow::pow(bb, i), max_mag);
                    }
                }
            }
            let ee = go(ex, pt, oracle, prec, max_mag)?;
            if bb.is_zero() {
                if ee.is_sign_positive() && !ee.is_zero() {
                    Float::with_val(prec, 0)
                } else {
                    return Err(Error::Singular("zero base with nonpositive exponent".into()));
                }
            } else if bb.is_sign_negative() {
                if ee.is_integer() {
                    let i = ee
                        .to_i32_saturating()
                        .ok_or_else(|| Error::Singular("huge integer exponent".into()))?;
                    rug::ops::Pow::pow(bb, i)
                } else {
                    return Err(Error::Singular(
                        "negative base with non-integer exponent".into(),
                    ));
                }
            } else {
                Float::with_val(prec, rug::ops::Pow::pow(&bb, &ee))
            }
        }
        Node::Fun(f, a) => {
            let aa = go(a, pt, oracle, prec, max_mag)?;
            match f {
                Builtin::Exp => aa.exp(),
                Builtin::Ln => {
                    if aa.is_sign_negative() || aa.is_zero() {
                        return Err(Error::Singular("ln of a nonpositive value".into()));
                    }
                    aa.ln()
                }
                Builtin::Sin => aa.sin(),
                Builtin::Cos => aa.cos(),
                Builtin::Tan => aa.tan(),
                Builtin::Cot => {
                    let s = aa.clone().sin();
                    if s.is_zero() {
                        return Err(Error::Singular("cot at a zero of sin".into()));
                    }
                    aa.cos() / s
                }
                Builtin::Sinh => aa.sinh(),
                Builtin::Cosh => aa.cosh(),
                Builtin::Atan => aa.atan(),
                Builtin::Abs => aa.abs(),
            }
        }
        Node::AbstractFn { name, deriv, args } => {
            let o = oracle.ok_or_else(|| Error::OracleNeeded(name.clone()))?;
            let mut key = String::new();
            key.push_str(name);
            for d in deriv {
                key.push('_');
                key.push_str(&d.to_string());
            }
            for a in args {
                let av = go(a, pt, oracle, prec, max_mag)?;
                key.push('|');
                key.push_str(&quantize(&av));
            }
            key.push('#');
            key.push_str(&o.index.to_string());
            Float::with_val(prec, oracle_value(o.seed, &key))
        }
    };
    track(v, max_mag)
}

/// Canonical key fragment for an oracle argument: the value rounded to 34
/// significant hexadecimal digits (136 bits), far above sampling noise and
/// far below the 256-bit working precision, so that equal quantities agree
/// and distinct ones generically differ.
fn quantize(v: &Float) -> String {
    if v.is_zero() {
        "0".to_string()
    } else {
        v.to_string_radix(16, Some(34))
    }
}

/// Deterministic oracle value in +-[1/4, 9/4), exactly representable in f64.
pub fn oracle_value(seed: u64, key: &str) -> f64 {
    // FNV-1a over the key bytes, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= seed;
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    let sign = if z & 1 == 1 { -1.0 } else { 1.0 };
    let mant = ((z >> 11) & ((1u64 << 53) - 1)) as f64 / (1u64 << 53) as f64;
    sign * (0.25 + 2.0 * mant)
}

/// Exact rational evaluation. Fails with `Invalid` on nodes outside the
/// rational fragment and with `Singular` on division by zero.
pub fn eval_rat(e: &Expr, pt: &Point) -> Result<Rat> {
    Ok(match e.node() {
        Node::Rat(r) => r.clone(),
        Node::Var(name) => match pt.vars.get(name) {
            Some(r) => r.clone(),
            None => return Err(Error::UnboundVar(name.clone())),
        },
        Node::Sum(ts) => {
            let mut acc = Rat::zero();
            for t in ts {
                acc += eval_rat(t, pt)?;
            }
            acc
        }
        Node::Prod(fs) => {
            let mut acc = Rat::from_integer(1.into());
            for f in fs {
                acc *= eval_rat(f, pt)?;
            }
            acc
        }
        Node::Pow(b, ex) => {
            let r = match ex.node() {
                Node::Rat(r) if r.is_integer() => r,
                _ => return Err(Error::Invalid("non-integer exponent in rational eval".into())),
            };
            let i = r
                .to_integer()
                .to_i32()
                .ok_or_else(|| Error::Invalid("oversized exponent".into()))?;
            let bb = eval_rat(b, pt)?;
            if bb.is_zero() && i < 0 {
                return Err(Error::Singular("zero base with negative exponent".into()));
            }
            num_traits::Pow::pow(&bb, i)
        }
        Node::Fun(..) | Node::AbstractFn { .. } => {
            return Err(Error::Invalid("non-rational node in rational eval".into()))
        }
    })
}
