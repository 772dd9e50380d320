//! Sampling-based zero tests.
//!
//! An expression passes when it vanishes at every sampled point: exactly,
//! when the expression lies in the rational fragment, or within
//! tol * (1 + max intermediate magnitude) in 256-bit arithmetic otherwise.
//! Sample coordinates are positive rationals in a fixed interval with
//! bounded denominators; for the coordinate pairs (t, x) and (a, b) a
//! minimal separation is enforced so that |x - t| style factors stay away
//! from zero. Points that hit an exact singularity (division by zero, ln of
//! a nonpositive value) are resampled within a bounded budget.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::eval::{eval, eval_rat, Oracle, Point};
use super::{Expr, Node, Rat};
use crate::error::{Error, Result};
use crate::Config;

/// Variable pairs kept apart during sampling.
const SEPARATED_PAIRS: [(&str, &str); 2] = [("t", "x"), ("a", "b")];

/// Outcome of a zero test, with a witness when refuted.
#[derive(Debug, Clone)]
pub struct ZeroReport {
    pub zero: bool,
    pub trials: u32,
    pub exact: bool,
    /// Sampled point and residual magnitude that refuted the identity.
    pub witness: Option<(Vec<(String, String)>, f64)>,
}

pub fn is_zero(e: &Expr, cfg: &Config) -> Result<bool> {
    Ok(zero_report(e, cfg)?.zero)
}

pub fn zero_report(e: &Expr, cfg: &Config) -> Result<ZeroReport> {
    if let Node::Rat(r) = e.node() {
        return Ok(ZeroReport {
            zero: r.is_zero(),
            trials: 0,
            exact: true,
            witness: None,
        });
    }
    let vars: Vec<String> = e.free_vars().into_iter().collect();
    let exact = e.is_rational_only();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let budget = 8 * cfg.trials;
    let mut spent = 0u32;
    let mut trial = 0u32;
    while trial < cfg.trials {
        let pt = sample_point(&vars, &mut rng, cfg);
        let outcome = if exact {
            eval_rat(e, &pt).map(|v| {
                if v.is_zero() {
                    None
                } else {
                    Some(num_traits::ToPrimitive::to_f64(&v).unwrap_or(f64::NAN).abs())
                }
            })
        } else {
            let oracle = Oracle { seed: cfg.seed, index: trial };
            eval(e, &pt, Some(&oracle), cfg.prec).map(|out| {
                let mag = out.value.to_f64().abs();
                let bound = cfg.tol * (1.0 + out.max_mag);
                if mag <= bound {
                    None
                } else {
                    Some(mag)
                }
            })
        };
        match outcome {
            Ok(None) => trial += 1,
            Ok(Some(mag)) => {
                let witness = pt
                    .vars
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_string()))
                    .collect();
                return Ok(ZeroReport {
                    zero: false,
                    trials: trial + 1,
                    exact,
                    witness: Some((witness, mag)),
                });
            }
            Err(Error::Singular(_)) => {
                spent += 1;
                if spent > budget {
                    return Err(Error::DomainExhausted(format!(
                        "{} singular samples while testing {}",
                        spent, e
                    )));
                }
            }
            Err(other) => return Err(other),
        }
    }
    Ok(ZeroReport {
        zero: true,
        trials: cfg.trials,
        exact,
        witness: None,
    })
}

/// Test two expressions for equality as functions.
pub fn exprs_equal(a: &Expr, b: &Expr, cfg: &Config) -> Result<bool> {
    is_zero(&(a.clone() - b.clone()), cfg)
}

/// Sample a rational in [lo, hi] with denominator at most max_den.
pub fn sample_rat(rng: &mut ChaCha12Rng, cfg: &Config) -> Rat {
    let lo = Rat::new(cfg.lo.0.into(), cfg.lo.1.into());
    let hi = Rat::new(cfg.hi.0.into(), cfg.hi.1.into());
    let den: i64 = rng.gen_range(1..=cfg.max_den as i64);
    let den_r = Rat::from_integer(den.into());
    let lo_num = (lo * den_r.clone()).ceil().to_integer();
    let hi_num = (hi * den_r).floor().to_integer();
    // The interval always contains an integer multiple for den >= 1.
    let span = (&hi_num - &lo_num).max(0.into());
    let pick: i64 = rng.gen_range(0..=num_traits::ToPrimitive::to_i64(&span).unwrap_or(0));
    Rat::new(lo_num + num_bigint::BigInt::from(pick), den.into())
}

pub fn sample_point(vars: &[String], rng: &mut ChaCha12Rng, cfg: &Config) -> Point {
    let mut pt = Point::new();
    for v in vars {
        pt.set(v, sample_rat(rng, cfg));
    }
    let min_sep = Rat::new(cfg.min_sep.0.into(), cfg.min_sep.1.into());
    for (p, q) in SEPARATED_PAIRS {
        let (Some(a), Some(b)) = (pt.vars.get(p), pt.vars.get(q)) else {
            continue;
        };
        let mut bv = b.clone();
        let av = a.clone();
        let mut tries = 0;
        while (bv.clone() - av.clone()).abs() < min_sep && tries < 64 {
            bv = sample_rat(rng, cfg);
            tries += 1;
        }
        pt.set(q, bv);
    }
    pt
}

/// Free variables of several expressions, merged and sorted.
pub fn all_vars(es: &[&Expr]) -> Vec<String> {
    let mut set = BTreeSet::new();
    for e in es {
        set.extend(e.free_vars());
    }
    set.into_iter().collect()
}
