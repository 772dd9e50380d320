//! The classification data as verifiable records.
//!
//! Each case couples a right-hand-side template f(t,x,u), usually involving
//! an arbitrary function F, with the generators of its symmetry algebra and
//! the stored twelve characteristics. On top of the main list sit the variant
//! normal forms, the coarser sublist for right-hand sides depending on x-t
//! alone, the named maps between those (T1..T5), three reductions of the
//! inverse-square case to second order ODEs, and three limit processes that
//! contract a parametric case onto a neighbour. Everything is data plus a
//! verifier; nothing here is trusted without being recomputed.

use std::collections::BTreeMap;

use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::equiv::EquivTransform;
use crate::error::{Error, Result};
use crate::expr::zero::sample_rat;
use crate::expr::{eval, is_zero, parse_expr, parse_one, Expr, ParseSession, Point, Rat};
use crate::invariants::{check_subalgebra, tuple12, ExtNat, InvariantTuple, Subalgebra};
use crate::symcheck::is_symmetry;
use crate::vfield::{parse_vf, VectorField};
use crate::Config;

/// Parameter values the test sweeps use for q-cases.
pub fn q_samples() -> Vec<Rat> {
    vec![rat(1, 1), rat(-1, 2), rat(3, 1)]
}

/// Parameter values the test sweeps use for p-cases.
pub fn p_samples() -> Vec<Rat> {
    vec![rat(2, 1), rat(-3, 1)]
}

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

fn ext(v: i64) -> ExtNat {
    if v < 0 {
        ExtNat::Inf
    } else {
        ExtNat::Fin(v as u32)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Main,
    Variant,
    K2,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Main => "main",
            Section::Variant => "variant",
            Section::K2 => "k2",
        }
    }
}

struct CaseData {
    id: &'static str,
    section: Section,
    /// Parameter name with its excluded rational values.
    param: Option<(&'static str, &'static [(i64, i64)])>,
    f: &'static str,
    gens: &'static [&'static str],
    /// Twelve characteristics as printed, -1 standing for an infinite entry.
    stored: Option<[i64; 12]>,
    /// Case 13 style: generators come from a functional schema, not a list.
    schema: bool,
    notes: &'static str,
}

const NO_PARAM: Option<(&str, &[(i64, i64)])> = None;
const Q_NONZERO: Option<(&str, &[(i64, i64)])> = Some(("q", &[(0, 1)]));
const Q_NOT_0_M1: Option<(&str, &[(i64, i64)])> = Some(("q", &[(0, 1), (-1, 1)]));
const P_NOT_M1_0: Option<(&str, &[(i64, i64)])> = Some(("p", &[(-1, 1), (0, 1)]));

const MAIN_CASES: &[CaseData] = &[
    CaseData {
        id: "0",
        section: Section::Main,
        param: NO_PARAM,
        f: "F(t,x,u)",
        gens: &[],
        stored: Some([0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
        schema: false,
        notes: "general equation, no extension",
    },
    CaseData {
        id: "1",
        section: Section::Main,
        param: NO_PARAM,
        f: "F(x,u)",
        gens: &["Dt(1)"],
        stored: Some([1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "2",
        section: Section::Main,
        param: NO_PARAM,
        f: "F(x-t,u)",
        gens: &["Dt(1) + Dx(1)"],
        stored: Some([1, 1, 1, 0, 0, 0, 1, 0, 0, 1, 1, 0]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "3",
        section: Section::Main,
        param: NO_PARAM,
        f: "exp(t) * F(x, exp(-t)*u)",
        gens: &["Dt(1) + I"],
        stored: Some([1, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "4",
        section: Section::Main,
        param: NO_PARAM,
        f: "exp(x+t) * F(x-t, exp(-x-t)*u)",
        gens: &["Dt(1) + Dx(1) + 2*I"],
        stored: Some([1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "5",
        section: Section::Main,
        param: NO_PARAM,
        f: "exp(t) * F(exp(-t)*u)",
        gens: &["Dt(1) + I", "Dx(1)"],
        stored: Some([1, 2, 1, 1, 1, 0, 1, 1, 1, 1, 0, 2]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "6",
        section: Section::Main,
        param: NO_PARAM,
        f: "exp(x+t) * F(exp(-x-t)*u)",
        gens: &["Dt(1) + I", "Dx(1) + I"],
        stored: Some([1, 2, 1, 1, 0, 0, 1, 1, 1, 1, 1, 2]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "7",
        section: Section::Main,
        param: Q_NONZERO,
        f: "abs(x-t)^(-q-2) * F(abs(x-t)^q * u)",
        gens: &["Dt(1) + Dx(1)", "vf{ tau = t; xi = x; eta1 = -q }"],
        stored: Some([2, 2, 2, 1, 0, 0, 1, 0, 0, 1, 1, 1]),
        schema: false,
        notes: "q nonzero",
    },
    CaseData {
        id: "8",
        section: Section::Main,
        param: Q_NONZERO,
        f: "abs(x)^(-q-2) * F(abs(x)^q * u)",
        gens: &["Dt(1)", "vf{ tau = t; xi = x; eta1 = -q }"],
        stored: Some([2, 2, 1, 1, 1, 0, 1, 1, 0, 1, 0, 1]),
        schema: false,
        notes: "q nonzero",
    },
    CaseData {
        id: "9",
        section: Section::Main,
        param: NO_PARAM,
        f: "F(u)",
        gens: &["Dt(1)", "Dx(1)", "Dt(t) - Dx(x)"],
        stored: Some([2, 3, 2, 0, 1, 1, 3, 1, 1, 2, 2, 0]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "10",
        section: Section::Main,
        param: NO_PARAM,
        f: "F(u) * (x-t)^(-2)",
        gens: &["Dt(1) + Dx(1)", "Dt(t) + Dx(x)", "Dt(t^2) + Dx(x^2)"],
        stored: Some([3, 3, 3, 0, 0, 0, 3, 0, 0, 3, 3, 0]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "11",
        section: Section::Main,
        param: NO_PARAM,
        f: "exp(u/x)",
        gens: &["Dt(1)", "Dt(t) - Z(x)", "Dx(x) + I"],
        stored: Some([2, 3, 1, 1, 2, 0, 2, 2, 1, 2, 0, 2]),
        schema: false,
        notes: "",
    },
    CaseData {
        id: "12",
        section: Section::Main,
        param: P_NOT_M1_0,
        f: "abs(u)^p * u",
        gens: &[
            "Dt(1)",
            "Dx(1)",
            "Dt(t) - Dx(x)",
            "vf{ tau = -p*t; eta1 = 1 }",
        ],
        stored: Some([2, 4, 2, 1, 1, 1, 3, 2, 1, 2, 2, 2]),
        schema: false,
        notes: "p outside {-1, 0}",
    },
    CaseData {
        id: "13",
        section: Section::Main,
        param: NO_PARAM,
        f: "exp(u)",
        gens: &[],
        stored: Some([-1, -1, -1, 0, -1, -1, -1, -1, -1, -1, -1, 0]),
        schema: true,
        notes: "generators come from the (tau, xi) schema",
    },
];

const VARIANT_CASES: &[CaseData] = &[
    CaseData {
        id: "3'",
        section: Section::Variant,
        param: NO_PARAM,
        f: "F(x, u/t)",
        gens: &["Dt(t) + I"],
        stored: Some([1, 1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2]),
        schema: false,
        notes: "same characteristics as case 3",
    },
    CaseData {
        id: "4'",
        section: Section::Variant,
        param: NO_PARAM,
        f: "F(x/t, u/(t*x))",
        gens: &["Dt(t) + Dx(x) + 2*I"],
        stored: Some([1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1]),
        schema: false,
        notes: "same characteristics as case 4",
    },
    CaseData {
        id: "5'",
        section: Section::Variant,
        param: NO_PARAM,
        f: "F(u/t)",
        gens: &["Dt(t) + I", "Dx(1)"],
        stored: Some([1, 2, 1, 1, 1, 0, 1, 1, 1, 1, 0, 2]),
        schema: false,
        notes: "same characteristics as case 5",
    },
    CaseData {
        id: "6'",
        section: Section::Variant,
        param: NO_PARAM,
        f: "F(u/(t*x))",
        gens: &["Dt(t) + I", "Dx(x) + I"],
        stored: Some([1, 2, 1, 1, 0, 0, 1, 1, 1, 1, 1, 2]),
        schema: false,
        notes: "same characteristics as case 6",
    },
    CaseData {
        id: "8'a",
        section: Section::Variant,
        param: Q_NOT_0_M1,
        f: "F(abs(x)^q * u)",
        gens: &["Dt(1)", "vf{ tau = (q+1)*t; xi = -x; eta1 = q }"],
        stored: Some([2, 2, 1, 1, 1, 0, 1, 1, 0, 1, 0, 1]),
        schema: false,
        notes: "q outside {0, -1}; same characteristics as case 8",
    },
    CaseData {
        id: "8'b",
        section: Section::Variant,
        param: NO_PARAM,
        f: "F(exp(-x) * u)",
        gens: &["Dt(1)", "Dt(t) + Dx(1) + I"],
        stored: Some([2, 2, 1, 1, 1, 0, 1, 1, 0, 1, 0, 1]),
        schema: false,
        notes: "same characteristics as case 8",
    },
];

const K2_CASES: &[CaseData] = &[
    CaseData {
        id: "2",
        section: Section::K2,
        param: NO_PARAM,
        f: "F(x-t,u)",
        gens: &["Dt(1) + Dx(1)"],
        stored: None,
        schema: false,
        notes: "kernel of the x-t subclass; identical to main case 2",
    },
    CaseData {
        id: "6",
        section: Section::K2,
        param: NO_PARAM,
        f: "exp(-x+t) * F(exp(x-t) * u)",
        gens: &["Dt(1) + I", "Dx(1) - I"],
        stored: None,
        schema: false,
        notes: "",
    },
    CaseData {
        id: "7",
        section: Section::K2,
        param: Q_NONZERO,
        f: "abs(x-t)^(-q-2) * F(abs(x-t)^q * u)",
        gens: &["Dt(1) + Dx(1)", "vf{ tau = t; xi = x; eta1 = -q }"],
        stored: None,
        schema: false,
        notes: "q nonzero; identical to main case 7",
    },
    CaseData {
        id: "9a",
        section: Section::K2,
        param: NO_PARAM,
        f: "F(u)",
        gens: &["Dt(1)", "Dx(1)", "Dt(t) - Dx(x)"],
        stored: None,
        schema: false,
        notes: "identical to main case 9",
    },
    CaseData {
        id: "9b",
        section: Section::K2,
        param: NO_PARAM,
        f: "F(u) * exp(x-t)",
        gens: &["Dt(exp(t))", "Dx(exp(-x))", "Dt(1) + Dx(1)"],
        stored: None,
        schema: false,
        notes: "maps to 9a by T3",
    },
    CaseData {
        id: "10a",
        section: Section::K2,
        param: NO_PARAM,
        f: "F(u) * (x-t)^(-2)",
        gens: &["Dt(1) + Dx(1)", "Dt(t) + Dx(x)", "Dt(t^2) + Dx(x^2)"],
        stored: None,
        schema: false,
        notes: "identical to main case 10",
    },
    CaseData {
        id: "10b",
        section: Section::K2,
        param: NO_PARAM,
        f: "F(u) * cos(x-t)^(-2)",
        gens: &[
            "Dt(1) + Dx(1)",
            "Dt(cos(2*t)) - Dx(cos(2*x))",
            "Dt(sin(2*t)) - Dx(sin(2*x))",
        ],
        stored: None,
        schema: false,
        notes: "maps to 10a by T4b",
    },
    CaseData {
        id: "10c",
        section: Section::K2,
        param: NO_PARAM,
        f: "F(u) * cosh(x-t)^(-2)",
        gens: &[
            "Dt(1) + Dx(1)",
            "Dt(exp(2*t)) - Dx(exp(2*x))",
            "Dt(exp(-2*t)) - Dx(exp(-2*x))",
        ],
        stored: None,
        schema: false,
        notes: "maps to 10a by T4c",
    },
    CaseData {
        id: "10d",
        section: Section::K2,
        param: NO_PARAM,
        f: "F(u) * sinh(x-t)^(-2)",
        gens: &[
            "Dt(1) + Dx(1)",
            "Dt(exp(2*t)) + Dx(exp(2*x))",
            "Dt(exp(-2*t)) + Dx(exp(-2*x))",
        ],
        stored: None,
        schema: false,
        notes: "maps to 10a by T4d",
    },
    CaseData {
        id: "12a",
        section: Section::K2,
        param: P_NOT_M1_0,
        f: "abs(u)^p * u",
        gens: &[
            "Dt(1)",
            "Dx(1)",
            "Dt(t) - Dx(x)",
            "vf{ tau = -p*t; eta1 = 1 }",
        ],
        stored: None,
        schema: false,
        notes: "p outside {-1, 0}; identical to main case 12",
    },
    CaseData {
        id: "12b",
        section: Section::K2,
        param: P_NOT_M1_0,
        f: "abs(u)^p * u * exp(x-t)",
        gens: &[
            "Dt(exp(t))",
            "Dx(exp(-x))",
            "Dt(1) + Dx(1)",
            "vf{ tau = p; eta1 = 1 }",
        ],
        stored: None,
        schema: false,
        notes: "p outside {-1, 0}; maps to 12a by T3",
    },
    CaseData {
        id: "13",
        section: Section::K2,
        param: NO_PARAM,
        f: "exp(u)",
        gens: &[],
        stored: None,
        schema: true,
        notes: "identical to main case 13",
    },
];

/// One fully instantiated classification case.
#[derive(Debug, Clone)]
pub struct CaseRecord {
    pub id: String,
    pub section: String,
    pub param: Option<(String, Rat)>,
    pub f: Expr,
    pub generators: Vec<VectorField>,
    /// Generators come from the functional (tau, xi) schema instead.
    pub schema: bool,
    pub stored: Option<InvariantTuple>,
    pub notes: String,
}

impl CaseRecord {
    pub fn algebra(&self) -> Subalgebra {
        let mut params = BTreeMap::new();
        if let Some((name, v)) = &self.param {
            params.insert(name.clone(), v.clone());
        }
        Subalgebra::with_params(&self.id, self.generators.clone(), params)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let gens: Vec<serde_json::Value> = self
            .generators
            .iter()
            .map(|g| serde_json::Value::String(g.render()))
            .collect();
        let tuple = match &self.stored {
            Some(t) => serde_json::Value::Array(
                t.as_array()
                    .iter()
                    .map(|e| match e {
                        ExtNat::Fin(v) => serde_json::json!(v),
                        ExtNat::Inf => serde_json::json!("inf"),
                    })
                    .collect(),
            ),
            None => serde_json::Value::Null,
        };
        serde_json::json!({
            "id": self.id,
            "section": self.section,
            "param": self.param.as_ref().map(|(n, v)| serde_json::json!({
                "name": n,
                "value": v.to_string(),
            })),
            "f": self.f.to_string(),
            "generators": gens,
            "schema": self.schema,
            "tuple12": tuple,
            "notes": self.notes,
        })
    }
}

fn parse_template(src: &str, param: Option<(&str, &Rat)>) -> Result<Expr> {
    let mut sess = ParseSession::new();
    let e = parse_expr(src, &mut sess)?;
    Ok(match param {
        Some((name, v)) => e.subst1(name, &Expr::rat(v.clone())),
        None => e,
    })
}

fn parse_generator(src: &str, param: Option<(&str, &Rat)>) -> Result<VectorField> {
    let mut sess = ParseSession::new();
    let lit = parse_vf(src, &mut sess)?;
    let lit = match param {
        Some((name, v)) => {
            let val = Expr::rat(v.clone());
            crate::vfield::VfLiteral {
                tau: lit.tau.subst1(name, &val),
                xi: lit.xi.subst1(name, &val),
                eta1: lit.eta1.subst1(name, &val),
                eta0: lit.eta0.subst1(name, &val),
            }
        }
        None => lit,
    };
    VectorField::from_literal(&lit)
}

fn instantiate(data: &CaseData, param: Option<&Rat>) -> Result<CaseRecord> {
    let bound = match (&data.param, param) {
        (Some((name, excluded)), Some(v)) => {
            if excluded.iter().any(|(n, d)| *v == rat(*n, *d)) {
                return Err(Error::Invalid(format!(
                    "case {}: {} = {} is outside the parameter domain",
                    data.id, name, v
                )));
            }
            Some((*name, v))
        }
        (Some((name, _)), None) => {
            return Err(Error::Invalid(format!(
                "case {} needs a value for {}",
                data.id, name
            )))
        }
        (None, Some(_)) => {
            return Err(Error::Invalid(format!(
                "case {} takes no parameter",
                data.id
            )))
        }
        (None, None) => None,
    };
    let f = parse_template(data.f, bound)?;
    for v in f.free_vars() {
        if v != "t" && v != "x" && v != "u" {
            return Err(Error::Invalid(format!(
                "case {}: template leaks variable {}",
                data.id, v
            )));
        }
    }
    let mut generators = Vec::new();
    for g in data.gens {
        generators.push(parse_generator(g, bound)?);
    }
    Ok(CaseRecord {
        id: data.id.to_string(),
        section: data.section.name().to_string(),
        param: bound.map(|(n, v)| (n.to_string(), v.clone())),
        f,
        generators,
        schema: data.schema,
        stored: data.stored.map(|row| InvariantTuple::new(row.map(ext))),
        notes: data.notes.to_string(),
    })
}

/// Look up a case by id. Main ids are "0".."13", variant ids carry a prime
/// mark ("3'", "8'a"), subclass ids a letter ("9b", "12a"). Parametric cases
/// require the parameter.
pub fn get_case(id: &str, param: Option<&Rat>) -> Result<CaseRecord> {
    for table in [MAIN_CASES, VARIANT_CASES, K2_CASES] {
        if let Some(data) = table.iter().find(|d| d.id == id) {
            return instantiate(data, param);
        }
    }
    Err(Error::Invalid(format!("unknown case id {:?}", id)))
}

fn default_param(data: &CaseData) -> Option<Rat> {
    data.param.map(|(name, _)| {
        if name == "p" {
            p_samples()[0].clone()
        } else {
            q_samples()[0].clone()
        }
    })
}

fn expand_table(table: &[CaseData], all_samples: bool) -> Result<Vec<CaseRecord>> {
    let mut out = Vec::new();
    for data in table {
        match &data.param {
            None => out.push(instantiate(data, None)?),
            Some((name, _)) => {
                let samples = if !all_samples {
                    vec![default_param(data).unwrap()]
                } else if *name == "p" {
                    p_samples()
                } else {
                    q_samples()
                };
                for v in samples {
                    out.push(instantiate(data, Some(&v))?);
                }
            }
        }
    }
    Ok(out)
}

/// The fourteen main cases, parametric ones at their first sample value.
pub fn main_cases() -> Result<Vec<CaseRecord>> {
    expand_table(MAIN_CASES, false)
}

/// The six variant normal forms, parametric ones at their first sample value.
pub fn variant_cases() -> Result<Vec<CaseRecord>> {
    expand_table(VARIANT_CASES, false)
}

/// The subclass list for right-hand sides with f_t + f_x = 0, parametric
/// entries expanded over the sample values.
pub fn k2_cases() -> Result<Vec<CaseRecord>> {
    expand_table(K2_CASES, true)
}

/// Generator of the exponential case from free profiles (tau(t), xi(x)): the
/// u-component is forced to -(tau' + xi').
pub fn liouville_generator(tau: &Expr, xi: &Expr) -> Result<VectorField> {
    let eta0 = -Expr::add(vec![tau.diff("t"), xi.diff("x")]);
    VectorField::new(tau.clone(), xi.clone(), Rat::zero(), eta0)
}

fn random_poly(var: &str, deg: usize, rng: &mut ChaCha12Rng, cfg: &Config) -> Expr {
    let mut terms = Vec::new();
    for k in 0..=deg {
        let mut c = sample_rat(rng, cfg);
        if rng.gen_bool(0.5) {
            c = -c;
        }
        terms.push(Expr::mul(vec![
            Expr::rat(c),
            Expr::pow(Expr::var(var), Expr::int(k as i64)),
        ]));
    }
    Expr::add(terms)
}

/// Per-check outcome of verifying one case record.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub id: String,
    pub param: Option<(String, Rat)>,
    /// One entry per generator (per sampled schema instance for a schema
    /// case).
    pub symmetry_ok: Vec<bool>,
    pub closure_ok: bool,
    /// None when the record stores no finite tuple to compare against.
    pub tuple_ok: Option<bool>,
    pub computed: Option<InvariantTuple>,
    /// Indices (0-based, in tuple order) where computed and stored disagree.
    pub mismatch: Vec<usize>,
    pub passed: bool,
}

impl CaseReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "id": self.id,
            "param": self.param.as_ref().map(|(n, v)| serde_json::json!({
                "name": n,
                "value": v.to_string(),
            })),
            "symmetry_ok": self.symmetry_ok,
            "closure_ok": self.closure_ok,
            "tuple_ok": self.tuple_ok,
            "computed": self.computed.as_ref().map(|t| t.to_string()),
            "stored_mismatch_indices": self.mismatch,
            "passed": self.passed,
        })
    }
}

pub fn verify_case(id: &str, param: Option<&Rat>, cfg: &Config) -> Result<CaseReport> {
    verify_record(&get_case(id, param)?, cfg)
}

pub fn verify_record(rec: &CaseRecord, cfg: &Config) -> Result<CaseReport> {
    if rec.schema {
        return verify_schema_record(rec, cfg);
    }
    let mut symmetry_ok = Vec::new();
    for g in &rec.generators {
        symmetry_ok.push(is_symmetry(&rec.f, g, cfg)?);
    }
    let closure_ok =
        rec.generators.is_empty() || check_subalgebra(&rec.algebra(), cfg).is_ok();
    let finite = rec
        .stored
        .as_ref()
        .map(|t| t.as_array().iter().all(|e| e.is_finite()))
        .unwrap_or(false);
    let (tuple_ok, computed, mismatch) = if finite {
        let stored = rec.stored.as_ref().unwrap();
        let got = tuple12(&rec.algebra(), cfg)?;
        let mismatch: Vec<usize> = got
            .as_array()
            .iter()
            .zip(stored.as_array().iter())
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect();
        (Some(mismatch.is_empty()), Some(got), mismatch)
    } else {
        (None, None, Vec::new())
    };
    let passed =
        symmetry_ok.iter().all(|b| *b) && closure_ok && tuple_ok.unwrap_or(true);
    Ok(CaseReport {
        id: rec.id.clone(),
        param: rec.param.clone(),
        symmetry_ok,
        closure_ok,
        tuple_ok,
        computed,
        mismatch,
        passed,
    })
}

fn verify_schema_record(rec: &CaseRecord, cfg: &Config) -> Result<CaseReport> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x13d7);
    let mut gens = Vec::new();
    for i in 0..10 {
        let tau = random_poly("t", i % 5, &mut rng, cfg);
        let xi = random_poly("x", (i + 2) % 5, &mut rng, cfg);
        gens.push(liouville_generator(&tau, &xi)?);
    }
    let mut symmetry_ok = Vec::new();
    for g in &gens {
        symmetry_ok.push(is_symmetry(&rec.f, g, cfg)?);
    }
    // Brackets of schema members must stay schema shaped: the u-component of
    // the bracket again equals -(tau' + xi') of the bracket.
    let mut closure_ok = true;
    for a in 0..4 {
        for b in (a + 1)..4 {
            let br = gens[a].bracket(&gens[b]);
            if !br.eta1.is_zero() {
                closure_ok = false;
                continue;
            }
            let shape = Expr::add(vec![
                br.eta0.clone(),
                br.tau.diff("t"),
                br.xi.diff("x"),
            ]);
            if !is_zero(&shape, cfg)? {
                closure_ok = false;
            }
        }
    }
    let passed = symmetry_ok.iter().all(|b| *b) && closure_ok;
    Ok(CaseReport {
        id: rec.id.clone(),
        param: rec.param.clone(),
        symmetry_ok,
        closure_ok,
        tuple_ok: None,
        computed: None,
        mismatch: Vec::new(),
        passed,
    })
}

/// Distinct (m, n, k) triples over the extension cases 1..12, with the case
/// ids realizing each.
pub fn mnk_census() -> Result<BTreeMap<(u32, u32, u32), Vec<String>>> {
    let mut census: BTreeMap<(u32, u32, u32), Vec<String>> = BTreeMap::new();
    for data in MAIN_CASES {
        if data.id == "0" || data.id == "13" {
            continue;
        }
        let row = data.stored.expect("finite cases store a tuple");
        let triple = (row[0] as u32, row[1] as u32, row[2] as u32);
        census.entry(triple).or_default().push(data.id.to_string());
    }
    Ok(census)
}

/// One named equivalence map between subclass cases, with the templates it
/// connects.
#[derive(Debug, Clone)]
pub struct AdmissibleRecord {
    pub label: String,
    pub f_source: Expr,
    pub f_target: Expr,
    pub transform: EquivTransform,
    pub note: String,
}

impl AdmissibleRecord {
    pub fn verify(&self, cfg: &Config) -> Result<bool> {
        self.transform.verify_map(&self.f_source, &self.f_target, cfg)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label,
            "f_source": self.f_source.to_string(),
            "f_target": self.f_target.to_string(),
            "transform": {
                "t": self.transform.t_map.to_string(),
                "x": self.transform.x_map.to_string(),
                "c": self.transform.c.to_string(),
                "u0": self.transform.u0.to_string(),
                "swap": self.transform.swap,
            },
            "note": self.note,
        })
    }
}

fn adm(
    label: &str,
    src: &str,
    tgt: &str,
    t_map: &str,
    x_map: &str,
    note: &str,
) -> Result<AdmissibleRecord> {
    Ok(AdmissibleRecord {
        label: label.to_string(),
        f_source: parse_one(src)?,
        f_target: parse_one(tgt)?,
        transform: EquivTransform::new(
            parse_one(t_map)?,
            parse_one(x_map)?,
            Rat::new(1.into(), 1.into()),
            Expr::zero(),
            false,
        )?,
        note: note.to_string(),
    })
}

/// The time-scaling shear at a concrete nonzero value.
pub fn t2_record(gamma: &Rat) -> Result<AdmissibleRecord> {
    if gamma.is_zero() {
        return Err(Error::Invalid(
            "shear parameter must be nonzero".to_string(),
        ));
    }
    adm(
        &format!("T2 gamma={}", gamma),
        "F(u)",
        "F(u)",
        &format!("t * exp({})", gamma),
        &format!("x * exp(-({}))", gamma),
        "reciprocal scalings of t and x",
    )
}

/// The exponential-case reparametrization for a concrete monotone pair
/// (T(t), X(x)) with positive T'X'.
pub fn t5_record(t_map_src: &str, x_map_src: &str) -> Result<AdmissibleRecord> {
    let t_map = parse_one(t_map_src)?;
    let x_map = parse_one(x_map_src)?;
    let u0 = -Expr::fun(
        crate::expr::Builtin::Ln,
        Expr::mul(vec![t_map.diff("t"), x_map.diff("x")]),
    );
    Ok(AdmissibleRecord {
        label: format!("T5 T={}, X={}", t_map_src, x_map_src),
        f_source: parse_one("exp(u)")?,
        f_target: parse_one("exp(u)")?,
        transform: EquivTransform::new(
            t_map,
            x_map,
            Rat::new(1.into(), 1.into()),
            u0,
            false,
        )?,
        note: "u shifts by -ln(T'X')".to_string(),
    })
}

/// The named maps, parametric families expanded over sample values.
pub fn k2_admissible() -> Result<Vec<AdmissibleRecord>> {
    let mut out = vec![adm(
        "T1",
        "F(u)",
        "-F(u)",
        "-t",
        "x",
        "time reflection flips the sign of f",
    )?];
    for gamma in [rat(1, 1), rat(-2, 1), rat(1, 3)] {
        out.push(t2_record(&gamma)?);
    }
    out.push(adm(
        "T3",
        "F(u) * exp(x-t)",
        "F(u)",
        "-exp(-t)",
        "exp(x)",
        "removes the exponential factor",
    )?);
    out.push(adm(
        "T4a",
        "F(u) * (x-t)^(-2)",
        "F(u) * (x-t)^(-2)",
        "1/t",
        "1/x",
        "inversion preserves the inverse-square form",
    )?);
    out.push(adm(
        "T4b",
        "-F(u) * cos(x-t)^(-2)",
        "-F(u) * (x-t)^(-2)",
        "tan(t)",
        "-cot(x)",
        "x map mirrored so the image depends on x-t alone",
    )?);
    out.push(adm(
        "T4c",
        "-F(u) * cosh(x-t)^(-2)",
        "F(u) * (x-t)^(-2)",
        "-exp(2*t)/2",
        "exp(2*x)/2",
        "",
    )?);
    out.push(adm(
        "T4d",
        "F(u) * sinh(x-t)^(-2)",
        "F(u) * (x-t)^(-2)",
        "exp(2*t)/2",
        "exp(2*x)/2",
        "",
    )?);
    for (t_src, x_src) in [("exp(t)", "x"), ("t^3 + t", "x"), ("t", "exp(x)")] {
        out.push(t5_record(t_src, x_src)?);
    }
    Ok(out)
}

/// One additional equivalence between subclass cases, checked relationally.
#[derive(Debug, Clone)]
pub struct EquivalenceLink {
    pub via: String,
    pub source: String,
    pub target: String,
    pub f_source: Expr,
    pub f_target: Expr,
    pub transform: EquivTransform,
}

impl EquivalenceLink {
    pub fn verify(&self, cfg: &Config) -> Result<bool> {
        self.transform.verify_map(&self.f_source, &self.f_target, cfg)
    }
}

fn link(
    via: &str,
    source: &str,
    target: &str,
    src_tpl: &str,
    tgt_tpl: &str,
    param: Option<(&str, &Rat)>,
) -> Result<EquivalenceLink> {
    let by = k2_admissible()?
        .into_iter()
        .find(|r| r.label == via || r.label.starts_with(&format!("{} ", via)))
        .ok_or_else(|| Error::Invalid(format!("no admissible record {}", via)))?;
    Ok(EquivalenceLink {
        via: via.to_string(),
        source: source.to_string(),
        target: target.to_string(),
        f_source: parse_template(src_tpl, param)?,
        f_target: parse_template(tgt_tpl, param)?,
        transform: by.transform,
    })
}

/// The additional equivalences between subclass cases.
pub fn k2_links() -> Result<Vec<EquivalenceLink>> {
    let mut out = vec![
        link("T1", "9a", "9a", "F(u)", "-F(u)", None)?,
        link("T3", "9b", "9a", "F(u) * exp(x-t)", "F(u)", None)?,
    ];
    for p in p_samples() {
        out.push(link(
            "T3",
            "12b",
            "12a",
            "abs(u)^p * u * exp(x-t)",
            "abs(u)^p * u",
            Some(("p", &p)),
        )?);
    }
    out.push(link(
        "T4b",
        "10b",
        "10a",
        "F(u) * cos(x-t)^(-2)",
        "F(u) * (x-t)^(-2)",
        None,
    )?);
    out.push(link(
        "T4c",
        "10c",
        "10a",
        "F(u) * cosh(x-t)^(-2)",
        "-F(u) * (x-t)^(-2)",
        None,
    )?);
    out.push(link(
        "T4d",
        "10d",
        "10a",
        "F(u) * sinh(x-t)^(-2)",
        "F(u) * (x-t)^(-2)",
        None,
    )?);
    Ok(out)
}

/// Outcome of verifying the whole subclass block.
#[derive(Debug, Clone)]
pub struct K2Report {
    pub kernel_ok: bool,
    /// The eleven extension records, parametric ones aggregated over samples.
    pub cases: Vec<(String, bool)>,
    /// The eight named maps, parametric ones aggregated over samples.
    pub admissible: Vec<(String, bool)>,
    pub links: Vec<(String, bool)>,
    pub passed: bool,
}

impl K2Report {
    pub fn to_json(&self) -> serde_json::Value {
        let pairs = |v: &Vec<(String, bool)>| {
            v.iter()
                .map(|(n, b)| serde_json::json!({ "label": n, "ok": b }))
                .collect::<Vec<_>>()
        };
        serde_json::json!({
            "kernel_ok": self.kernel_ok,
            "cases": pairs(&self.cases),
            "admissible": pairs(&self.admissible),
            "links": pairs(&self.links),
            "passed": self.passed,
        })
    }
}

pub fn verify_k2(cfg: &Config) -> Result<K2Report> {
    let mut kernel_ok = true;
    let mut cases = Vec::new();
    for data in K2_CASES {
        let samples = match &data.param {
            None => vec![None],
            Some((name, _)) => {
                let vals = if *name == "p" { p_samples() } else { q_samples() };
                vals.into_iter().map(Some).collect()
            }
        };
        let mut ok = true;
        for v in samples {
            let rec = instantiate(data, v.as_ref())?;
            let report = verify_record(&rec, cfg)?;
            // Only the symmetry side matters here; tuples are main-list data.
            ok &= report.symmetry_ok.iter().all(|b| *b);
        }
        if data.id == "2" {
            kernel_ok = ok;
        } else {
            cases.push((data.id.to_string(), ok));
        }
    }

    let mut grouped: Vec<(String, bool)> = Vec::new();
    for rec in k2_admissible()? {
        let family = rec
            .label
            .split_whitespace()
            .next()
            .unwrap_or(&rec.label)
            .to_string();
        let ok = rec.verify(cfg)?;
        match grouped.iter_mut().find(|(n, _)| *n == family) {
            Some(entry) => entry.1 &= ok,
            None => grouped.push((family, ok)),
        }
    }

    let mut links = Vec::new();
    for l in k2_links()? {
        let label = format!("{}: {} -> {}", l.via, l.source, l.target);
        let ok = l.verify(cfg)?;
        match links.iter_mut().find(|(n, _): &&mut (String, bool)| *n == label) {
            Some(entry) => entry.1 &= ok,
            None => links.push((label, ok)),
        }
    }

    let passed = kernel_ok
        && cases.iter().all(|(_, b)| *b)
        && grouped.iter().all(|(_, b)| *b)
        && links.iter().all(|(_, b)| *b);
    Ok(K2Report {
        kernel_ok,
        cases,
        admissible: grouped,
        links,
        passed,
    })
}

/// One reduction of the inverse-square case to a second order ODE for
/// u = phi(omega).
#[derive(Debug, Clone)]
pub struct ReductionRecord {
    pub label: String,
    pub generator: VectorField,
    pub omega: Expr,
    /// Right-hand side of phi'' = R, written in the variables phi and omega.
    pub rhs: Expr,
    pub f: Expr,
}

impl ReductionRecord {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label,
            "generator": self.generator.render(),
            "omega": self.omega.to_string(),
            "rhs": self.rhs.to_string(),
            "f": self.f.to_string(),
        })
    }
}

fn reduction(label: &str, gen: &str, omega: &str, rhs: &str) -> Result<ReductionRecord> {
    let mut sess = ParseSession::new();
    Ok(ReductionRecord {
        label: label.to_string(),
        generator: VectorField::from_literal(&parse_vf(gen, &mut sess)?)?,
        omega: parse_one(omega)?,
        rhs: parse_one(rhs)?,
        f: parse_one("F(u) * (x-t)^(-2)")?,
    })
}

/// The three reductions: translation, scaling, and the arctangent flow.
pub fn reductions() -> Result<Vec<ReductionRecord>> {
    Ok(vec![
        reduction(
            "translation",
            "Dt(1) + Dx(1)",
            "x - t",
            "-F(phi) * omega^(-2)",
        )?,
        reduction(
            "scaling",
            "Dt(t) + Dx(x)",
            "1/2 * ln(abs(x)) - 1/2 * ln(abs(t))",
            "-F(phi) * sinh(omega)^(-2)",
        )?,
        reduction(
            "arctangent",
            "vf{ tau = 1 + t^2; xi = 1 + x^2 }",
            "arctan(x) - arctan(t)",
            "-F(phi) * sin(omega)^(-2)",
        )?,
    ])
}

/// Checks that u = phi(omega) turns the equation into phi'' = R: the
/// generator must annihilate omega and carry no u-component, and the residual
/// u_tx - f must equal omega_t * omega_x * (phi'' - R) identically.
pub fn verify_reduction(r: &ReductionRecord, cfg: &Config) -> Result<bool> {
    let annihilates = is_zero(
        &Expr::add(vec![
            Expr::mul(vec![r.generator.tau.clone(), r.omega.diff("t")]),
            Expr::mul(vec![r.generator.xi.clone(), r.omega.diff("x")]),
        ]),
        cfg,
    )?;
    let plain = r.generator.eta1.is_zero() && is_zero(&r.generator.eta0, cfg)?;
    if !annihilates || !plain {
        return Ok(false);
    }
    let u = Expr::call("phi", vec![r.omega.clone()]);
    let lhs = Expr::add(vec![
        u.diff("t").diff("x"),
        -r.f.subst1("u", &u),
    ]);
    let phi2 = Expr::call_deriv("phi", vec![2], vec![r.omega.clone()]);
    let r_val = r.rhs.subst1("phi", &u).subst1("omega", &r.omega);
    let rhs = Expr::mul(vec![
        r.omega.diff("t"),
        r.omega.diff("x"),
        Expr::add(vec![phi2, -r_val]),
    ]);
    is_zero(&Expr::add(vec![lhs, -rhs]), cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitPath {
    /// Evaluation parameters 10^2, 10^3, 10^4.
    ToInfinity,
    /// Evaluation parameters 10^-2, 10^-3, 10^-4.
    ToZero,
}

/// One limit process contracting a parametric family onto a target algebra.
#[derive(Debug, Clone)]
pub struct LimitRecord {
    pub label: String,
    pub source: String,
    pub target: String,
    pub path: LimitPath,
    /// Scaled source generators, to be pushed forward (strings over q).
    source_gens: &'static [&'static str],
    /// Transform component maps (t map, t inverse, x map, x inverse), all
    /// over q; empty string means identity.
    transform: [&'static str; 4],
    /// Expected pushforward family at parameter q, paired with the
    /// contracted generator it converges to.
    family: &'static [(&'static str, &'static str)],
    pub notes: String,
}

fn instantiate_vf(src: &str, q: &Rat) -> Result<VectorField> {
    parse_generator(src, Some(("q", q)))
}

impl LimitRecord {
    /// The source generators pushed through the transform at a concrete
    /// parameter value, in record order.
    pub fn pushforward_family(&self, q: &Rat) -> Result<Vec<VectorField>> {
        let tr = limit_transform(self.transform, q)?;
        self.source_gens
            .iter()
            .map(|g| tr.pushforward_vf(&instantiate_vf(g, q)?))
            .collect()
    }
}

fn limit_transform(spec: [&str; 4], q: &Rat) -> Result<EquivTransform> {
    let part = |src: &str| -> Result<Option<Expr>> {
        if src.is_empty() {
            Ok(None)
        } else {
            Ok(Some(parse_template(src, Some(("q", q)))?))
        }
    };
    let t_map = part(spec[0])?;
    let t_inv = part(spec[1])?;
    let x_map = part(spec[2])?;
    let x_inv = part(spec[3])?;
    match (t_map, x_map) {
        (Some(t), Some(x)) => {
            EquivTransform::new(t, x, Rat::new(1.into(), 1.into()), Expr::zero(), false)?
                .with_inverses(t_inv, x_inv)
        }
        (Some(t), None) => EquivTransform::dt(t, t_inv),
        (None, Some(x)) => EquivTransform::dx(x, x_inv),
        (None, None) => Ok(EquivTransform::identity()),
    }
}

/// The three limit processes kept as records.
pub fn limits() -> Vec<LimitRecord> {
    vec![
        LimitRecord {
            label: "8 -> 5".to_string(),
            source: "8".to_string(),
            target: "5".to_string(),
            path: LimitPath::ToInfinity,
            source_gens: &["Dt(1)", "vf{ tau = t/q; xi = x/q; eta1 = -1 }"],
            transform: ["", "", "q*(x-1)", "x/q + 1"],
            family: &[
                ("Dt(1)", "Dt(1)"),
                ("vf{ tau = t/q; xi = 1 + x/q; eta1 = -1 }", "Dx(1) - I"),
            ],
            notes: "scaled second generator contracts to Dx(1) - I; the \
                    target algebra is an equivalent copy of case 5"
                .to_string(),
        },
        LimitRecord {
            label: "2 -> 1".to_string(),
            source: "2".to_string(),
            target: "1".to_string(),
            path: LimitPath::ToZero,
            source_gens: &["vf{ tau = q; xi = q }"],
            transform: ["t/q", "q*t", "", ""],
            family: &[("vf{ tau = 1; xi = q }", "Dt(1)")],
            notes: "pre-scaled translation contracts to Dt(1)".to_string(),
        },
        LimitRecord {
            label: "7 -> 10".to_string(),
            source: "7".to_string(),
            target: "10".to_string(),
            path: LimitPath::ToZero,
            source_gens: &["Dt(1) + Dx(1)", "vf{ tau = t; xi = x; eta1 = -q }"],
            transform: ["", "", "", ""],
            family: &[
                ("Dt(1) + Dx(1)", "Dt(1) + Dx(1)"),
                ("vf{ tau = t; xi = x; eta1 = -q }", "Dt(t) + Dx(x)"),
            ],
            notes: "no transform needed; the scaling generator loses its \
                    u-component"
                .to_string(),
        },
    ]
}

/// Outcome of checking one limit record.
#[derive(Debug, Clone)]
pub struct LimitReport {
    pub label: String,
    pub q_test: Rat,
    /// Per generator: pushforward at q_test equals the recorded family.
    pub matched: Vec<bool>,
    /// Summed max-abs coefficient deviation from the contracted generators
    /// at the three evaluation parameters, in path order.
    pub deviations: [f64; 3],
    pub monotone: bool,
    pub passed: bool,
}

impl LimitReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label,
            "q_test": self.q_test.to_string(),
            "matched": self.matched,
            "deviations": self.deviations,
            "monotone": self.monotone,
            "passed": self.passed,
        })
    }
}

fn vf_deviation(a: &VectorField, b: &VectorField, cfg: &Config) -> Result<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0xd311);
    let eta1_gap = (a.eta1.clone() - b.eta1.clone())
        .to_f64()
        .unwrap_or(f64::INFINITY)
        .abs();
    let mut dev = eta1_gap;
    for _ in 0..25 {
        let tv = sample_rat(&mut rng, cfg);
        let xv = sample_rat(&mut rng, cfg);
        let pt = Point::of(&[("t", tv), ("x", xv)]);
        for (ca, cb) in [(&a.tau, &b.tau), (&a.xi, &b.xi), (&a.eta0, &b.eta0)] {
            let gap = Expr::add(vec![ca.clone(), -cb.clone()]);
            let out = eval(&gap, &pt, None, cfg.prec)?;
            let v = out.value.to_f64().abs();
            if v > dev {
                dev = v;
            }
        }
    }
    Ok(dev)
}

pub fn verify_limit(l: &LimitRecord, q_test: &Rat, cfg: &Config) -> Result<LimitReport> {
    if q_test.is_zero() {
        return Err(Error::Invalid(
            "limit parameter must be nonzero".to_string(),
        ));
    }
    let tr = limit_transform(l.transform, q_test)?;
    let mut matched = Vec::new();
    for (src, (fam, _)) in l.source_gens.iter().zip(l.family.iter()) {
        let pushed = tr.pushforward_vf(&instantiate_vf(src, q_test)?)?;
        let expected = instantiate_vf(fam, q_test)?;
        matched.push(pushed.equals(&expected, cfg)?);
    }
    let qs: [Rat; 3] = match l.path {
        LimitPath::ToInfinity => [rat(100, 1), rat(1000, 1), rat(10000, 1)],
        LimitPath::ToZero => [rat(1, 100), rat(1, 1000), rat(1, 10000)],
    };
    let mut deviations = [0.0_f64; 3];
    for (slot, q) in deviations.iter_mut().zip(qs.iter()) {
        let mut total = 0.0;
        for (fam, contracted) in l.family {
            let a = instantiate_vf(fam, q)?;
            let b = instantiate_vf(contracted, q)?;
            total += vf_deviation(&a, &b, cfg)?;
        }
        *slot = total;
    }
    let monotone = deviations[0] > deviations[1] && deviations[1] > deviations[2];
    let passed = matched.iter().all(|b| *b) && monotone;
    Ok(LimitReport {
        label: l.label.clone(),
        q_test: q_test.clone(),
        matched,
        deviations,
        monotone,
        passed,
    })
}

/// Rewrites f(t,x,u) in the coordinates (x+t, x-t, u), in which the equation
/// takes the standard second order form. The output expression reuses the
/// names t, x, u for the new coordinates. The substitution t -> (t-x)/2,
/// x -> (t+x)/2 is checked against the operator identity on 25 sampled jets.
pub fn convert_spacetime(f: &Expr, cfg: &Config) -> Result<Expr> {
    let mut map = BTreeMap::new();
    map.insert(
        "t".to_string(),
        parse_one("(t - x)/2").expect("fixed expression"),
    );
    map.insert(
        "x".to_string(),
        parse_one("(t + x)/2").expect("fixed expression"),
    );
    let converted = f.substitute(&map);

    // u_tx in the old coordinates must equal u_tt - u_xx in the new ones,
    // checked on sampled polynomial jets.
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x5ac3);
    for trial in 0..5 {
        let profile = {
            let mut terms = Vec::new();
            for dt in 0..=2_i64 {
                for dx in 0..=2_i64 {
                    let mut c = sample_rat(&mut rng, cfg);
                    if rng.gen_bool(0.5) {
                        c = -c;
                    }
                    terms.push(Expr::mul(vec![
                        Expr::rat(c),
                        Expr::pow(Expr::var("t"), Expr::int(dt)),
                        Expr::pow(Expr::var("x"), Expr::int(dx)),
                    ]));
                }
            }
            Expr::add(terms)
        };
        let mixed = profile.diff("t").diff("x");
        let checked = profile.substitute(&map);
        let wave = Expr::add(vec![
            checked.diff("t").diff("t"),
            -checked.diff("x").diff("x"),
        ]);
        // Compare at 5 points per profile: wave is written in the new
        // coordinates, so evaluate it at (x+t, x-t).
        for _ in 0..5 {
            let tv = sample_rat(&mut rng, cfg);
            let xv = sample_rat(&mut rng, cfg);
            let old_pt = Point::of(&[("t", tv.clone()), ("x", xv.clone())]);
            let new_pt = Point::of(&[("t", xv.clone() + tv.clone()), ("x", xv - tv)]);
            let lhs = crate::expr::eval_rat(&mixed, &old_pt)?;
            let rhs = crate::expr::eval_rat(&wave, &new_pt)?;
            if lhs != rhs {
                return Err(Error::Invalid(format!(
                    "coordinate identity failed on trial {}",
                    trial
                )));
            }
        }
    }
    Ok(converted)
}

/// The whole catalog as a JSON document; expression strings use the module
/// grammar.
pub fn catalog_json() -> Result<String> {
    let collect = |records: Vec<CaseRecord>| {
        records
            .iter()
            .map(CaseRecord::to_json)
            .collect::<Vec<_>>()
    };
    let doc = serde_json::json!({
        "cases": collect(main_cases()?),
        "variants": collect(variant_cases()?),
        "k2": collect(k2_cases()?),
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::exprs_equal;
    use crate::invariants::solve_combination;

    fn cfg() -> Config {
        Config::default()
    }

    fn p(src: &str) -> Expr {
        parse_one(src).unwrap()
    }

    #[test]
    fn case_lookup_honors_parameter_domains() {
        let gen = |src: &str| {
            let mut sess = ParseSession::new();
            VectorField::from_literal(&parse_vf(src, &mut sess).unwrap()).unwrap()
        };

        let c11 = get_case("11", None).unwrap();
        assert!(exprs_equal(&c11.f, &p("exp(u/x)"), &cfg()).unwrap());
        assert_eq!(c11.generators.len(), 3);
        assert!(c11.generators[1]
            .equals(&gen("Dt(t) - Z(x)"), &cfg())
            .unwrap());

        let q1 = rat(1, 1);
        let c7 = get_case("7", Some(&q1)).unwrap();
        assert!(exprs_equal(&c7.f, &p("abs(x-t)^(-3) * F(abs(x-t) * u)"), &cfg()).unwrap());
        assert!(c7.generators[1]
            .equals(&gen("vf{ tau = t; xi = x; eta1 = -1 }"), &cfg())
            .unwrap());

        assert!(get_case("7", Some(&rat(0, 1))).is_err());
        assert!(get_case("12", Some(&rat(0, 1))).is_err());
        assert!(get_case("12", Some(&rat(-1, 1))).is_err());
        assert!(get_case("7", None).is_err());
        assert!(get_case("9", Some(&q1)).is_err());
        assert!(get_case("99", None).is_err());
        assert!(get_case("8'a", Some(&rat(-1, 1))).is_err());
    }

    #[test]
    fn catalog_shape_matches_the_published_lists() {
        assert_eq!(main_cases().unwrap().len(), 14);
        assert_eq!(variant_cases().unwrap().len(), 6);
        // 12 rows; q expands to 3 samples, each p case to 2.
        assert_eq!(k2_cases().unwrap().len(), 16);
        assert_eq!(k2_admissible().unwrap().len(), 12);
    }

    #[test]
    fn main_cases_verify_for_all_parameter_samples() {
        let cfg = cfg();
        for data in MAIN_CASES {
            let samples: Vec<Option<Rat>> = match &data.param {
                None => vec![None],
                Some((name, _)) => {
                    let vals = if *name == "p" { p_samples() } else { q_samples() };
                    vals.into_iter().map(Some).collect()
                }
            };
            for s in samples {
                let report = verify_case(data.id, s.as_ref(), &cfg).unwrap();
                assert!(
                    report.symmetry_ok.iter().all(|b| *b),
                    "case {} param {:?}: symmetry",
                    data.id,
                    s
                );
                assert!(report.closure_ok, "case {} param {:?}: closure", data.id, s);
                if data.id == "12" {
                    // The stored row disagrees with the recomputed
                    // characteristics in exactly one slot; keep that honest.
                    assert_eq!(report.tuple_ok, Some(false));
                    assert_eq!(report.mismatch, vec![8]);
                    let got = report.computed.unwrap();
                    assert_eq!(got.j23, ExtNat::Fin(2));
                    assert!(!report.passed);
                } else if data.id == "13" {
                    assert_eq!(report.tuple_ok, None);
                    assert_eq!(report.symmetry_ok.len(), 10);
                    assert!(report.passed);
                } else {
                    assert_eq!(
                        report.tuple_ok,
                        Some(true),
                        "case {} param {:?}: tuple {:?}",
                        data.id,
                        s,
                        report.computed
                    );
                    assert!(report.passed);
                }
            }
        }
    }

    #[test]
    fn variant_records_verify() {
        let cfg = cfg();
        for data in VARIANT_CASES {
            let samples: Vec<Option<Rat>> = match &data.param {
                None => vec![None],
                Some(_) => q_samples().into_iter().map(Some).collect(),
            };
            for s in samples {
                let report = verify_case(data.id, s.as_ref(), &cfg).unwrap();
                assert!(report.passed, "variant {} param {:?}", data.id, s);
            }
        }
    }

    #[test]
    fn scaling_case_brackets_realize_the_expected_constants() {
        let cfg = cfg();
        let rec = get_case("10", None).unwrap();
        let s = rec.algebra();
        let q1 = &rec.generators[0];
        let q2 = &rec.generators[1];
        let q3 = &rec.generators[2];
        let c12 = solve_combination(&s, &q1.bracket(q2), &cfg).unwrap().unwrap();
        assert_eq!(c12, vec![rat(1, 1), rat(0, 1), rat(0, 1)]);
        let c13 = solve_combination(&s, &q1.bracket(q3), &cfg).unwrap().unwrap();
        assert_eq!(c13, vec![rat(0, 1), rat(2, 1), rat(0, 1)]);
        let c23 = solve_combination(&s, &q2.bracket(q3), &cfg).unwrap().unwrap();
        assert_eq!(c23, vec![rat(0, 1), rat(0, 1), rat(1, 1)]);
    }

    #[test]
    fn tampered_generator_fails_the_symmetry_check() {
        let cfg = cfg();
        let mut rec = get_case("9", None).unwrap();
        let mut sess = ParseSession::new();
        rec.generators[2] =
            VectorField::from_literal(&parse_vf("Dt(t) + Dx(x)", &mut sess).unwrap()).unwrap();
        let report = verify_record(&rec, &cfg).unwrap();
        assert_eq!(report.symmetry_ok, vec![true, true, false]);
        assert!(!report.passed);
    }

    #[test]
    fn census_of_projection_triples_matches_the_published_nine() {
        let census = mnk_census().unwrap();
        let expected: BTreeMap<(u32, u32, u32), Vec<String>> = [
            ((1, 1, 0), vec!["1", "3"]),
            ((1, 1, 1), vec!["2", "4"]),
            ((1, 2, 1), vec!["5", "6"]),
            ((2, 2, 2), vec!["7"]),
            ((2, 2, 1), vec!["8"]),
            ((2, 3, 2), vec!["9"]),
            ((3, 3, 3), vec!["10"]),
            ((2, 3, 1), vec!["11"]),
            ((2, 4, 2), vec!["12"]),
        ]
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().map(String::from).collect()))
        .collect();
        assert_eq!(census, expected);
    }

    #[test]
    fn subclass_block_verifies_end_to_end() {
        let cfg = cfg();
        let report = verify_k2(&cfg).unwrap();
        assert!(report.kernel_ok);
        assert_eq!(report.cases.len(), 11);
        assert_eq!(report.admissible.len(), 8);
        assert_eq!(report.links.len(), 6);
        assert!(report.passed, "{:?}", report);
    }

    #[test]
    fn shear_rejects_the_degenerate_parameter() {
        assert!(t2_record(&rat(0, 1)).is_err());
        assert!(t2_record(&rat(1, 3)).is_ok());
    }

    #[test]
    fn admissible_records_fail_under_a_single_sign_flip() {
        let cfg = cfg();
        for rec in k2_admissible().unwrap() {
            let mut flipped = rec.clone();
            flipped.f_target = -flipped.f_target;
            assert!(
                !flipped.verify(&cfg).unwrap(),
                "{} should fail with the target sign flipped",
                rec.label
            );
        }
    }

    #[test]
    fn reductions_verify_and_reject_a_flipped_sign() {
        let cfg = cfg();
        let recs = reductions().unwrap();
        assert_eq!(recs.len(), 3);
        for r in &recs {
            assert!(verify_reduction(r, &cfg).unwrap(), "{}", r.label);
        }
        let mut bad = recs[0].clone();
        bad.rhs = -bad.rhs;
        assert!(!verify_reduction(&bad, &cfg).unwrap());
    }

    #[test]
    fn limit_records_match_and_contract() {
        let cfg = cfg();
        let recs = limits();

        let r85 = &recs[0];
        let rep = verify_limit(r85, &rat(3, 1), &cfg).unwrap();
        assert!(rep.matched.iter().all(|b| *b));
        assert!(rep.monotone, "deviations {:?}", rep.deviations);
        assert!(rep.passed);
        // The printed family at q = 3 is (t/3) dt + (1 + x/3) dx - u du.
        let tr = limit_transform(r85.transform, &rat(3, 1)).unwrap();
        let pushed = tr
            .pushforward_vf(&instantiate_vf(r85.source_gens[1], &rat(3, 1)).unwrap())
            .unwrap();
        let expected =
            instantiate_vf("vf{ tau = t/3; xi = 1 + x/3; eta1 = -1 }", &rat(3, 1)).unwrap();
        assert!(pushed.equals(&expected, &cfg).unwrap());

        let rep21 = verify_limit(&recs[1], &rat(1, 2), &cfg).unwrap();
        assert!(rep21.passed, "{:?}", rep21.deviations);
        let rep710 = verify_limit(&recs[2], &rat(1, 2), &cfg).unwrap();
        assert!(rep710.passed, "{:?}", rep710.deviations);

        assert!(verify_limit(&recs[0], &rat(0, 1), &cfg).is_err());
    }

    #[test]
    fn spacetime_conversion_rewrites_the_argument() {
        let cfg = cfg();
        let out = convert_spacetime(&p("F(x-t, u)"), &cfg).unwrap();
        assert!(exprs_equal(&out, &p("F(x, u)"), &cfg).unwrap());
        let out = convert_spacetime(&p("exp(u)"), &cfg).unwrap();
        assert!(exprs_equal(&out, &p("exp(u)"), &cfg).unwrap());
        let out = convert_spacetime(&p("F(t, x, u)"), &cfg).unwrap();
        assert!(exprs_equal(&out, &p("F((t-x)/2, (t+x)/2, u)"), &cfg).unwrap());
    }

    #[test]
    fn schema_generator_forces_the_shape() {
        let g = liouville_generator(&p("t^2"), &p("sin(x)")).unwrap();
        assert!(g.eta1.is_zero());
        assert!(exprs_equal(&g.eta0, &p("-2*t - cos(x)"), &cfg()).unwrap());
        assert!(liouville_generator(&p("x"), &p("x")).is_err());
    }

    #[test]
    fn catalog_export_is_valid_json() {
        let doc = catalog_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["cases"].as_array().unwrap().len(), 14);
        assert_eq!(v["variants"].as_array().unwrap().len(), 6);
        assert_eq!(v["k2"].as_array().unwrap().len(), 16);
        assert_eq!(v["cases"][12]["param"]["name"], "p");
        assert_eq!(v["cases"][13]["tuple12"][0], "inf");
    }
}
