//! Symmetry checks for u_tx = f(t, x, u).
//!
//! A vector field Q = tau(t) d_t + xi(x) d_x + (eta1 u + eta0(t,x)) d_u
//! generates a Lie symmetry of u_tx = f exactly when the classifying
//! residual
//!
//!   tau f_t + xi f_x + (eta1 u + eta0) f_u - (eta1 - tau' - xi') f - eta0_tx
//!
//! vanishes identically. On top of the pointwise check this module detects,
//! for an f already reduced to a single-variable shape fhat(w), whether fhat
//! satisfies a constant-coefficient template
//!
//!   (a w + b) fhat' + c fhat - d = 0,
//!
//! the shape every further symmetry extension must force, and classifies the
//! solution vectors into target cases. The functional extension equations of
//! the multi-variable shapes are verified against supplied parameters rather
//! than solved.

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::expr::eval::{eval, Point};
use crate::expr::zero::sample_rat;
use crate::expr::{is_zero, Expr, Rat};
use crate::linalg;
use crate::vfield::VectorField;
use crate::Config;

/// Left-hand side of the classifying equation as a normalized expression.
pub fn classifying_residual(f: &Expr, q: &VectorField) -> Expr {
    let tau = q.pi_t().clone();
    let xi = q.pi_x().clone();
    let eta1 = Expr::rat(q.p3().clone());
    let multiplier = eta1 - tau.diff("t") - xi.diff("x");
    tau * f.diff("t") + xi * f.diff("x") + q.eta() * f.diff("u")
        - multiplier * f.clone()
        - q.z_part().diff("t").diff("x")
}

pub fn is_symmetry(f: &Expr, q: &VectorField, cfg: &Config) -> Result<bool> {
    is_zero(&classifying_residual(f, q), cfg)
}

/// One member (a, b, c, d) of the detected solution space of
/// (a w + b) fhat' + c fhat - d = 0.
#[derive(Debug, Clone)]
pub struct TemplateVector {
    /// Normalized float coordinates: largest magnitude scaled to 1, first
    /// nonzero entry positive.
    pub float: [f64; 4],
    /// Rationalized coordinates, present only when certified symbolically.
    pub exact: Option<[Rat; 4]>,
    /// (a, b) != (0, 0), so the template really constrains fhat'.
    pub ab_nonzero: bool,
    /// c != -a when a != 0, c != 0 when a = 0; degenerate vectors only
    /// admit fhat with vanishing second derivative.
    pub nondegenerate: bool,
}

impl TemplateVector {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "float": self.float,
            "exact": self.exact.as_ref().map(|e| {
                e.iter().map(|r| r.to_string()).collect::<Vec<_>>()
            }),
            "ab_nonzero": self.ab_nonzero,
            "nondegenerate": self.nondegenerate,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct TemplateSolution {
    pub vectors: Vec<TemplateVector>,
}

impl TemplateSolution {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// Sample the template rows (w fhat'(w), fhat'(w), fhat(w), -1) and return
/// the nullspace. fhat must be concrete and univariate in w with
/// fhat'' not identically zero. Three independent batches must agree on the
/// dimension; candidate vectors are rationalized and certified symbolically.
pub fn detect_template(fhat: &Expr, sample_count: usize, cfg: &Config) -> Result<TemplateSolution> {
    if fhat.contains_abstract() {
        return Err(Error::Invalid(
            "template detection needs a concrete expression, free of function symbols".into(),
        ));
    }
    let vars = fhat.free_vars();
    if let Some(v) = vars.iter().find(|v| v.as_str() != "w") {
        return Err(Error::Invalid(format!(
            "template detection works in the variable w only, found {v}"
        )));
    }
    if sample_count < 6 {
        return Err(Error::Invalid(format!(
            "sample_count {sample_count} is below the minimum 6"
        )));
    }
    let d1 = fhat.diff("w");
    if is_zero(&d1.diff("w"), cfg)? {
        return Err(Error::Invalid(
            "second derivative vanishes identically; outside the class".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x7e31_a2c5);
    let mut batches = Vec::with_capacity(3);
    for _ in 0..3 {
        let m = sample_rows(fhat, &d1, sample_count, &mut rng, cfg)?;
        batches.push(linalg::f64_nullspace(&m, 1e-9));
    }
    if batches[1].len() != batches[0].len() || batches[2].len() != batches[0].len() {
        return Err(Error::RankUnstable);
    }
    let mut vectors = Vec::new();
    for v in &batches[0] {
        let float = normalize_float4(v);
        let exact = linalg::rationalize_vector(v, 1_000_000).and_then(|cand| {
            let cand = [cand[0].clone(), cand[1].clone(), cand[2].clone(), cand[3].clone()];
            let residual = template_residual(&cand, fhat, &d1);
            match is_zero(&residual, cfg) {
                Ok(true) => Some(cand),
                _ => None,
            }
        });
        let (ab_nonzero, nondegenerate) = match &exact {
            Some([a, b, c, _]) => (
                !(a.is_zero() && b.is_zero()),
                if a.is_zero() { !c.is_zero() } else { *c != -a.clone() },
            ),
            None => {
                let [a, b, c, _] = float;
                (
                    a.abs() > 1e-7 || b.abs() > 1e-7,
                    if a.abs() > 1e-7 { (c + a).abs() > 1e-7 } else { c.abs() > 1e-7 },
                )
            }
        };
        vectors.push(TemplateVector { float, exact, ab_nonzero, nondegenerate });
    }
    Ok(TemplateSolution { vectors })
}

fn template_residual(v: &[Rat; 4], fhat: &Expr, d1: &Expr) -> Expr {
    let lin = Expr::rat(v[0].clone()) * Expr::var("w") + Expr::rat(v[1].clone());
    lin * d1.clone() + Expr::rat(v[2].clone()) * fhat.clone() - Expr::rat(v[3].clone())
}

fn sample_rows(
    fhat: &Expr,
    d1: &Expr,
    n: usize,
    rng: &mut ChaCha12Rng,
    cfg: &Config,
) -> Result<DMatrix<f64>> {
    let mut used = std::collections::BTreeSet::new();
    let mut flat: Vec<f64> = Vec::with_capacity(4 * n);
    let budget = 8 * n;
    let mut spent = 0usize;
    while flat.len() < 4 * n {
        if spent > budget {
            return Err(Error::DomainExhausted(format!(
                "{spent} singular or repeated samples while probing the template"
            )));
        }
        let w = sample_rat(rng, cfg);
        if !used.insert(w.clone()) {
            spent += 1;
            continue;
        }
        let pt = Point::of(&[("w", w.clone())]);
        let fv = eval(fhat, &pt, None, cfg.prec);
        let dv = eval(d1, &pt, None, cfg.prec);
        let (fv, dv) = match (fv, dv) {
            (Ok(a), Ok(b)) => (a.value.to_f64(), b.value.to_f64()),
            (Err(Error::Singular(_)), _) | (_, Err(Error::Singular(_))) => {
                spent += 1;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let wf = num_traits::ToPrimitive::to_f64(&w).unwrap_or(f64::NAN);
        let row = [wf * dv, dv, fv, -1.0];
        if row.iter().any(|x| !x.is_finite()) {
            spent += 1;
            continue;
        }
        let top = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        flat.extend(row.iter().map(|x| x / top));
    }
    Ok(DMatrix::from_row_slice(n, 4, &flat))
}

fn normalize_float4(v: &[f64]) -> [f64; 4] {
    let mut scale = 0.0f64;
    for &x in v {
        if x.abs() > scale.abs() {
            scale = x;
        }
    }
    let mut out = [0.0f64; 4];
    if scale == 0.0 {
        return out;
    }
    for (slot, &x) in out.iter_mut().zip(v) {
        *slot = x / scale;
    }
    let first = out.iter().find(|x| x.abs() > 1e-7).copied().unwrap_or(1.0);
    if first < 0.0 {
        for x in out.iter_mut() {
            *x = -*x;
        }
    }
    out
}

/// Outcome of matching a detected template space against the constraint of
/// one of the two-dimensional seed cases.
#[derive(Debug, Clone)]
pub struct ExtensionReport {
    pub case: String,
    pub solution_basis: Vec<TemplateVector>,
    /// Per basis vector: does it meet the case constraint.
    pub constraint_flags: Vec<bool>,
    /// Named target case when an admissible constrained vector exists.
    pub target_case: Option<String>,
}

impl ExtensionReport {
    pub fn extension_detected(&self) -> bool {
        self.target_case.is_some()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "case": self.case,
            "solution_basis": self.solution_basis.iter().map(|v| v.to_json()).collect::<Vec<_>>(),
            "constraint_flags": self.constraint_flags,
            "target_case": self.target_case,
        })
    }
}

/// Check the solution space of the template against the constraint of the
/// seed case and name the target of the extension. Only vectors with exact
/// certified coordinates can satisfy a constraint.
pub fn classify_extension(
    case_id: u32,
    q: Option<&Rat>,
    sol: &TemplateSolution,
) -> Result<ExtensionReport> {
    if !(5..=9).contains(&case_id) {
        return Err(Error::Invalid(format!(
            "extension constraints are defined for cases 5 through 9, not {case_id}"
        )));
    }
    let qv = match (case_id, q) {
        (7, Some(r)) if !r.is_zero() => Some(r.clone()),
        (7, Some(_)) => return Err(Error::Invalid("case 7 needs a nonzero q".into())),
        (7, None) => return Err(Error::Invalid("case 7 needs the exponent q".into())),
        (_, _) => None,
    };
    let case = match &qv {
        Some(r) => format!("7 (q={r})"),
        None => case_id.to_string(),
    };
    let mut constraint_flags = Vec::with_capacity(sol.vectors.len());
    let mut target_case = None;
    for v in &sol.vectors {
        let Some([a, b, c, d]) = &v.exact else {
            constraint_flags.push(false);
            continue;
        };
        let ok = match case_id {
            5 => (a.clone() * d.clone()).is_zero(),
            6 => a.clone() * d.clone() == b.clone() * c.clone(),
            7 => {
                let q = qv.clone().unwrap();
                let two = Rat::from_integer(2.into());
                let c_required = -(Rat::one() + two.clone() / q.clone()) * a.clone();
                let d_required =
                    -(q.clone() + Rat::one()) * (q + two) * b.clone();
                *c == c_required && *d == d_required
            }
            _ => d.is_zero(),
        };
        constraint_flags.push(ok);
        if !(ok && target_case.is_none() && v.ab_nonzero && v.nondegenerate) {
            continue;
        }
        target_case = if !a.is_zero() {
            let p = -((a.clone() + c.clone()) / a.clone());
            Some(format!("12 (p={p})"))
        } else {
            // Case 6 forces b = 0 here and case 7 forces c = 0, both already
            // excluded by the admissibility flags.
            match case_id {
                5 | 8 => Some("11".to_string()),
                9 => Some("13".to_string()),
                _ => None,
            }
        };
    }
    Ok(ExtensionReport { case, solution_basis: sol.vectors.clone(), constraint_flags, target_case })
}

/// Parameters of the functional extension equations, one variant per seed
/// case whose reduced shape still involves arbitrary functions.
///
/// Naming of reduced variables: w stands for the single invariant argument
/// (e^{-t} u for Case3, x - t for both Case2 branches), w1 = x - t and
/// w2 = e^{-x-t} u for Case4.
#[derive(Debug, Clone)]
pub enum ExtensionParams {
    /// fhat(x, u); the extending field is delta t d_t + xi(x) d_x +
    /// (eta1 u + eta0(x)) d_u.
    Case1 { xi: Expr, eta1: Rat, eta0: Expr, delta: Rat },
    /// fhat(x, w); the extending field scales t and u together.
    Case3 { xi: Expr, delta: Rat },
    /// fhat(w, u), branch with vanishing kappa; kappa_prime must be 1 when
    /// delta = 0.
    Case2K0 { delta: Rat, kappa_prime: Rat, eta1: Rat, eta0: Expr },
    /// fhat(w, u), branch with kappa != 0 and (c1, c2) != (0, 0).
    Case2K { kappa: Rat, c1: Rat, c2: Rat, eta0: Expr },
    /// fhat(w1, w2) with (c1, c2) != (0, 0) and c1 != c2 when kappa = 0.
    Case4 { kappa: Rat, c1: Rat, c2: Rat, eta0: Expr },
}

fn require_zero_one(name: &str, r: &Rat) -> Result<()> {
    if r.is_zero() || r.is_one() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} must be 0 or 1, got {r}")))
    }
}

fn require_vars(component: &str, e: &Expr, allowed: &[&str]) -> Result<()> {
    for v in e.free_vars() {
        if !allowed.contains(&v.as_str()) {
            return Err(Error::VariableLeak {
                component: component.to_string(),
                allowed: allowed.join(", "),
                var: v,
            });
        }
    }
    Ok(())
}

/// Residual of the extension equation selected by the parameter variant,
/// with fhat substituted. Everything is moved to the left-hand side.
pub fn extension_residual(params: &ExtensionParams, fhat: &Expr, cfg: &Config) -> Result<Expr> {
    match params {
        ExtensionParams::Case1 { xi, eta1, eta0, delta } => {
            require_vars("xi", xi, &["x"])?;
            require_vars("eta0", eta0, &["x"])?;
            require_vars("fhat", fhat, &["x", "u"])?;
            require_zero_one("delta", delta)?;
            if is_zero(xi, cfg)? {
                return Err(Error::Invalid("xi must not vanish identically".into()));
            }
            let eta = Expr::rat(eta1.clone()) * Expr::var("u") + eta0.clone();
            let multiplier =
                Expr::rat(eta1.clone()) - Expr::rat(delta.clone()) - xi.diff("x");
            Ok(xi.clone() * fhat.diff("x") + eta * fhat.diff("u") - multiplier * fhat.clone())
        }
        ExtensionParams::Case3 { xi, delta } => {
            require_vars("xi", xi, &["x"])?;
            require_vars("fhat", fhat, &["x", "w"])?;
            require_zero_one("delta", delta)?;
            if is_zero(xi, cfg)? {
                return Err(Error::Invalid("xi must not vanish identically".into()));
            }
            let d = Expr::rat(delta.clone());
            let multiplier = d.clone() - xi.diff("x");
            Ok(xi.clone() * fhat.diff("x") + d * Expr::var("w") * fhat.diff("w")
                - multiplier * fhat.clone())
        }
        ExtensionParams::Case2K0 { delta, kappa_prime, eta1, eta0 } => {
            require_vars("eta0", eta0, &["w"])?;
            require_vars("fhat", fhat, &["w", "u"])?;
            require_zero_one("delta", delta)?;
            if delta.is_zero() && !kappa_prime.is_one() {
                return Err(Error::Invalid(
                    "kappa_prime must be 1 when delta = 0".into(),
                ));
            }
            let lin = Expr::rat(delta.clone()) * Expr::var("w") - Expr::rat(kappa_prime.clone());
            let eta = Expr::rat(eta1.clone()) * Expr::var("u") + eta0.clone();
            let multiplier = Expr::rat(eta1.clone() - Rat::from_integer(2.into()) * delta.clone());
            Ok(lin * fhat.diff("w") + eta * fhat.diff("u") - multiplier * fhat.clone()
                + eta0.diff("w").diff("w"))
        }
        ExtensionParams::Case2K { kappa, c1, c2, eta0 } => {
            require_vars("eta0", eta0, &["w"])?;
            require_vars("fhat", fhat, &["w", "u"])?;
            if kappa.is_zero() {
                return Err(Error::Invalid("kappa must be nonzero in this branch".into()));
            }
            if c1.is_zero() && c2.is_zero() {
                return Err(Error::Invalid("(c1, c2) must not both vanish".into()));
            }
            let k = Expr::rat(kappa.clone());
            let ekw = Expr::exp(k.clone() * Expr::var("w"));
            let lin = Expr::rat(c2.clone()) * ekw.clone() - Expr::rat(c1.clone());
            let round = Expr::rat(c1.clone()) + Expr::rat(c2.clone()) * ekw;
            Ok(lin * fhat.diff("w") + eta0.clone() * fhat.diff("u")
                + k.clone() * round * fhat.clone()
                - k * eta0.diff("w")
                + eta0.diff("w").diff("w"))
        }
        ExtensionParams::Case4 { kappa, c1, c2, eta0 } => {
            require_vars("eta0", eta0, &["w1"])?;
            require_vars("fhat", fhat, &["w1", "w2"])?;
            if c1.is_zero() && c2.is_zero() {
                return Err(Error::Invalid("(c1, c2) must not both vanish".into()));
            }
            if kappa.is_zero() && c1 == c2 {
                return Err(Error::Invalid("c1 = c2 degenerates when kappa = 0".into()));
            }
            let k = Expr::rat(kappa.clone());
            let w1 = Expr::var("w1");
            let w2 = Expr::var("w2");
            let ekw = Expr::exp(k.clone() * w1.clone());
            let emw = Expr::exp(-w1);
            let lin1 = Expr::rat(c2.clone()) * ekw.clone() - Expr::rat(c1.clone());
            let lin2 = emw.clone() * eta0.clone()
                - Expr::rat(c2.clone()) * w2.clone() * ekw.clone()
                - Expr::rat(c1.clone()) * w2;
            let round = Expr::rat(c1.clone()) + Expr::rat(c2.clone()) * ekw;
            let one = Rat::one();
            let two = Rat::from_integer(2.into());
            Ok(lin1 * fhat.diff("w1") + lin2 * fhat.diff("w2")
                + Expr::rat(kappa.clone() + one) * round * fhat.clone()
                - Expr::rat(kappa.clone() + two) * emw.clone() * eta0.diff("w1")
                + emw * eta0.diff("w1").diff("w1"))
        }
    }
}

pub fn verify_extension_eq(params: &ExtensionParams, fhat: &Expr, cfg: &Config) -> Result<bool> {
    let residual = extension_residual(params, fhat, cfg)?;
    is_zero(&residual, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::EquivTransform;
    use crate::expr::{parse_expr, parse_one, ParseSession};
    use crate::vfield::parse_vector_field;

    fn p(src: &str) -> Expr {
        parse_one(src).unwrap()
    }

    fn r(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    /// exact coordinates proportional to the given integer quadruple
    fn proportional(v: &TemplateVector, target: [i64; 4]) -> bool {
        let Some(ex) = &v.exact else { return false };
        let t: Vec<Rat> = target.iter().map(|&n| Rat::from_integer(n.into())).collect();
        // cross-ratios: ex[i] * t[j] == ex[j] * t[i] for all pairs
        for i in 0..4 {
            for j in 0..4 {
                if ex[i].clone() * t[j].clone() != ex[j].clone() * t[i].clone() {
                    return false;
                }
            }
        }
        ex.iter().zip(&t).any(|(a, b)| !a.is_zero() && !b.is_zero())
    }

    #[test]
    fn classifying_residual_matches_direct_expansion() {
        let cfg = Config::default();
        let mut sess = ParseSession::new();

        // tau = t^2, xi = x, eta0 = -(2t + 1): a symmetry of f = exp(u)
        let q = parse_vector_field("Dt(t^2) + Dx(x) + Z(-(2*t+1))", &mut sess).unwrap();
        let res = classifying_residual(&p("exp(u)"), &q);
        assert!(is_zero(&res, &cfg).unwrap());

        // time translation of any f(u) leaves an exactly zero residual
        let f = parse_expr("F(u)", &mut sess).unwrap();
        let dt = parse_vector_field("Dt(1)", &mut sess).unwrap();
        assert_eq!(classifying_residual(&f, &dt), Expr::zero());

        // the pure scaling I is not a symmetry of generic f(u)
        let i = parse_vector_field("I", &mut sess).unwrap();
        let res = classifying_residual(&f, &i);
        let expanded = parse_expr("u*F_1(u) - F(u)", &mut sess).unwrap();
        assert_eq!(res, expanded);
        assert!(!is_zero(&res, &cfg).unwrap());
    }

    #[test]
    fn is_symmetry_accepts_known_generators_and_rejects_others() {
        let cfg = Config::default();
        let mut sess = ParseSession::new();

        let f = p("abs(u)^2*u");
        let q = parse_vector_field("Dt(-2*t) + I", &mut sess).unwrap();
        assert!(is_symmetry(&f, &q, &cfg).unwrap());

        let f = p("exp(u/x)");
        let q = parse_vector_field("Dt(t) + Z(-x)", &mut sess).unwrap();
        assert!(is_symmetry(&f, &q, &cfg).unwrap());

        let f = p("exp(u)");
        let q = parse_vector_field("Dt(1) + I", &mut sess).unwrap();
        assert!(!is_symmetry(&f, &q, &cfg).unwrap());
    }

    #[test]
    fn symmetry_check_is_equivariant() {
        let cfg = Config::default();
        let mut sess = ParseSession::new();
        let pairs: Vec<(Expr, VectorField, bool)> = vec![
            (
                p("abs(u)^2*u"),
                parse_vector_field("Dt(-2*t) + I", &mut sess).unwrap(),
                true,
            ),
            (
                p("exp(u)"),
                parse_vector_field("Dt(1) + I", &mut sess).unwrap(),
                false,
            ),
        ];
        let transforms = vec![
            EquivTransform::dt(p("2*t"), Some(p("1/2*t"))).unwrap(),
            EquivTransform::z(p("t*x")).unwrap(),
            EquivTransform::du(r(3, 1)).unwrap(),
            EquivTransform::interchange(),
        ];
        for (f, q, expect) in &pairs {
            for tr in &transforms {
                let f2 = tr.act_on_f(f).unwrap();
                let q2 = tr.pushforward_vf(q).unwrap();
                assert_eq!(
                    is_symmetry(&f2, &q2, &cfg).unwrap(),
                    *expect,
                    "equivariance broke under {}",
                    tr.render()
                );
            }
        }
    }

    #[test]
    fn template_detection_recovers_known_spaces() {
        let cfg = Config::default();

        let sol = detect_template(&p("w^3"), 8, &cfg).unwrap();
        assert_eq!(sol.dim(), 1);
        assert!(proportional(&sol.vectors[0], [1, 0, -3, 0]));
        assert!(sol.vectors[0].ab_nonzero);
        assert!(sol.vectors[0].nondegenerate);

        let sol = detect_template(&p("exp(w)"), 8, &cfg).unwrap();
        assert_eq!(sol.dim(), 1);
        assert!(proportional(&sol.vectors[0], [0, 1, -1, 0]));

        let sol = detect_template(&p("exp(w) + exp(-2*w)"), 8, &cfg).unwrap();
        assert_eq!(sol.dim(), 0);

        // an affine-plus-power shape has an inhomogeneous template
        let sol = detect_template(&p("w^3 + 5"), 8, &cfg).unwrap();
        assert_eq!(sol.dim(), 1);
        assert!(proportional(&sol.vectors[0], [1, 0, -3, -15]));
    }

    #[test]
    fn template_detection_is_scale_invariant() {
        let cfg = Config::default();
        let a = detect_template(&p("w^3"), 8, &cfg).unwrap();
        let b = detect_template(&p("-7/2*w^3"), 8, &cfg).unwrap();
        assert_eq!(a.dim(), b.dim());
        assert!(proportional(&b.vectors[0], [1, 0, -3, 0]));
    }

    #[test]
    fn template_detection_rejects_bad_inputs() {
        let cfg = Config::default();
        assert!(matches!(
            detect_template(&p("F(w)"), 8, &cfg),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            detect_template(&p("u^3"), 8, &cfg),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            detect_template(&p("2*w + 1"), 8, &cfg),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            detect_template(&p("w^3"), 4, &cfg),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn extension_classification_names_targets() {
        let cfg = Config::default();

        let exp_sol = detect_template(&p("exp(w)"), 8, &cfg).unwrap();
        let rep = classify_extension(9, None, &exp_sol).unwrap();
        assert_eq!(rep.constraint_flags, vec![true]);
        assert_eq!(rep.target_case.as_deref(), Some("13"));

        let cube_sol = detect_template(&p("w^3"), 8, &cfg).unwrap();
        let rep = classify_extension(9, None, &cube_sol).unwrap();
        assert_eq!(rep.target_case.as_deref(), Some("12 (p=2)"));

        let none_sol = detect_template(&p("exp(w) + exp(-2*w)"), 8, &cfg).unwrap();
        let rep = classify_extension(9, None, &none_sol).unwrap();
        assert!(!rep.extension_detected());
        assert!(rep.constraint_flags.is_empty());

        // case 7 with q = 1: c = -3a and d = -6b
        let rep = classify_extension(7, Some(&r(1, 1)), &cube_sol).unwrap();
        assert_eq!(rep.case, "7 (q=1)");
        assert_eq!(rep.constraint_flags, vec![true]);
        assert_eq!(rep.target_case.as_deref(), Some("12 (p=2)"));

        // exponential shapes extend case 5 (to 11) but not case 6
        let rep = classify_extension(5, None, &exp_sol).unwrap();
        assert_eq!(rep.target_case.as_deref(), Some("11"));
        let rep = classify_extension(6, None, &exp_sol).unwrap();
        assert_eq!(rep.constraint_flags, vec![false]);
        assert!(!rep.extension_detected());

        assert!(classify_extension(4, None, &exp_sol).is_err());
        assert!(classify_extension(7, None, &exp_sol).is_err());
        assert!(classify_extension(7, Some(&r(0, 1)), &exp_sol).is_err());

        let js = classify_extension(9, None, &cube_sol).unwrap().to_json();
        assert_eq!(js["target_case"], "12 (p=2)");
        assert_eq!(js["solution_basis"][0]["exact"][2], "-1");
    }

    #[test]
    fn extension_equations_accept_matching_shapes() {
        let cfg = Config::default();
        let mut sess = ParseSession::new();

        // the x-independent shape trivially satisfies the first equation
        let params = ExtensionParams::Case1 {
            xi: Expr::one(),
            eta1: r(0, 1),
            eta0: Expr::zero(),
            delta: r(0, 1),
        };
        let fhat = parse_expr("F(u)", &mut sess).unwrap();
        assert!(verify_extension_eq(&params, &fhat, &cfg).unwrap());

        // power-weighted shape in x
        let params = ExtensionParams::Case1 {
            xi: p("x"),
            eta1: r(-3, 1),
            eta0: Expr::zero(),
            delta: r(1, 1),
        };
        let fhat = parse_expr("abs(x)^(-5)*G(abs(x)^3*u)", &mut sess).unwrap();
        assert!(verify_extension_eq(&params, &fhat, &cfg).unwrap());

        // scaling-compatible shape for the third case, and a mismatch
        let params = ExtensionParams::Case3 { xi: Expr::one(), delta: r(1, 1) };
        let fhat = parse_expr("exp(x)*H(exp(-x)*w)", &mut sess).unwrap();
        assert!(verify_extension_eq(&params, &fhat, &cfg).unwrap());
        let fhat = parse_expr("H(exp(-x)*w)", &mut sess).unwrap();
        assert!(!verify_extension_eq(&params, &fhat, &cfg).unwrap());
    }

    #[test]
    fn extension_equations_cover_translation_invariant_shapes() {
        let cfg = Config::default();
        let mut sess = ParseSession::new();

        // delta = 1, eta1 = eta0 = 0 forces the inverse-square shape
        let params = ExtensionParams::Case2K0 {
            delta: r(1, 1),
            kappa_prime: r(0, 1),
            eta1: r(0, 1),
            eta0: Expr::zero(),
        };
        let fhat = parse_expr("w^(-2)*F(u)", &mut sess).unwrap();
        assert!(verify_extension_eq(&params, &fhat, &cfg).unwrap());

        // delta = 0 with a scaling part
        let params = ExtensionParams::Case2K0 {
            delta: r(0, 1),
            kappa_prime: r(1, 1),
            eta1: r(1, 1),
            eta0: Expr::zero(),
        };
        let fhat = parse_expr("exp(-w)*G(exp(w)*u)", &mut sess).unwrap();
        assert!(verify_extension_eq(&params, &fhat, &cfg).unwrap());
        let generic = parse_expr("K(w, u)", &mut sess).unwrap();
        assert!(!verify_extension_eq(&params, &generic, &cfg).unwrap());

        // exponential branch
        let params = ExtensionParams::Case2K {
            kappa: r(1, 1),
            c1: r(0, 1),
            c2: r(1, 1),
            eta0: Expr::zero(),
        };
        let fhat = parse_expr("exp(-w)*F(u)", &mut sess).unwrap();
        assert!(verify_extension_eq(&params, &fhat, &cfg).unwrap());
        assert!(!verify_extension_eq(&params, &generic, &cfg).unwrap());

        // two-invariant shape
        let params = ExtensionParams::Case4 {
            kappa: r(0, 1),
            c1: r(1, 1),
            c2: r(0, 1),
            eta0: Expr::zero(),
        };
        let fhat = parse_expr("exp(w1)*M(exp(-w1)*w2)", &mut sess).unwrap();
        assert!(verify_extension_eq(&params, &fhat, &cfg).unwrap());
        let generic2 = parse_expr("N(w1, w2)", &mut sess).unwrap();
        assert!(!verify_extension_eq(&params, &generic2, &cfg).unwrap());
    }

    #[test]
    fn extension_parameters_are_validated() {
        let cfg = Config::default();
        let mut sess = ParseSession::new();
        let fu = parse_expr("F(u)", &mut sess).unwrap();
        let fwu = parse_expr("K(w, u)", &mut sess).unwrap();
        let fw12 = parse_expr("N(w1, w2)", &mut sess).unwrap();

        let bad_delta = ExtensionParams::Case1 {
            xi: Expr::one(),
            eta1: r(0, 1),
            eta0: Expr::zero(),
            delta: r(2, 1),
        };
        assert!(matches!(
            verify_extension_eq(&bad_delta, &fu, &cfg),
            Err(Error::Invalid(_))
        ));

        let zero_xi = ExtensionParams::Case1 {
            xi: Expr::zero(),
            eta1: r(0, 1),
            eta0: Expr::zero(),
            delta: r(0, 1),
        };
        assert!(matches!(
            verify_extension_eq(&zero_xi, &fu, &cfg),
            Err(Error::Invalid(_))
        ));

        let bad_kp = ExtensionParams::Case2K0 {
            delta: r(0, 1),
            kappa_prime: r(2, 1),
            eta1: r(0, 1),
            eta0: Expr::zero(),
        };
        assert!(matches!(
            verify_extension_eq(&bad_kp, &fwu, &cfg),
            Err(Error::Invalid(_))
        ));

        let zero_kappa = ExtensionParams::Case2K {
            kappa: r(0, 1),
            c1: r(1, 1),
            c2: r(0, 1),
            eta0: Expr::zero(),
        };
        assert!(matches!(
            verify_extension_eq(&zero_kappa, &fwu, &cfg),
            Err(Error::Invalid(_))
        ));

        let both_zero = ExtensionParams::Case4 {
            kappa: r(1, 1),
            c1: r(0, 1),
            c2: r(0, 1),
            eta0: Expr::zero(),
        };
        assert!(matches!(
            verify_extension_eq(&both_zero, &fw12, &cfg),
            Err(Error::Invalid(_))
        ));

        let equal_cs = ExtensionParams::Case4 {
            kappa: r(0, 1),
            c1: r(1, 1),
            c2: r(1, 1),
            eta0: Expr::zero(),
        };
        assert!(matches!(
            verify_extension_eq(&equal_cs, &fw12, &cfg),
            Err(Error::Invalid(_))
        ));

        // variable leak: fhat of the first equation lives in (x, u)
        let params = ExtensionParams::Case1 {
            xi: Expr::one(),
            eta1: r(0, 1),
            eta0: Expr::zero(),
            delta: r(0, 1),
        };
        let leaky = parse_expr("F(u) + t", &mut sess).unwrap();
        assert!(matches!(
            verify_extension_eq(&params, &leaky, &cfg),
            Err(Error::VariableLeak { .. })
        ));
    }

    #[test]
    fn generic_shapes_admit_no_template() {
        let cfg = Config::default();
        let sol = detect_template(&p("w^3 + exp(w)"), 8, &cfg).unwrap();
        assert_eq!(sol.dim(), 0);
        for case_id in 5..=9 {
            let q = if case_id == 7 { Some(r(2, 1)) } else { None };
            let rep = classify_extension(case_id, q.as_ref(), &sol).unwrap();
            assert!(!rep.extension_detected());
        }
    }
}
