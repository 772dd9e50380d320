//! Seeded property batteries over randomized inputs.
//!
//! Each battery draws a deterministic RNG stream from a caller-supplied
//! seed, runs a fixed number of instances, and reports how many failed.
//! The seed also replaces the zero-test seed, so rerunning a battery at a
//! different seed varies the sampled expressions, the transforms, and the
//! evaluation points all at once. Nothing here keeps state between calls.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use num_traits::Zero;

use crate::catalog::{self, liouville_generator};
use crate::error::Result;
use crate::expr::zero::sample_rat;
use crate::expr::{eval, exprs_equal, Builtin, Expr, Point, Rat};
use crate::symcheck::is_symmetry;
use crate::vfield::VectorField;
use crate::Config;

/// Outcome of one battery.
#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub name: &'static str,
    pub seed: u64,
    pub instances: u32,
    pub failures: u32,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "seed": format!("{:#x}", self.seed),
            "instances": self.instances,
            "failures": self.failures,
            "passed": self.passed(),
        })
    }
}

fn report(name: &'static str, seed: u64, instances: u32, failures: u32) -> BatteryReport {
    BatteryReport { name, seed, instances, failures }
}

/// Positive or negative sample rational.
fn signed_rat(rng: &mut ChaCha12Rng, cfg: &Config) -> Rat {
    let r = sample_rat(rng, cfg);
    if rng.gen_bool(0.5) {
        -r
    } else {
        r
    }
}

/// Random polynomial of the given degree in one variable, signed coefficients.
fn poly1(var: &str, deg: usize, rng: &mut ChaCha12Rng, cfg: &Config) -> Expr {
    let mut terms = Vec::new();
    for k in 0..=deg {
        terms.push(Expr::mul(vec![
            Expr::rat(signed_rat(rng, cfg)),
            Expr::pow(Expr::var(var), Expr::int(k as i64)),
        ]));
    }
    Expr::add(terms)
}

/// Random polynomial with monomials of degree at most 2 over the given
/// variables. Bounded coefficients keep every later exponential finite.
fn poly_multi(vars: &[&str], rng: &mut ChaCha12Rng, cfg: &Config) -> Expr {
    let mut terms = vec![Expr::rat(signed_rat(rng, cfg))];
    for v in vars {
        terms.push(Expr::mul(vec![
            Expr::rat(signed_rat(rng, cfg)),
            Expr::var(v),
        ]));
        if rng.gen_bool(0.5) {
            terms.push(Expr::mul(vec![
                Expr::rat(signed_rat(rng, cfg)),
                Expr::pow(Expr::var(v), Expr::int(2)),
            ]));
        }
    }
    Expr::add(terms)
}

/// Random symmetry-ansatz field: polynomial tau(t) and xi(x), rational
/// eta1, bilinear eta0(t, x).
pub fn random_vf(rng: &mut ChaCha12Rng, cfg: &Config) -> VectorField {
    let tau = poly1("t", rng.gen_range(0..=2), rng, cfg);
    let xi = poly1("x", rng.gen_range(0..=2), rng, cfg);
    let eta1 = if rng.gen_bool(0.25) {
        Rat::zero()
    } else {
        signed_rat(rng, cfg)
    };
    let eta0 = Expr::add(vec![
        Expr::rat(signed_rat(rng, cfg)),
        Expr::rat(signed_rat(rng, cfg)) * Expr::var("t"),
        Expr::rat(signed_rat(rng, cfg)) * Expr::var("x"),
        Expr::rat(signed_rat(rng, cfg)) * Expr::var("t") * Expr::var("x"),
    ]);
    VectorField::new(tau, xi, eta1, eta0).expect("ansatz components stay in shape")
}

/// Random expression tree over the given variables. Depth-bounded, at most
/// one transcendental call per tree, and function arguments are quadratic
/// polynomials, so every evaluation on the sampling box stays finite.
pub fn random_expr(vars: &[&str], depth: u32, rng: &mut ChaCha12Rng, cfg: &Config) -> Expr {
    let mut fuel = true;
    random_expr_inner(vars, depth, rng, cfg, &mut fuel)
}

fn random_expr_inner(
    vars: &[&str],
    depth: u32,
    rng: &mut ChaCha12Rng,
    cfg: &Config,
    fuel: &mut bool,
) -> Expr {
    if depth == 0 {
        return if rng.gen_bool(0.6) {
            Expr::var(vars[rng.gen_range(0..vars.len())])
        } else {
            Expr::rat(signed_rat(rng, cfg))
        };
    }
    match rng.gen_range(0..4u32) {
        0 => {
            let n = rng.gen_range(2..=3);
            let ts = (0..n)
                .map(|_| random_expr_inner(vars, depth - 1, rng, cfg, fuel))
                .collect();
            Expr::add(ts)
        }
        1 => {
            let a = random_expr_inner(vars, depth - 1, rng, cfg, fuel);
            let b = random_expr_inner(vars, depth - 1, rng, cfg, fuel);
            Expr::mul(vec![a, b])
        }
        2 => Expr::pow(
            poly_multi(vars, rng, cfg),
            Expr::int(rng.gen_range(2..=3)),
        ),
        _ => {
            if *fuel {
                *fuel = false;
                let b = match rng.gen_range(0..5u32) {
                    0 => Builtin::Exp,
                    1 => Builtin::Sin,
                    2 => Builtin::Cos,
                    3 => Builtin::Sinh,
                    _ => Builtin::Cosh,
                };
                Expr::fun(b, poly_multi(vars, rng, cfg))
            } else {
                poly_multi(vars, rng, cfg)
            }
        }
    }
}

/// Random equivalence transform with explicit inverses. The affine pieces
/// are arranged so that preimages of the sampling box stay positive, which
/// keeps every catalog right-hand side evaluable after transport.
pub fn random_transform(rng: &mut ChaCha12Rng, cfg: &Config) -> Result<crate::equiv::EquivTransform> {
    let affine = |rng: &mut ChaCha12Rng| -> (Expr, Expr) {
        let s = sample_rat(rng, cfg);
        let s2 = sample_rat(rng, cfg);
        if rng.gen_bool(0.5) {
            // map w -> s*w - s2, inverse (w + s2)/s, preimage of w > 0 is > 0
            let fwd = Expr::rat(s.clone()) * Expr::var("w") - Expr::rat(s2.clone());
            let inv = (Expr::var("w") + Expr::rat(s2)) * Expr::pow(Expr::rat(s), Expr::int(-1));
            (fwd, inv)
        } else {
            // map w -> -s*w + (3 + s2), inverse (3 + s2 - w)/s, same property
            let hi = Expr::int(3) + Expr::rat(s2);
            let fwd = hi.clone() - Expr::rat(s.clone()) * Expr::var("w");
            let inv = (hi - Expr::var("w")) * Expr::pow(Expr::rat(s), Expr::int(-1));
            (fwd, inv)
        }
    };
    let (t_map, t_inv) = affine(rng);
    let (x_map, x_inv) = affine(rng);
    let rename = |e: Expr, v: &str| e.subst1("w", &Expr::var(v));
    let c = signed_rat(rng, cfg);
    let u0 = Expr::add(vec![
        Expr::rat(signed_rat(rng, cfg)),
        Expr::rat(signed_rat(rng, cfg)) * Expr::var("t") * Expr::var("x"),
    ]);
    let swap = rng.gen_bool(0.5);
    crate::equiv::EquivTransform::new(rename(t_map, "t"), rename(x_map, "x"), c, u0, swap)?
        .with_inverses(Some(rename(t_inv, "t")), Some(rename(x_inv, "x")))
}

/// bracket(Q1, Q2) + bracket(Q2, Q1) vanishes componentwise.
pub fn battery_bracket_antisymmetry(seed: u64, cfg: &Config) -> Result<BatteryReport> {
    let cfg = Config { seed, ..cfg.clone() };
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x0b01);
    let mut failures = 0;
    for _ in 0..20 {
        let q1 = random_vf(&mut rng, &cfg);
        let q2 = random_vf(&mut rng, &cfg);
        let s = q1.bracket(&q2).add(&q2.bracket(&q1));
        if !s.is_zero_vf(&cfg)? {
            failures += 1;
        }
    }
    Ok(report("bracket-antisymmetry", seed, 20, failures))
}

/// Cyclic sum of nested brackets vanishes.
pub fn battery_bracket_jacobi(seed: u64, cfg: &Config) -> Result<BatteryReport> {
    let cfg = Config { seed, ..cfg.clone() };
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x0b02);
    let mut failures = 0;
    for _ in 0..10 {
        let q1 = random_vf(&mut rng, &cfg);
        let q2 = random_vf(&mut rng, &cfg);
        let q3 = random_vf(&mut rng, &cfg);
        let s = q1
            .bracket(&q2)
            .bracket(&q3)
            .add(&q2.bracket(&q3).bracket(&q1))
            .add(&q3.bracket(&q1).bracket(&q2));
        if !s.is_zero_vf(&cfg)? {
            failures += 1;
        }
    }
    Ok(report("bracket-jacobi", seed, 10, failures))
}

/// Brackets stay inside the ansatz: the u-linear part cancels exactly, the
/// remaining components keep their variable separation, and the tau and xi
/// components match their closed forms.
pub fn battery_bracket_closure(seed: u64, cfg: &Config) -> Result<BatteryReport> {
    let cfg = Config { seed, ..cfg.clone() };
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x0b03);
    let mut failures = 0;
    for _ in 0..20 {
        let q1 = random_vf(&mut rng, &cfg);
        let q2 = random_vf(&mut rng, &cfg);
        let b = q1.bracket(&q2);
        let mut ok = b.p3().is_zero();
        ok = ok && b.pi_t().free_vars().iter().all(|v| v == "t");
        ok = ok && b.pi_x().free_vars().iter().all(|v| v == "x");
        ok = ok && b.z_part().free_vars().iter().all(|v| v == "t" || v == "x");
        let tau_formula = q1.pi_t().clone() * q2.pi_t().diff("t")
            - q2.pi_t().clone() * q1.pi_t().diff("t");
        let xi_formula = q1.pi_x().clone() * q2.pi_x().diff("x")
            - q2.pi_x().clone() * q1.pi_x().diff("x");
        ok = ok && exprs_equal(b.pi_t(), &tau_formula, &cfg)?;
        ok = ok && exprs_equal(b.pi_x(), &xi_formula, &cfg)?;
        if !ok {
            failures += 1;
        }
    }
    Ok(report("bracket-closure", seed, 20, failures))
}

/// Rebuilding a normalized tree through the smart constructors is the
/// identity.
pub fn battery_normalize_idempotent(seed: u64, cfg: &Config) -> Result<BatteryReport> {
    let cfg = Config { seed, ..cfg.clone() };
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x0b04);
    let mut failures = 0;
    for _ in 0..20 {
        let e = random_expr(&["t", "x", "u"], 3, &mut rng, &cfg);
        let rebuilt = e.substitute(&std::collections::BTreeMap::new());
        if rebuilt != e {
            failures += 1;
        }
    }
    Ok(report("normalize-idempotence", seed, 20, failures))
}

/// Partial derivatives commute.
pub fn battery_mixed_partials(seed: u64, cfg: &Config) -> Result<BatteryReport> {
    let cfg = Config { seed, ..cfg.clone() };
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x0b05);
    let mut failures = 0;
    for _ in 0..20 {
        let e = random_expr(&["t", "x", "u"], 3, &mut rng, &cfg);
        let pairs = [("t", "x"), ("t", "u"), ("x", "u")];
        let (a, b) = pairs[rng.gen_range(0..3)];
        let lhs = e.diff(a).diff(b);
        let rhs = e.diff(b).diff(a);
        if !exprs_equal(&lhs, &rhs, &cfg)? {
            failures += 1;
        }
    }
    Ok(report("mixed-partials", seed, 20, failures))
}

/// Symbolic derivatives agree with central finite differences to 1e-6
/// relative at random points.
pub fn battery_finite_difference(seed: u64, cfg: &Config) -> Result<BatteryReport> {
    let cfg = Config { seed, ..cfg.clone() };
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x0b06);
    let h = Rat::new(1.into(), 100_000_000.into());
    let mut failures = 0;
    let mut done = 0u32;
    let mut guard = 0u32;
    while done < 20 {
        guard += 1;
        assert!(guard < 200, "random expressions kept degenerating");
        let e = random_expr(&["t", "x", "u"], 3, &mut rng, &cfg);
        let vars: Vec<String> = e.free_vars().into_iter().collect();
        if vars.is_empty() {
            continue;
        }
        let v = vars[rng.gen_range(0..vars.len())].clone();
        let mut pt = Point::new();
        for name in &vars {
            pt.set(name, sample_rat(&mut rng, &cfg));
        }
        let base = pt.vars.get(&v).expect("chosen variable is bound").clone();
        let sym = eval(&e.diff(&v), &pt, None, cfg.prec)?.value.to_f64();
        let mut plus = pt.clone();
        plus.set(&v, base.clone() + h.clone());
        let mut minus = pt.clone();
        minus.set(&v, base - h.clone());
        let fp = eval(&e, &plus, None, cfg.prec)?.value;
        let fm = eval(&e, &minus, None, cfg.prec)?.value;
        let two_h = rug::Float::with_val(cfg.prec, rug::Rational::from((1u32, 50_000_000u32)));
        let fd = ((fp - fm) / two_h).to_f64();
        let scale = 1f64.max(sym.abs());
        if !((sym - fd).abs() <= 1e-6 * scale) {
            failures += 1;
        }
        done += 1;
    }
    Ok(report("derivative-finite-difference", seed, 20, failures))
}

/// Transporting a catalog equation and a symmetry by a random equivalence
/// transform preserves the symmetry, and transporting a non-symmetry
/// preserves the refutation. Five transforms per catalog case.
pub fn battery_equivariance(seed: u64, cfg: &Config) -> Result<BatteryReport> {
    let cfg = Config { seed, ..cfg.clone() };
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x0b07);
    let mut instances = 0;
    let mut failures = 0;
    let spoiler = VectorField::z(Expr::var("t") * Expr::var("x"))?;
    for rec in catalog::main_cases()? {
        let gens: Vec<VectorField> = if rec.schema {
            let tau = poly1("t", 2, &mut rng, &cfg);
            let xi = poly1("x", 2, &mut rng, &cfg);
            vec![liouville_generator(&tau, &xi)?]
        } else {
            rec.generators.clone()
        };
        if gens.is_empty() {
            continue;
        }
        for k in 0..5 {
            let tr = random_transform(&mut rng, &cfg)?;
            let f_img = tr.act_on_f(&rec.f)?;
            let q = &gens[k % gens.len()];
            instances += 1;
            if !is_symmetry(&f_img, &tr.pushforward_vf(q)?, &cfg)? {
                failures += 1;
            }
            // the refuted direction once per case
            if k == 0 {
                let bad = q.add(&spoiler);
                instances += 1;
                let src = is_symmetry(&rec.f, &bad, &cfg)?;
                let img = is_symmetry(&f_img, &tr.pushforward_vf(&bad)?, &cfg)?;
                if src || img {
                    failures += 1;
                }
            }
        }
    }
    Ok(report("residual-equivariance", seed, instances, failures))
}

/// Every battery at one seed.
pub fn run_all(seed: u64, cfg: &Config) -> Result<Vec<BatteryReport>> {
    Ok(vec![
        battery_bracket_antisymmetry(seed, cfg)?,
        battery_bracket_jacobi(seed, cfg)?,
        battery_bracket_closure(seed, cfg)?,
        battery_normalize_idempotent(seed, cfg)?,
        battery_mixed_partials(seed, cfg)?,
        battery_finite_difference(seed, cfg)?,
        battery_equivariance(seed, cfg)?,
    ])
}
