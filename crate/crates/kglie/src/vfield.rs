//! Vector fields of the symmetry ansatz
//!
//!     Q = tau(t) d_t + xi(x) d_x + (eta1 * u + eta0(t, x)) d_u
//!
//! with tau a function of t only, xi of x only, eta1 a rational constant,
//! and eta0 a function of t and x. This shape is closed under the Lie
//! bracket, which is what the bracket method computes.
//!
//! Literals come in two forms: a field literal
//! `vf{tau=...; xi=...; eta1=...; eta0=...}` (fields optional, any order)
//! and a generator sum such as `Dt(t) + 2*Dx(x) - I + Z(t*x)` with rational
//! scalars. Rendering always uses the generator sum form.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::parse::{lex, Parser, Tok};
use crate::expr::{Expr, Node, ParseSession, Rat};
use crate::Config;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorField {
    pub tau: Expr,
    pub xi: Expr,
    pub eta1: Rat,
    pub eta0: Expr,
}

/// Unvalidated literal: eta1 may still be a parameter expression.
#[derive(Debug, Clone)]
pub struct VfLiteral {
    pub tau: Expr,
    pub xi: Expr,
    pub eta1: Expr,
    pub eta0: Expr,
}

fn check_vars(e: &Expr, allowed: &[&str], component: &str) -> Result<()> {
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

impl VectorField {
    pub fn new(tau: Expr, xi: Expr, eta1: Rat, eta0: Expr) -> Result<VectorField> {
        check_vars(&tau, &["t"], "tau")?;
        check_vars(&xi, &["x"], "xi")?;
        check_vars(&eta0, &["t", "x"], "eta0")?;
        Ok(VectorField { tau, xi, eta1, eta0 })
    }

    pub fn zero() -> VectorField {
        VectorField {
            tau: Expr::zero(),
            xi: Expr::zero(),
            eta1: Rat::zero(),
            eta0: Expr::zero(),
        }
    }

    pub fn dt(tau: Expr) -> Result<VectorField> {
        VectorField::new(tau, Expr::zero(), Rat::zero(), Expr::zero())
    }

    pub fn dx(xi: Expr) -> Result<VectorField> {
        VectorField::new(Expr::zero(), xi, Rat::zero(), Expr::zero())
    }

    /// The scaling field u d_u.
    pub fn scaling() -> VectorField {
        VectorField {
            tau: Expr::zero(),
            xi: Expr::zero(),
            eta1: Rat::one(),
            eta0: Expr::zero(),
        }
    }

    pub fn z(eta0: Expr) -> Result<VectorField> {
        VectorField::new(Expr::zero(), Expr::zero(), Rat::zero(), eta0)
    }

    pub fn from_literal(lit: &VfLiteral) -> Result<VectorField> {
        let eta1 = match lit.eta1.node() {
            Node::Rat(r) => r.clone(),
            _ => {
                return Err(Error::Invalid(format!(
                    "eta1 must be a rational constant, got {}",
                    lit.eta1
                )))
            }
        };
        VectorField::new(lit.tau.clone(), lit.xi.clone(), eta1, lit.eta0.clone())
    }

    /// Projection on the d_t part.
    pub fn pi_t(&self) -> &Expr {
        &self.tau
    }

    /// Projection on the d_x part.
    pub fn pi_x(&self) -> &Expr {
        &self.xi
    }

    /// Coefficient of the scaling part u d_u.
    pub fn p3(&self) -> &Rat {
        &self.eta1
    }

    /// The shift part Z(eta0).
    pub fn z_part(&self) -> &Expr {
        &self.eta0
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            tau: self.tau.clone() + other.tau.clone(),
            xi: self.xi.clone() + other.xi.clone(),
            eta1: self.eta1.clone() + other.eta1.clone(),
            eta0: self.eta0.clone() + other.eta0.clone(),
        }
    }

    pub fn scale(&self, r: &Rat) -> VectorField {
        let c = Expr::rat(r.clone());
        VectorField {
            tau: c.clone() * self.tau.clone(),
            xi: c.clone() * self.xi.clone(),
            eta1: self.eta1.clone() * r.clone(),
            eta0: c * self.eta0.clone(),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.add(&other.scale(&-Rat::one()))
    }

    /// Lie bracket [self, other]; the ansatz shape is preserved and the
    /// scaling coefficient of a bracket is always zero.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        let t = "t";
        let x = "x";
        let tau = self.tau.clone() * other.tau.diff(t) - other.tau.clone() * self.tau.diff(t);
        let xi = self.xi.clone() * other.xi.diff(x) - other.xi.clone() * self.xi.diff(x);
        let eta0 = self.tau.clone() * other.eta0.diff(t)
            + self.xi.clone() * other.eta0.diff(x)
            - other.tau.clone() * self.eta0.diff(t)
            - other.xi.clone() * self.eta0.diff(x)
            + Expr::rat(other.eta1.clone()) * self.eta0.clone()
            - Expr::rat(self.eta1.clone()) * other.eta0.clone();
        VectorField {
            tau,
            xi,
            eta1: Rat::zero(),
            eta0,
        }
    }

    pub fn is_zero_vf(&self, cfg: &Config) -> Result<bool> {
        Ok(self.eta1.is_zero()
            && crate::expr::is_zero(&self.tau, cfg)?
            && crate::expr::is_zero(&self.xi, cfg)?
            && crate::expr::is_zero(&self.eta0, cfg)?)
    }

    pub fn equals(&self, other: &VectorField, cfg: &Config) -> Result<bool> {
        self.sub(other).is_zero_vf(cfg)
    }

    /// Coefficient of d_u as an expression in t, x, u.
    pub fn eta(&self) -> Expr {
        Expr::rat(self.eta1.clone()) * Expr::var("u") + self.eta0.clone()
    }

    pub fn render(&self) -> String {
        let mut parts: Vec<(bool, String)> = Vec::new();
        if !self.tau.is_zero_const() {
            parts.push((false, format!("Dt({})", self.tau)));
        }
        if !self.xi.is_zero_const() {
            parts.push((false, format!("Dx({})", self.xi)));
        }
        if !self.eta1.is_zero() {
            let a = &self.eta1;
            if a.is_one() {
                parts.push((false, "I".to_string()));
            } else if *a == -Rat::one() {
                parts.push((true, "I".to_string()));
            } else if a.is_negative() {
                parts.push((true, format!("{}*I", Expr::rat(a.abs()))));
            } else {
                parts.push((false, format!("{}*I", Expr::rat(a.clone()))));
            }
        }
        if !self.eta0.is_zero_const() {
            parts.push((false, format!("Z({})", self.eta0)));
        }
        if parts.is_empty() {
            return "Z(0)".to_string();
        }
        let mut out = String::new();
        for (i, (neg, s)) in parts.iter().enumerate() {
            if i == 0 {
                if *neg {
                    out.push('-');
                }
            } else if *neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            out.push_str(s);
        }
        out
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

/// Direction of a total derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    T,
    X,
}

/// Total derivative on expressions in the second order jet variables
/// t, x, u, u_t, u_x, u_tt, u_tx, u_xx. The input may involve jets up to
/// first order; second order jets in the input would need third order
/// variables and are rejected.
pub fn total_derivative(e: &Expr, dir: Dir) -> Result<Expr> {
    for v in e.free_vars() {
        if matches!(v.as_str(), "u_tt" | "u_tx" | "u_xx") {
            return Err(Error::Invalid(format!(
                "total derivative input contains second order jet {v}"
            )));
        }
    }
    let (base, du, dut, dux) = match dir {
        Dir::T => ("t", "u_t", "u_tt", "u_tx"),
        Dir::X => ("x", "u_x", "u_tx", "u_xx"),
    };
    Ok(e.diff(base)
        + Expr::var(du) * e.diff("u")
        + Expr::var(dut) * e.diff("u_t")
        + Expr::var(dux) * e.diff("u_x"))
}

/// Truncated total derivative d_t + u_t d_u (or the x analogue), defined on
/// expressions in t, x, u only.
pub fn truncated_total_derivative(e: &Expr, dir: Dir) -> Result<Expr> {
    for v in e.free_vars() {
        if v.starts_with("u_") {
            return Err(Error::Invalid(format!(
                "truncated total derivative input contains jet variable {v}"
            )));
        }
    }
    let (base, du) = match dir {
        Dir::T => ("t", "u_t"),
        Dir::X => ("x", "u_x"),
    };
    Ok(e.diff(base) + Expr::var(du) * e.diff("u"))
}

/// Parse either literal form.
pub fn parse_vf(src: &str, sess: &mut ParseSession) -> Result<VfLiteral> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, sess };
    let lit = if matches!(p.peek(), Tok::Ident(s) if s == "vf") {
        parse_braced(&mut p)?
    } else {
        parse_generators(&mut p)?
    };
    p.expect_eof()?;
    Ok(lit)
}

fn parse_braced(p: &mut Parser) -> Result<VfLiteral> {
    p.bump(); // vf
    p.expect(&Tok::LBrace)?;
    let mut tau = Expr::zero();
    let mut xi = Expr::zero();
    let mut eta1 = Expr::zero();
    let mut eta0 = Expr::zero();
    let mut seen: Vec<String> = Vec::new();
    loop {
        if p.eat(&Tok::RBrace) {
            break;
        }
        let pos = p.pos();
        let name = match p.bump() {
            Tok::Ident(s) => s,
            other => {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("expected field name, found {other:?}"),
                })
            }
        };
        if seen.contains(&name) {
            return Err(Error::Syntax {
                pos,
                msg: format!("duplicate field {name}"),
            });
        }
        p.expect(&Tok::Eq)?;
        let value = p.expr()?;
        match name.as_str() {
            "tau" => tau = value,
            "xi" => xi = value,
            "eta1" => eta1 = value,
            "eta0" => eta0 = value,
            _ => {
                return Err(Error::Syntax {
                    pos,
                    msg: format!("unknown field {name} (expected tau, xi, eta1, eta0)"),
                })
            }
        }
        seen.push(name);
        if !p.eat(&Tok::Semi) {
            p.expect(&Tok::RBrace)?;
            break;
        }
    }
    Ok(VfLiteral { tau, xi, eta1, eta0 })
}

fn parse_generators(p: &mut Parser) -> Result<VfLiteral> {
    let mut tau = vec![];
    let mut xi = vec![];
    let mut eta1 = vec![];
    let mut eta0 = vec![];
    let mut negate = false;
    if p.eat(&Tok::Minus) {
        negate = true;
    }
    loop {
        let sign = if negate { Expr::int(-1) } else { Expr::one() };
        let (scalar, gen_name) = parse_scaled_generator(p)?;
        let coeff = sign * scalar;
        match gen_name {
            Gen::Dt(e) => tau.push(coeff * e),
            Gen::Dx(e) => xi.push(coeff * e),
            Gen::I => eta1.push(coeff),
            Gen::Z(e) => eta0.push(coeff * e),
        }
        if p.eat(&Tok::Plus) {
            negate = false;
        } else if p.eat(&Tok::Minus) {
            negate = true;
        } else {
            break;
        }
    }
    Ok(VfLiteral {
        tau: Expr::add(tau),
        xi: Expr::add(xi),
        eta1: Expr::add(eta1),
        eta0: Expr::add(eta0),
    })
}

enum Gen {
    Dt(Expr),
    Dx(Expr),
    I,
    Z(Expr),
}

/// One summand: `[rational *] (Dt(e) | Dx(e) | I | Z(e))`.
fn parse_scaled_generator(p: &mut Parser) -> Result<(Expr, Gen)> {
    let pos = p.pos();
    let mut scalar = Expr::one();
    if let Tok::Int(_) = p.peek() {
        let Tok::Int(n) = p.bump() else { unreachable!() };
        let mut r = Expr::rat(Rat::from_integer(n));
        if p.eat(&Tok::Slash) {
            let pos2 = p.pos();
            match p.bump() {
                Tok::Int(d) => {
                    r = r * Expr::pow(Expr::rat(Rat::from_integer(d)), Expr::int(-1));
                }
                other => {
                    return Err(Error::Syntax {
                        pos: pos2,
                        msg: format!("expected denominator, found {other:?}"),
                    })
                }
            }
        }
        scalar = r;
        p.expect(&Tok::Star)?;
    }
    let pos2 = p.pos();
    let name = match p.bump() {
        Tok::Ident(s) => s,
        other => {
            return Err(Error::Syntax {
                pos,
                msg: format!("expected generator, found {other:?}"),
            })
        }
    };
    let gen = match name.as_str() {
        "I" => Gen::I,
        "Dt" | "Dx" | "Z" => {
            p.expect(&Tok::LParen)?;
            let e = p.expr()?;
            p.expect(&Tok::RParen)?;
            match name.as_str() {
                "Dt" => Gen::Dt(e),
                "Dx" => Gen::Dx(e),
                _ => Gen::Z(e),
            }
        }
        _ => {
            return Err(Error::Syntax {
                pos: pos2,
                msg: format!("unknown generator {name} (expected Dt, Dx, I, Z)"),
            })
        }
    };
    Ok((scalar, gen))
}

/// Parse and validate a concrete vector field.
pub fn parse_vector_field(src: &str, sess: &mut ParseSession) -> Result<VectorField> {
    VectorField::from_literal(&parse_vf(src, sess)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_one;
    use crate::Config;

    fn vf(src: &str) -> VectorField {
        parse_vector_field(src, &mut ParseSession::new()).unwrap()
    }

    #[test]
    fn literal_forms_agree() {
        let a = vf("vf{tau=t; xi=x; eta1=-3; eta0=t*x}");
        let b = vf("Dt(t) + Dx(x) - 3*I + Z(t*x)");
        assert_eq!(a, b);
        assert_eq!(b.render(), "Dt(t) + Dx(x) - 3*I + Z(t*x)");
        let c = vf("1/2*Dt(t) - I");
        assert_eq!(c.tau, parse_one("t/2").unwrap());
        assert_eq!(c.eta1, Rat::new((-1).into(), 1.into()));
        assert_eq!(vf("Z(0)").render(), "Z(0)");
    }

    #[test]
    fn component_variable_leaks_are_rejected() {
        assert!(parse_vector_field("Dt(x)", &mut ParseSession::new()).is_err());
        assert!(parse_vector_field("Dx(t*x)", &mut ParseSession::new()).is_err());
        assert!(parse_vector_field("Z(u)", &mut ParseSession::new()).is_err());
        assert!(parse_vector_field("vf{eta1=t}", &mut ParseSession::new()).is_err());
    }

    #[test]
    fn bracket_satisfies_sl2_relations() {
        let cfg = Config::default();
        // Q1 = d_t + d_x, Q2 = t d_t + x d_x, Q3 = t^2 d_t + x^2 d_x
        let q1 = vf("Dt(1) + Dx(1)");
        let q2 = vf("Dt(t) + Dx(x)");
        let q3 = vf("Dt(t^2) + Dx(x^2)");
        assert!(q1.bracket(&q2).equals(&q1, &cfg).unwrap());
        assert!(q1
            .bracket(&q3)
            .equals(&q2.scale(&Rat::new(2.into(), 1.into())), &cfg)
            .unwrap());
        assert!(q2.bracket(&q3).equals(&q3, &cfg).unwrap());
    }

    #[test]
    fn bracket_handles_scaling_and_shift_parts() {
        let cfg = Config::default();
        // [D^t(tau), Z(eta0)] = Z(tau eta0_t); [I, Z(eta0)] = Z(-eta0)
        let a = vf("Dt(t^2)");
        let b = vf("Z(t*x)");
        let expect = vf("Z(t^2*x)");
        assert!(a.bracket(&b).equals(&expect, &cfg).unwrap());
        let i = vf("I");
        let expect2 = vf("Z(-t*x)");
        assert!(i.bracket(&b).equals(&expect2, &cfg).unwrap());
        // antisymmetry
        let ab = a.bracket(&b);
        let ba = b.bracket(&a);
        assert!(ab.add(&ba).is_zero_vf(&cfg).unwrap());
    }

    #[test]
    fn total_derivatives_follow_the_chain() {
        let e = parse_one("u*u_t").unwrap();
        let d = total_derivative(&e, Dir::T).unwrap();
        assert_eq!(d, parse_one("u_t^2 + u*u_tt").unwrap());
        let f = parse_one("F(t, u)").unwrap();
        let df = truncated_total_derivative(&f, Dir::T).unwrap();
        assert_eq!(df, parse_one("F_1_0(t, u) + u_t*F_0_1(t, u)").unwrap());
        assert!(total_derivative(&parse_one("u_tt").unwrap(), Dir::T).is_err());
        assert!(truncated_total_derivative(&parse_one("u_t").unwrap(), Dir::T).is_err());
    }
}
