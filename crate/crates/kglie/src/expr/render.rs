//! Rendering to the same grammar the parser reads. Round trip is exact:
//! parse(render(e)) == e for canonical e.

use std::fmt;

use num_traits::{One, Signed};

use super::{Expr, Node, Rat};

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

pub fn render(e: &Expr) -> String {
    let mut s = String::new();
    fmt_expr(e, &mut s);
    s
}

fn fmt_expr(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Sum(ts) => {
            fmt_term(&ts[0], out);
            for t in &ts[1..] {
                if let Some(p) = negated(t) {
                    out.push_str(" - ");
                    fmt_term(&p, out);
                } else {
                    out.push_str(" + ");
                    fmt_term(t, out);
                }
            }
        }
        _ => fmt_term(e, out),
    }
}

/// If the term has a negative leading constant, return its negation.
fn negated(e: &Expr) -> Option<Expr> {
    match e.node() {
        Node::Rat(r) if r.is_negative() => Some(Expr::rat(-r)),
        Node::Prod(fs) => match fs[0].node() {
            Node::Rat(r) if r.is_negative() => {
                Some(Expr::mul(vec![Expr::rat(-r)].into_iter().chain(fs[1..].iter().cloned()).collect()))
            }
            _ => None,
        },
        _ => None,
    }
}

fn fmt_term(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Prod(fs) => {
            // Factors with exponent exactly -1 render as divisions.
            let mut nums: Vec<&Expr> = Vec::new();
            let mut dens: Vec<Expr> = Vec::new();
            for f in fs {
                if let Node::Pow(b, ex) = f.node() {
                    if let Node::Rat(r) = ex.node() {
                        if *r == -Rat::one() {
                            dens.push(b.clone());
                            continue;
                        }
                    }
                }
                nums.push(f);
            }
            // A coefficient of exactly -1 prints as a leading minus sign.
            let mut start = 0;
            if let Some(f0) = nums.first() {
                if let Node::Rat(r) = f0.node() {
                    if *r == -Rat::one() && (nums.len() > 1 || !dens.is_empty()) {
                        out.push('-');
                        start = 1;
                    }
                }
            }
            let mut emitted = false;
            for f in &nums[start..] {
                if emitted {
                    out.push('*');
                }
                fmt_factor(f, out);
                emitted = true;
            }
            if !emitted {
                out.push('1');
            }
            for d in &dens {
                out.push('/');
                fmt_den(d, out);
            }
        }
        Node::Rat(_) => fmt_rat_term(e, out),
        _ => fmt_factor(e, out),
    }
}

/// Rational constant at term level: integers bare, fractions as n/d.
fn fmt_rat_term(e: &Expr, out: &mut String) {
    if let Node::Rat(r) = e.node() {
        if r.is_integer() {
            out.push_str(&r.numer().to_string());
        } else {
            out.push_str(&format!("{}/{}", r.numer(), r.denom()));
        }
    }
}

/// Denominator position: must bind at least as tightly as a factor.
fn fmt_den(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Sum(_) | Node::Prod(_) => {
            out.push('(');
            fmt_expr(e, out);
            out.push(')');
        }
        Node::Rat(r) if !r.is_integer() || r.is_negative() => {
            out.push('(');
            fmt_rat_term(e, out);
            out.push(')');
        }
        _ => fmt_factor(e, out),
    }
}

fn fmt_factor(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Rat(r) => {
            if r.is_integer() {
                out.push_str(&r.numer().to_string());
            } else {
                // Fraction in factor position: only reachable as a leading
                // product coefficient, where a/b*x parses back identically.
                out.push_str(&format!("{}/{}", r.numer(), r.denom()));
            }
        }
        Node::Var(v) => out.push_str(v),
        Node::Pow(b, ex) => {
            fmt_pow_base(b, out);
            out.push('^');
            fmt_pow_exp(ex, out);
        }
        Node::Fun(f, a) => {
            out.push_str(f.name());
            out.push('(');
            fmt_expr(a, out);
            out.push(')');
        }
        Node::AbstractFn { name, deriv, args } => {
            out.push_str(name);
            if deriv.iter().any(|&d| d > 0) {
                for d in deriv {
                    out.push('_');
                    out.push_str(&d.to_string());
                }
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_expr(a, out);
            }
            out.push(')');
        }
        Node::Sum(_) | Node::Prod(_) => {
            out.push('(');
            fmt_expr(e, out);
            out.push(')');
        }
    }
}

fn fmt_pow_base(b: &Expr, out: &mut String) {
    let plain = match b.node() {
        Node::Rat(r) => r.is_integer() && !r.is_negative(),
        Node::Var(_) | Node::Fun(..) | Node::AbstractFn { .. } => true,
        _ => false,
    };
    if plain {
        fmt_factor(b, out);
    } else {
        out.push('(');
        fmt_expr(b, out);
        out.push(')');
    }
}

fn fmt_pow_exp(ex: &Expr, out: &mut String) {
    let plain = match ex.node() {
        Node::Rat(r) => r.is_integer() && !r.is_negative(),
        Node::Var(_) => true,
        _ => false,
    };
    if plain {
        fmt_factor(ex, out);
    } else {
        out.push('(');
        fmt_expr(ex, out);
        out.push(')');
    }
}
