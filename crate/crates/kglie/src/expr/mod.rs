//! Expression trees over exact rational constants, variables, arithmetic,
//! a fixed set of elementary functions, and abstract function symbols with
//! derivative multi-indices.
//!
//! Construction goes through smart constructors that maintain a
//! canonical-light normal form:
//!
//! * sums and products are flattened and sorted by a fixed total order
//!   (the derived order on `Node`, constants first),
//! * rational constants fold (including rational powers of rationals with
//!   integer exponents),
//! * like factors merge by adding rational exponents and like terms merge
//!   by adding rational coefficients,
//! * `b^0 -> 1`, `b^1 -> b`, `(b^r)^s -> b^(r*s)` for rational `r`, `s`,
//!   and integer powers distribute over products.
//!
//! Products are never distributed over sums, and no trigonometric or
//! exponential rewriting happens; equality beyond this normal form is the
//! job of sampling-based zero tests. Exponent merging such as
//! `(b^r)^s -> b^(r*s)` is sound on the positive sampling domain used by
//! those tests, which is the only place expressions are given values.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub mod eval;
pub mod parse;
pub mod render;
pub mod zero;

pub use eval::{eval, eval_rat, EvalOut, Oracle, Point};
pub use parse::{parse_expr, parse_one, ParseSession};
pub use zero::{exprs_equal, is_zero, zero_report, ZeroReport};

pub type Rat = BigRational;

/// Built-in unary functions of the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Cot,
    Sinh,
    Cosh,
    Atan,
    Abs,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Ln => "ln",
            Builtin::Sin => "sin",
            Builtin::Cos => "cos",
            Builtin::Tan => "tan",
            Builtin::Cot => "cot",
            Builtin::Sinh => "sinh",
            Builtin::Cosh => "cosh",
            Builtin::Atan => "arctan",
            Builtin::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        Some(match s {
            "exp" => Builtin::Exp,
            "ln" => Builtin::Ln,
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "tan" => Builtin::Tan,
            "cot" => Builtin::Cot,
            "sinh" => Builtin::Sinh,
            "cosh" => Builtin::Cosh,
            "arctan" | "atan" => Builtin::Atan,
            "abs" => Builtin::Abs,
            _ => return None,
        })
    }
}

/// Tree node. The manual `Ord` below is the canonical total order used for
/// sorting sum terms and product factors; constants rank first.
#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Rat(Rat),
    Var(String),
    /// Invariant: flattened, sorted, len >= 2, at most one rational term.
    Sum(Vec<Expr>),
    /// Invariant: flattened, sorted, len >= 2, at most one rational factor
    /// (first), like bases merged.
    Prod(Vec<Expr>),
    /// Invariant: exponent is not 0 or 1.
    Pow(Expr, Expr),
    Fun(Builtin, Expr),
    /// Abstract function symbol with one derivative order per argument.
    /// Invariant: deriv.len() == args.len().
    AbstractFn {
        name: String,
        deriv: Vec<u32>,
        args: Vec<Expr>,
    },
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Expr {
    fn raw(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn rat(r: Rat) -> Expr {
        Expr::raw(Node::Rat(r))
    }

    pub fn int(n: i64) -> Expr {
        Expr::rat(Rat::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        assert!(den != 0, "zero denominator");
        Expr::rat(Rat::new(num.into(), den.into()))
    }

    pub fn var(name: &str) -> Expr {
        Expr::raw(Node::Var(name.to_string()))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        match self.node() {
            Node::Rat(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self.node(), Node::Rat(r) if r.is_zero())
    }

    /// Sum constructor; flattens, merges like terms, folds constants.
    /// Inputs must already be canonical (all construction paths are).
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut constant = Rat::zero();
        let mut by_key: BTreeMap<Expr, Rat> = BTreeMap::new();
        for t in terms {
            absorb_term(t, &mut constant, &mut by_key);
        }
        let mut out: Vec<Expr> = Vec::with_capacity(by_key.len() + 1);
        for (key, c) in by_key {
            if c.is_zero() {
                continue;
            }
            if c.is_one() {
                out.push(key);
            } else {
                out.push(attach_coeff(c, key));
            }
        }
        if !constant.is_zero() {
            out.push(Expr::rat(constant));
        }
        out.sort();
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Sum(out)),
        }
    }

    /// Product constructor; flattens, merges like bases, folds constants.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut coeff = Rat::one();
        let mut by_base: BTreeMap<Expr, Rat> = BTreeMap::new();
        for f in factors {
            absorb_factor(f, &mut coeff, &mut by_base);
        }
        if coeff.is_zero() {
            return Expr::zero();
        }
        let mut out: Vec<Expr> = Vec::with_capacity(by_base.len() + 1);
        let mut requeue = false;
        for (base, e) in by_base {
            if e.is_zero() {
                continue;
            }
            let f = if e.is_one() {
                base
            } else {
                Expr::pow(base, Expr::rat(e))
            };
            // Exponent merging may fold back into a constant or reopen a
            // product; a single recursive pass settles it.
            match f.node() {
                Node::Rat(_) | Node::Prod(_) => requeue = true,
                _ => {}
            }
            out.push(f);
        }
        if requeue {
            out.push(Expr::rat(coeff));
            return Expr::mul(out);
        }
        out.sort();
        if out.is_empty() {
            return Expr::rat(coeff);
        }
        if coeff.is_one() {
            return match out.len() {
                1 => out.pop().unwrap(),
                _ => Expr::raw(Node::Prod(out)),
            };
        }
        out.insert(0, Expr::rat(coeff));
        Expr::raw(Node::Prod(out))
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        if let Node::Rat(e) = exp.node() {
            if e.is_zero() {
                return Expr::one();
            }
            if e.is_one() {
                return base;
            }
            if let Node::Rat(b) = base.node() {
                if b.is_one() {
                    return Expr::one();
                }
                if b.is_zero() {
                    if e.is_positive() {
                        return Expr::zero();
                    }
                    // 0^negative stays symbolic and is rejected at evaluation.
                } else if e.is_integer() {
                    if let Some(i) = e.to_integer().to_i32() {
                        if i.unsigned_abs() <= 4096 {
                            return Expr::rat(num_traits::Pow::pow(b, i));
                        }
                    }
                }
            }
            if let Node::Pow(b2, e2) = base.node() {
                if let Node::Rat(r) = e2.node() {
                    return Expr::pow(b2.clone(), Expr::rat(r * e));
                }
            }
            if e.is_integer() {
                if let Node::Prod(fs) = base.node() {
                    return Expr::mul(
                        fs.iter().map(|f| Expr::pow(f.clone(), exp.clone())).collect(),
                    );
                }
            }
        }
        Expr::raw(Node::Pow(base, exp))
    }

    pub fn fun(b: Builtin, arg: Expr) -> Expr {
        if b == Builtin::Abs {
            if let Node::Rat(r) = arg.node() {
                return Expr::rat(r.abs());
            }
        }
        Expr::raw(Node::Fun(b, arg))
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::fun(Builtin::Exp, arg)
    }

    pub fn ln(arg: Expr) -> Expr {
        Expr::fun(Builtin::Ln, arg)
    }

    pub fn abs(arg: Expr) -> Expr {
        Expr::fun(Builtin::Abs, arg)
    }

    /// Abstract function application with all derivative orders zero.
    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        let deriv = vec![0; args.len()];
        Expr::call_deriv(name, deriv, args)
    }

    pub fn call_deriv(name: &str, deriv: Vec<u32>, args: Vec<Expr>) -> Expr {
        assert_eq!(deriv.len(), args.len(), "derivative multi-index length");
        Expr::raw(Node::AbstractFn {
            name: name.to_string(),
            deriv,
            args,
        })
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Rat(_) => {}
            Node::Var(v) => {
                out.insert(v.clone());
            }
            Node::Sum(es) | Node::Prod(es) => {
                for e in es {
                    e.collect_vars(out);
                }
            }
            Node::Pow(b, e) => {
                b.collect_vars(out);
                e.collect_vars(out);
            }
            Node::Fun(_, a) => a.collect_vars(out),
            Node::AbstractFn { args, .. } => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn depends_on(&self, v: &str) -> bool {
        match self.node() {
            Node::Rat(_) => false,
            Node::Var(w) => w == v,
            Node::Sum(es) | Node::Prod(es) => es.iter().any(|e| e.depends_on(v)),
            Node::Pow(b, e) => b.depends_on(v) || e.depends_on(v),
            Node::Fun(_, a) => a.depends_on(v),
            Node::AbstractFn { args, .. } => args.iter().any(|a| a.depends_on(v)),
        }
    }

    pub fn contains_abstract(&self) -> bool {
        match self.node() {
            Node::Rat(_) | Node::Var(_) => false,
            Node::Sum(es) | Node::Prod(es) => es.iter().any(|e| e.contains_abstract()),
            Node::Pow(b, e) => b.contains_abstract() || e.contains_abstract(),
            Node::Fun(_, a) => a.contains_abstract(),
            Node::AbstractFn { .. } => true,
        }
    }

    /// True when the expression evaluates exactly in rational arithmetic:
    /// no builtins, no abstract symbols, only integer exponents.
    pub fn is_rational_only(&self) -> bool {
        match self.node() {
            Node::Rat(_) | Node::Var(_) => true,
            Node::Sum(es) | Node::Prod(es) => es.iter().all(|e| e.is_rational_only()),
            Node::Pow(b, e) => {
                b.is_rational_only()
                    && matches!(e.node(), Node::Rat(r) if r.is_integer())
            }
            Node::Fun(..) | Node::AbstractFn { .. } => false,
        }
    }

    /// Simultaneous substitution of variables by expressions. Abstract
    /// function names and derivative indices are untouched; only their
    /// arguments are rewritten. The result is renormalized bottom-up.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Rat(_) => self.clone(),
            Node::Var(v) => match map.get(v) {
                Some(e) => e.clone(),
                None => self.clone(),
            },
            Node::Sum(es) => Expr::add(es.iter().map(|e| e.substitute(map)).collect()),
            Node::Prod(es) => Expr::mul(es.iter().map(|e| e.substitute(map)).collect()),
            Node::Pow(b, e) => Expr::pow(b.substitute(map), e.substitute(map)),
            Node::Fun(f, a) => Expr::fun(*f, a.substitute(map)),
            Node::AbstractFn { name, deriv, args } => Expr::call_deriv(
                name,
                deriv.clone(),
                args.iter().map(|a| a.substitute(map)).collect(),
            ),
        }
    }

    pub fn subst1(&self, v: &str, e: &Expr) -> Expr {
        let mut m = BTreeMap::new();
        m.insert(v.to_string(), e.clone());
        self.substitute(&m)
    }

    /// Partial derivative with respect to a variable.
    pub fn diff(&self, v: &str) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        match self.node() {
            Node::Rat(_) => Expr::zero(),
            Node::Var(w) => {
                if w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Sum(es) => Expr::add(es.iter().map(|e| e.diff(v)).collect()),
            Node::Prod(es) => {
                let mut terms = Vec::new();
                for (i, e) in es.iter().enumerate() {
                    if !e.depends_on(v) {
                        continue;
                    }
                    let mut fs: Vec<Expr> = Vec::with_capacity(es.len());
                    fs.push(e.diff(v));
                    for (j, o) in es.iter().enumerate() {
                        if j != i {
                            fs.push(o.clone());
                        }
                    }
                    terms.push(Expr::mul(fs));
                }
                Expr::add(terms)
            }
            Node::Pow(b, e) => {
                if let Node::Rat(r) = e.node() {
                    // r * b^(r-1) * b'; avoids ln(b) for the common case.
                    Expr::mul(vec![
                        Expr::rat(r.clone()),
                        Expr::pow(b.clone(), Expr::rat(r - Rat::one())),
                        b.diff(v),
                    ])
                } else {
                    // b^e * (e' ln b + e b' / b)
                    let t1 = Expr::mul(vec![e.diff(v), Expr::ln(b.clone())]);
                    let t2 = Expr::mul(vec![
                        e.clone(),
                        b.diff(v),
                        Expr::pow(b.clone(), Expr::int(-1)),
                    ]);
                    Expr::mul(vec![self.clone(), Expr::add(vec![t1, t2])])
                }
            }
            Node::Fun(f, a) => Expr::mul(vec![chain(*f, a), a.diff(v)]),
            Node::AbstractFn { name, deriv, args } => {
                let mut terms = Vec::new();
                for (i, a) in args.iter().enumerate() {
                    if !a.depends_on(v) {
                        continue;
                    }
                    let mut d = deriv.clone();
                    d[i] += 1;
                    terms.push(Expr::mul(vec![
                        a.diff(v),
                        Expr::call_deriv(name, d, args.clone()),
                    ]));
                }
                Expr::add(terms)
            }
        }
    }
}

/// Derivative of a builtin as a function of its argument.
fn chain(f: Builtin, a: &Expr) -> Expr {
    let a = a.clone();
    match f {
        Builtin::Exp => Expr::exp(a),
        Builtin::Ln => Expr::pow(a, Expr::int(-1)),
        Builtin::Sin => Expr::fun(Builtin::Cos, a),
        Builtin::Cos => Expr::mul(vec![Expr::int(-1), Expr::fun(Builtin::Sin, a)]),
        Builtin::Tan => Expr::add(vec![
            Expr::one(),
            Expr::pow(Expr::fun(Builtin::Tan, a), Expr::int(2)),
        ]),
        Builtin::Cot => Expr::mul(vec![
            Expr::int(-1),
            Expr::add(vec![
                Expr::one(),
                Expr::pow(Expr::fun(Builtin::Cot, a), Expr::int(2)),
            ]),
        ]),
        Builtin::Sinh => Expr::fun(Builtin::Cosh, a),
        Builtin::Cosh => Expr::fun(Builtin::Sinh, a),
        Builtin::Atan => Expr::pow(
            Expr::add(vec![Expr::one(), Expr::pow(a, Expr::int(2))]),
            Expr::int(-1),
        ),
        // |a|' = a'/sign(a) expressed inside the grammar as abs(a)/a.
        Builtin::Abs => Expr::mul(vec![
            Expr::abs(a.clone()),
            Expr::pow(a, Expr::int(-1)),
        ]),
    }
}

fn absorb_term(e: Expr, constant: &mut Rat, by_key: &mut BTreeMap<Expr, Rat>) {
    enum Act {
        Const(Rat),
        Splice,
        Keyed(Expr, Rat),
    }
    let act = match e.node() {
        Node::Rat(r) => Act::Const(r.clone()),
        Node::Sum(_) => Act::Splice,
        Node::Prod(fs) => {
            if let Node::Rat(c) = fs[0].node() {
                let rest = if fs.len() == 2 {
                    fs[1].clone()
                } else {
                    Expr::raw(Node::Prod(fs[1..].to_vec()))
                };
                Act::Keyed(rest, c.clone())
            } else {
                Act::Keyed(e.clone(), Rat::one())
            }
        }
        _ => Act::Keyed(e.clone(), Rat::one()),
    };
    match act {
        Act::Const(r) => *constant += r,
        Act::Splice => {
            if let Node::Sum(ts) = e.node() {
                for t in ts {
                    absorb_term(t.clone(), constant, by_key);
                }
            }
        }
        Act::Keyed(k, c) => {
            let slot = by_key.entry(k).or_insert_with(Rat::zero);
            *slot += c;
        }
    }
}

fn attach_coeff(c: Rat, key: Expr) -> Expr {
    match key.node() {
        Node::Prod(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::rat(c));
            v.extend(fs.iter().cloned());
            Expr::raw(Node::Prod(v))
        }
        _ => Expr::raw(Node::Prod(vec![Expr::rat(c), key])),
    }
}

fn absorb_factor(e: Expr, coeff: &mut Rat, by_base: &mut BTreeMap<Expr, Rat>) {
    enum Act {
        Const(Rat),
        Splice,
        Based(Expr, Rat),
    }
    let act = match e.node() {
        Node::Rat(r) => Act::Const(r.clone()),
        Node::Prod(_) => Act::Splice,
        Node::Pow(b, ex) => match ex.node() {
            Node::Rat(r) => Act::Based(b.clone(), r.clone()),
            _ => Act::Based(e.clone(), Rat::one()),
        },
        _ => Act::Based(e.clone(), Rat::one()),
    };
    match act {
        Act::Const(r) => *coeff *= r,
        Act::Splice => {
            if let Node::Prod(fs) = e.node() {
                for f in fs {
                    absorb_factor(f.clone(), coeff, by_base);
                }
            }
        }
        Act::Based(b, r) => {
            let slot = by_base.entry(b).or_insert_with(Rat::zero);
            *slot += r;
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::add(vec![self, Expr::mul(vec![Expr::int(-1), rhs])])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::mul(vec![self, Expr::pow(rhs, Expr::int(-1))])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self])
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        fn rank(n: &Node) -> u8 {
            match n {
                Node::Rat(_) => 0,
                Node::Var(_) => 1,
                Node::Sum(_) => 2,
                Node::Prod(_) => 3,
                Node::Pow(..) => 4,
                Node::Fun(..) => 5,
                Node::AbstractFn { .. } => 6,
            }
        }
        match (self, other) {
            (Node::Rat(a), Node::Rat(b)) => a.cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Sum(a), Node::Sum(b)) | (Node::Prod(a), Node::Prod(b)) => a.cmp(b),
            (Node::Pow(b1, e1), Node::Pow(b2, e2)) => {
                b1.cmp(b2).then_with(|| e1.cmp(e2))
            }
            (Node::Fun(f1, a1), Node::Fun(f2, a2)) => {
                f1.cmp(f2).then_with(|| a1.cmp(a2))
            }
            (
                Node::AbstractFn { name: n1, deriv: d1, args: a1 },
                Node::AbstractFn { name: n2, deriv: d2, args: a2 },
            ) => n1.cmp(n2).then_with(|| d1.cmp(d2)).then_with(|| a1.cmp(a2)),
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Config;

    fn p(src: &str) -> Expr {
        parse::parse_one(src).unwrap()
    }

    #[test]
    fn arctangent_differentiates_and_satisfies_subtraction_identity() {
        let c = Config::default();
        let d = p("arctan(x)").diff("x") - p("1/(1 + x^2)");
        assert!(zero::is_zero(&d, &c).unwrap());
        // sin(arctan x - arctan t)^2 (1+t^2)(1+x^2) = (x-t)^2
        let idy = p("sin(arctan(x) - arctan(t))^2 * (1+t^2) * (1+x^2) - (x-t)^2");
        assert!(zero::is_zero(&idy, &c).unwrap());
        assert_eq!(p("atan(x)"), p("arctan(x)"));
    }

    #[test]
    fn constants_fold_through_division_and_powers() {
        assert_eq!(p("1/2"), Expr::ratio(1, 2));
        assert_eq!(p("2/4"), Expr::ratio(1, 2));
        assert_eq!(p("2^3"), Expr::int(8));
        assert_eq!(p("(-2)^3"), Expr::int(-8));
        assert_eq!(p("2^(-2)"), Expr::ratio(1, 4));
        assert_eq!(p("(1/2)^2"), Expr::ratio(1, 4));
        assert_eq!(p("3*x*2"), p("6*x"));
    }

    #[test]
    fn like_terms_and_factors_merge() {
        assert_eq!(p("x + x"), p("2*x"));
        assert_eq!(p("x - x"), Expr::zero());
        assert_eq!(p("x*x"), p("x^2"));
        assert_eq!(p("x/x"), Expr::one());
        assert_eq!(p("x^(1/2)*x^(1/2)"), p("x"));
        assert_eq!(p("2*t + 3*t - t"), p("4*t"));
        assert_eq!(p("(x^2)^(1/2)"), p("x"));
        assert_eq!(p("t*x + x*t"), p("2*t*x"));
    }

    #[test]
    fn normalization_is_idempotent_on_samples() {
        for src in [
            "x - t",
            "abs(x-t)^(-3) * F(abs(x-t)^q * u)",
            "exp(t+x) - exp(t)*exp(x)",
            "u*F_1(u) - F(u)",
            "(u^2 + x)^2",
            "1 - x + x^2/2 - t*u",
        ] {
            let e = p(src);
            let rebuilt = e.substitute(&std::collections::BTreeMap::new());
            assert_eq!(e, rebuilt, "rebuild changed {src}");
            let reparsed = p(&render::render(&e));
            assert_eq!(e, reparsed, "round trip changed {src}");
        }
    }

    #[test]
    fn rendering_uses_signs_and_divisions() {
        assert_eq!(render::render(&p("x - t")), "x - t");
        assert_eq!(render::render(&p("-x*y")), "-x*y");
        assert_eq!(render::render(&p("u/x")), "u/x");
        assert_eq!(render::render(&p("u/(x*t)")), "u/t/x");
        assert_eq!(render::render(&p("x^(-3)")), "x^(-3)");
        assert_eq!(render::render(&p("-1/x")), "-1/x");
        assert_eq!(render::render(&p("1/2*x")), "1/2*x");
    }

    #[test]
    fn parse_rejects_bad_syntax() {
        assert!(parse::parse_one("x^-2").is_err());
        assert!(parse::parse_one("exp").is_err());
        assert!(parse::parse_one("x +").is_err());
        assert!(parse::parse_one("exp(x, y)").is_err());
        let mut sess = ParseSession::new();
        parse_expr("F(x)", &mut sess).unwrap();
        assert!(matches!(
            parse_expr("F(x, u)", &mut sess),
            Err(crate::Error::Arity { .. })
        ));
    }

    #[test]
    fn derivative_indices_round_trip() {
        let e = p("F_1_0(t, x)");
        match e.node() {
            Node::AbstractFn { name, deriv, args } => {
                assert_eq!(name, "F");
                assert_eq!(deriv, &[1, 0]);
                assert_eq!(args.len(), 2);
            }
            _ => panic!("expected abstract function"),
        }
        assert_eq!(render::render(&e), "F_1_0(t, x)");
        let f = p("F(t, x)");
        assert_eq!(f.diff("t"), e);
        // A name whose trailing segments do not match the arity stays a name.
        let g = p("F_1(t, x)");
        match g.node() {
            Node::AbstractFn { name, deriv, .. } => {
                assert_eq!(name, "F_1");
                assert_eq!(deriv, &[0, 0]);
            }
            _ => panic!("expected abstract function"),
        }
    }

    #[test]
    fn product_rule_and_chain_rule() {
        let e = p("F(exp(-t)*u)");
        let expected = Expr::mul(vec![
            Expr::int(-1),
            Expr::var("u"),
            Expr::exp(-Expr::var("t")),
            Expr::call_deriv("F", vec![1], vec![p("exp(-t)*u")]),
        ]);
        assert_eq!(e.diff("t"), expected);

        assert_eq!(p("t^3").diff("t"), p("3*t^2"));
        assert_eq!(p("abs(u)").diff("u"), p("abs(u)/u"));
        assert_eq!(p("ln(x)").diff("x"), p("1/x"));
        assert_eq!(p("tan(x)").diff("x"), p("1 + tan(x)^2"));
        assert_eq!(p("cot(x)").diff("x"), p("-(1 + cot(x)^2)"));
        assert_eq!(p("t*u").diff("u"), p("t"));
    }

    #[test]
    fn substitution_renormalizes() {
        let e = p("(t + x)^2");
        let s = e.subst1("t", &p("u^2"));
        assert_eq!(s, p("(u^2 + x)^2"));
        // substitution inside abstract arguments only
        let f = p("F(t, x)");
        let g = f.subst1("t", &p("x"));
        assert_eq!(g, p("F(x, x)"));
        assert_eq!(g.diff("x"), p("F_1_0(x, x) + F_0_1(x, x)"));
    }

    #[test]
    fn high_precision_eval_matches_mpfr() {
        let e = p("2^(1/2)");
        let out = eval(&e, &Point::new(), None, 256).unwrap();
        let two = rug::Float::with_val(256, 2);
        let diff = (out.value - two.sqrt()).abs();
        assert!(diff.to_f64() < 1e-70);
    }

    #[test]
    fn eval_reports_singularities() {
        let mut pt = Point::new();
        pt.set("x", Rat::from_integer(0.into()));
        assert!(matches!(
            eval(&p("1/x"), &pt, None, 128),
            Err(crate::Error::Singular(_))
        ));
        assert!(matches!(
            eval(&p("ln(x)"), &pt, None, 128),
            Err(crate::Error::Singular(_))
        ));
        assert!(matches!(
            eval(&p("F(x)"), &pt, None, 128),
            Err(crate::Error::OracleNeeded(_))
        ));
    }

    #[test]
    fn oracle_values_are_deterministic_and_keyed() {
        let e = p("F(u)");
        let mut pt = Point::new();
        pt.set("u", Rat::new(1.into(), 2.into()));
        let o1 = Oracle { seed: 7, index: 0 };
        let a = eval(&e, &pt, Some(&o1), 128).unwrap().value;
        let b = eval(&e, &pt, Some(&o1), 128).unwrap().value;
        assert_eq!(a, b);
        let o2 = Oracle { seed: 7, index: 1 };
        let c = eval(&e, &pt, Some(&o2), 128).unwrap().value;
        assert_ne!(a, c);
        // structurally equal arguments share a value inside one index
        let diff = p("F(2*u) - F(u*2)");
        let d = eval(&diff, &pt, Some(&o1), 128).unwrap().value;
        assert!(d.is_zero());
    }

    #[test]
    fn zero_test_accepts_identities_and_rejects_non_identities() {
        let cfg = Config::default();
        assert!(zero::is_zero(&p("exp(t+x) - exp(t)*exp(x)"), &cfg).unwrap());
        assert!(zero::is_zero(&p("sinh(2*t) - 2*sinh(t)*cosh(t)"), &cfg).unwrap());
        assert!(zero::is_zero(&p("sin(t)^2 + cos(t)^2 - 1"), &cfg).unwrap());
        assert!(!zero::is_zero(&p("u*F_1(u) - F(u)"), &cfg).unwrap());
        assert!(!zero::is_zero(&p("exp(t) - 1 - t"), &cfg).unwrap());

        let rep = zero::zero_report(&p("(t+x)^2 - t^2 - 2*t*x - x^2"), &cfg).unwrap();
        assert!(rep.zero);
        assert!(rep.exact);
        let rep2 = zero::zero_report(&p("t^2 - x^2"), &cfg).unwrap();
        assert!(!rep2.zero);
        assert!(rep2.exact);
        assert!(rep2.witness.is_some());
    }

    #[test]
    fn derivative_agrees_with_symbolic_closed_form() {
        let cfg = Config::default();
        let e = p("sin(exp(-t)*u)");
        let closed = p("-exp(-t)*u*cos(exp(-t)*u)");
        let d = e.diff("t") - closed;
        assert!(zero::is_zero(&d, &cfg).unwrap());
    }

    #[test]
    fn sampling_respects_domain_and_separation() {
        let cfg = Config::default();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed);
        use rand_chacha::rand_core::SeedableRng;
        let vars = vec!["t".to_string(), "x".to_string(), "u".to_string()];
        let lo = Rat::new(1.into(), 8.into());
        let hi = Rat::new(3.into(), 1.into());
        let sep = Rat::new(1.into(), 8.into());
        for _ in 0..200 {
            let pt = zero::sample_point(&vars, &mut rng, &cfg);
            for v in &vars {
                let val = &pt.vars[v];
                assert!(*val >= lo && *val <= hi);
                assert!(val.denom() <= &num_bigint::BigInt::from(10_000));
            }
            let t = pt.vars["t"].clone();
            let x = pt.vars["x"].clone();
            assert!((x - t).abs() >= sep);
        }
    }
}
