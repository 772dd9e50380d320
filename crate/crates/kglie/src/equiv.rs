//! Point transformations of the structured form
//!
//!     t~ = T(t),  x~ = X(x),  u~ = C u + U0(t, x)
//!
//! optionally followed by the coordinate swap t~ <-> x~, acting on right-hand
//! sides by f~ = (C f + U0_tx) / (T' X'). Every transform decomposes as
//! [swap o] Dt(T) o Dx(X) o Z(U0) o Du(C), rightmost factor applied first.
//!
//! Two action APIs: act_on_f produces the closed-form image and needs the
//! inverse maps; verify_map checks a candidate image relationally and needs
//! none. The finite quotient by the identity component is modeled exactly as
//! signed permutations of (t, x) times a sign on u.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::parse::{lex, Parser, Tok};
use crate::expr::{exprs_equal, is_zero, Expr, Node, ParseSession, Rat};
use crate::vfield::{total_derivative, Dir, VectorField};
use crate::Config;

#[derive(Debug, Clone, PartialEq)]
pub struct EquivTransform {
    /// T as an expression in t; always consumes the source t even under swap.
    pub t_map: Expr,
    /// X as an expression in x.
    pub x_map: Expr,
    pub c: Rat,
    /// U0 as an expression in t and x.
    pub u0: Expr,
    /// Apply the t <-> x interchange after the rest.
    pub swap: bool,
    /// Closed-form inverse of T, when known: t_inv(T(t)) = t.
    pub t_inv: Option<Expr>,
    /// Closed-form inverse of X.
    pub x_inv: Option<Expr>,
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

/// Resolve an inverse map: supplied closed form, or the variable itself when
/// the map is the identity.
fn resolve_inv(map: &Expr, inv: &Option<Expr>, var: &str) -> Option<Expr> {
    if let Some(i) = inv {
        return Some(i.clone());
    }
    if *map == Expr::var(var) {
        return Some(Expr::var(var));
    }
    None
}

impl EquivTransform {
    pub fn new(t_map: Expr, x_map: Expr, c: Rat, u0: Expr, swap: bool) -> Result<EquivTransform> {
        check_vars(&t_map, &["t"], "T")?;
        check_vars(&x_map, &["x"], "X")?;
        check_vars(&u0, &["t", "x"], "U0")?;
        if c.is_zero() {
            return Err(Error::Invalid("C must be nonzero".to_string()));
        }
        if t_map.diff("t").is_zero_const() {
            return Err(Error::NotInvertible("T is constant".to_string()));
        }
        if x_map.diff("x").is_zero_const() {
            return Err(Error::NotInvertible("X is constant".to_string()));
        }
        Ok(EquivTransform {
            t_map,
            x_map,
            c,
            u0,
            swap,
            t_inv: None,
            x_inv: None,
        })
    }

    pub fn with_inverses(mut self, t_inv: Option<Expr>, x_inv: Option<Expr>) -> Result<EquivTransform> {
        if let Some(i) = &t_inv {
            check_vars(i, &["t"], "Tinv")?;
        }
        if let Some(i) = &x_inv {
            check_vars(i, &["x"], "Xinv")?;
        }
        self.t_inv = t_inv;
        self.x_inv = x_inv;
        Ok(self)
    }

    pub fn identity() -> EquivTransform {
        EquivTransform {
            t_map: Expr::var("t"),
            x_map: Expr::var("x"),
            c: Rat::one(),
            u0: Expr::zero(),
            swap: false,
            t_inv: None,
            x_inv: None,
        }
    }

    pub fn dt(t_map: Expr, t_inv: Option<Expr>) -> Result<EquivTransform> {
        EquivTransform::new(t_map, Expr::var("x"), Rat::one(), Expr::zero(), false)?
            .with_inverses(t_inv, None)
    }

    pub fn dx(x_map: Expr, x_inv: Option<Expr>) -> Result<EquivTransform> {
        EquivTransform::new(Expr::var("t"), x_map, Rat::one(), Expr::zero(), false)?
            .with_inverses(None, x_inv)
    }

    pub fn du(c: Rat) -> Result<EquivTransform> {
        EquivTransform::new(Expr::var("t"), Expr::var("x"), c, Expr::zero(), false)
    }

    pub fn z(u0: Expr) -> Result<EquivTransform> {
        EquivTransform::new(Expr::var("t"), Expr::var("x"), Rat::one(), u0, false)
    }

    /// The interchange of t and x.
    pub fn interchange() -> EquivTransform {
        EquivTransform {
            swap: true,
            ..EquivTransform::identity()
        }
    }

    /// Sampled well-formedness checks: the maps are not locally constant and
    /// any supplied inverses really invert.
    pub fn validate(&self, cfg: &Config) -> Result<()> {
        if is_zero(&self.t_map.diff("t"), cfg)? {
            return Err(Error::NotInvertible("T' vanishes identically".to_string()));
        }
        if is_zero(&self.x_map.diff("x"), cfg)? {
            return Err(Error::NotInvertible("X' vanishes identically".to_string()));
        }
        if let Some(i) = &self.t_inv {
            let r = i.subst1("t", &self.t_map) - Expr::var("t");
            if !is_zero(&r, cfg)? {
                return Err(Error::NotInvertible("Tinv does not invert T".to_string()));
            }
        }
        if let Some(i) = &self.x_inv {
            let r = i.subst1("x", &self.x_map) - Expr::var("x");
            if !is_zero(&r, cfg)? {
                return Err(Error::NotInvertible("Xinv does not invert X".to_string()));
            }
        }
        Ok(())
    }

    fn t_inv_expr(&self) -> Result<Expr> {
        resolve_inv(&self.t_map, &self.t_inv, "t")
            .ok_or_else(|| Error::MissingInverse(format!("no inverse for T = {}", self.t_map)))
    }

    fn x_inv_expr(&self) -> Result<Expr> {
        resolve_inv(&self.x_map, &self.x_inv, "x")
            .ok_or_else(|| Error::MissingInverse(format!("no inverse for X = {}", self.x_map)))
    }

    /// The t-coordinate of the image, as an expression in the source (t, x).
    pub fn t_out(&self) -> Expr {
        if self.swap {
            self.x_map.clone()
        } else {
            self.t_map.clone()
        }
    }

    /// The x-coordinate of the image.
    pub fn x_out(&self) -> Expr {
        if self.swap {
            self.t_map.clone()
        } else {
            self.x_map.clone()
        }
    }

    /// The u-coordinate of the image.
    pub fn u_out(&self) -> Expr {
        Expr::rat(self.c.clone()) * Expr::var("u") + self.u0.clone()
    }

    /// Closed-form image of a right-hand side, expressed in the image
    /// coordinates (renamed back to t, x, u).
    pub fn act_on_f(&self, f: &Expr) -> Result<Expr> {
        let that = self.t_inv_expr()?;
        let xhat = self.x_inv_expr()?;
        let u0tx = self.u0.diff("t").diff("x");
        let tp = self.t_map.diff("t");
        let xp = self.x_map.diff("x");
        let g = (Expr::rat(self.c.clone()) * f.clone() + u0tx)
            * Expr::pow(tp, Expr::int(-1))
            * Expr::pow(xp, Expr::int(-1));
        let u0_back = {
            let mut m = BTreeMap::new();
            m.insert("t".to_string(), that.clone());
            m.insert("x".to_string(), xhat.clone());
            self.u0.substitute(&m)
        };
        let u_back = (Expr::var("u") - u0_back) * Expr::pow(Expr::rat(self.c.clone()), Expr::int(-1));
        let mut m = BTreeMap::new();
        m.insert("t".to_string(), that);
        m.insert("x".to_string(), xhat);
        m.insert("u".to_string(), u_back);
        let mut out = g.substitute(&m);
        if self.swap {
            let mut sw = BTreeMap::new();
            sw.insert("t".to_string(), Expr::var("x"));
            sw.insert("x".to_string(), Expr::var("t"));
            out = out.substitute(&sw);
        }
        Ok(out)
    }

    /// Relational check that this transform maps the equation with right-hand
    /// side f to the one with right-hand side f_target. Needs no inverses.
    pub fn verify_map(&self, f: &Expr, f_target: &Expr, cfg: &Config) -> Result<bool> {
        let mut m = BTreeMap::new();
        m.insert("t".to_string(), self.t_out());
        m.insert("x".to_string(), self.x_out());
        m.insert("u".to_string(), self.u_out());
        let lhs = f_target.substitute(&m)
            * self.t_map.diff("t")
            * self.x_map.diff("x");
        let residual =
            lhs - Expr::rat(self.c.clone()) * f.clone() - self.u0.diff("t").diff("x");
        is_zero(&residual, cfg)
    }

    /// Pushforward of a symmetry ansatz field, stage by elementary stage in
    /// decomposition order: Du(C), Z(U0), Dx(X), Dt(T), then the swap.
    pub fn pushforward_vf(&self, q: &VectorField) -> Result<VectorField> {
        let mut tau = q.tau.clone();
        let mut xi = q.xi.clone();
        let eta1 = q.eta1.clone();
        let mut eta0 = q.eta0.clone();

        eta0 = Expr::rat(self.c.clone()) * eta0;

        eta0 = eta0 + tau.clone() * self.u0.diff("t") + xi.clone() * self.u0.diff("x")
            - Expr::rat(eta1.clone()) * self.u0.clone();

        if self.x_map != Expr::var("x") {
            if !(xi.is_zero_const() && !eta0.depends_on("x")) {
                let xhat = self.x_inv_expr()?;
                xi = xi.subst1("x", &xhat) * Expr::pow(xhat.diff("x"), Expr::int(-1));
                eta0 = eta0.subst1("x", &xhat);
            }
        }
        if self.t_map != Expr::var("t") {
            if !(tau.is_zero_const() && !eta0.depends_on("t")) {
                let that = self.t_inv_expr()?;
                tau = tau.subst1("t", &that) * Expr::pow(that.diff("t"), Expr::int(-1));
                eta0 = eta0.subst1("t", &that);
            }
        }
        if self.swap {
            let new_tau = xi.subst1("x", &Expr::var("t"));
            let new_xi = tau.subst1("t", &Expr::var("x"));
            let mut sw = BTreeMap::new();
            sw.insert("t".to_string(), Expr::var("x"));
            sw.insert("x".to_string(), Expr::var("t"));
            eta0 = eta0.substitute(&sw);
            tau = new_tau;
            xi = new_xi;
        }
        VectorField::new(tau, xi, eta1, eta0)
    }

    /// Group composition: (a.compose_after(b)) acts as b first, then a.
    pub fn compose_after(&self, b: &EquivTransform) -> Result<EquivTransform> {
        let a = self;
        let comp_t = |outer: &Expr, inner: &Expr| outer.subst1("t", inner);
        let comp_x = |outer: &Expr, inner: &Expr| outer.subst1("x", inner);

        // b's intermediate coordinates as expressions in the source
        let t1 = b.t_out();
        let x1 = b.x_out();
        let mut m = BTreeMap::new();
        m.insert("t".to_string(), t1);
        m.insert("x".to_string(), x1);
        let u0 = Expr::rat(a.c.clone()) * b.u0.clone() + a.u0.substitute(&m);
        let c = a.c.clone() * b.c.clone();
        let swap = a.swap ^ b.swap;

        let ainv_t = resolve_inv(&a.t_map, &a.t_inv, "t");
        let ainv_x = resolve_inv(&a.x_map, &a.x_inv, "x");
        let binv_t = resolve_inv(&b.t_map, &b.t_inv, "t");
        let binv_x = resolve_inv(&b.x_map, &b.x_inv, "x");
        let rename = |e: Expr, from: &str, to: &str| e.subst1(from, &Expr::var(to));

        // Which of a's maps continues b's t-chain depends on b's swap alone:
        // b.swap routes the source t through b.t_map into the x-slot of a.
        let (t_map, x_map, t_inv, x_inv) = if !b.swap {
            let tm = comp_t(&a.t_map, &b.t_map);
            let xm = comp_x(&a.x_map, &b.x_map);
            let ti = match (binv_t, ainv_t) {
                (Some(bi), Some(ai)) => Some(comp_t(&bi, &ai)),
                _ => None,
            };
            let xi = match (binv_x, ainv_x) {
                (Some(bi), Some(ai)) => Some(comp_x(&bi, &ai)),
                _ => None,
            };
            (tm, xm, ti, xi)
        } else {
            // t -> Tb(t) feeds a's x_map; x -> Xb(x) feeds a's t_map.
            let tm = comp_t(&rename(a.x_map.clone(), "x", "t"), &b.t_map);
            let xm = comp_x(&rename(a.t_map.clone(), "t", "x"), &b.x_map);
            let ti = match (binv_t, ainv_x) {
                (Some(bi), Some(ai)) => Some(comp_t(&bi, &rename(ai, "x", "t"))),
                _ => None,
            };
            let xi = match (binv_x, ainv_t) {
                (Some(bi), Some(ai)) => Some(comp_x(&bi, &rename(ai, "t", "x"))),
                _ => None,
            };
            (tm, xm, ti, xi)
        };

        let t_inv = t_inv.filter(|_| t_map != Expr::var("t"));
        let x_inv = x_inv.filter(|_| x_map != Expr::var("x"));
        EquivTransform::new(t_map, x_map, c, u0, swap)?.with_inverses(t_inv, x_inv)
    }

    /// Group inverse; requires resolvable inverse maps.
    pub fn inverse(&self) -> Result<EquivTransform> {
        let that = self.t_inv_expr()?;
        let xhat = self.x_inv_expr()?;
        let cinv = Rat::one() / self.c.clone();
        let rename = |e: &Expr, from: &str, to: &str| e.subst1(from, &Expr::var(to));
        if !self.swap {
            let mut m = BTreeMap::new();
            m.insert("t".to_string(), that.clone());
            m.insert("x".to_string(), xhat.clone());
            let u0 = Expr::rat(-cinv.clone()) * self.u0.substitute(&m);
            EquivTransform::new(that, xhat, cinv, u0, false)?.with_inverses(
                Some(self.t_map.clone()).filter(|m| *m != Expr::var("t")),
                Some(self.x_map.clone()).filter(|m| *m != Expr::var("x")),
            )
        } else {
            // t~ = X(x), x~ = T(t): undo with t = That(x~), x = Xhat(t~).
            let mut m = BTreeMap::new();
            m.insert("t".to_string(), rename(&that, "t", "x"));
            m.insert("x".to_string(), rename(&xhat, "x", "t"));
            let u0 = Expr::rat(-cinv.clone()) * self.u0.substitute(&m);
            let t_map = rename(&xhat, "x", "t");
            let x_map = rename(&that, "t", "x");
            let t_inv = Some(rename(&self.x_map, "x", "t")).filter(|_| t_map != Expr::var("t"));
            let x_inv = Some(rename(&self.t_map, "t", "x")).filter(|_| x_map != Expr::var("x"));
            EquivTransform::new(t_map, x_map, cinv, u0, true)?.with_inverses(t_inv, x_inv)
        }
    }

    /// Canonical factorization [swap o] Dt(T) o Dx(X) o Z(U0) o Du(C),
    /// listed left to right (apply from the right).
    pub fn elementary_factors(&self) -> Result<Vec<EquivTransform>> {
        let mut out = Vec::new();
        if self.swap {
            out.push(EquivTransform::interchange());
        }
        if self.t_map != Expr::var("t") {
            out.push(EquivTransform::dt(self.t_map.clone(), self.t_inv.clone())?);
        }
        if self.x_map != Expr::var("x") {
            out.push(EquivTransform::dx(self.x_map.clone(), self.x_inv.clone())?);
        }
        if !self.u0.is_zero_const() {
            out.push(EquivTransform::z(self.u0.clone())?);
        }
        if !self.c.is_one() {
            out.push(EquivTransform::du(self.c.clone())?);
        }
        if out.is_empty() {
            out.push(EquivTransform::identity());
        }
        Ok(out)
    }

    /// First prolongation: the images of u_t and u_x in source jet coordinates.
    pub fn prolong1(&self) -> Result<Prolonged1> {
        let u = self.u_out();
        let dtu = total_derivative(&u, Dir::T)?;
        let dxu = total_derivative(&u, Dir::X)?;
        let tp = Expr::pow(self.t_map.diff("t"), Expr::int(-1));
        let xp = Expr::pow(self.x_map.diff("x"), Expr::int(-1));
        let (ut, ux) = if self.swap {
            (dxu * xp, dtu * tp)
        } else {
            (dtu * tp, dxu * xp)
        };
        Ok(Prolonged1 {
            base: self.clone(),
            ut,
            ux,
        })
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "tr{{T={}; X={}; C={}; U0={}",
            self.t_map,
            self.x_map,
            Expr::rat(self.c.clone()),
            self.u0
        );
        if self.swap {
            s.push_str("; swap=true");
        }
        if let Some(i) = &self.t_inv {
            s.push_str(&format!("; Tinv={i}"));
        }
        if let Some(i) = &self.x_inv {
            s.push_str(&format!("; Xinv={i}"));
        }
        s.push('}');
        s
    }
}

impl std::fmt::Display for EquivTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

/// A transform together with the images of the first-order jet variables.
#[derive(Debug, Clone)]
pub struct Prolonged1 {
    pub base: EquivTransform,
    pub ut: Expr,
    pub ux: Expr,
}

/// Contact condition on the first jet space: both residuals
/// Ut D(T~) + Ux D(X~) - D(U~), for D = D_t and D = D_x, vanish identically.
/// Each residual is split over the second-order jets and a jet-free remainder.
pub fn contact_check(p: &Prolonged1, cfg: &Config) -> Result<bool> {
    let tt = p.base.t_out();
    let xx = p.base.x_out();
    let uu = p.base.u_out();
    for dir in [Dir::T, Dir::X] {
        let r = p.ut.clone() * total_derivative(&tt, dir)?
            + p.ux.clone() * total_derivative(&xx, dir)?
            - total_derivative(&uu, dir)?;
        if !jet_split_zero(&r, cfg)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Split an expression linear in u_tt, u_tx, u_xx into those coefficients
/// plus the remainder and check that every piece vanishes.
fn jet_split_zero(r: &Expr, cfg: &Config) -> Result<bool> {
    let second = ["u_tt", "u_tx", "u_xx"];
    let mut m = BTreeMap::new();
    for j in second {
        if !is_zero(&r.diff(j), cfg)? {
            return Ok(false);
        }
        m.insert(j.to_string(), Expr::zero());
    }
    is_zero(&r.substitute(&m), cfg)
}

/// One element of the finite quotient group: a signed permutation of (t, x)
/// together with a sign on u, stored as a 3x3 matrix acting on (t, x, u).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteElement {
    pub mat: [[i8; 3]; 3],
    pub name: String,
}

impl DiscreteElement {
    fn from_mat(mat: [[i8; 3]; 3], name: String) -> DiscreteElement {
        DiscreteElement { mat, name }
    }

    pub fn swaps(&self) -> bool {
        self.mat[0][1] != 0
    }

    /// Sign multiplying the source t inside the t-chain.
    pub fn t_sign(&self) -> i8 {
        if self.swaps() {
            self.mat[1][0]
        } else {
            self.mat[0][0]
        }
    }

    pub fn x_sign(&self) -> i8 {
        if self.swaps() {
            self.mat[0][1]
        } else {
            self.mat[1][1]
        }
    }

    pub fn u_sign(&self) -> i8 {
        self.mat[2][2]
    }

    /// Sign picked up by a right-hand side under this element.
    pub fn f_sign(&self) -> i8 {
        self.t_sign() * self.x_sign() * self.u_sign()
    }

    pub fn to_transform(&self) -> EquivTransform {
        let sgn = |s: i8, v: &str| {
            if s >= 0 {
                Expr::var(v)
            } else {
                Expr::int(-1) * Expr::var(v)
            }
        };
        let t_map = sgn(self.t_sign(), "t");
        let x_map = sgn(self.x_sign(), "x");
        EquivTransform::new(
            t_map.clone(),
            x_map.clone(),
            Rat::from_integer(self.u_sign().into()),
            Expr::zero(),
            self.swaps(),
        )
        .expect("signed permutation is a valid transform")
        .with_inverses(
            Some(t_map).filter(|m| *m != Expr::var("t")),
            Some(x_map).filter(|m| *m != Expr::var("x")),
        )
        .expect("sign maps are their own inverses")
    }
}

fn mat_mul(a: &[[i8; 3]; 3], b: &[[i8; 3]; 3]) -> [[i8; 3]; 3] {
    let mut c = [[0i8; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0i8;
            for (k, row) in b.iter().enumerate() {
                s += a[i][k] * row[j];
            }
            c[i][j] = s;
        }
    }
    c
}

const MAT_ID: [[i8; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

#[derive(Debug, Clone)]
pub struct DiscreteGroupTable {
    pub elements: Vec<DiscreteElement>,
    /// table[i][j] = index of elements[i] composed after elements[j].
    pub table: Vec<Vec<usize>>,
    pub orders: Vec<usize>,
    pub order_histogram: BTreeMap<usize, usize>,
    pub center: Vec<usize>,
    /// True when the structural certificate (order 16, order histogram
    /// {1:1, 2:11, 4:4}, center of size 4, associativity) holds.
    pub certified: bool,
}

/// Enumerate the group generated by the interchange and the three
/// reflections t -> -t, x -> -x, u -> -u.
pub fn discrete_group_table() -> DiscreteGroupTable {
    let gens: [([[i8; 3]; 3], &str); 4] = [
        ([[0, 1, 0], [1, 0, 0], [0, 0, 1]], "I0"),
        ([[-1, 0, 0], [0, 1, 0], [0, 0, 1]], "It"),
        ([[1, 0, 0], [0, -1, 0], [0, 0, 1]], "Ix"),
        ([[1, 0, 0], [0, 1, 0], [0, 0, -1]], "Iu"),
    ];
    // breadth-first closure, naming each element by a shortest generator word
    let mut elements: Vec<DiscreteElement> =
        vec![DiscreteElement::from_mat(MAT_ID, "e".to_string())];
    let mut frontier = vec![0usize];
    while let Some(i) = frontier.first().copied() {
        frontier.remove(0);
        for (g, gname) in &gens {
            let m = mat_mul(&elements[i].mat, g);
            if !elements.iter().any(|e| e.mat == m) {
                let name = if elements[i].name == "e" {
                    gname.to_string()
                } else {
                    format!("{}*{}", elements[i].name, gname)
                };
                elements.push(DiscreteElement::from_mat(m, name));
                frontier.push(elements.len() - 1);
            }
        }
    }

    let n = elements.len();
    let idx_of = |m: &[[i8; 3]; 3]| elements.iter().position(|e| e.mat == *m).expect("closed");
    let mut table = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in 0..n {
            table[i][j] = idx_of(&mat_mul(&elements[i].mat, &elements[j].mat));
        }
    }

    let mut orders = Vec::with_capacity(n);
    for e in &elements {
        let mut k = 1usize;
        let mut m = e.mat;
        while m != MAT_ID {
            m = mat_mul(&m, &e.mat);
            k += 1;
        }
        orders.push(k);
    }
    let mut order_histogram = BTreeMap::new();
    for &o in &orders {
        *order_histogram.entry(o).or_insert(0usize) += 1;
    }

    let center: Vec<usize> = (0..n)
        .filter(|&i| (0..n).all(|j| table[i][j] == table[j][i]))
        .collect();

    let mut assoc = true;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if table[table[i][j]][k] != table[i][table[j][k]] {
                    assoc = false;
                }
            }
        }
    }
    let expected: BTreeMap<usize, usize> = [(1, 1), (2, 11), (4, 4)].into_iter().collect();
    let certified = n == 16 && order_histogram == expected && center.len() == 4 && assoc;

    DiscreteGroupTable {
        elements,
        table,
        orders,
        order_histogram,
        center,
        certified,
    }
}

/// Parse a transform literal
/// `tr{T=...; X=...; C=...; U0=...; swap=...; Tinv=...; Xinv=...}`
/// with all fields optional and defaulting to the identity.
pub fn parse_tr(src: &str, sess: &mut ParseSession) -> Result<EquivTransform> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0, sess };
    let pos = p.pos();
    match p.bump() {
        Tok::Ident(s) if s == "tr" => {}
        other => {
            return Err(Error::Syntax {
                pos,
                msg: format!("expected tr literal, found {other:?}"),
            })
        }
    }
    p.expect(&Tok::LBrace)?;
    let mut t_map = Expr::var("t");
    let mut x_map = Expr::var("x");
    let mut c = Rat::one();
    let mut u0 = Expr::zero();
    let mut swap = false;
    let mut t_inv = None;
    let mut x_inv = None;
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
        if name == "swap" {
            let pos2 = p.pos();
            match p.bump() {
                Tok::Ident(s) if s == "true" => swap = true,
                Tok::Ident(s) if s == "false" => swap = false,
                other => {
                    return Err(Error::Syntax {
                        pos: pos2,
                        msg: format!("swap expects true or false, found {other:?}"),
                    })
                }
            }
        } else {
            let value = p.expr()?;
            match name.as_str() {
                "T" => t_map = value,
                "X" => x_map = value,
                "C" => {
                    c = match value.node() {
                        Node::Rat(r) => r.clone(),
                        _ => {
                            return Err(Error::Invalid(format!(
                                "C must be a rational constant, got {value}"
                            )))
                        }
                    }
                }
                "U0" => u0 = value,
                "Tinv" => t_inv = Some(value),
                "Xinv" => x_inv = Some(value),
                _ => {
                    return Err(Error::Syntax {
                        pos,
                        msg: format!(
                            "unknown field {name} (expected T, X, C, U0, swap, Tinv, Xinv)"
                        ),
                    })
                }
            }
        }
        seen.push(name);
        if !p.eat(&Tok::Semi) {
            p.expect(&Tok::RBrace)?;
            break;
        }
    }
    p.expect_eof()?;
    EquivTransform::new(t_map, x_map, c, u0, swap)?.with_inverses(t_inv, x_inv)
}

/// Structural equality up to is_zero of the defining data.
pub fn transforms_equal(a: &EquivTransform, b: &EquivTransform, cfg: &Config) -> Result<bool> {
    Ok(a.swap == b.swap
        && a.c == b.c
        && exprs_equal(&a.t_map, &b.t_map, cfg)?
        && exprs_equal(&a.x_map, &b.x_map, cfg)?
        && exprs_equal(&a.u0, &b.u0, cfg)?)
}
