//! Integer characteristics of finite-dimensional subalgebras of the span
//! <D^t(tau), D^x(xi), I, Z(eta0)>.
//!
//! A subalgebra is given by a basis of vector fields. Twelve numbers are
//! attached to it, all invariant under the admissible transform group
//! (including the t/x interchange, which is why every paired quantity is
//! reported as a max/min pair rather than an ordered pair):
//!
//!   m  = max(rank of the tau components, rank of the xi components)
//!   n  = dimension of the algebra
//!   k  = min of the two component ranks
//!   l  = 1 if some basis element has a nonzero u d_u part, else 0
//!   j1, j2   = max/min of dim(xi==0, eta1==0) and dim(tau==0, eta1==0)
//!   j12      = dim(eta1==0)
//!   j13, j23 = max/min of dim(xi==0) and dim(tau==0)
//!   r1, r2   = max/min of the component ranks of the eta1==0 subspace
//!   r3       = 3 - min dim<D^t(tau), D^x(xi)> over elements with unit
//!              u d_u part, or 0 when no such element exists
//!
//! Membership subspaces are cut out by sampling the component functions at
//! random rational points, solving the resulting linear system, and then
//! certifying every candidate against the functional constraint with the
//! probabilistic zero test. Coefficient functions that stay inside the
//! rational fragment are handled exactly; anything else goes through a
//! 256-bit float evaluation, an SVD nullspace, and a reduction to echelon
//! form so that rational kernels survive the float round trip.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::expr::zero::sample_point;
use crate::expr::{eval, eval_rat, is_zero, parse_expr, Expr, ParseSession, Rat};
use crate::linalg;
use crate::vfield::{parse_vf, VectorField};
use crate::Config;

/// A natural number extended with infinity, for the infinite-dimensional
/// catalog entry. Fin(a) < Fin(b) < Inf under the derived order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    Fin(u32),
    Inf,
}

impl ExtNat {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtNat::Fin(_))
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(v) => write!(f, "{v}"),
            ExtNat::Inf => write!(f, "inf"),
        }
    }
}

impl From<u32> for ExtNat {
    fn from(v: u32) -> ExtNat {
        ExtNat::Fin(v)
    }
}

/// The full twelve-number profile, in the fixed reporting order
/// (m, n, k, l, j1, j2, j12, j13, j23, r1, r2, r3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvariantTuple {
    pub m: ExtNat,
    pub n: ExtNat,
    pub k: ExtNat,
    pub l: ExtNat,
    pub j1: ExtNat,
    pub j2: ExtNat,
    pub j12: ExtNat,
    pub j13: ExtNat,
    pub j23: ExtNat,
    pub r1: ExtNat,
    pub r2: ExtNat,
    pub r3: ExtNat,
}

impl InvariantTuple {
    pub fn new(a: [ExtNat; 12]) -> InvariantTuple {
        InvariantTuple {
            m: a[0],
            n: a[1],
            k: a[2],
            l: a[3],
            j1: a[4],
            j2: a[5],
            j12: a[6],
            j13: a[7],
            j23: a[8],
            r1: a[9],
            r2: a[10],
            r3: a[11],
        }
    }

    pub fn from_finite(a: [u32; 12]) -> InvariantTuple {
        InvariantTuple::new(a.map(ExtNat::Fin))
    }

    pub fn as_array(&self) -> [ExtNat; 12] {
        [
            self.m, self.n, self.k, self.l, self.j1, self.j2, self.j12, self.j13, self.j23,
            self.r1, self.r2, self.r3,
        ]
    }

    /// The coarser profile (n, r3, r2, j1, k) used for the ordering of
    /// catalog cases.
    pub fn tuple5(&self) -> [ExtNat; 5] {
        [self.n, self.r3, self.r2, self.j1, self.k]
    }
}

impl fmt::Display for InvariantTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.as_array().iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A finite-dimensional subalgebra with an optional label and parameter
/// bindings (q, p) recorded for reporting.
#[derive(Debug, Clone)]
pub struct Subalgebra {
    pub basis: Vec<VectorField>,
    pub label: String,
    pub params: BTreeMap<String, Rat>,
}

impl Subalgebra {
    pub fn new(label: &str, basis: Vec<VectorField>) -> Subalgebra {
        Subalgebra {
            basis,
            label: label.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn with_params(
        label: &str,
        basis: Vec<VectorField>,
        params: BTreeMap<String, Rat>,
    ) -> Subalgebra {
        Subalgebra {
            basis,
            label: label.to_string(),
            params,
        }
    }

    pub fn n(&self) -> usize {
        self.basis.len()
    }
}

/// One linear condition on a coefficient vector c, read against the basis
/// element sum(c_i Q_i).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// tau component vanishes identically.
    TauZero,
    /// xi component vanishes identically.
    XiZero,
    /// eta0 component vanishes identically.
    Eta0Zero,
    /// u d_u coefficient is 0.
    Eta1Zero,
    /// u d_u coefficient is 1 (affine).
    Eta1One,
}

/// An affine solution set of coefficient vectors: particular + span(basis).
/// particular is None when the constraints are inconsistent (only possible
/// with Eta1One), and Some(zero vector) for purely linear constraints.
#[derive(Debug, Clone)]
pub struct CoeffSpace {
    pub particular: Option<Vec<Rat>>,
    pub basis: Vec<Vec<Rat>>,
}

impl CoeffSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particular.is_none()
    }
}

/// One family of scalar constraints: every function in fns, as a row of the
/// sampled system, over the named variables.
struct FnGroup {
    fns: Vec<Expr>,
    vars: Vec<String>,
}

fn names(vars: &[&str]) -> Vec<String> {
    vars.iter().map(|v| v.to_string()).collect()
}

fn identity_basis(n: usize) -> Vec<Vec<Rat>> {
    (0..n)
        .map(|i| {
            let mut v = vec![Rat::zero(); n];
            v[i] = Rat::one();
            v
        })
        .collect()
}

fn combine(fns: &[Expr], c: &[Rat]) -> Expr {
    let mut terms = Vec::new();
    for (f, w) in fns.iter().zip(c) {
        if !w.is_zero() {
            terms.push(Expr::rat(w.clone()) * f.clone());
        }
    }
    Expr::add(terms)
}

/// Dimension of the span of the given functions of the given variables,
/// decided from at least fns.len() + 2 sample points. Exact when every
/// function is rational-only, otherwise a float rank that must agree across
/// three independent sample batches.
pub fn function_rank(fns: &[Expr], vars: &[&str], samples: usize, cfg: &Config) -> Result<usize> {
    if fns.is_empty() {
        return Ok(0);
    }
    if samples < fns.len() + 2 {
        return Err(Error::Invalid(format!(
            "rank of {} functions needs at least {} samples, got {samples}",
            fns.len(),
            fns.len() + 2
        )));
    }
    let vars = names(vars);
    if fns.iter().all(|f| f.is_rational_only()) {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x72616e_6b);
        let rows = exact_columns(fns, &vars, samples, &mut rng, cfg)?;
        return Ok(linalg::rank(rows));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x72616e_6b);
    let mut ranks = Vec::new();
    for _ in 0..3 {
        let mut m = float_columns(fns, &vars, samples, &mut rng, cfg)?;
        // scale each function row to unit max so the rank tolerance is
        // relative; row scaling cannot change the rank
        for i in 0..m.nrows() {
            let top = (0..samples).fold(0.0f64, |acc, j| acc.max(m[(i, j)].abs()));
            if top > 0.0 {
                for j in 0..samples {
                    m[(i, j)] /= top;
                }
            }
        }
        ranks.push(linalg::f64_rank(&m, 1e-9));
    }
    if ranks[0] == ranks[1] && ranks[1] == ranks[2] {
        Ok(ranks[0])
    } else {
        Err(Error::RankUnstable)
    }
}

/// Matrix with one row per function, one column per sample point, exact.
fn exact_columns(
    fns: &[Expr],
    vars: &[String],
    samples: usize,
    rng: &mut ChaCha12Rng,
    cfg: &Config,
) -> Result<Vec<Vec<Rat>>> {
    let mut rows = vec![Vec::with_capacity(samples); fns.len()];
    let budget = 8 * samples;
    let mut spent = 0;
    let mut got = 0;
    while got < samples {
        let pt = sample_point(vars, rng, cfg);
        let mut col = Vec::with_capacity(fns.len());
        let mut singular = false;
        for f in fns {
            match eval_rat(f, &pt) {
                Ok(v) => col.push(v),
                Err(Error::Singular(_)) => {
                    singular = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if singular {
            spent += 1;
            if spent > budget {
                return Err(Error::DomainExhausted(format!(
                    "{spent} singular sample points while ranking functions"
                )));
            }
            continue;
        }
        for (row, v) in rows.iter_mut().zip(col) {
            row.push(v);
        }
        got += 1;
    }
    Ok(rows)
}

/// Same layout as exact_columns, 256-bit evaluation narrowed to f64.
fn float_columns(
    fns: &[Expr],
    vars: &[String],
    samples: usize,
    rng: &mut ChaCha12Rng,
    cfg: &Config,
) -> Result<DMatrix<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(samples);
    let budget = 8 * samples;
    let mut spent = 0;
    while cols.len() < samples {
        let pt = sample_point(vars, rng, cfg);
        let mut col = Vec::with_capacity(fns.len());
        let mut singular = false;
        for f in fns {
            match eval(f, &pt, None, cfg.prec) {
                Ok(out) => {
                    let v = out.value.to_f64();
                    if !v.is_finite() {
                        singular = true;
                        break;
                    }
                    col.push(v);
                }
                Err(Error::Singular(_)) => {
                    singular = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if singular {
            spent += 1;
            if spent > budget {
                return Err(Error::DomainExhausted(format!(
                    "{spent} singular sample points while ranking functions"
                )));
            }
            continue;
        }
        cols.push(col);
    }
    let nr = fns.len();
    let mut m = DMatrix::zeros(nr, samples);
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    Ok(m)
}

/// Kernel of the stacked functional constraints: all c with
/// sum(c_i g_i) == 0 for every g-family. Rational basis, certified.
fn functional_kernel(groups: &[FnGroup], n: usize, cfg: &Config) -> Result<Vec<Vec<Rat>>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if groups
        .iter()
        .all(|g| g.fns.iter().all(|f| f.is_zero_const()))
    {
        return Ok(identity_basis(n));
    }
    let mut last_err = Error::NonRationalDependency;
    for attempt in 0..2u64 {
        let samples = (n + 2) * (1 + attempt as usize);
        let cand = match kernel_candidate(groups, n, samples, attempt, cfg) {
            Ok(c) => c,
            Err(e @ Error::RankUnstable) => return Err(e),
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        let mut certified = true;
        'vecs: for v in &cand {
            for g in groups {
                if !is_zero(&combine(&g.fns, v), cfg)? {
                    certified = false;
                    break 'vecs;
                }
            }
        }
        if certified {
            return Ok(cand);
        }
    }
    Err(last_err)
}

fn kernel_candidate(
    groups: &[FnGroup],
    n: usize,
    samples: usize,
    attempt: u64,
    cfg: &Config,
) -> Result<Vec<Vec<Rat>>> {
    let exact = groups
        .iter()
        .all(|g| g.fns.iter().all(|f| f.is_rational_only()));
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed ^ 0x6b65_726e ^ (attempt << 32));
    if exact {
        let mut rows = Vec::new();
        for g in groups {
            let cols = exact_columns(&g.fns, &g.vars, samples, &mut rng, cfg)?;
            // transpose: one constraint row per sample point
            for j in 0..samples {
                rows.push((0..n).map(|i| cols[i][j].clone()).collect());
            }
        }
        return Ok(linalg::nullspace(rows, n));
    }
    // three batches must agree on the kernel dimension
    let mut bases: Vec<Vec<Vec<f64>>> = Vec::new();
    for _ in 0..3 {
        let mut rows: Vec<f64> = Vec::new();
        let mut nrows = 0;
        for g in groups {
            let m = float_columns(&g.fns, &g.vars, samples, &mut rng, cfg)?;
            for j in 0..samples {
                let mut row: Vec<f64> = (0..n).map(|i| m[(i, j)]).collect();
                let top = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                if top > 0.0 {
                    for v in &mut row {
                        *v /= top;
                    }
                }
                rows.extend(row);
                nrows += 1;
            }
        }
        let m = DMatrix::from_row_slice(nrows, n, &rows);
        let ns = linalg::f64_nullspace(&m, 1e-9);
        bases.push(ns);
    }
    let dims: Vec<usize> = bases.iter().map(|b| b.len()).collect();
    if !(dims[0] == dims[1] && dims[1] == dims[2]) {
        return Err(Error::RankUnstable);
    }
    // The SVD basis is an arbitrary rotation inside the kernel; reduce to
    // echelon form first so a rational kernel yields rational entries.
    let reduced = f64_rref_rows(bases.swap_remove(0), 1e-7);
    let mut out = Vec::new();
    for row in reduced {
        if row.iter().all(|v| v.abs() < 1e-7) {
            continue;
        }
        match linalg::rationalize_vector(&row, u64::from(cfg.max_den).max(1_000_000)) {
            Some(v) => out.push(v),
            None => return Err(Error::NonRationalDependency),
        }
    }
    if out.len() != dims[0] {
        return Err(Error::NonRationalDependency);
    }
    Ok(out)
}

/// In-place Gauss-Jordan on float rows; pivots below tol are skipped.
fn f64_rref_rows(mut rows: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return rows;
    }
    let nc = rows[0].len();
    let nr = rows.len();
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        let mut best = r;
        for i in r + 1..nr {
            if rows[i][c].abs() > rows[best][c].abs() {
                best = i;
            }
        }
        if rows[best][c].abs() <= tol {
            continue;
        }
        rows.swap(r, best);
        let piv = rows[r][c];
        for v in rows[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..nr {
            if i != r && rows[i][c] != 0.0 {
                let f = rows[i][c];
                for j in 0..nc {
                    rows[i][j] -= f * rows[r][j];
                }
            }
        }
        r += 1;
    }
    rows
}

fn eta1_values(s: &Subalgebra, c: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for (q, w) in s.basis.iter().zip(c) {
        acc += q.eta1.clone() * w.clone();
    }
    acc
}

/// The affine space of coefficient vectors cut out by the constraints.
pub fn member_subspace(
    s: &Subalgebra,
    constraints: &[Constraint],
    cfg: &Config,
) -> Result<CoeffSpace> {
    let n = s.basis.len();
    let want = |c: Constraint| constraints.contains(&c);
    if want(Constraint::Eta1Zero) && want(Constraint::Eta1One) {
        return Err(Error::Invalid(
            "eta1 cannot be pinned to 0 and 1 at once".to_string(),
        ));
    }
    let mut groups = Vec::new();
    if want(Constraint::TauZero) {
        groups.push(FnGroup {
            fns: s.basis.iter().map(|q| q.tau.clone()).collect(),
            vars: names(&["t"]),
        });
    }
    if want(Constraint::XiZero) {
        groups.push(FnGroup {
            fns: s.basis.iter().map(|q| q.xi.clone()).collect(),
            vars: names(&["x"]),
        });
    }
    if want(Constraint::Eta0Zero) {
        groups.push(FnGroup {
            fns: s.basis.iter().map(|q| q.eta0.clone()).collect(),
            vars: names(&["t", "x"]),
        });
    }
    let w = functional_kernel(&groups, n, cfg)?;
    let zero_part = Some(vec![Rat::zero(); n]);
    if !want(Constraint::Eta1Zero) && !want(Constraint::Eta1One) {
        return Ok(CoeffSpace {
            particular: zero_part,
            basis: w,
        });
    }
    // restrict the exact linear functional c -> eta1(c) to span(w)
    let vals: Vec<Rat> = w.iter().map(|v| eta1_values(s, v)).collect();
    let pivot = vals.iter().position(|v| !v.is_zero());
    if want(Constraint::Eta1Zero) {
        let basis = match pivot {
            None => w,
            Some(p) => {
                let wp = w[p].clone();
                let vp = vals[p].clone();
                w.iter()
                    .zip(&vals)
                    .enumerate()
                    .filter(|(i, _)| *i != p)
                    .map(|(_, (v, y))| {
                        let f = y.clone() / vp.clone();
                        v.iter()
                            .zip(&wp)
                            .map(|(a, b)| a.clone() - f.clone() * b.clone())
                            .collect()
                    })
                    .collect()
            }
        };
        return Ok(CoeffSpace {
            particular: zero_part,
            basis,
        });
    }
    // Eta1One
    match pivot {
        None => Ok(CoeffSpace {
            particular: None,
            basis: Vec::new(),
        }),
        Some(p) => {
            let wp = w[p].clone();
            let vp = vals[p].clone();
            let particular: Vec<Rat> = wp.iter().map(|a| a.clone() / vp.clone()).collect();
            let basis = w
                .iter()
                .zip(&vals)
                .enumerate()
                .filter(|(i, _)| *i != p)
                .map(|(_, (v, y))| {
                    let f = y.clone() / vp.clone();
                    v.iter()
                        .zip(&wp)
                        .map(|(a, b)| a.clone() - f.clone() * b.clone())
                        .collect()
                })
                .collect();
            Ok(CoeffSpace {
                particular: Some(particular),
                basis,
            })
        }
    }
}

/// Rational coefficients expressing target in the basis, or None when the
/// target is independent of it.
pub fn solve_combination(
    s: &Subalgebra,
    target: &VectorField,
    cfg: &Config,
) -> Result<Option<Vec<Rat>>> {
    let n = s.basis.len();
    let mut ext = s.basis.clone();
    ext.push(target.clone());
    let ext_alg = Subalgebra::new("extended", ext);
    let space = member_subspace(
        &ext_alg,
        &[
            Constraint::TauZero,
            Constraint::XiZero,
            Constraint::Eta1Zero,
            Constraint::Eta0Zero,
        ],
        cfg,
    )?;
    for v in &space.basis {
        if !v[n].is_zero() {
            let scale = -v[n].clone();
            return Ok(Some(v[..n].iter().map(|c| c.clone() / scale.clone()).collect()));
        }
    }
    Ok(None)
}

/// Linear independence of the basis plus bracket closure with rational
/// structure constants.
pub fn check_subalgebra(s: &Subalgebra, cfg: &Config) -> Result<()> {
    let zero_space = member_subspace(
        s,
        &[
            Constraint::TauZero,
            Constraint::XiZero,
            Constraint::Eta1Zero,
            Constraint::Eta0Zero,
        ],
        cfg,
    )?;
    if zero_space.dim() != 0 {
        return Err(Error::Invalid(format!(
            "basis of {} is linearly dependent ({} relations)",
            s.label,
            zero_space.dim()
        )));
    }
    for i in 0..s.basis.len() {
        for j in i + 1..s.basis.len() {
            let b = s.basis[i].bracket(&s.basis[j]);
            if solve_combination(s, &b, cfg)?.is_none() {
                return Err(Error::Invalid(format!(
                    "bracket of basis elements {} and {} of {} escapes the span",
                    i + 1,
                    j + 1,
                    s.label
                )));
            }
        }
    }
    Ok(())
}

/// All twelve characteristics of the subalgebra.
pub fn tuple12(s: &Subalgebra, cfg: &Config) -> Result<InvariantTuple> {
    let n = s.basis.len();
    let taus: Vec<Expr> = s.basis.iter().map(|q| q.tau.clone()).collect();
    let xis: Vec<Expr> = s.basis.iter().map(|q| q.xi.clone()).collect();
    let samples = n + 2;
    let rank_t = function_rank(&taus, &["t"], samples, cfg)?;
    let rank_x = function_rank(&xis, &["x"], samples, cfg)?;
    let m = rank_t.max(rank_x);
    let k = rank_t.min(rank_x);
    let l = usize::from(s.basis.iter().any(|q| !q.eta1.is_zero()));

    let dim = |cs: &[Constraint]| -> Result<usize> {
        Ok(member_subspace(s, cs, cfg)?.dim())
    };
    let s1 = dim(&[Constraint::XiZero, Constraint::Eta1Zero])?;
    let s2 = dim(&[Constraint::TauZero, Constraint::Eta1Zero])?;
    let s13_space = member_subspace(s, &[Constraint::XiZero], cfg)?;
    let s23_space = member_subspace(s, &[Constraint::TauZero], cfg)?;
    let s12_space = member_subspace(s, &[Constraint::Eta1Zero], cfg)?;
    let j12 = s12_space.dim();
    let j13 = s13_space.dim().max(s23_space.dim());
    let j23 = s13_space.dim().min(s23_space.dim());

    let proj_t: Vec<Expr> = s12_space.basis.iter().map(|w| combine(&taus, w)).collect();
    let proj_x: Vec<Expr> = s12_space.basis.iter().map(|w| combine(&xis, w)).collect();
    let pr_samples = j12 + 2;
    let pr_t = function_rank(&proj_t, &["t"], pr_samples, cfg)?;
    let pr_x = function_rank(&proj_x, &["x"], pr_samples, cfg)?;
    let r1 = pr_t.max(pr_x);
    let r2 = pr_t.min(pr_x);

    let r3 = if l == 0 {
        0
    } else {
        let unit_possible = |space: &CoeffSpace| -> bool {
            space.basis.iter().any(|v| !eta1_values(s, v).is_zero())
        };
        let both = member_subspace(s, &[Constraint::TauZero, Constraint::XiZero], cfg)?;
        if unit_possible(&both) {
            3
        } else if unit_possible(&s23_space) || unit_possible(&s13_space) {
            2
        } else {
            1
        }
    };

    Ok(InvariantTuple::from_finite([
        m as u32,
        n as u32,
        k as u32,
        l as u32,
        s1.max(s2) as u32,
        s1.min(s2) as u32,
        j12 as u32,
        j13 as u32,
        j23 as u32,
        r1 as u32,
        r2 as u32,
        r3 as u32,
    ]))
}

/// The coarser five-number profile (n, r3, r2, j1, k).
pub fn tuple5(s: &Subalgebra, cfg: &Config) -> Result<[ExtNat; 5]> {
    Ok(tuple12(s, cfg)?.tuple5())
}

/// Parse an algebra file: one vector field per line, `#` comments, blank
/// lines ignored, and optional `param NAME = RATIONAL` headers whose
/// bindings are substituted into every following field. Parametric
/// coefficients must sit inside component expressions (the braced literal
/// form or arguments of Dt/Dx/Z); scalar multiples of I stay rational.
pub fn parse_algebra_file(src: &str) -> Result<Subalgebra> {
    let mut sess = ParseSession::new();
    let mut params: BTreeMap<String, Rat> = BTreeMap::new();
    let mut basis = Vec::new();
    for (lineno, raw) in src.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("param ") {
            let (name, value) = rest.split_once('=').ok_or_else(|| {
                Error::Invalid(format!("line {}: param needs NAME = VALUE", lineno + 1))
            })?;
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Invalid(format!(
                    "line {}: bad parameter name {name:?}",
                    lineno + 1
                )));
            }
            let value = parse_expr(value.trim(), &mut sess)?;
            let value = value.as_rat().cloned().ok_or_else(|| {
                Error::Invalid(format!(
                    "line {}: parameter {name} must be a rational constant",
                    lineno + 1
                ))
            })?;
            params.insert(name.to_string(), value);
            continue;
        }
        let lit = parse_vf(line, &mut sess)?;
        let map: BTreeMap<String, Expr> = params
            .iter()
            .map(|(k, v)| (k.clone(), Expr::rat(v.clone())))
            .collect();
        let lit = crate::vfield::VfLiteral {
            tau: lit.tau.substitute(&map),
            xi: lit.xi.substitute(&map),
            eta1: lit.eta1.substitute(&map),
            eta0: lit.eta0.substitute(&map),
        };
        basis.push(VectorField::from_literal(&lit)?);
    }
    Ok(Subalgebra::with_params("file", basis, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::EquivTransform;
    use crate::expr::parse_one;

    fn cfg() -> Config {
        Config::default()
    }

    fn e(src: &str) -> Expr {
        parse_one(src).unwrap()
    }

    fn vf(src: &str) -> VectorField {
        let mut sess = ParseSession::new();
        crate::vfield::parse_vector_field(src, &mut sess).unwrap()
    }

    fn rat(n: i64, d: i64) -> Rat {
        use num_bigint::BigInt;
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn fins(a: [u32; 12]) -> InvariantTuple {
        InvariantTuple::from_finite(a)
    }

    // ubiquitous test algebras
    fn case9() -> Subalgebra {
        Subalgebra::new(
            "translations and boost",
            vec![vf("Dt(1)"), vf("Dx(1)"), vf("Dt(t) - Dx(x)")],
        )
    }

    fn case10() -> Subalgebra {
        Subalgebra::new(
            "projective pair",
            vec![
                vf("Dt(1) + Dx(1)"),
                vf("Dt(t) + Dx(x)"),
                vf("Dt(t^2) + Dx(x^2)"),
            ],
        )
    }

    fn case12(p: i64) -> Subalgebra {
        let g4 = format!("Dt({}*t) + I", -p);
        Subalgebra::new(
            "power nonlinearity",
            vec![vf("Dt(1)"), vf("Dx(1)"), vf("Dt(t) - Dx(x)"), vf(&g4)],
        )
    }

    #[test]
    fn function_rank_matches_hand_counts() {
        let c = cfg();
        assert_eq!(
            function_rank(&[e("1"), e("t"), e("t^2")], &["t"], 5, &c).unwrap(),
            3
        );
        assert_eq!(
            function_rank(
                &[e("sin(t)^2"), e("cos(t)^2"), e("1")],
                &["t"],
                5,
                &c
            )
            .unwrap(),
            2
        );
        assert_eq!(function_rank(&[], &["t"], 2, &c).unwrap(), 0);
        assert_eq!(
            function_rank(&[e("0"), e("t - t")], &["t"], 4, &c).unwrap(),
            0
        );
        assert!(matches!(
            function_rank(&[e("t"), e("1")], &["t"], 3, &c),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn member_subspace_cuts_expected_slices() {
        let c = cfg();
        let s = case9();
        let sp = member_subspace(&s, &[Constraint::XiZero, Constraint::Eta1Zero], &c).unwrap();
        assert_eq!(sp.dim(), 1);
        // the one surviving direction is d_t
        let v = &sp.basis[0];
        assert!(!v[0].is_zero() && v[1].is_zero() && v[2].is_zero());

        let unconstrained = member_subspace(&s, &[], &c).unwrap();
        assert_eq!(unconstrained.dim(), 3);
        assert_eq!(unconstrained.particular, Some(vec![Rat::zero(); 3]));

        let unit = member_subspace(&case10(), &[Constraint::Eta1One], &c).unwrap();
        assert!(unit.is_empty());
        assert_eq!(unit.dim(), 0);
    }

    #[test]
    fn affine_slice_carries_particular_solution() {
        let c = cfg();
        let s = case12(2);
        let unit = member_subspace(&s, &[Constraint::Eta1One], &c).unwrap();
        let part = unit.particular.clone().expect("feasible");
        assert_eq!(eta1_values(&s, &part), Rat::one());
        assert_eq!(unit.dim(), 3);
        for v in &unit.basis {
            assert!(eta1_values(&s, v).is_zero());
        }
    }

    #[test]
    fn subalgebra_checks_catch_defects() {
        let c = cfg();
        check_subalgebra(&case9(), &c).unwrap();
        check_subalgebra(&case10(), &c).unwrap();
        check_subalgebra(&case12(2), &c).unwrap();

        let dependent = Subalgebra::new("dependent", vec![vf("Dt(1)"), vf("2*Dt(1)")]);
        assert!(matches!(
            check_subalgebra(&dependent, &c),
            Err(Error::Invalid(_))
        ));

        let open = Subalgebra::new("open", vec![vf("Dt(1)"), vf("Dt(t^2)")]);
        assert!(matches!(check_subalgebra(&open, &c), Err(Error::Invalid(_))));
    }

    #[test]
    fn combinations_are_recovered_exactly() {
        let c = cfg();
        let s = case9();
        let target = vf("Dt(3*t + 1/2) - Dx(3*x)");
        let coeffs = solve_combination(&s, &target, &c).unwrap().unwrap();
        assert_eq!(coeffs, vec![rat(1, 2), Rat::zero(), rat(3, 1)]);
        let outside = vf("Dt(t^2)");
        assert!(solve_combination(&s, &outside, &c).unwrap().is_none());
    }

    #[test]
    fn tuples_match_hand_computations() {
        let c = cfg();
        assert_eq!(
            tuple12(&case9(), &c).unwrap(),
            fins([2, 3, 2, 0, 1, 1, 3, 1, 1, 2, 2, 0])
        );
        assert_eq!(
            tuple12(&case10(), &c).unwrap(),
            fins([3, 3, 3, 0, 0, 0, 3, 0, 0, 3, 3, 0])
        );
        // for the four-dimensional power-law algebra both slices with a
        // vanishing component keep two directions, whatever the exponent
        assert_eq!(
            tuple12(&case12(2), &c).unwrap(),
            fins([2, 4, 2, 1, 1, 1, 3, 2, 2, 2, 2, 2])
        );
        assert_eq!(
            tuple12(&case12(-3), &c).unwrap(),
            fins([2, 4, 2, 1, 1, 1, 3, 2, 2, 2, 2, 2])
        );
        let empty = Subalgebra::new("empty", vec![]);
        assert_eq!(tuple12(&empty, &c).unwrap(), fins([0; 12]));
    }

    #[test]
    fn five_tuple_is_the_published_projection() {
        let c = cfg();
        let q1 = Subalgebra::new(
            "dilation pair",
            vec![vf("Dt(1) + Dx(1)"), vf("Dt(t) + Dx(x) - 1*I")],
        );
        let t5 = tuple5(&q1, &c).unwrap();
        assert_eq!(
            t5,
            [
                ExtNat::Fin(2),
                ExtNat::Fin(1),
                ExtNat::Fin(1),
                ExtNat::Fin(0),
                ExtNat::Fin(2)
            ]
        );
        let full = tuple12(&q1, &c).unwrap();
        assert_eq!(full.tuple5(), t5);
    }

    #[test]
    fn unit_scaling_direction_raises_r3_to_three() {
        let c = cfg();
        let s = Subalgebra::new("pure scaling", vec![vf("I")]);
        let t = tuple12(&s, &c).unwrap();
        assert_eq!(t.r3, ExtNat::Fin(3));
        assert_eq!(t.as_array(), fins([0, 1, 0, 1, 0, 0, 0, 1, 1, 0, 0, 3]).as_array());
    }

    #[test]
    fn chain_inequalities_hold_on_catalog_style_algebras() {
        let c = cfg();
        for s in [
            case9(),
            case10(),
            case12(2),
            Subalgebra::new("single translation", vec![vf("Dt(1)")]),
            Subalgebra::new("mixed", vec![vf("Dt(t) + I"), vf("Dx(1)")]),
        ] {
            let t = tuple12(&s, &c).unwrap();
            let (m, n, k) = match (t.m, t.n, t.k) {
                (ExtNat::Fin(m), ExtNat::Fin(n), ExtNat::Fin(k)) => (m, n, k),
                _ => unreachable!(),
            };
            // 0 <= n - m <= k <= m <= n
            assert!(m <= n, "{}", s.label);
            assert!(n - m <= k, "{}", s.label);
            assert!(k <= m, "{}", s.label);
        }
    }

    #[test]
    fn tuples_are_stable_under_admissible_transforms() {
        let c = cfg();
        let swap = EquivTransform::interchange();
        let shear = EquivTransform::z(e("t*x")).unwrap();
        let stretch = EquivTransform::dt(e("exp(t)"), Some(e("ln(t)"))).unwrap();
        let curved = EquivTransform::new(e("t"), e("1/x"), rat(2, 1), e("t"), false)
            .unwrap()
            .with_inverses(None, Some(e("1/x")))
            .unwrap();
        let rescale = EquivTransform::du(rat(-3, 1)).unwrap();
        for s in [case9(), case12(2)] {
            let base = tuple12(&s, &c).unwrap();
            for tr in [&swap, &shear, &stretch, &curved, &rescale] {
                let moved = Subalgebra::new(
                    "pushforward",
                    s.basis.iter().map(|q| tr.pushforward_vf(q).unwrap()).collect(),
                );
                assert_eq!(tuple12(&moved, &c).unwrap(), base, "{}", s.label);
            }
        }
    }

    #[test]
    fn algebra_files_round_trip() {
        let src = "\
# three-parameter example
param q = 1/2

Dt(1)
vf{ tau = (q+1)*t; xi = -x; eta1 = q; eta0 = 0 }
";
        let s = parse_algebra_file(src).unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.params.get("q"), Some(&rat(1, 2)));
        assert_eq!(s.basis[1].eta1, rat(1, 2));
        assert_eq!(
            tuple12(&s, &cfg()).unwrap(),
            fins([2, 2, 1, 1, 1, 0, 1, 1, 0, 1, 0, 1])
        );

        assert!(matches!(
            parse_algebra_file("param q = t"),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            parse_algebra_file("Dt(w)"),
            Err(Error::VariableLeak { .. })
        ));
        assert!(parse_algebra_file("param = 3").is_err());
    }
}
