//! Small linear algebra kit: exact Gaussian elimination over rationals for
//! rank, nullspace, and affine solves, plus float SVD wrappers (nalgebra)
//! with rationalization by continued fractions for the sampled paths.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::expr::Rat;

/// Reduced row echelon form in place; returns pivot column indices.
pub fn rref(m: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return vec![];
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let s = m[r][j].clone() * f.clone();
                    m[i][j] -= s;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(mut m: Vec<Vec<Rat>>) -> usize {
    rref(&mut m).len()
}

/// Basis of the right nullspace of an exact matrix.
pub fn nullspace(mut m: Vec<Vec<Rat>>, cols: usize) -> Vec<Vec<Rat>> {
    if m.is_empty() {
        // No constraints: the standard basis.
        return (0..cols)
            .map(|i| {
                (0..cols)
                    .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                    .collect()
            })
            .collect();
    }
    let pivots = rref(&mut m);
    let mut free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.sort();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v = vec![Rat::zero(); cols];
        v[f] = Rat::one();
        for (r, &p) in pivots.iter().enumerate() {
            v[p] = -m[r][f].clone();
        }
        basis.push(v);
    }
    basis
}

/// Solve A x = b exactly. Returns a particular solution and the nullspace
/// basis, or None when inconsistent.
pub fn solve_affine(a: Vec<Vec<Rat>>, b: Vec<Rat>) -> Option<(Vec<Rat>, Vec<Vec<Rat>>)> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<Rat>> = a
        .into_iter()
        .zip(b)
        .map(|(mut row, bi)| {
            row.push(bi);
            row
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return None; // pivot in the constant column
    }
    let mut x = vec![Rat::zero(); cols];
    for (r, &p) in pivots.iter().enumerate() {
        x[p] = aug[r][cols].clone();
    }
    let hom: Vec<Vec<Rat>> = aug
        .iter()
        .map(|row| row[..cols].to_vec())
        .collect();
    let ns = nullspace(hom, cols);
    Some((x, ns))
}

/// Numerical rank via SVD with a relative threshold.
pub fn f64_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.iter().cloned().fold(0.0f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Right nullspace basis vectors (rows) via SVD with a relative threshold.
pub fn f64_nullspace(m: &DMatrix<f64>, rel_tol: f64) -> Vec<Vec<f64>> {
    let cols = m.ncols();
    if m.nrows() == 0 {
        return (0..cols)
            .map(|i| (0..cols).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    // Pad to a tall matrix so v_t carries a full set of right vectors.
    let m = if m.nrows() < cols {
        let mut padded = DMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        padded
    } else {
        m.clone()
    };
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let sv = &svd.singular_values;
    let top = sv.iter().cloned().fold(0.0f64, f64::max);
    let mut out = Vec::new();
    for i in 0..cols {
        let s = if i < sv.len() { sv[i] } else { 0.0 };
        if top == 0.0 || s <= rel_tol * top {
            if i < vt.nrows() {
                out.push(vt.row(i).iter().cloned().collect());
            }
        }
    }
    out
}

/// Best rational approximation with bounded denominator (continued
/// fractions). Returns None for non-finite input.
pub fn rationalize(x: f64, max_den: u64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    // Convergents p/q of the continued fraction expansion.
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let ai = BigInt::from(a as i64);
        let p2 = &ai * &p1 + &p0;
        let q2 = &ai * &q1 + &q0;
        if q2.to_u64().map(|q| q > max_den).unwrap_or(true) {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1.is_zero() {
        return None;
    }
    let mut r = Rat::new(p1, q1);
    if neg {
        r = -r;
    }
    Some(r)
}

/// Rationalize a float vector after scaling its largest entry to +-1.
/// The sign is chosen so the first nonzero entry is positive.
pub fn rationalize_vector(v: &[f64], max_den: u64) -> Option<Vec<Rat>> {
    let mut scale = 0.0f64;
    for &x in v {
        if x.abs() > scale.abs() {
            scale = x;
        }
    }
    if scale == 0.0 {
        return None;
    }
    let scaled: Vec<f64> = v.iter().map(|x| x / scale).collect();
    let first = scaled.iter().find(|x| x.abs() > 1e-7).copied().unwrap_or(1.0);
    let sign = if first < 0.0 { -1.0 } else { 1.0 };
    scaled
        .iter()
        .map(|x| rationalize(sign * x, max_den))
        .collect()
}
