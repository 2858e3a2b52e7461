//! Hermite normal form by unimodular row operations.
//!
//! The form produced here is the row-echelon variant: `h = u·m`, nonzero rows
//! first, strictly increasing pivot columns, positive pivots, and every entry
//! above a pivot reduced into `[0, pivot)`. These conditions make `h` unique
//! for a given row module, so two matrices span the same row lattice iff
//! their forms agree (after dropping zero rows).

use super::{IntMatrix, IntVec};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

/// Returns `(h, u)` with `h = u·m`, `u` unimodular and `h` in Hermite normal form.
pub fn hermite_normal_form(m: &IntMatrix) -> (IntMatrix, IntMatrix) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let rows = m.rows();
    let mut r = 0;
    for col in 0..m.cols() {
        if r == rows {
            break;
        }
        for i in r + 1..rows {
            if h.get(i, col).is_zero() {
                continue;
            }
            let a = h.get(r, col).clone();
            let b = h.get(i, col).clone();
            let eg = a.extended_gcd(&b);
            let (g, x, y) = (eg.gcd, eg.x, eg.y);
            let bg = &b / &g;
            let ag = &a / &g;
            combine_rows(&mut h, r, i, &x, &y, &-bg.clone(), &ag);
            combine_rows(&mut u, r, i, &x, &y, &-bg, &ag);
        }
        if h.get(r, col).is_zero() {
            continue;
        }
        if h.get(r, col).is_negative() {
            h.negate_row(r);
            u.negate_row(r);
        }
        let pivot = h.get(r, col).clone();
        for i in 0..r {
            let q = h.get(i, col).div_floor(&pivot);
            if !q.is_zero() {
                h.add_row_multiple(i, r, &-q.clone());
                u.add_row_multiple(i, r, &-q);
            }
        }
        r += 1;
    }
    (h, u)
}

/// Replace rows `(p, q)` by `(a·p + b·q, c·p + d·q)`; caller guarantees `ad − bc = ±1`.
fn combine_rows(
    m: &mut IntMatrix,
    p: usize,
    q: usize,
    a: &BigInt,
    b: &BigInt,
    c: &BigInt,
    d: &BigInt,
) {
    for col in 0..m.cols() {
        let x = m.get(p, col).clone();
        let y = m.get(q, col).clone();
        m.set(p, col, a * &x + b * &y);
        m.set(q, col, c * &x + d * &y);
    }
}

/// Pivot columns of a matrix already in Hermite normal form.
pub(crate) fn pivot_columns(h: &IntMatrix) -> Vec<usize> {
    (0..h.rows())
        .map_while(|r| (0..h.cols()).find(|&c| !h.get(r, c).is_zero()))
        .collect()
}

/// Integer solution of `m·x = b`, if one exists.
pub fn solve_integer(m: &IntMatrix, b: &[BigInt]) -> Option<IntVec> {
    assert_eq!(m.rows(), b.len(), "right-hand side length mismatch");
    // H = U·mᵀ, so m·Uᵀ = Hᵀ is column-echelon and x = Uᵀ·y.
    let (h, u) = hermite_normal_form(&m.transpose());
    let pivots = pivot_columns(&h);
    let mut y = vec![BigInt::zero(); h.rows()];
    for (i, &p) in pivots.iter().enumerate() {
        let mut rhs = b[p].clone();
        for (k, yk) in y.iter().enumerate().take(i) {
            rhs -= h.get(k, p) * yk;
        }
        let piv = h.get(i, p);
        if !(&rhs % piv).is_zero() {
            return None;
        }
        y[i] = rhs / piv;
    }
    let x = u.transpose().mul_vec(&y);
    if m.mul_vec(&x) == b {
        Some(x)
    } else {
        None
    }
}
