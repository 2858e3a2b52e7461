//! Smith normal form and cokernel invariants.

use super::IntMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Returns `(s, u, v)` with `s = u·m·v` diagonal, nonnegative, `s_i | s_{i+1}`,
/// and `u`, `v` unimodular.
pub fn smith_normal_form(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let mut s = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let mut v = IntMatrix::identity(m.cols());
    let n = m.rows().min(m.cols());
    for t in 0..n {
        // Smallest nonzero entry of the trailing block becomes the pivot.
        let Some((pr, pc)) = smallest_entry(&s, t) else {
            break;
        };
        s.swap_rows(t, pr);
        u.swap_rows(t, pr);
        s.swap_cols(t, pc);
        v.swap_cols(t, pc);
        loop {
            let mut changed = false;
            for i in t + 1..s.rows() {
                if s.get(i, t).is_zero() {
                    continue;
                }
                let q = s.get(i, t).div_floor(s.get(t, t));
                s.add_row_multiple(i, t, &-q.clone());
                u.add_row_multiple(i, t, &-q);
                if !s.get(i, t).is_zero() {
                    // Remainder is smaller than the pivot; promote it.
                    s.swap_rows(t, i);
                    u.swap_rows(t, i);
                    changed = true;
                }
            }
            for j in t + 1..s.cols() {
                if s.get(t, j).is_zero() {
                    continue;
                }
                let q = s.get(t, j).div_floor(s.get(t, t));
                s.add_col_multiple(j, t, &-q.clone());
                v.add_col_multiple(j, t, &-q);
                if !s.get(t, j).is_zero() {
                    s.swap_cols(t, j);
                    v.swap_cols(t, j);
                    changed = true;
                }
            }
            if changed {
                continue;
            }
            // Row and column are clear; enforce divisibility of the block.
            let pivot = s.get(t, t).clone();
            let bad = (t + 1..s.rows())
                .find(|&i| (t + 1..s.cols()).any(|j| !(s.get(i, j) % &pivot).is_zero()));
            match bad {
                Some(i) => {
                    s.add_row_multiple(t, i, &BigInt::one());
                    u.add_row_multiple(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if s.get(t, t).is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    (s, u, v)
}

fn smallest_entry(s: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for i in t..s.rows() {
        for j in t..s.cols() {
            let a = s.get(i, j).abs();
            if a.is_zero() {
                continue;
            }
            if best.as_ref().is_none_or(|(_, _, b)| &a < b) {
                best = Some((i, j, a));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Invariants of the cokernel `ℤ^rows / m·ℤ^cols`: the torsion coefficients
/// (entries > 1 of the Smith form) and the free rank.
pub fn torsion_invariants(m: &IntMatrix) -> (Vec<BigInt>, usize) {
    let (s, _, _) = smith_normal_form(m);
    let diag: Vec<BigInt> = (0..m.rows().min(m.cols()))
        .map(|i| s.get(i, i).clone())
        .collect();
    let rank = diag.iter().filter(|d| !d.is_zero()).count();
    let torsion = diag
        .into_iter()
        .filter(|d| !d.is_zero() && !d.is_one())
        .collect();
    (torsion, m.rows() - rank)
}
