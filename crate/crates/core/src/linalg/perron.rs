//! Certified Perron–Frobenius data for primitive nonnegative integer matrices.
//!
//! The eigenvalue interval comes from Collatz–Wielandt quotients of an exact
//! power-iterated row vector `y`. The left eigenvector interval comes from
//! the Birkhoff contraction of `B = M^p > 0` in Hilbert's projective metric:
//! with `θ = max b_ik·b_jl / (b_il·b_jk)` and `τ = (√θ−1)/(√θ+1)`,
//! `d(y, ℓ) ≤ d(y, yB)/(1−τ)`, and `1/(1−τ) = (√θ+1)/2`.

use super::{IntMatrix, IntVec, RatVector};
use crate::json;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerronError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix has a negative entry")]
    Negative,
    #[error("matrix is not primitive (no positive power up to the Wielandt bound)")]
    NotPrimitive,
    #[error("precision must be positive")]
    BadPrecision,
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerronEnclosure {
    #[serde(with = "json::rat")]
    pub lambda_lo: BigRational,
    #[serde(with = "json::rat")]
    pub lambda_hi: BigRational,
    #[serde(with = "json::rat_vec")]
    pub eigvec_lo: RatVector,
    #[serde(with = "json::rat_vec")]
    pub eigvec_hi: RatVector,
    /// Positive test vector witnessing the eigenvalue bounds.
    #[serde(with = "json::int_vec")]
    pub test_vector: IntVec,
    /// Number of power steps taken; replaying them reproduces the enclosure.
    pub iterations: usize,
}

impl PerronEnclosure {
    /// Exact Collatz–Wielandt check: `lo·y ≤ yM ≤ hi·y` and interval ordering.
    pub fn verify(&self, m: &IntMatrix) -> bool {
        let d = m.rows();
        if !m.is_square()
            || self.test_vector.len() != d
            || self.eigvec_lo.len() != d
            || self.eigvec_hi.len() != d
            || self.lambda_lo > self.lambda_hi
        {
            return false;
        }
        if self.test_vector.iter().any(|x| !x.is_positive()) {
            return false;
        }
        let ym = m.vec_mul(&self.test_vector);
        let cw = ym.iter().zip(&self.test_vector).all(|(a, y)| {
            let a = BigRational::from_integer(a.clone());
            let y = BigRational::from_integer(y.clone());
            &self.lambda_lo * &y <= a && a <= &self.lambda_hi * &y
        });
        cw && self
            .eigvec_lo
            .iter()
            .zip(&self.eigvec_hi)
            .all(|(lo, hi)| lo <= hi && lo.is_positive())
    }

    /// Full replay: recompute the enclosure with the same number of steps.
    pub fn replay(&self, m: &IntMatrix) -> bool {
        self.verify(m) && run(m, |_, _, it| it == self.iterations).as_ref() == Ok(self)
    }

    pub fn width(&self) -> BigRational {
        &self.lambda_hi - &self.lambda_lo
    }

    /// Interval `[lo, hi]` containing `ℓ·x`.
    pub fn functional_interval(&self, x: &[BigInt]) -> (BigRational, BigRational) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for ((a, b), xi) in self.eigvec_lo.iter().zip(&self.eigvec_hi).zip(x) {
            let xi = BigRational::from_integer(xi.clone());
            if xi.is_negative() {
                lo += b * &xi;
                hi += a * &xi;
            } else {
                lo += a * &xi;
                hi += b * &xi;
            }
        }
        (lo, hi)
    }
}

/// Zero pattern of `m` as booleans.
fn pattern(m: &IntMatrix) -> Vec<Vec<bool>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| !m.get(i, j).is_zero()).collect())
        .collect()
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

/// Smallest `k ≤ (d−1)²+1` with `M^k > 0`, if any.
pub fn primitivity_exponent(m: &IntMatrix) -> Option<u32> {
    if !m.is_square() || !m.is_nonnegative() {
        return None;
    }
    let d = m.rows();
    let bound = (d - 1) * (d - 1) + 1;
    let p = pattern(m);
    let mut acc = p.clone();
    for k in 1..=bound {
        if acc.iter().all(|r| r.iter().all(|&x| x)) {
            return Some(k as u32);
        }
        acc = bool_mul(&acc, &p);
    }
    None
}

pub fn is_primitive(m: &IntMatrix) -> bool {
    primitivity_exponent(m).is_some()
}

const MAX_ITERATIONS: usize = 20_000;

/// Certified enclosure of the Perron eigenvalue (width ≤ `precision`) and of
/// the left Perron eigenvector normalized by `ℓ_1 = 1`.
///
/// Runs are deterministic: a smaller precision continues the same iteration,
/// so its intervals nest inside those of a larger precision.
pub fn perron_enclosure(
    m: &IntMatrix,
    precision: &BigRational,
) -> Result<PerronEnclosure, PerronError> {
    if !precision.is_positive() {
        return Err(PerronError::BadPrecision);
    }
    run(m, |lo, hi, _| hi - lo <= *precision)
}

fn run(
    m: &IntMatrix,
    stop: impl Fn(&BigRational, &BigRational, usize) -> bool,
) -> Result<PerronEnclosure, PerronError> {
    if !m.is_square() {
        return Err(PerronError::NotSquare);
    }
    if !m.is_nonnegative() {
        return Err(PerronError::Negative);
    }
    let p = primitivity_exponent(m).ok_or(PerronError::NotPrimitive)?;
    let d = m.rows();
    let b = m.pow(p);
    let factor = contraction_factor(&b);
    let mut y: IntVec = vec![BigInt::one(); d];
    let mut vec_lo: Option<RatVector> = None;
    let mut vec_hi: Option<RatVector> = None;
    for iterations in 0..MAX_ITERATIONS {
        let ym = m.vec_mul(&y);
        let (lo, hi) = ratio_bounds(&ym, &y);
        let (elo, ehi) = eigvec_bounds(&y, &b, &factor);
        vec_lo = Some(match vec_lo {
            None => elo,
            Some(v) => v.into_iter().zip(elo).map(|(a, b)| a.max(b)).collect(),
        });
        vec_hi = Some(match vec_hi {
            None => ehi,
            Some(v) => v.into_iter().zip(ehi).map(|(a, b)| a.min(b)).collect(),
        });
        if stop(&lo, &hi, iterations) {
            return Ok(PerronEnclosure {
                lambda_lo: lo,
                lambda_hi: hi,
                eigvec_lo: vec_lo.unwrap(),
                eigvec_hi: vec_hi.unwrap(),
                test_vector: y,
                iterations,
            });
        }
        let g = ym.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        y = ym.into_iter().map(|x| x / &g).collect();
    }
    Err(PerronError::NoConvergence(MAX_ITERATIONS))
}

fn ratio_bounds(num: &[BigInt], den: &[BigInt]) -> (BigRational, BigRational) {
    let ratios: Vec<BigRational> = num
        .iter()
        .zip(den)
        .map(|(a, b)| BigRational::new(a.clone(), b.clone()))
        .collect();
    let lo = ratios.iter().min().cloned().expect("nonempty");
    let hi = ratios.iter().max().cloned().expect("nonempty");
    (lo, hi)
}

/// Integer `N ≥ (√θ + 1)/2` for the positive matrix `b`.
fn contraction_factor(b: &IntMatrix) -> BigInt {
    let d = b.rows();
    let mut theta = BigRational::one();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let q = BigRational::new(b.get(i, k) * b.get(j, l), b.get(i, l) * b.get(j, k));
                    if q > theta {
                        theta = q;
                    }
                }
            }
        }
    }
    let ceil = theta.ceil().to_integer();
    let sqrt_up = ceil.sqrt() + BigInt::one();
    (sqrt_up + BigInt::from(2)) / BigInt::from(2)
}

fn eigvec_bounds(y: &[BigInt], b: &IntMatrix, factor: &BigInt) -> (RatVector, RatVector) {
    let yb = b.vec_mul(y);
    let (lo, hi) = ratio_bounds(&yb, y);
    let spread = hi / lo;
    let n = factor.to_u32().expect("contraction factor fits in u32");
    let e = num_traits::pow(spread, n as usize);
    let y1 = BigRational::from_integer(y[0].clone());
    let lower = y
        .iter()
        .map(|yi| BigRational::from_integer(yi.clone()) / (&y1 * &e))
        .collect();
    let upper = y
        .iter()
        .map(|yi| BigRational::from_integer(yi.clone()) * &e / &y1)
        .collect();
    (lower, upper)
}
