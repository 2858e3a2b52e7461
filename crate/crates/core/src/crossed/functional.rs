//! Invariant faithful functionals with integer scaling factor.

use super::EmbedProblem;
use crate::json;
use crate::linalg::{exact_lp_feasible, rat, Constraint, IntMatrix, LpOutcome, RatVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// `ℓ > 0` with `ℓM = λℓ` and `ℓF = λ^s ℓ`. The state `x@n ↦ ℓx/λ^n` is then
/// faithful and `α_*`-invariant, so it vanishes on `H_α` and no nonzero
/// positive element lies there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantFunctional {
    #[serde(with = "json::rat_vec")]
    pub ell: RatVector,
    #[serde(with = "json::int")]
    pub lambda: BigInt,
}

impl InvariantFunctional {
    pub fn verify(&self, p: &EmbedProblem) -> bool {
        let m = p.connecting_matrix();
        let d = m.rows();
        if self.ell.len() != d
            || !self.lambda.is_positive()
            || self.ell.iter().any(|x| !x.is_positive())
        {
            return false;
        }
        let lam = BigRational::from_integer(self.lambda.clone());
        let lam_s = num_traits::pow(lam.clone(), p.endo.shift);
        let left = |a: &IntMatrix| -> RatVector {
            (0..d)
                .map(|j| {
                    (0..d)
                        .map(|i| &self.ell[i] * BigRational::from_integer(a.get(i, j).clone()))
                        .sum()
                })
                .collect()
        };
        let scaled = |c: &BigRational| -> RatVector { self.ell.iter().map(|x| x * c).collect() };
        left(&m) == scaled(&lam) && left(&p.endo.mat) == scaled(&lam_s)
    }
}

/// Characteristic polynomial `det(tI − M)`, coefficients from the constant term up.
pub fn characteristic_polynomial(m: &IntMatrix) -> Vec<BigInt> {
    let n = m.rows();
    let mut c = vec![BigInt::zero(); n + 1];
    c[n] = BigInt::one();
    let mut mk = IntMatrix::zeros(n, n);
    for k in 1..=n {
        mk = m
            .mul(&mk)
            .add(&IntMatrix::diagonal(&vec![c[n + 1 - k].clone(); n]));
        let am = m.mul(&mk);
        let trace: BigInt = (0..n).map(|i| am.get(i, i).clone()).sum();
        c[n - k] = -trace / BigInt::from(k);
    }
    c
}

fn eval(poly: &[BigInt], t: &BigInt) -> BigInt {
    poly.iter().rev().fold(BigInt::zero(), |acc, c| acc * t + c)
}

/// Positive integer eigenvalues of `M`, largest first.
///
/// Rational roots of a monic integer polynomial are integers, and every
/// eigenvalue is bounded by the largest absolute row sum.
pub fn integer_eigenvalues(m: &IntMatrix) -> Vec<BigInt> {
    let poly = characteristic_polynomial(m);
    let bound = (0..m.rows())
        .map(|i| m.row(i).iter().map(|x| x.abs()).sum::<BigInt>())
        .max()
        .unwrap_or_default();
    let Some(bound) = bound.to_u64() else {
        return Vec::new();
    };
    (1..=bound)
        .rev()
        .map(BigInt::from)
        .filter(|r| eval(&poly, r).is_zero())
        .collect()
}

/// Search for an invariant faithful functional by exact LP, one integer
/// eigenvalue candidate at a time. Finite-depth problems use `M = I`, `λ = 1`.
pub fn invariant_functional(p: &EmbedProblem) -> Option<InvariantFunctional> {
    let m = p.connecting_matrix();
    let f = &p.endo.mat;
    let d = m.rows();
    let candidates = if p.diagram.is_stationary() {
        integer_eigenvalues(&m)
    } else {
        vec![BigInt::one()]
    };
    for lambda in candidates {
        let lam_s = num_traits::pow(lambda.clone(), p.endo.shift);
        let mut cs = Vec::new();
        for i in 0..d {
            let mut e = vec![BigRational::zero(); d];
            e[i] = BigRational::one();
            cs.push(Constraint::ge(e, BigRational::one()));
        }
        for (a, r) in [(&m, &lambda), (f, &lam_s)] {
            for j in 0..d {
                let coeffs: RatVector = (0..d)
                    .map(|i| {
                        let mut v = a.get(i, j).clone();
                        if i == j {
                            v -= r;
                        }
                        BigRational::from_integer(v)
                    })
                    .collect();
                cs.push(Constraint::eq(coeffs, rat(0, 1)));
            }
        }
        if let LpOutcome::Feasible { point } = exact_lp_feasible(d, &cs) {
            let found = InvariantFunctional { ell: point, lambda };
            debug_assert!(found.verify(p));
            return Some(found);
        }
    }
    None
}
