//! Extending a finitely generated salient cone to a lexicographic total order.

use super::lp::{exact_lp_feasible, Constraint, FarkasCertificate, LpOutcome};
use super::{dot_rat, rational_rank, RatVector};
use crate::json;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

/// Nonnegative rational combinations of finitely many generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatCone {
    pub ambient_dim: usize,
    #[serde(with = "json::rat_vec_vec")]
    pub generators: Vec<RatVector>,
}

impl RatCone {
    pub fn new(ambient_dim: usize, generators: Vec<RatVector>) -> Self {
        Self {
            ambient_dim,
            generators,
        }
    }

    pub fn orthant(d: usize) -> Self {
        let gens = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(d, gens)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderError {
    #[error("cone is not salient: no functional is strictly positive on every generator")]
    NotSalient(FarkasCertificate),
    #[error("generator {0} is zero")]
    ZeroGenerator(usize),
    #[error("generator {index} has length {len}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        len: usize,
        expected: usize,
    },
}

/// Functionals `ℓ_1, …, ℓ_d` defining `x > 0` iff the first nonzero `ℓ_i·x` is positive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderCertificate {
    #[serde(with = "json::rat_vec_vec")]
    pub functionals: Vec<RatVector>,
}

impl OrderCertificate {
    pub fn sign(&self, x: &[BigRational]) -> Ordering {
        for l in &self.functionals {
            let v = dot_rat(l, x);
            if v.is_positive() {
                return Ordering::Greater;
            }
            if v.is_negative() {
                return Ordering::Less;
            }
        }
        Ordering::Equal
    }

    pub fn compare(&self, x: &[BigRational], y: &[BigRational]) -> Ordering {
        let diff: RatVector = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.sign(&diff)
    }

    pub fn is_positive(&self, x: &[BigRational]) -> bool {
        self.sign(x) == Ordering::Greater
    }

    /// The order is total iff the functionals have trivial common kernel.
    pub fn is_total(&self, dim: usize) -> bool {
        self.functionals.iter().all(|l| l.len() == dim) && rational_rank(&self.functionals) == dim
    }

    /// Exact check of the certificate against a cone.
    pub fn verify(&self, cone: &RatCone) -> bool {
        self.is_total(cone.ambient_dim)
            && cone.generators.iter().all(|g| {
                self.functionals
                    .first()
                    .is_some_and(|l1| dot_rat(l1, g).is_positive())
            })
    }
}

fn unit(d: usize, i: usize) -> RatVector {
    (0..d)
        .map(|j| {
            if i == j {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect()
}

/// Build a lexicographic total order on ℚ^d whose positive set contains every
/// nonzero cone element. `ℓ_1` is strictly positive on all generators.
pub fn total_order_extend(cone: &RatCone) -> Result<OrderCertificate, OrderError> {
    let d = cone.ambient_dim;
    for (i, g) in cone.generators.iter().enumerate() {
        if g.len() != d {
            return Err(OrderError::DimensionMismatch {
                index: i,
                len: g.len(),
                expected: d,
            });
        }
        if g.iter().all(Zero::is_zero) {
            return Err(OrderError::ZeroGenerator(i));
        }
    }
    let strictly_positive =
        |l: &RatVector| cone.generators.iter().all(|g| dot_rat(l, g).is_positive());
    let mut candidates: Vec<RatVector> = (0..d).map(|i| unit(d, i)).collect();
    candidates.push(vec![BigRational::one(); d]);
    let first = match candidates.into_iter().find(|l| strictly_positive(l)) {
        Some(l) => l,
        None => {
            let cs: Vec<Constraint> = cone
                .generators
                .iter()
                .map(|g| Constraint::ge(g.clone(), BigRational::one()))
                .collect();
            match exact_lp_feasible(d, &cs) {
                LpOutcome::Feasible { point } => point,
                LpOutcome::Infeasible { certificate } => {
                    return Err(OrderError::NotSalient(certificate))
                }
            }
        }
    };
    let mut functionals = vec![first];
    for i in 0..d {
        if functionals.len() == d {
            break;
        }
        let mut trial = functionals.clone();
        trial.push(unit(d, i));
        if rational_rank(&trial) == trial.len() {
            functionals = trial;
        }
    }
    Ok(OrderCertificate { functionals })
}
