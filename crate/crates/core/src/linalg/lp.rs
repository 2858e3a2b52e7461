//! Exact rational feasibility via phase-one simplex.
//!
//! Every answer is certified: a feasible point is returned as-is (the caller
//! can substitute it), and infeasibility comes with Farkas multipliers.
//!
//! Farkas convention: for constraints `a_i·x (≤|≥|=) b_i`, put `σ_i = −1` for
//! `≥` rows and `σ_i = +1` otherwise. A certificate is a vector `y` with
//! `y_i ≥ 0` on inequality rows (free on equality rows) such that
//! `Σ y_i σ_i a_i = 0` and `Σ y_i σ_i b_i < 0`.

use super::RatVector;
use crate::json;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// One linear constraint `coeffs·x relation rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(with = "json::rat_vec")]
    pub coeffs: RatVector,
    pub relation: Relation,
    #[serde(with = "json::rat")]
    pub rhs: BigRational,
}

impl Constraint {
    pub fn new(coeffs: RatVector, relation: Relation, rhs: BigRational) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn le(coeffs: RatVector, rhs: BigRational) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn ge(coeffs: RatVector, rhs: BigRational) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    pub fn eq(coeffs: RatVector, rhs: BigRational) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    pub fn holds(&self, x: &[BigRational]) -> bool {
        let lhs: BigRational = self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }

    fn sign(&self) -> BigRational {
        match self.relation {
            Relation::Ge => -BigRational::one(),
            _ => BigRational::one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    #[serde(with = "json::rat_vec")]
    pub multipliers: RatVector,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum LpOutcome {
    Feasible {
        #[serde(with = "json::rat_vec")]
        point: RatVector,
    },
    Infeasible {
        certificate: FarkasCertificate,
    },
}

impl LpOutcome {
    pub fn point(&self) -> Option<&RatVector> {
        match self {
            LpOutcome::Feasible { point } => Some(point),
            LpOutcome::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible { .. })
    }
}

/// Decide feasibility of a system of rational constraints over `ℚ^dim`.
pub fn exact_lp_feasible(dim: usize, constraints: &[Constraint]) -> LpOutcome {
    assert!(dim >= 1, "dimension must be positive");
    for c in constraints {
        assert_eq!(c.coeffs.len(), dim, "constraint width mismatch");
    }
    if let Some(point) = solve_primal(dim, constraints) {
        debug_assert!(constraints.iter().all(|c| c.holds(&point)));
        return LpOutcome::Feasible { point };
    }
    let multipliers = solve_alternative(dim, constraints)
        .expect("Farkas alternative must be feasible when the primal is not");
    let certificate = FarkasCertificate { multipliers };
    debug_assert!(verify_farkas(dim, constraints, &certificate));
    LpOutcome::Infeasible { certificate }
}

/// Exact re-check of a Farkas certificate against the constraint system.
pub fn verify_farkas(dim: usize, constraints: &[Constraint], cert: &FarkasCertificate) -> bool {
    if cert.multipliers.len() != constraints.len() {
        return false;
    }
    let mut combo = vec![BigRational::zero(); dim];
    let mut rhs = BigRational::zero();
    for (c, y) in constraints.iter().zip(&cert.multipliers) {
        if c.relation != Relation::Eq && y.is_negative() {
            return false;
        }
        if c.coeffs.len() != dim {
            return false;
        }
        let w = y * c.sign();
        for (acc, a) in combo.iter_mut().zip(&c.coeffs) {
            *acc += &w * a;
        }
        rhs += &w * &c.rhs;
    }
    combo.iter().all(Zero::is_zero) && rhs.is_negative()
}

/// Free `x = p − q`, one slack per inequality, then `{A z = b, z ≥ 0}`.
fn solve_primal(dim: usize, constraints: &[Constraint]) -> Option<RatVector> {
    let n_ineq = constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();
    let nvars = 2 * dim + n_ineq;
    let mut a = Vec::with_capacity(constraints.len());
    let mut b = Vec::with_capacity(constraints.len());
    let mut slack = 2 * dim;
    for c in constraints {
        let mut row = vec![BigRational::zero(); nvars];
        for (j, v) in c.coeffs.iter().enumerate() {
            row[j] = v.clone();
            row[dim + j] = -v;
        }
        match c.relation {
            Relation::Le => {
                row[slack] = BigRational::one();
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -BigRational::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        a.push(row);
        b.push(c.rhs.clone());
    }
    let z = standard_form_feasible(a, b, nvars)?;
    Some((0..dim).map(|j| &z[j] - &z[dim + j]).collect())
}

/// Unknowns `y` (free on equality rows, split as `y⁺ − y⁻`):
/// `Σ y_i σ_i a_i = 0`, `Σ y_i σ_i b_i = −1`.
fn solve_alternative(dim: usize, constraints: &[Constraint]) -> Option<RatVector> {
    let mut cols: Vec<(usize, BigRational)> = Vec::new();
    for (i, c) in constraints.iter().enumerate() {
        cols.push((i, BigRational::one()));
        if c.relation == Relation::Eq {
            cols.push((i, -BigRational::one()));
        }
    }
    let nvars = cols.len();
    let mut a = vec![vec![BigRational::zero(); nvars]; dim + 1];
    for (j, (i, s)) in cols.iter().enumerate() {
        let c = &constraints[*i];
        let w = s * c.sign();
        for k in 0..dim {
            a[k][j] = &w * &c.coeffs[k];
        }
        a[dim][j] = &w * &c.rhs;
    }
    let mut b = vec![BigRational::zero(); dim + 1];
    b[dim] = -BigRational::one();
    let z = standard_form_feasible(a, b, nvars)?;
    let mut y = vec![BigRational::zero(); constraints.len()];
    for (j, (i, s)) in cols.iter().enumerate() {
        y[*i] += s * &z[j];
    }
    Some(y)
}

/// Phase-one simplex with Bland's rule on `{A z = b, z ≥ 0}`.
fn standard_form_feasible(
    mut a: Vec<RatVector>,
    mut b: RatVector,
    nvars: usize,
) -> Option<RatVector> {
    let m = a.len();
    if m == 0 {
        return Some(vec![BigRational::zero(); nvars]);
    }
    for i in 0..m {
        if b[i].is_negative() {
            for v in a[i].iter_mut() {
                *v = -v.clone();
            }
            b[i] = -b[i].clone();
        }
    }
    // Tableau columns: nvars originals, then m artificials.
    let width = nvars + m;
    let mut t: Vec<RatVector> = a
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.resize(width, BigRational::zero());
            row[nvars + i] = BigRational::one();
            row
        })
        .collect();
    let mut basis: Vec<usize> = (nvars..width).collect();
    // Reduced costs of the phase-one objective Σ artificials.
    let mut cost = vec![BigRational::zero(); width];
    let mut obj = BigRational::zero();
    for i in 0..m {
        for j in 0..nvars {
            cost[j] -= &t[i][j];
        }
        obj -= &b[i];
    }
    while let Some(enter) = (0..width).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<usize> = None;
        let mut best: Option<BigRational> = None;
        for i in 0..m {
            if !t[i][enter].is_positive() {
                continue;
            }
            let ratio = &b[i] / &t[i][enter];
            let better = match &best {
                None => true,
                Some(r) => ratio < *r || (ratio == *r && basis[i] < basis[leave.unwrap()]),
            };
            if better {
                best = Some(ratio);
                leave = Some(i);
            }
        }
        // Phase one is bounded below by zero, so an entering column always has a pivot row.
        let r = leave.expect("phase-one objective is bounded");
        let piv = t[r][enter].clone();
        for v in t[r].iter_mut() {
            *v = &*v / &piv;
        }
        b[r] = &b[r] / &piv;
        let pivot_row = t[r].clone();
        let pivot_rhs = b[r].clone();
        for i in 0..m {
            if i == r || t[i][enter].is_zero() {
                continue;
            }
            let f = t[i][enter].clone();
            for (v, p) in t[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            b[i] -= &f * &pivot_rhs;
        }
        if !cost[enter].is_zero() {
            let f = cost[enter].clone();
            for (v, p) in cost.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
            obj -= &f * &pivot_rhs;
        }
        basis[r] = enter;
    }
    if !obj.is_zero() {
        return None;
    }
    let mut z = vec![BigRational::zero(); nvars];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < nvars {
            z[bv] = b[i].clone();
        }
    }
    Some(z)
}
