//! Subgroups of ℤ^d and their intersection with the nonnegative orthant.

use super::hnf::hermite_normal_form;
use super::lp::{exact_lp_feasible, Constraint, FarkasCertificate, LpOutcome};
use super::{
    clear_denominators, inf_norm, is_nonnegative_vec, is_zero_vec, rational_nullspace,
    solve_integer, IntMatrix, IntVec,
};
use crate::json;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A subgroup of ℤ^d, stored by the Hermite-normal-form basis of its generators.
///
/// Two lattices are equal iff their stored bases are equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    ambient_dim: usize,
    #[serde(with = "json::int_vec_vec")]
    basis: Vec<IntVec>,
}

impl Lattice {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: Vec::new(),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self::from_generators(ambient_dim, &IntMatrix::identity(ambient_dim).columns())
    }

    /// Subgroup generated by arbitrary (possibly dependent) vectors.
    pub fn from_generators(ambient_dim: usize, gens: &[IntVec]) -> Self {
        let gens: Vec<IntVec> = gens.iter().filter(|g| !is_zero_vec(g)).cloned().collect();
        if gens.is_empty() {
            return Self::zero(ambient_dim);
        }
        for g in &gens {
            assert_eq!(g.len(), ambient_dim, "generator length mismatch");
        }
        let m = IntMatrix::from_rows(gens).expect("nonempty generators");
        let (h, _) = hermite_normal_form(&m);
        let basis = h
            .to_rows()
            .into_iter()
            .filter(|r| !is_zero_vec(r))
            .collect();
        Self { ambient_dim, basis }
    }

    /// Subgroup spanned by the columns of `m`.
    pub fn column_span(m: &IntMatrix) -> Self {
        Self::from_generators(m.rows(), &m.columns())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[IntVec] {
        &self.basis
    }

    /// Basis as a `d × rank` matrix (columns are basis vectors).
    pub fn basis_matrix(&self) -> IntMatrix {
        IntMatrix::from_columns(self.ambient_dim, &self.basis)
    }

    /// Integer coordinates of `v` in the stored basis.
    pub fn coordinates(&self, v: &[BigInt]) -> Option<IntVec> {
        assert_eq!(v.len(), self.ambient_dim);
        if self.is_zero() {
            return is_zero_vec(v).then(Vec::new);
        }
        solve_integer(&self.basis_matrix(), v)
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.coordinates(v).is_some()
    }

    pub fn sum(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        let gens: Vec<IntVec> = self.basis.iter().chain(&other.basis).cloned().collect();
        Self::from_generators(self.ambient_dim, &gens)
    }

    /// `(ℚ·self) ∩ ℤ^d`.
    pub fn saturation(&self) -> Lattice {
        let normals = self.orthogonal_complement();
        if normals.is_empty() {
            return Self::full(self.ambient_dim);
        }
        let n = IntMatrix::from_rows(normals).expect("nonempty");
        Self::from_generators(self.ambient_dim, &integer_kernel(&n))
    }

    pub fn is_saturated(&self) -> bool {
        *self == self.saturation()
    }

    /// Primitive integer vectors spanning the rational orthogonal complement.
    pub fn orthogonal_complement(&self) -> Vec<IntVec> {
        if self.is_zero() {
            return IntMatrix::identity(self.ambient_dim).to_rows();
        }
        let rows = IntMatrix::from_rows(self.basis.clone())
            .expect("nonempty")
            .to_rational();
        rational_nullspace(&rows, self.ambient_dim)
            .iter()
            .map(|v| clear_denominators(v))
            .collect()
    }

    /// Image under an integer matrix.
    pub fn image(&self, m: &IntMatrix) -> Lattice {
        assert_eq!(m.cols(), self.ambient_dim);
        let gens: Vec<IntVec> = self.basis.iter().map(|b| m.mul_vec(b)).collect();
        Self::from_generators(m.rows(), &gens)
    }
}

/// Basis of the integer kernel `{x ∈ ℤ^n : a·x = 0}`.
pub fn integer_kernel(a: &IntMatrix) -> Vec<IntVec> {
    // H = U·aᵀ; a zero row i of H means U_i·aᵀ = 0, i.e. a·U_iᵀ = 0.
    let (h, u) = hermite_normal_form(&a.transpose());
    (0..h.rows())
        .filter(|&i| is_zero_vec(h.row(i)))
        .map(|i| u.row(i).to_vec())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OrthantVerdict {
    Witness {
        #[serde(with = "json::int_vec")]
        vector: IntVec,
    },
    /// `None` for the zero lattice, where no certificate is needed.
    CertifiedEmpty {
        certificate: Option<FarkasCertificate>,
    },
    Unknown,
}

/// Constraints on basis coefficients `c`: `B c ≥ 0` and `Σ (B c) = 1`.
pub fn span_orthant_system(l: &Lattice) -> Vec<Constraint> {
    let b = l.basis_matrix();
    let r = l.rank();
    let mut cs: Vec<Constraint> = (0..l.ambient_dim())
        .map(|i| {
            let coeffs = b
                .row(i)
                .iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect();
            Constraint::ge(coeffs, BigRational::zero())
        })
        .collect();
    let total = (0..r)
        .map(|j| BigRational::from_integer((0..b.rows()).map(|i| b.get(i, j)).sum()))
        .collect();
    cs.push(Constraint::eq(total, BigRational::one()));
    cs
}

const ENUMERATION_CAP: usize = 200_000;

/// Look for a nonzero nonnegative vector in `l`.
///
/// Witnesses are bounded by `box_bound · Σ‖b_i‖∞` over the basis. The search
/// enumerates basis combinations with coefficients in `[−box_bound, box_bound]`
/// ordered by (max-norm, lex), then falls back to scaling an exact LP point.
pub fn lattice_meets_orthant(l: &Lattice, box_bound: u64) -> OrthantVerdict {
    assert!(box_bound >= 1, "box bound must be positive");
    if l.is_zero() {
        return OrthantVerdict::CertifiedEmpty { certificate: None };
    }
    let system = span_orthant_system(l);
    let point = match exact_lp_feasible(l.rank(), &system) {
        LpOutcome::Infeasible { certificate } => {
            return OrthantVerdict::CertifiedEmpty {
                certificate: Some(certificate),
            }
        }
        LpOutcome::Feasible { point } => point,
    };
    let bound: BigInt =
        l.basis.iter().map(|b| inf_norm(b)).sum::<BigInt>() * BigInt::from(box_bound);
    let b = l.basis_matrix();
    if let Some(v) = enumerate_witness(&b, box_bound) {
        return OrthantVerdict::Witness { vector: v };
    }
    let c = clear_denominators(&point);
    let v = b.mul_vec(&c);
    if inf_norm(&v) <= bound && is_nonnegative_vec(&v) && !is_zero_vec(&v) {
        return OrthantVerdict::Witness { vector: v };
    }
    OrthantVerdict::Unknown
}

fn enumerate_witness(b: &IntMatrix, box_bound: u64) -> Option<IntVec> {
    let r = b.cols();
    let side = 2.0 * box_bound as f64 + 1.0;
    if side.powi(r as i32) > ENUMERATION_CAP as f64 {
        return None;
    }
    let bb = box_bound as i64;
    for norm in 1..=bb {
        let mut found: Option<IntVec> = None;
        let mut c = vec![-norm; r];
        loop {
            if c.iter().any(|x| x.abs() == norm) {
                let cv: IntVec = c.iter().map(|&x| BigInt::from(x)).collect();
                let v = b.mul_vec(&cv);
                if !is_zero_vec(&v) && is_nonnegative_vec(&v) {
                    found = Some(v);
                    break;
                }
            }
            if !odometer(&mut c, norm) {
                break;
            }
        }
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Lexicographic increment within `[−n, n]^r`; false when exhausted.
pub(crate) fn odometer(c: &mut [i64], n: i64) -> bool {
    for i in (0..c.len()).rev() {
        if c[i] < n {
            c[i] += 1;
            for x in c[i + 1..].iter_mut() {
                *x = -n;
            }
            return true;
        }
    }
    false
}

/// Exact re-check of an orthant verdict against its lattice.
pub fn verify_orthant_verdict(l: &Lattice, verdict: &OrthantVerdict) -> bool {
    match verdict {
        OrthantVerdict::Witness { vector } => {
            vector.len() == l.ambient_dim()
                && !is_zero_vec(vector)
                && is_nonnegative_vec(vector)
                && l.contains(vector)
        }
        OrthantVerdict::CertifiedEmpty { certificate: None } => l.is_zero(),
        OrthantVerdict::CertifiedEmpty {
            certificate: Some(cert),
        } => !l.is_zero() && super::verify_farkas(l.rank(), &span_orthant_system(l), cert),
        OrthantVerdict::Unknown => true,
    }
}

/// Total index `[ℤ^d ∩ ℚL : L]` for a lattice, when it fits in `u64`.
pub fn saturation_index(l: &Lattice) -> Option<u64> {
    if l.is_zero() {
        return Some(1);
    }
    // |det| of the coordinates of L in a basis of its saturation.
    let sat = l.saturation();
    let coords: Vec<IntVec> = l
        .basis
        .iter()
        .map(|b| sat.coordinates(b).expect("lattice lies in its saturation"))
        .collect();
    IntMatrix::from_columns(sat.rank(), &coords)
        .determinant()
        .abs()
        .to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::int_vec;
    use proptest::prelude::*;

    #[test]
    fn diagonal_line_has_witness() {
        let l = Lattice::from_generators(2, &[int_vec(&[1, 1])]);
        let v = lattice_meets_orthant(&l, 1);
        assert_eq!(
            v,
            OrthantVerdict::Witness {
                vector: int_vec(&[1, 1])
            }
        );
        assert!(verify_orthant_verdict(&l, &v));
    }

    #[test]
    fn antidiagonal_is_certified_empty() {
        let l = Lattice::from_generators(2, &[int_vec(&[1, -1])]);
        let v = lattice_meets_orthant(&l, 3);
        assert!(matches!(
            v,
            OrthantVerdict::CertifiedEmpty {
                certificate: Some(_)
            }
        ));
        assert!(verify_orthant_verdict(&l, &v));
    }

    #[test]
    fn zero_lattice_is_empty() {
        let l = Lattice::zero(3);
        assert_eq!(
            lattice_meets_orthant(&l, 1),
            OrthantVerdict::CertifiedEmpty { certificate: None }
        );
    }

    #[test]
    fn saturation_and_kernel() {
        let l = Lattice::from_generators(2, &[int_vec(&[2, 2])]);
        assert!(!l.is_saturated());
        assert_eq!(
            l.saturation(),
            Lattice::from_generators(2, &[int_vec(&[1, 1])])
        );
        assert_eq!(saturation_index(&l), Some(2));
        let k = integer_kernel(&IntMatrix::from_i64(&[&[1, 1, 1]]));
        assert_eq!(k.len(), 2);
        assert_eq!(
            Lattice::from_generators(3, &k),
            Lattice::from_generators(3, &[int_vec(&[1, -1, 0]), int_vec(&[0, 1, -1])])
        );
    }

    #[test]
    fn canonical_equality() {
        let a = Lattice::from_generators(2, &[int_vec(&[2, 4]), int_vec(&[6, 8])]);
        let b = Lattice::from_generators(2, &[int_vec(&[2, 0]), int_vec(&[0, 4])]);
        assert_eq!(a, b);
        assert!(a.contains(&int_vec(&[4, 4])));
        assert!(!a.contains(&int_vec(&[1, 0])));
    }

    proptest! {
        #[test]
        fn verdicts_reverify(
            gens in prop::collection::vec(prop::collection::vec(-3i64..4, 3), 0..3),
            bx in 1u64..4,
        ) {
            let gens: Vec<IntVec> = gens.iter().map(|g| int_vec(g)).collect();
            let l = Lattice::from_generators(3, &gens);
            let v = lattice_meets_orthant(&l, bx);
            prop_assert!(verify_orthant_verdict(&l, &v));
        }
    }
}
