//! Exact Rohlin towers in tensor truncations of `⊗ M_n`.

use crate::conj::Conjugation;
use crate::dense::{shift_permutation, shift_unitary, CMat, DenseUnitary};
use crate::LabError;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest ambient dimension the lab will build (`6! = 720`).
pub const AMBIENT_CAP: usize = 720;

pub type IntMat = DMatrix<i64>;

/// Projections `e_j = Σ_t E_{j+tk, j+tk}` in `M_{m′}`, `m′ = s·k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RohlinTower {
    pub m_prime: usize,
    pub k: usize,
    pub projections: Vec<IntMat>,
}

pub fn rohlin_tower(m_prime: usize, k: usize) -> Result<RohlinTower, LabError> {
    if k == 0 || m_prime == 0 || !m_prime.is_multiple_of(k) {
        return Err(LabError::NotDivisible { m_prime, k });
    }
    let projections = (0..k)
        .map(|j| IntMat::from_fn(m_prime, m_prime, |a, b| i64::from(a == b && a % k == j)))
        .collect();
    Ok(RohlinTower {
        m_prime,
        k,
        projections,
    })
}

/// Exact identities, each either holding with zero error or not at all.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerIdentities {
    pub idempotent: bool,
    pub self_adjoint: bool,
    pub orthogonal: bool,
    pub sums_to_identity: bool,
    /// `σ(e_j) = e_{j+1 mod k}`.
    pub shift_cyclic: bool,
    /// `[x, e_j] = 0` for matrix units `x` of every other tensor factor.
    pub commutes_with_factors: bool,
}

impl TowerIdentities {
    pub fn all(&self) -> bool {
        self.idempotent
            && self.self_adjoint
            && self.orthogonal
            && self.sums_to_identity
            && self.shift_cyclic
            && self.commutes_with_factors
    }
}

fn check_projections(es: &[IntMat], sigma: &IntMat) -> (bool, bool, bool, bool, bool) {
    let n = sigma.nrows();
    let idempotent = es.iter().all(|e| e * e == *e);
    let self_adjoint = es.iter().all(|e| e.transpose() == *e);
    let orthogonal = es.iter().enumerate().all(|(i, a)| {
        es.iter()
            .skip(i + 1)
            .all(|b| (a * b).iter().all(|&x| x == 0))
    });
    let sum = es.iter().fold(IntMat::zeros(n, n), |acc, e| acc + e);
    let sums_to_identity = sum == IntMat::identity(n, n);
    let st = sigma.transpose();
    let k = es.len();
    let shift_cyclic = (0..k).all(|j| sigma * &es[j] * &st == es[(j + 1) % k]);
    (
        idempotent,
        self_adjoint,
        orthogonal,
        sums_to_identity,
        shift_cyclic,
    )
}

impl RohlinTower {
    /// Checks inside `M_{m′}` alone; there are no other factors.
    pub fn identities(&self) -> TowerIdentities {
        let (idempotent, self_adjoint, orthogonal, sums_to_identity, shift_cyclic) =
            check_projections(&self.projections, &shift_permutation(self.m_prime));
        TowerIdentities {
            idempotent,
            self_adjoint,
            orthogonal,
            sums_to_identity,
            shift_cyclic,
            commutes_with_factors: true,
        }
    }

    /// Tower level of a basis index of `M_{m′}`.
    pub fn level_of(&self, index: usize) -> usize {
        index % self.k
    }
}

/// `⊗_f M_{n_f}` with `σ = Ad(⊗_f u_{n_f})`, first factor most significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorTruncation {
    pub factors: Vec<usize>,
}

impl TensorTruncation {
    pub fn new(factors: Vec<usize>) -> Result<Self, LabError> {
        if factors.contains(&0) {
            return Err(LabError::InvalidSystem(
                "tensor factors must have size ≥ 1".into(),
            ));
        }
        let t = TensorTruncation { factors };
        let dim = t
            .factors
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match dim {
            Some(d) if d <= AMBIENT_CAP => Ok(t),
            _ => Err(LabError::DimensionTooLarge {
                dim: dim.unwrap_or(usize::MAX),
                cap: AMBIENT_CAP,
            }),
        }
    }

    /// `M_1 ⊗ M_2 ⊗ … ⊗ M_m`.
    pub fn example(m: usize) -> Result<Self, LabError> {
        TensorTruncation::new((1..=m).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// Dimensions before and after factor `f`.
    fn split(&self, f: usize) -> (usize, usize) {
        let before = self.factors[..f].iter().product();
        let after = self.factors[f + 1..].iter().product();
        (before, after)
    }

    /// Coordinate of factor `f` in an ambient basis index.
    pub fn coordinate(&self, index: usize, f: usize) -> usize {
        let (_, after) = self.split(f);
        (index / after) % self.factors[f]
    }

    /// `1 ⊗ x ⊗ 1` with `x` in factor `f`.
    pub fn embed_int(&self, f: usize, x: &IntMat) -> IntMat {
        let (before, after) = self.split(f);
        IntMat::identity(before, before)
            .kronecker(x)
            .kronecker(&IntMat::identity(after, after))
    }

    pub fn embed(&self, f: usize, x: &CMat) -> CMat {
        let (before, after) = self.split(f);
        CMat::identity(before, before)
            .kronecker(x)
            .kronecker(&CMat::identity(after, after))
    }

    /// Matrix units `E_rs` of factor `f`, embedded.
    pub fn matrix_units_int(&self, f: usize) -> Vec<IntMat> {
        let n = self.factors[f];
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for s in 0..n {
                let mut e = IntMat::zeros(n, n);
                e[(r, s)] = 1;
                out.push(self.embed_int(f, &e));
            }
        }
        out
    }

    pub fn sigma_permutation(&self) -> IntMat {
        self.factors.iter().fold(IntMat::identity(1, 1), |acc, &n| {
            acc.kronecker(&shift_permutation(n))
        })
    }

    pub fn sigma_unitary(&self) -> DenseUnitary {
        self.factors
            .iter()
            .fold(DenseUnitary::identity(1), |acc, &n| {
                acc.kron(&shift_unitary(n))
            })
    }

    pub fn sigma(&self) -> Conjugation {
        Conjugation::new(self.sigma_unitary())
    }

    /// Place `tower` in factor `f` and check every identity on the ambient
    /// algebra with exact integer arithmetic.
    pub fn tower_identities(
        &self,
        f: usize,
        tower: &RohlinTower,
    ) -> Result<TowerIdentities, LabError> {
        if f >= self.factors.len() || self.factors[f] != tower.m_prime {
            return Err(LabError::InvalidSystem(format!(
                "tower of size {} does not fit factor {f}",
                tower.m_prime
            )));
        }
        let es: Vec<IntMat> = tower
            .projections
            .iter()
            .map(|e| self.embed_int(f, e))
            .collect();
        let (idempotent, self_adjoint, orthogonal, sums_to_identity, shift_cyclic) =
            check_projections(&es, &self.sigma_permutation());
        let commutes_with_factors = (0..self.factors.len()).filter(|&g| g != f).all(|g| {
            self.matrix_units_int(g)
                .iter()
                .all(|x| es.iter().all(|e| x * e == e * x))
        });
        Ok(TowerIdentities {
            idempotent,
            self_adjoint,
            orthogonal,
            sums_to_identity,
            shift_cyclic,
            commutes_with_factors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_support(e: &IntMat) -> Vec<usize> {
        (0..e.nrows()).filter(|&i| e[(i, i)] == 1).collect()
    }

    #[test]
    fn six_by_three() {
        let t = rohlin_tower(6, 3).unwrap();
        for j in 0..3 {
            assert_eq!(diag_support(&t.projections[j]), vec![j, j + 3]);
        }
        assert!(t.identities().all());
    }

    #[test]
    fn height_one_is_the_unit() {
        let t = rohlin_tower(5, 1).unwrap();
        assert_eq!(t.projections, vec![IntMat::identity(5, 5)]);
    }

    #[test]
    fn four_by_two() {
        let t = rohlin_tower(4, 2).unwrap();
        assert_eq!(diag_support(&t.projections[0]), vec![0, 2]);
        assert_eq!(diag_support(&t.projections[1]), vec![1, 3]);
    }

    #[test]
    fn indivisible_height_is_rejected() {
        assert_eq!(
            rohlin_tower(6, 4),
            Err(LabError::NotDivisible { m_prime: 6, k: 4 })
        );
        assert!(rohlin_tower(6, 0).is_err());
    }

    #[test]
    fn ambient_identities_hold() {
        let trunc = TensorTruncation::new(vec![2, 3, 12]).unwrap();
        let t = rohlin_tower(12, 4).unwrap();
        assert!(trunc.tower_identities(2, &t).unwrap().all());
        assert!(trunc.tower_identities(1, &t).is_err());
    }

    #[test]
    fn truncation_cap() {
        assert_eq!(TensorTruncation::example(6).unwrap().ambient_dim(), 720);
        assert!(matches!(
            TensorTruncation::example(7),
            Err(LabError::DimensionTooLarge { dim: 5040, .. })
        ));
    }

    #[test]
    fn sigma_unitary_matches_permutation() {
        let trunc = TensorTruncation::example(4).unwrap();
        let s = trunc.sigma_unitary();
        assert_eq!(
            s.matrix(),
            &crate::dense::from_int(&trunc.sigma_permutation())
        );
        assert!(trunc.sigma().is_permutation());
    }
}
