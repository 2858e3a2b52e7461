//! Positive quotient maps killing a prescribed subgroup.
//!
//! The crossed product has `K₀ = G/H_α`. Given `h ⊂ G` (or the torsion of
//! `G/H_α`), the target is `G′ = G/K` with `K = sat(H_α + h)`, presented as
//! `ℤ^r` through an integer surjection `θ = P` whose kernel is exactly `K`.
//! The image of the orthant is a salient cone in `ℤ^r` and is extended to a
//! lexicographic total order.

use super::{CrossedError, EmbedProblem, SubgroupSpec};
use crate::json;
use crate::linalg::{
    clear_denominators, exact_lp_feasible, hermite_normal_form, integer_kernel, is_zero_vec,
    saturation_index, smith_normal_form, span_orthant_system, to_rational_vec, torsion_invariants,
    total_order_extend, IntMatrix, IntVec, Lattice, LpOutcome, OrderCertificate, RatCone,
};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpielbergMode {
    /// Kill the given subgroup.
    Given,
    /// Kill the torsion of `G/H_α`.
    Torsion,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpielbergTarget {
    pub mode: SpielbergMode,
    /// `H_α` in the orthant presentation.
    pub h_alpha: Lattice,
    /// The subgroup that was asked to be killed.
    pub killed: Lattice,
    /// `ker θ`.
    pub kernel: Lattice,
    /// Invariant factors of the torsion of `G/H_α`.
    #[serde(with = "json::int_vec")]
    pub torsion: IntVec,
    /// `θ : ℤ^d → ℤ^r`.
    pub theta: IntMatrix,
    /// `θ(e_i)`: generators of the image cone.
    #[serde(with = "json::int_vec_vec")]
    pub cone_generators: Vec<IntVec>,
    pub order: OrderCertificate,
}

fn orthant_data(p: &EmbedProblem) -> Result<(usize, Lattice), CrossedError> {
    let (d, d0) = p
        .orthant_model()
        .ok_or(CrossedError::UnsupportedPresentation)?;
    Ok((d, Lattice::column_span(&d0)))
}

/// A nonzero integer vector of `l` in the orthant, or `None` when the
/// rational span meets the orthant only at 0. Exact: `l` must be saturated.
fn saturated_orthant_point(l: &Lattice) -> Option<IntVec> {
    if l.is_zero() {
        return None;
    }
    let cs = span_orthant_system(l);
    let point = match exact_lp_feasible(l.rank(), &cs) {
        LpOutcome::Feasible { point } => point,
        LpOutcome::Infeasible { .. } => return None,
    };
    let b = l.basis_matrix().to_rational();
    let v: Vec<_> = b
        .iter()
        .map(|row| row.iter().zip(&point).map(|(a, c)| a * c).sum())
        .collect();
    Some(clear_denominators(&v))
}

/// Integer surjection with kernel exactly `k` (which must be saturated).
fn quotient_map(k: &Lattice) -> IntMatrix {
    let d = k.ambient_dim();
    let q = k.rank();
    if q == d {
        return IntMatrix::zeros(0, d);
    }
    let rows: Vec<IntVec> = if k.is_zero() {
        IntMatrix::identity(d).to_rows()
    } else {
        let (_, u, _) = smith_normal_form(&k.basis_matrix());
        u.to_rows().into_iter().skip(q).collect()
    };
    let (h, _) = hermite_normal_form(&IntMatrix::from_rows(rows).expect("rank < d"));
    let rows: Vec<IntVec> = h
        .to_rows()
        .into_iter()
        .filter(|r| !is_zero_vec(r))
        .collect();
    IntMatrix::from_rows(rows).expect("full row rank")
}

/// Build `θ` killing `h` (mode `Given`) or the torsion of `G/H_α` (mode `Torsion`).
pub fn spielberg_target(
    p: &EmbedProblem,
    h: Option<&SubgroupSpec>,
    mode: SpielbergMode,
) -> Result<SpielbergTarget, CrossedError> {
    let (d, h_alpha) = orthant_data(p)?;
    let (torsion, _) = torsion_invariants(&h_alpha_matrix(&h_alpha));
    let killed = match mode {
        SpielbergMode::Given => {
            let gens = h.map(|s| s.generators.clone()).unwrap_or_default();
            for g in &gens {
                if g.len() != d {
                    return Err(CrossedError::SubgroupShape {
                        len: g.len(),
                        dim: d,
                    });
                }
            }
            Lattice::from_generators(d, &gens)
        }
        SpielbergMode::Torsion => {
            let sat = h_alpha.saturation();
            debug_assert_eq!(
                saturation_index(&h_alpha).map(BigInt::from),
                Some(torsion.iter().product::<BigInt>())
            );
            sat
        }
    };
    let kernel = h_alpha.sum(&killed).saturation();
    if let Some(v) = saturated_orthant_point(&kernel) {
        return Err(CrossedError::ConeMeetsH(v));
    }
    let theta = quotient_map(&kernel);
    let cone_generators: Vec<IntVec> = IntMatrix::identity(d)
        .columns()
        .iter()
        .map(|e| theta.mul_vec(e))
        .collect();
    let cone = RatCone::new(
        theta.rows(),
        cone_generators.iter().map(|g| to_rational_vec(g)).collect(),
    );
    let order = total_order_extend(&cone)?;
    Ok(SpielbergTarget {
        mode,
        h_alpha,
        killed,
        kernel,
        torsion,
        theta,
        cone_generators,
        order,
    })
}

/// `d × rank` matrix of a lattice basis, or a zero column for the zero lattice.
fn h_alpha_matrix(l: &Lattice) -> IntMatrix {
    if l.is_zero() {
        IntMatrix::zeros(l.ambient_dim(), 1)
    } else {
        l.basis_matrix()
    }
}

impl SpielbergTarget {
    /// Exact re-check against the problem it was built for.
    pub fn verify(&self, p: &EmbedProblem) -> bool {
        let Ok((d, h_alpha)) = orthant_data(p) else {
            return false;
        };
        if h_alpha != self.h_alpha || self.theta.cols() != d {
            return false;
        }
        let r = self.theta.rows();
        // ker θ = K exactly.
        let kills_k = self
            .kernel
            .basis()
            .iter()
            .all(|b| is_zero_vec(&self.theta.mul_vec(b)));
        let ker = if r == 0 {
            Lattice::full(d)
        } else {
            Lattice::from_generators(d, &integer_kernel(&self.theta))
        };
        if !kills_k || ker != self.kernel {
            return false;
        }
        // θ onto ℤ^r.
        if r > 0 {
            let (tors, free) = torsion_invariants(&self.theta);
            if !tors.is_empty() || free != 0 {
                return false;
            }
        }
        let contains_all =
            |big: &Lattice, small: &Lattice| small.basis().iter().all(|b| big.contains(b));
        if !contains_all(&self.kernel, &h_alpha) || !contains_all(&self.kernel, &self.killed) {
            return false;
        }
        let (tors, _) = torsion_invariants(&h_alpha_matrix(&h_alpha));
        if tors != self.torsion {
            return false;
        }
        match self.mode {
            SpielbergMode::Torsion => {
                // K/H_α is the torsion subgroup: same rank, index = ∏ invariant factors.
                if self.kernel != h_alpha.saturation() {
                    return false;
                }
                let index = saturation_index(&h_alpha).map(BigInt::from);
                if index != Some(self.torsion.iter().product::<BigInt>()) {
                    return false;
                }
            }
            SpielbergMode::Given => {
                if self.kernel != h_alpha.sum(&self.killed).saturation() {
                    return false;
                }
            }
        }
        let expected: Vec<IntVec> = IntMatrix::identity(d)
            .columns()
            .iter()
            .map(|e| self.theta.mul_vec(e))
            .collect();
        if expected != self.cone_generators {
            return false;
        }
        let cone = RatCone::new(r, expected.iter().map(|g| to_rational_vec(g)).collect());
        expected.iter().all(|g| !is_zero_vec(g)) && self.order.verify(&cone)
    }

    /// Rank of the target group.
    pub fn target_rank(&self) -> usize {
        self.theta.rows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bratteli::BratteliDiagram;
    use crate::crossed::LimitEndomorphism;
    use crate::linalg::int_vec;
    use num_traits::One;

    fn finite(f: &[&[i64]]) -> EmbedProblem {
        let f = IntMatrix::from_i64(f);
        let d = f.rows();
        EmbedProblem::new(
            BratteliDiagram::finite(vec![vec![BigInt::one(); d]], vec![], false),
            LimitEndomorphism::new(f, 0),
        )
    }

    #[test]
    fn zero_subgroup_gives_identity() {
        let p = finite(&[&[1, 0], &[0, 1]]);
        let t = spielberg_target(&p, None, SpielbergMode::Given).unwrap();
        assert_eq!(t.theta, IntMatrix::identity(2));
        assert!(t.kernel.is_zero());
        assert!(t.verify(&p));
    }

    #[test]
    fn antidiagonal_quotient() {
        let p = finite(&[&[1, 0], &[0, 1]]);
        let h = SubgroupSpec {
            generators: vec![int_vec(&[1, -1])],
        };
        let t = spielberg_target(&p, Some(&h), SpielbergMode::Given).unwrap();
        assert_eq!(t.theta, IntMatrix::from_i64(&[&[1, 1]]));
        assert_eq!(t.cone_generators, vec![int_vec(&[1]), int_vec(&[1])]);
        assert!(t.verify(&p));
    }

    #[test]
    fn cone_meeting_subgroup_is_rejected() {
        let p = finite(&[&[1, 0], &[0, 1]]);
        let h = SubgroupSpec {
            generators: vec![int_vec(&[1, 1])],
        };
        assert!(matches!(
            spielberg_target(&p, Some(&h), SpielbergMode::Given),
            Err(CrossedError::ConeMeetsH(_))
        ));
    }

    #[test]
    fn torsion_of_order_two() {
        // F − I = [[2,2],[−2,−2]], so H_α = span{(2,−2)} and G/H_α ≅ ℤ/2 ⊕ ℤ.
        let p = finite(&[&[3, 2], &[-2, -1]]);
        let t = spielberg_target(&p, None, SpielbergMode::Torsion).unwrap();
        assert_eq!(t.torsion, int_vec(&[2]));
        assert_eq!(t.kernel, Lattice::from_generators(2, &[int_vec(&[1, -1])]));
        assert!(t.verify(&p));
    }

    #[test]
    fn stationary_non_permutation_is_unsupported() {
        let p = EmbedProblem::new(
            BratteliDiagram::stationary(IntMatrix::from_i64(&[&[2]]), int_vec(&[1]), false, 1),
            LimitEndomorphism::new(IntMatrix::from_i64(&[&[1]]), 0),
        );
        assert_eq!(
            spielberg_target(&p, None, SpielbergMode::Torsion),
            Err(CrossedError::UnsupportedPresentation)
        );
    }
}
