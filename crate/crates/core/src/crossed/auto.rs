//! Invertibility certificates, powers, and unitization.

use super::{CrossedError, EmbedProblem, LimitEndomorphism, SubgroupSpec};
use crate::bratteli::BratteliDiagram;
use crate::linalg::{rational_rows_to_int, IntMatrix};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// `F·G = G·F = M^k`, so `x@n ↦ G x @ (n + k − s)` inverts `α_*`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomorphismCertificate {
    pub k: usize,
    pub g: IntMatrix,
}

impl AutomorphismCertificate {
    pub fn verify(&self, p: &EmbedProblem) -> bool {
        let m = p.connecting_matrix().pow(self.k as u32);
        let f = &p.endo.mat;
        self.k >= p.endo.shift
            && self.g.rows() == f.rows()
            && self.g.cols() == f.cols()
            && f.mul(&self.g) == m
            && self.g.mul(f) == m
    }
}

/// `k` in `[s, max(s, depth)]` with `M^k F⁻¹` integral, preferring the
/// smallest `k` whose `G` is nonnegative (then `G` is itself a positive map)
/// and otherwise the smallest integral one.
pub fn automorphism_certificate(
    p: &EmbedProblem,
    depth: usize,
) -> Result<Option<AutomorphismCertificate>, CrossedError> {
    let f = &p.endo.mat;
    let inv = f.rational_inverse().ok_or(CrossedError::SingularF)?;
    let m = p.connecting_matrix();
    let s = p.endo.shift;
    let mut mk = m.pow(s as u32);
    let mut first: Option<AutomorphismCertificate> = None;
    for k in s..=depth.max(s) {
        let rows: Vec<Vec<BigRational>> = mk
            .to_rational()
            .iter()
            .map(|row| {
                (0..f.cols())
                    .map(|j| row.iter().zip(&inv).map(|(a, r)| a * &r[j]).sum())
                    .collect()
            })
            .collect();
        if let Some(g) = rational_rows_to_int(&rows) {
            let cert = AutomorphismCertificate { k, g };
            debug_assert!(cert.verify(p));
            if cert.g.is_nonnegative() {
                return Ok(Some(cert));
            }
            first.get_or_insert(cert);
        }
        mk = mk.mul(&m);
    }
    Ok(first)
}

const INVERSE_DEPTH: usize = 32;

/// The problem for `α^m`; negative powers go through the inverse certificate.
pub fn power_transform(p: &EmbedProblem, m: i64) -> Result<EmbedProblem, CrossedError> {
    let endo = match m {
        0 => return Err(CrossedError::ZeroPower),
        m if m > 0 => LimitEndomorphism::new(p.endo.mat.pow(m as u32), m as usize * p.endo.shift),
        m => {
            let cert = automorphism_certificate(p, INVERSE_DEPTH)?
                .ok_or(CrossedError::NoInverseCertificate(INVERSE_DEPTH))?;
            let n = m.unsigned_abs();
            LimitEndomorphism::new(cert.g.pow(n as u32), n as usize * (cert.k - p.endo.shift))
        }
    };
    Ok(EmbedProblem {
        diagram: p.diagram.clone(),
        endo,
        subgroup: p.subgroup.clone(),
    })
}

fn pad(v: &[BigInt]) -> Vec<BigInt> {
    let mut v = v.to_vec();
    v.push(BigInt::one());
    v
}

fn plus_one(m: &IntMatrix) -> IntMatrix {
    m.direct_sum(&IntMatrix::identity(1))
}

/// Adjoin a unit: `K₀ ⊕ ℤ` with `F ⊕ 1` and one extra vertex of size 1 at every stage.
///
/// The new difference matrix is `(F − M^s) ⊕ 0`, so `H̃ = H ⊕ 0` lies in
/// `G × {0}`, where the direct-sum cone restricts to `G⁺ × {0}`.
pub fn unitize_problem(p: &EmbedProblem) -> EmbedProblem {
    let d = &p.diagram;
    let diagram = BratteliDiagram {
        sizes: d.sizes.iter().map(|s| pad(s)).collect(),
        maps: d.maps.iter().map(plus_one).collect(),
        stationary: d.stationary,
        unital: d.unital,
    };
    let subgroup = p.subgroup.as_ref().map(|h| SubgroupSpec {
        generators: h
            .generators
            .iter()
            .map(|g| {
                let mut g = g.clone();
                g.push(BigInt::zero());
                g
            })
            .collect(),
    });
    EmbedProblem {
        diagram,
        endo: LimitEndomorphism::new(plus_one(&p.endo.mat), p.endo.shift),
        subgroup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::int_vec;

    fn stationary(m: &[&[i64]], f: &[&[i64]]) -> EmbedProblem {
        let m = IntMatrix::from_i64(m);
        let d = m.rows();
        EmbedProblem::new(
            BratteliDiagram::stationary(m, vec![BigInt::one(); d], false, 1),
            LimitEndomorphism::new(IntMatrix::from_i64(f), 0),
        )
    }

    #[test]
    fn certificates() {
        let p = stationary(&[&[2]], &[&[1]]);
        let c = automorphism_certificate(&p, 4).unwrap().unwrap();
        assert_eq!((c.k, c.g.clone()), (0, IntMatrix::from_i64(&[&[1]])));
        let p = stationary(&[&[2]], &[&[2]]);
        let c = automorphism_certificate(&p, 4).unwrap().unwrap();
        assert_eq!((c.k, c.g.clone()), (1, IntMatrix::from_i64(&[&[1]])));
        let fib = &[&[1, 1][..], &[1, 0][..]];
        let p = stationary(fib, fib);
        let c = automorphism_certificate(&p, 4).unwrap().unwrap();
        assert_eq!((c.k, c.g.clone()), (1, IntMatrix::identity(2)));
        let p = stationary(&[&[2]], &[&[0]]);
        assert_eq!(
            automorphism_certificate(&p, 4),
            Err(CrossedError::SingularF)
        );
    }

    #[test]
    fn powers() {
        let p = stationary(&[&[2]], &[&[2]]);
        assert_eq!(power_transform(&p, 1).unwrap(), p);
        assert_eq!(
            power_transform(&p, 2).unwrap().endo.mat,
            IntMatrix::from_i64(&[&[4]])
        );
        let swap = &[&[0, 1][..], &[1, 0][..]];
        let p = EmbedProblem::new(
            BratteliDiagram::finite(vec![int_vec(&[1, 1])], vec![], false),
            LimitEndomorphism::new(IntMatrix::from_i64(swap), 0),
        );
        let inv = power_transform(&p, -1).unwrap();
        assert_eq!(inv.endo, p.endo);
        assert_eq!(power_transform(&p, 0), Err(CrossedError::ZeroPower));
    }

    #[test]
    fn unitization_pads() {
        let p = stationary(&[&[2]], &[&[2]]);
        let u = unitize_problem(&p);
        assert_eq!(u.diagram.maps[0], IntMatrix::from_i64(&[&[2, 0], &[0, 1]]));
        assert_eq!(u.endo.mat, IntMatrix::from_i64(&[&[2, 0], &[0, 1]]));
        assert_eq!(
            u.difference_matrix(),
            IntMatrix::from_i64(&[&[1, 0], &[0, 0]])
        );
        assert!(u.validate().is_ok());
    }
}
