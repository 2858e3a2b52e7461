//! Finite orbit property of `α_*`.

use super::witness::{h_witness_search, HWitness};
use super::EmbedProblem;
use crate::json;
use crate::linalg::{is_zero_vec, perron_enclosure, IntMatrix, PerronEnclosure};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// `M^depth (F^period e_g − M^{period·s} e_g) = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FopEntry {
    pub generator: usize,
    pub period: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NotFopCertificate {
    /// `ℓF = μℓ` with `|μ| ≠ λ^s`: the state `ℓ/λ^n` scales by `μ/λ^s` at
    /// each step, so `e_1` (with `ℓ(e_1) = 1`) never returns.
    PerronRatio {
        enclosure: PerronEnclosure,
        #[serde(with = "json::rat")]
        mu_lo: BigRational,
        #[serde(with = "json::rat")]
        mu_hi: BigRational,
    },
    /// `F ≥ 0` and `h = α_*(x) − x` positive nonzero: `α^j(x) − x` is a sum of
    /// positive terms containing `h`, so it never vanishes.
    PositiveDrift { witness: HWitness },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FopVerdict {
    Fop {
        stage: usize,
        entries: Vec<FopEntry>,
    },
    NotFop {
        generator: usize,
        certificate: NotFopCertificate,
    },
    Unknown {
        orbit_bound: usize,
    },
}

/// Period and vanishing depth for one generator, if the orbit closes within `orbit_bound`.
pub(crate) fn generator_period(
    m: &IntMatrix,
    f: &IntMatrix,
    shift: usize,
    i: usize,
    orbit_bound: usize,
) -> Option<FopEntry> {
    let d = m.rows();
    let ms = m.pow(shift as u32);
    let mut e = vec![BigInt::zero(); d];
    e[i] = BigInt::one();
    let mut fk = e.clone();
    let mut mk = e;
    for period in 1..=orbit_bound {
        fk = f.mul_vec(&fk);
        mk = ms.mul_vec(&mk);
        let mut z: Vec<BigInt> = fk.iter().zip(&mk).map(|(a, b)| a - b).collect();
        for depth in 0..=d {
            if is_zero_vec(&z) {
                return Some(FopEntry {
                    generator: i,
                    period,
                    depth,
                });
            }
            z = m.mul_vec(&z);
        }
    }
    None
}

/// Interval for `μ = (ℓF)_1` when `ℓ_1 = 1`.
pub(crate) fn mu_interval(enc: &PerronEnclosure, f: &IntMatrix) -> (BigRational, BigRational) {
    enc.functional_interval(&f.column(0))
}

/// Whether `|μ|` is certified away from `λ^s`.
pub fn ratio_separates(
    enc: &PerronEnclosure,
    mu_lo: &BigRational,
    mu_hi: &BigRational,
    shift: usize,
) -> bool {
    let (abs_lo, abs_hi) = if mu_lo.is_positive() {
        (mu_lo.clone(), mu_hi.clone())
    } else if mu_hi.is_negative() {
        (-mu_hi, -mu_lo)
    } else {
        (BigRational::zero(), mu_hi.clone().max(-mu_lo))
    };
    let lam_lo = num_traits::pow(enc.lambda_lo.clone(), shift);
    let lam_hi = num_traits::pow(enc.lambda_hi.clone(), shift);
    abs_hi < lam_lo || abs_lo > lam_hi
}

/// Decide the finite orbit property on the standard generators.
///
/// Finite orbits of the generators give finite orbits of everything: the
/// identity `M^d (F^L − M^{Ls}) = 0` for `L` the lcm of the periods is a
/// matrix identity and holds at every stage. The `stage` argument is only
/// recorded. `NotFop` is issued only with a certificate of an infinite orbit.
pub fn fop_check(p: &EmbedProblem, stage: usize, orbit_bound: usize) -> FopVerdict {
    let m = p.connecting_matrix();
    let f = &p.endo.mat;
    let s = p.endo.shift;
    let d = m.rows();
    let entries: Vec<Option<FopEntry>> = (0..d)
        .map(|i| generator_period(&m, f, s, i, orbit_bound))
        .collect();
    if entries.iter().all(Option::is_some) {
        return FopVerdict::Fop {
            stage,
            entries: entries.into_iter().flatten().collect(),
        };
    }
    if let Some(mat) = p.diagram.stationary_matrix() {
        if let Ok(enc) = perron_enclosure(mat, &crate::bratteli::default_precision()) {
            let (mu_lo, mu_hi) = mu_interval(&enc, f);
            if ratio_separates(&enc, &mu_lo, &mu_hi, s) {
                return FopVerdict::NotFop {
                    generator: 0,
                    certificate: NotFopCertificate::PerronRatio {
                        enclosure: enc,
                        mu_lo,
                        mu_hi,
                    },
                };
            }
        }
    }
    if f.is_nonnegative() {
        if let Some(w) = h_witness_search(p, orbit_bound, 2) {
            let generator = entries.iter().position(Option::is_none).unwrap_or(0);
            return FopVerdict::NotFop {
                generator,
                certificate: NotFopCertificate::PositiveDrift { witness: w },
            };
        }
    }
    FopVerdict::Unknown { orbit_bound }
}
