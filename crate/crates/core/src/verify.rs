//! Certificate re-checks. Nothing here runs a search: every function replays
//! the exact identities a certificate claims.

use crate::bratteli::{
    class_equal, push, BratteliDiagram, ClassEquality, K0Element, NotPositiveCertificate,
    PositivityVerdict,
};
use crate::crossed::{
    block_reduction, EmbedProblem, EmbeddabilityVerdict, EmbeddableReason, FopEntry, FopVerdict,
    HWitness, InvariantFunctional, NotFopCertificate,
};
use crate::linalg::{
    is_nonnegative_vec, is_zero_vec, verify_orthant_verdict, IntMatrix, Lattice, OrthantVerdict,
};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("certificate check failed: {0}")]
pub struct VerifyError(pub String);

fn ensure(cond: bool, what: &str) -> Result<(), VerifyError> {
    if cond {
        Ok(())
    } else {
        Err(VerifyError(what.to_string()))
    }
}

fn zero_like(x: &K0Element) -> K0Element {
    K0Element::new(x.stage, vec![BigInt::zero(); x.vec.len()])
}

/// Re-check a positivity verdict. `Unknown` always passes.
pub fn verify_positivity(
    d: &BratteliDiagram,
    x: &K0Element,
    verdict: &PositivityVerdict,
) -> Result<(), VerifyError> {
    ensure(d.element(x.stage, x.vec.clone()).is_ok(), "element shape")?;
    match verdict {
        PositivityVerdict::Positive { stage } => {
            ensure(*stage >= x.stage, "positive stage precedes element")?;
            let v = push(d, x, *stage).map_err(|e| VerifyError(e.to_string()))?;
            ensure(is_nonnegative_vec(&v), "push is not nonnegative")
        }
        PositivityVerdict::NotPositive { certificate } => match certificate {
            NotPositiveCertificate::NegationPositive { stage } => {
                ensure(*stage >= x.stage, "negation stage precedes element")?;
                let v = push(d, &x.neg(), *stage).map_err(|e| VerifyError(e.to_string()))?;
                ensure(is_nonnegative_vec(&v), "negation push is not nonnegative")?;
                ensure(
                    class_equal(d, x, &zero_like(x), d.sizes.len()) == ClassEquality::NotEqual,
                    "element is zero in the limit",
                )
            }
            NotPositiveCertificate::PerronNegative { enclosure, upper } => {
                let m = d
                    .stationary_matrix()
                    .ok_or_else(|| VerifyError("Perron certificate on a finite diagram".into()))?;
                ensure(enclosure.replay(m), "Perron enclosure does not replay")?;
                let (_, hi) = enclosure.functional_interval(&x.vec);
                ensure(
                    &hi == upper && upper.is_negative(),
                    "Perron bound is not negative",
                )
            }
            NotPositiveCertificate::FinalStageNegative { stage, index } => {
                ensure(d.last_stage() == Some(*stage), "not the last stage")?;
                let v = push(d, x, *stage).map_err(|e| VerifyError(e.to_string()))?;
                ensure(
                    v.get(*index).is_some_and(|a| a.is_negative()),
                    "entry is not negative",
                )
            }
        },
        PositivityVerdict::Unknown { .. } => Ok(()),
    }
}

/// `h = α_*(x) − x`, `h` positive and nonzero, partial-isometry ranks consistent.
pub fn verify_witness(p: &EmbedProblem, w: &HWitness) -> Result<(), VerifyError> {
    let d = &p.diagram;
    let dim = d.limit_rank();
    ensure(
        w.x.vec.len() == dim && w.h.vec.len() == dim,
        "witness length",
    )?;
    if let Some(last) = d.last_stage() {
        ensure(
            w.x.stage == last,
            "finite-depth witness must sit on the last stage",
        )?;
    }
    ensure(w.h.stage == w.x.stage + p.endo.shift, "h stage")?;
    ensure(
        p.difference_matrix().mul_vec(&w.x.vec) == w.h.vec,
        "h ≠ (F − M^s)x",
    )?;
    ensure(w.positive_stage >= w.h.stage, "positive stage precedes h")?;
    let pushed = push(d, &w.h, w.positive_stage).map_err(|e| VerifyError(e.to_string()))?;
    ensure(
        is_nonnegative_vec(&pushed),
        "h is not positive at the claimed stage",
    )?;
    ensure(
        class_equal(d, &w.h, &zero_like(&w.h), d.sizes.len()) == ClassEquality::NotEqual,
        "h is zero in the limit",
    )?;
    let pi = &w.partial_isometry;
    ensure(pi.stage == w.positive_stage, "partial isometry stage")?;
    let expected = crate::crossed::partial_isometry(p, &w.x, &w.h, w.positive_stage);
    ensure(*pi == expected, "partial isometry data")?;
    let lhs: Vec<BigInt> = pi.alpha_p.iter().zip(&pi.q).map(|(a, b)| a + b).collect();
    let rhs: Vec<BigInt> =
        pi.p.iter()
            .zip(&pi.alpha_q)
            .zip(&pi.r)
            .map(|((a, b), c)| a + b + c)
            .collect();
    ensure(lhs == rhs, "α(p) + q ≠ p + α(q) + r")?;
    ensure(
        is_nonnegative_vec(&pi.p) && is_nonnegative_vec(&pi.q),
        "p, q not projections",
    )
}

fn verify_fop_entry(m: &IntMatrix, f: &IntMatrix, shift: usize, e: &FopEntry) -> bool {
    let d = m.rows();
    if e.generator >= d || e.period == 0 {
        return false;
    }
    let mut v = vec![BigInt::zero(); d];
    v[e.generator] = BigInt::from(1);
    let fk = f.pow(e.period as u32).mul_vec(&v);
    let mk = m.pow((e.period * shift) as u32).mul_vec(&v);
    let z: Vec<BigInt> = fk.iter().zip(&mk).map(|(a, b)| a - b).collect();
    is_zero_vec(&m.pow(e.depth as u32).mul_vec(&z))
}

pub fn verify_fop_table(p: &EmbedProblem, entries: &[FopEntry]) -> Result<(), VerifyError> {
    let m = p.connecting_matrix();
    let d = m.rows();
    ensure(entries.len() == d, "one entry per generator")?;
    for (i, e) in entries.iter().enumerate() {
        ensure(e.generator == i, "entries out of order")?;
        ensure(
            verify_fop_entry(&m, &p.endo.mat, p.endo.shift, e),
            "orbit does not close",
        )?;
    }
    Ok(())
}

pub fn verify_fop_verdict(p: &EmbedProblem, v: &FopVerdict) -> Result<(), VerifyError> {
    match v {
        FopVerdict::Fop { entries, .. } => verify_fop_table(p, entries),
        FopVerdict::NotFop { certificate, .. } => match certificate {
            NotFopCertificate::PerronRatio {
                enclosure,
                mu_lo,
                mu_hi,
            } => {
                let m = p.diagram.stationary_matrix().ok_or_else(|| {
                    VerifyError("ratio certificate needs a stationary diagram".into())
                })?;
                ensure(enclosure.replay(m), "Perron enclosure does not replay")?;
                let (lo, hi) = enclosure.functional_interval(&p.endo.mat.column(0));
                ensure(&lo == mu_lo && &hi == mu_hi, "μ interval")?;
                ensure(
                    crate::crossed::ratio_separates(enclosure, mu_lo, mu_hi, p.endo.shift),
                    "|μ| not separated from λ^s",
                )
            }
            NotFopCertificate::PositiveDrift { witness } => {
                ensure(p.endo.mat.is_nonnegative(), "drift certificate needs F ≥ 0")?;
                verify_witness(p, witness)
            }
        },
        FopVerdict::Unknown { .. } => Ok(()),
    }
}

pub fn verify_functional(p: &EmbedProblem, f: &InvariantFunctional) -> Result<(), VerifyError> {
    ensure(f.verify(p), "functional identities")
}

fn verify_reason(p: &EmbedProblem, reason: &EmbeddableReason) -> Result<(), VerifyError> {
    match reason {
        EmbeddableReason::SimpleUnital(data) => {
            let u = p
                .diagram
                .order_unit()
                .ok_or_else(|| VerifyError("diagram is not unital".into()))?;
            let u = p.lift_to_action_stage(&u);
            let image = p.apply(&u);
            let stage = data.unit_fixed_stage;
            ensure(stage >= image.stage, "unit stage")?;
            let a = push(&p.diagram, &image, stage).map_err(|e| VerifyError(e.to_string()))?;
            let b = push(&p.diagram, &u, stage).map_err(|e| VerifyError(e.to_string()))?;
            ensure(a == b, "α_*[1] ≠ [1]")?;
            match p.diagram.stationary_matrix() {
                Some(m) => {
                    let k = data
                        .primitivity_exponent
                        .ok_or_else(|| VerifyError("missing primitivity exponent".into()))?;
                    ensure(m.pow(k).is_positive(), "M^k is not positive")
                }
                None => ensure(p.diagram.limit_rank() == 1, "finite diagram is not simple"),
            }
        }
        EmbeddableReason::Fop { entries, .. } => verify_fop_table(p, entries),
        EmbeddableReason::InvariantFaithfulFunctional { ell, lambda } => verify_functional(
            p,
            &InvariantFunctional {
                ell: ell.clone(),
                lambda: lambda.clone(),
            },
        ),
        EmbeddableReason::TrivialIntersectionExhausted {
            lattice,
            certificate,
        } => {
            let (_, d0) = p
                .orthant_model()
                .ok_or_else(|| VerifyError("no orthant presentation".into()))?;
            ensure(
                *lattice == Lattice::column_span(&d0),
                "lattice is not the image of α_* − id",
            )?;
            ensure(
                verify_orthant_verdict(
                    lattice,
                    &OrthantVerdict::CertifiedEmpty {
                        certificate: certificate.clone(),
                    },
                ),
                "Farkas certificate",
            )
        }
        EmbeddableReason::BlockReduction { kept, reason } => {
            let (expected, sub) =
                block_reduction(p).ok_or_else(|| VerifyError("problem does not split".into()))?;
            ensure(*kept == expected, "kept vertices")?;
            verify_reason(&sub, reason)
        }
    }
}

/// Re-check an embeddability verdict against its problem. `Unknown` passes
/// once the problem itself validates.
pub fn verify_verdict(p: &EmbedProblem, v: &EmbeddabilityVerdict) -> Result<(), VerifyError> {
    p.validate().map_err(|e| VerifyError(e.to_string()))?;
    match v {
        EmbeddabilityVerdict::CertifiedEmbeddable { reason } => verify_reason(p, reason),
        EmbeddabilityVerdict::CertifiedNotEmbeddable { witness } => verify_witness(p, witness),
        EmbeddabilityVerdict::Unknown { .. } => Ok(()),
    }
}
