//! Automorphisms of dimension groups and the embeddability decision engine.
//!
//! An endomorphism is given by an integer matrix `F` and a stage shift `s`:
//! the class of `x` at stage `n` goes to the class of `F x` at stage `n + s`.
//! For stationary diagrams `F` must commute with `M`, and then
//! `α_*(x) − x` is represented by `(F − M^s) x` at stage `n + s`. For
//! finite-depth diagrams `F` acts on the last stage and the shift is zero.

mod auto;
mod decide;
mod fop;
mod functional;
mod spielberg;
mod witness;

pub use auto::{
    automorphism_certificate, power_transform, unitize_problem, AutomorphismCertificate,
};
pub use decide::{
    block_reduction, coupling_components, decide_embeddable, Budget, EmbeddabilityVerdict,
    EmbeddableReason, SimpleUnitalData,
};
pub use fop::{fop_check, ratio_separates, FopEntry, FopVerdict, NotFopCertificate};
pub use functional::{integer_eigenvalues, invariant_functional, InvariantFunctional};
pub use spielberg::{spielberg_target, SpielbergMode, SpielbergTarget};
pub use witness::{
    h_witness_search, partial_isometry, stage_image_check, HWitness, PartialIsometryWitness,
    StageImageReport,
};

use crate::bratteli::{class_equal, BratteliDiagram, BratteliError, ClassEquality, K0Element};
use crate::json;
use crate::linalg::{IntMatrix, IntVec, Lattice, OrderError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CrossedError {
    #[error(transparent)]
    Diagram(#[from] BratteliError),
    #[error("endomorphism matrix is {rows}x{cols}, expected {dim}x{dim}")]
    EndoShape {
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("endomorphism does not commute with the stationary matrix")]
    NotIntertwining,
    #[error("finite-depth diagrams need shift 0, got {0}")]
    ShiftOnFiniteDiagram(usize),
    #[error("endomorphism does not fix the class of the unit")]
    UnitClassNotFixed,
    #[error("endomorphism matrix is singular")]
    SingularF,
    #[error("operation needs a stationary diagram")]
    NotStationary,
    #[error("no inverse certificate within depth {0}")]
    NoInverseCertificate(usize),
    #[error("power must be nonzero")]
    ZeroPower,
    #[error("subgroup generator has length {len}, expected {dim}")]
    SubgroupShape { len: usize, dim: usize },
    #[error("the group is not presented as Z^d with the orthant cone")]
    UnsupportedPresentation,
    #[error("the subgroup meets the positive cone: {0:?}")]
    ConeMeetsH(IntVec),
    #[error(transparent)]
    Order(#[from] OrderError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitEndomorphism {
    pub mat: IntMatrix,
    #[serde(default)]
    pub shift: usize,
}

impl LimitEndomorphism {
    pub fn new(mat: IntMatrix, shift: usize) -> Self {
        Self { mat, shift }
    }
}

/// Generators of a subgroup of the limit group, in the coordinates of its
/// `ℤ^d` presentation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupSpec {
    #[serde(with = "json::int_vec_vec")]
    pub generators: Vec<IntVec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedProblem {
    pub diagram: BratteliDiagram,
    pub endo: LimitEndomorphism,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub subgroup: Option<SubgroupSpec>,
}

impl EmbedProblem {
    pub fn new(diagram: BratteliDiagram, endo: LimitEndomorphism) -> Self {
        Self {
            diagram,
            endo,
            subgroup: None,
        }
    }

    /// Structural checks on the diagram and the endomorphism.
    pub fn validate(&self) -> Result<(), CrossedError> {
        self.diagram.validate()?;
        let dim = self.diagram.limit_rank();
        let f = &self.endo.mat;
        if f.rows() != dim || f.cols() != dim {
            return Err(CrossedError::EndoShape {
                rows: f.rows(),
                cols: f.cols(),
                dim,
            });
        }
        match self.diagram.stationary_matrix() {
            Some(m) => {
                if f.mul(m) != m.mul(f) {
                    return Err(CrossedError::NotIntertwining);
                }
            }
            None => {
                if self.endo.shift != 0 {
                    return Err(CrossedError::ShiftOnFiniteDiagram(self.endo.shift));
                }
            }
        }
        if let Some(h) = &self.subgroup {
            for g in &h.generators {
                if g.len() != dim {
                    return Err(CrossedError::SubgroupShape { len: g.len(), dim });
                }
            }
        }
        Ok(())
    }

    /// For unital problems, the stage at which `α_*[1] = [1]` is witnessed.
    pub fn unit_fixed_stage(&self) -> Result<Option<usize>, CrossedError> {
        let Some(u) = self.diagram.order_unit() else {
            return Ok(None);
        };
        let u = self.lift_to_action_stage(&u);
        let image = self.apply(&u);
        match class_equal(
            &self.diagram,
            &image,
            &u,
            self.diagram.sizes.len() + image.stage,
        ) {
            ClassEquality::Equal { stage } => Ok(Some(stage)),
            _ => Err(CrossedError::UnitClassNotFixed),
        }
    }

    /// Move an element to a stage where the endomorphism acts.
    pub fn lift_to_action_stage(&self, x: &K0Element) -> K0Element {
        match self.diagram.last_stage() {
            Some(last) => K0Element::new(
                last,
                crate::bratteli::push(&self.diagram, x, last).expect("last stage is in range"),
            ),
            None => x.clone(),
        }
    }

    /// `α_*` on a representative (already at an action stage).
    pub fn apply(&self, x: &K0Element) -> K0Element {
        K0Element::new(x.stage + self.endo.shift, self.endo.mat.mul_vec(&x.vec))
    }

    /// The matrix `F − M^s` (stationary) or `F − I` (finite depth).
    pub fn difference_matrix(&self) -> IntMatrix {
        let f = &self.endo.mat;
        match self.diagram.stationary_matrix() {
            Some(m) => f.sub(&m.pow(self.endo.shift as u32)),
            None => f.sub(&IntMatrix::identity(f.rows())),
        }
    }

    /// The matrix playing the role of `M` for orbit and functional questions:
    /// the stationary matrix, or the identity on the last stage.
    pub fn connecting_matrix(&self) -> IntMatrix {
        match self.diagram.stationary_matrix() {
            Some(m) => m.clone(),
            None => IntMatrix::identity(self.diagram.limit_rank()),
        }
    }

    /// `(d, α_* − id)` when the limit group is `ℤ^d` with the orthant cone:
    /// finite-depth diagrams, or stationary diagrams whose matrix is a
    /// permutation (stage coordinates pulled back to stage 0).
    pub fn orthant_model(&self) -> Option<(usize, IntMatrix)> {
        let d = self.diagram.limit_rank();
        match self.diagram.stationary_matrix() {
            None => Some((d, self.difference_matrix())),
            Some(m) if is_permutation(m) => {
                let back = m.transpose().pow(self.endo.shift as u32);
                Some((d, back.mul(&self.endo.mat).sub(&IntMatrix::identity(d))))
            }
            Some(_) => None,
        }
    }

    pub fn subgroup_lattice(&self) -> Option<Lattice> {
        self.subgroup
            .as_ref()
            .map(|h| Lattice::from_generators(self.diagram.limit_rank(), &h.generators))
    }
}

pub fn is_permutation(m: &IntMatrix) -> bool {
    use num_traits::{One, Zero};
    if !m.is_square() {
        return false;
    }
    let n = m.rows();
    let entries_ok = m.entries().iter().all(|x| x.is_zero() || x.is_one());
    entries_ok
        && (0..n).all(|i| m.row(i).iter().filter(|x| x.is_one()).count() == 1)
        && (0..n).all(|j| (0..n).filter(|&i| m.get(i, j).is_one()).count() == 1)
}
