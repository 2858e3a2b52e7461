//! Finite-dimensional laboratory for Rohlin towers and limit-periodic
//! automorphisms of matrix algebras.
//!
//! Everything lives in truncations `⊗_f M_{n_f}` of an infinite tensor
//! product, with automorphisms given by conjugation by product unitaries.
//! Tower identities are checked with exact integer matrices; analytic
//! estimates are measured in double precision with pinned tolerances.

pub mod conj;
pub mod dense;
pub mod logpath;
pub mod nested;
pub mod stabilize;
pub mod tower;

pub use conj::Conjugation;
pub use dense::{
    op_norm, op_norm_svd, polar_unitary, random_unitary, shift_unitary, CMat, DenseUnitary,
};
pub use logpath::{unitary_log_path, LipschitzReport, UnitaryPath};
pub use nested::{
    limit_periodic_verify, nested_corpus, voiculescu_embedding, EmbeddingReport, NestedSystem,
    PeriodicityReport, VoiculescuEmbedding,
};
pub use stabilize::{
    commuting_unitary, median_defects, stabilize_experiment, stabilize_sweep, standard_run,
    StabilizeOutcome, StabilizeResult, TowerSpec,
};
pub use tower::{rohlin_tower, RohlinTower, TensorTruncation, TowerIdentities};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LabError {
    #[error("matrix is {rows}×{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("‖U*U − I‖ = {residual:.3e} exceeds the unitarity tolerance")]
    NotUnitary { residual: f64 },
    #[error("tower height {k} does not divide {m_prime}")]
    NotDivisible { m_prime: usize, k: usize },
    #[error("spectral decomposition residual {residual:.3e} too large")]
    SpectralFailure { residual: f64 },
    #[error("matrix is singular (smallest singular value {smallest:.3e})")]
    NonInvertible { smallest: f64 },
    #[error("β^{period} is not the identity on level {level} (residual {residual:.3e})")]
    PeriodMismatch {
        level: usize,
        period: usize,
        residual: f64,
    },
    #[error("ambient dimension {dim} exceeds the cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}
