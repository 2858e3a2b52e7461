//! Principal-logarithm paths `t ↦ w^{(t)} = exp(t log u)` of unitaries.

use crate::dense::{c, identity, op_norm, CMat, DenseUnitary};
use crate::LabError;
use nalgebra::linalg::Schur;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Allowed residual of the spectral decomposition.
pub const SPECTRAL_TOL: f64 = 1e-8;
/// Slack allowed on `‖w^{(s)} − w^{(t)}‖ ≤ π|s−t|`.
pub const LIPSCHITZ_TOL: f64 = 1e-8;

/// `u = Q diag(e^{iθ}) Q*` with `θ ∈ (−π, π]`.
#[derive(Clone, Debug)]
pub struct UnitaryPath {
    q: CMat,
    angles: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub pairs: usize,
    /// Largest `‖w^{(s)} − w^{(t)}‖ − π|s−t|` seen.
    pub max_excess: f64,
    pub pass: bool,
}

fn principal_arg(z: num_complex::Complex64) -> f64 {
    let a = z.arg();
    // atan2 returns −π for −1 − 0i; the principal branch wants π.
    if a <= -PI + 1e-12 {
        PI
    } else {
        a
    }
}

/// Spectral path of `u`, with `w^{(0)} = I` and `w^{(1)} = u`.
pub fn unitary_log_path(u: &DenseUnitary) -> Result<UnitaryPath, LabError> {
    let n = u.dim();
    if n == 0 {
        return Ok(UnitaryPath {
            q: CMat::zeros(0, 0),
            angles: Vec::new(),
        });
    }
    let schur =
        Schur::try_new(u.matrix().clone(), 1e-15, 10_000).ok_or(LabError::SpectralFailure {
            residual: f64::INFINITY,
        })?;
    let (q, t) = schur.unpack();
    let angles: Vec<f64> = (0..n).map(|i| principal_arg(t[(i, i)])).collect();
    let path = UnitaryPath { q, angles };
    // A normal matrix has diagonal Schur form; the residual catches both
    // solver inaccuracy and off-diagonal mass.
    let residual = op_norm(&(path.at(1.0) - u.matrix()))
        .max(op_norm(&(path.q.adjoint() * &path.q - identity(n))));
    if !residual.is_finite() || residual > SPECTRAL_TOL {
        return Err(LabError::SpectralFailure { residual });
    }
    Ok(path)
}

impl UnitaryPath {
    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    /// Eigenvalue arguments in `(−π, π]`.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// `w^{(t)} = Q diag(e^{itθ}) Q*`.
    pub fn at(&self, t: f64) -> CMat {
        let mut scaled = self.q.clone();
        for (j, theta) in self.angles.iter().enumerate() {
            let phase = c(0.0, t * theta).exp();
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= phase;
            }
        }
        scaled * self.q.adjoint()
    }

    /// Largest `|θ|`; the path is Lipschitz with this constant.
    pub fn speed(&self) -> f64 {
        self.angles.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Check `‖w^{(s)} − w^{(t)}‖ ≤ π|s−t|` on random pairs in `[0,1]²`.
    pub fn lipschitz_check<R: Rng + ?Sized>(&self, pairs: usize, rng: &mut R) -> LipschitzReport {
        let mut max_excess = f64::NEG_INFINITY;
        for _ in 0..pairs {
            let s: f64 = rng.random();
            let t: f64 = rng.random();
            let gap = op_norm(&(self.at(s) - self.at(t)));
            max_excess = max_excess.max(gap - PI * (s - t).abs());
        }
        LipschitzReport {
            pairs,
            max_excess,
            pass: max_excess <= LIPSCHITZ_TOL,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::random_unitary;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(entries: &[num_complex::Complex64]) -> DenseUnitary {
        DenseUnitary::new(CMat::from_diagonal(&DVector::from_vec(entries.to_vec()))).unwrap()
    }

    #[test]
    fn identity_gives_constant_path() {
        let p = unitary_log_path(&DenseUnitary::identity(3)).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert!(op_norm(&(p.at(t) - identity(3))) < 1e-12);
        }
    }

    #[test]
    fn reflection_path_is_tight() {
        let p = unitary_log_path(&diag(&[c(1.0, 0.0), c(-1.0, 0.0)])).unwrap();
        for t in [0.0, 0.25, 0.5, 1.0] {
            let expected = diag(&[c(1.0, 0.0), c(0.0, PI * t).exp()]);
            assert!(op_norm(&(p.at(t) - expected.matrix())) < 1e-12);
        }
        let gap = op_norm(&(p.at(1.0) - p.at(0.0)));
        assert!((gap - 2.0).abs() < 1e-12 && gap <= PI);
    }

    #[test]
    fn rotation_follows_the_geodesic() {
        let theta = 2.5;
        let rot = |a: f64| {
            CMat::from_row_slice(
                2,
                2,
                &[
                    c(a.cos(), 0.0),
                    c(-a.sin(), 0.0),
                    c(a.sin(), 0.0),
                    c(a.cos(), 0.0),
                ],
            )
        };
        let p = unitary_log_path(&DenseUnitary::new(rot(theta)).unwrap()).unwrap();
        for t in [0.1, 0.5, 0.9] {
            assert!(op_norm(&(p.at(t) - rot(t * theta))) < 1e-10);
        }
    }

    #[test]
    fn random_paths_are_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2, 5, 8] {
            let u = random_unitary(n, &mut rng);
            let p = unitary_log_path(&u).unwrap();
            assert!(op_norm(&(p.at(1.0) - u.matrix())) < 1e-9);
            let report = p.lipschitz_check(100, &mut rng);
            assert!(report.pass, "{report:?}");
        }
    }
}
