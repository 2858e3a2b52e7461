//! Dense complex matrices: unitaries, operator norms, polar factors.

use crate::LabError;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;

/// Tolerance for `‖U*U − I‖` on construction.
pub const UNITARY_TOL: f64 = 1e-9;
/// Relative stopping tolerance for the power iteration.
pub const NORM_TOL: f64 = 1e-10;
const NORM_MAX_ITER: usize = 200_000;
/// Singular values below this make a polar factor meaningless.
pub const SINGULAR_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Lift an integer matrix.
pub fn from_int(m: &DMatrix<i64>) -> CMat {
    m.map(|x| c(x as f64, 0.0))
}

/// Deterministic start vector with generic phases.
fn start_vector(n: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(n, |i, _| {
        let t = i as f64;
        c(
            1.0 + (t * 0.618_033_988_749_895).fract(),
            (t * 0.414_213_562_373_095).fract(),
        )
    });
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Largest singular value by power iteration on `A*A`.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    let mut x = start_vector(a.ncols());
    let mut prev = -1.0;
    for _ in 0..NORM_MAX_ITER {
        let y = &gram * &x;
        // x is a unit vector, so ⟨x, A*A x⟩ = ‖Ax‖².
        let est = x.dotc(&y).re.max(0.0).sqrt();
        let yn = y.norm();
        if yn == 0.0 {
            return 0.0;
        }
        if (est - prev).abs() <= NORM_TOL * est.max(1.0) {
            return est;
        }
        prev = est;
        x = y / c(yn, 0.0);
    }
    prev
}

/// Largest singular value from a full SVD; used to cross-check `op_norm`.
pub fn op_norm_svd(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// `‖AB − BA‖` bounded by the Frobenius norm.
pub fn commutator_frobenius(a: &CMat, b: &CMat) -> f64 {
    (a * b - b * a).norm()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseUnitary {
    mat: CMat,
}

impl DenseUnitary {
    pub fn new(mat: CMat) -> Result<Self, LabError> {
        if mat.nrows() != mat.ncols() {
            return Err(LabError::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let residual = unitarity_residual(&mat);
        if residual > UNITARY_TOL {
            return Err(LabError::NotUnitary { residual });
        }
        Ok(DenseUnitary { mat })
    }

    pub fn identity(n: usize) -> Self {
        DenseUnitary { mat: identity(n) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> Self {
        DenseUnitary {
            mat: self.mat.adjoint(),
        }
    }

    /// Products of unitaries stay unitary up to rounding; re-checked anyway.
    pub fn mul(&self, other: &Self) -> Result<Self, LabError> {
        DenseUnitary::new(&self.mat * &other.mat)
    }

    pub fn kron(&self, other: &Self) -> Self {
        DenseUnitary {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// `U x U*`.
    pub fn conjugate(&self, x: &CMat) -> CMat {
        &self.mat * x * self.mat.adjoint()
    }
}

pub fn unitarity_residual(m: &CMat) -> f64 {
    op_norm(&(m.adjoint() * m - identity(m.ncols())))
}

/// Cyclic shift with `u e_i = e_{i+1}`, so `u E_ii u* = E_{i+1,i+1}`.
pub fn shift_permutation(n: usize) -> DMatrix<i64> {
    DMatrix::from_fn(n, n, |i, j| i64::from(i == (j + 1) % n))
}

pub fn shift_unitary(n: usize) -> DenseUnitary {
    assert!(n >= 1, "shift_unitary needs n ≥ 1");
    DenseUnitary {
        mat: from_int(&shift_permutation(n)),
    }
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `diag R` divided out.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseUnitary {
    let g = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    DenseUnitary::new(q).expect("QR factor of a full-rank matrix is unitary")
}

/// Unitary part `UV*` of `m = UΣV*`.
pub fn polar_unitary(m: &CMat) -> Result<DenseUnitary, LabError> {
    let svd = m.clone().svd(true, true);
    let smallest = svd.singular_values.min();
    if smallest < SINGULAR_TOL {
        return Err(LabError::NonInvertible { smallest });
    }
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    DenseUnitary::new(u * v_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shifts_move_diagonal_units() {
        assert_eq!(shift_unitary(1).matrix(), &identity(1));
        let u = shift_unitary(2);
        let mut e11 = CMat::zeros(2, 2);
        e11[(0, 0)] = c(1.0, 0.0);
        let moved = u.conjugate(&e11);
        assert_eq!(moved[(1, 1)], c(1.0, 0.0));
        assert_eq!(moved[(0, 0)], c(0.0, 0.0));
        let s = shift_permutation(3);
        assert_eq!(&s * &s * &s, DMatrix::<i64>::identity(3, 3));
    }

    #[test]
    fn power_iteration_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 12] {
            let a = CMat::from_fn(n, n, |_, _| {
                c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            assert!((op_norm(&a) - op_norm_svd(&a)).abs() < 1e-7, "n = {n}");
        }
        assert_eq!(op_norm(&CMat::zeros(3, 3)), 0.0);
        let d = CMat::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(0.0, -3.0)]));
        assert!((op_norm(&d) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(6, &mut rng);
        assert!(unitarity_residual(u.matrix()) < 1e-12);
        assert!(matches!(
            DenseUnitary::new(u.matrix() * c(2.0, 0.0)),
            Err(LabError::NotUnitary { .. })
        ));
    }

    #[test]
    fn polar_of_scaled_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(4, &mut rng);
        let v = polar_unitary(&(u.matrix() * c(3.0, 0.0))).unwrap();
        assert!(op_norm(&(v.matrix() - u.matrix())) < 1e-10);
        assert!(matches!(
            polar_unitary(&CMat::zeros(2, 2)),
            Err(LabError::NonInvertible { .. })
        ));
    }
}
