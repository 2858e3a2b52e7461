//! Inner automorphisms `x ↦ W x W*`, with a permutation fast path.

use crate::dense::{CMat, DenseUnitary};

#[derive(Clone, Debug)]
pub struct Conjugation {
    w: DenseUnitary,
    /// `W e_i = e_{perm[i]}` when `W` is a permutation matrix.
    perm: Option<Vec<usize>>,
}

fn as_permutation(w: &CMat) -> Option<Vec<usize>> {
    let n = w.nrows();
    let mut perm = vec![usize::MAX; n];
    let mut hit = vec![false; n];
    for j in 0..n {
        for i in 0..n {
            let z = w[(i, j)];
            if z.im != 0.0 {
                return None;
            }
            if z.re == 1.0 {
                if perm[j] != usize::MAX || hit[i] {
                    return None;
                }
                perm[j] = i;
                hit[i] = true;
            } else if z.re != 0.0 {
                return None;
            }
        }
    }
    perm.iter().all(|&p| p != usize::MAX).then_some(perm)
}

impl Conjugation {
    pub fn new(w: DenseUnitary) -> Self {
        let perm = as_permutation(w.matrix());
        Conjugation { w, perm }
    }

    pub fn unitary(&self) -> &DenseUnitary {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    pub fn is_permutation(&self) -> bool {
        self.perm.is_some()
    }

    /// `W x W*`.
    pub fn apply(&self, x: &CMat) -> CMat {
        match &self.perm {
            Some(p) => {
                let mut out = CMat::zeros(x.nrows(), x.ncols());
                for b in 0..x.ncols() {
                    for a in 0..x.nrows() {
                        out[(p[a], p[b])] = x[(a, b)];
                    }
                }
                out
            }
            None => self.w.conjugate(x),
        }
    }

    /// `W* x W`.
    pub fn apply_inverse(&self, x: &CMat) -> CMat {
        match &self.perm {
            Some(p) => CMat::from_fn(x.nrows(), x.ncols(), |a, b| x[(p[a], p[b])]),
            None => self.w.adjoint().conjugate(x),
        }
    }

    /// `Ad(W^j)`.
    pub fn power(&self, j: usize) -> Conjugation {
        let n = self.dim();
        match &self.perm {
            Some(p) => {
                let mut q: Vec<usize> = (0..n).collect();
                for _ in 0..j {
                    q = q.iter().map(|&i| p[i]).collect();
                }
                let w = CMat::from_fn(n, n, |a, b| {
                    if q[b] == a {
                        crate::dense::c(1.0, 0.0)
                    } else {
                        crate::dense::c(0.0, 0.0)
                    }
                });
                Conjugation {
                    w: DenseUnitary::new(w).expect("permutation matrix"),
                    perm: Some(q),
                }
            }
            None => {
                let mut acc = CMat::identity(n, n);
                let mut base = self.w.matrix().clone();
                let mut e = j;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = &acc * &base;
                    }
                    base = &base * &base;
                    e >>= 1;
                }
                Conjugation::new(DenseUnitary::new(acc).expect("power of a unitary"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c, op_norm, random_unitary, shift_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fast_path_agrees_with_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = shift_unitary(4).kron(&shift_unitary(3));
        let fast = Conjugation::new(s.clone());
        assert!(fast.is_permutation());
        let x = random_unitary(12, &mut rng).into_matrix();
        assert!(op_norm(&(fast.apply(&x) - s.conjugate(&x))) < 1e-14);
        assert!(op_norm(&(fast.apply_inverse(&fast.apply(&x)) - &x)) < 1e-14);
        let p5 = fast.power(5);
        let slow = Conjugation::new(DenseUnitary::new(s.matrix() * c(0.0, 1.0)).unwrap());
        assert!(!slow.is_permutation());
        assert!(op_norm(&(p5.apply(&x) - slow.power(5).apply(&x))) < 1e-12);
    }
}
