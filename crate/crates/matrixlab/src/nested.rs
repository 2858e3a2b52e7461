//! Limit-periodic automorphisms of nested matrix subalgebras and the
//! finite-stage covariant embedding `φ_n(b) = Σ_{j=1}^{d_n} β^j(b) ⊗ e_jj`.

use crate::conj::Conjugation;
use crate::dense::{c, random_unitary, shift_unitary, CMat, DenseUnitary};
use crate::tower::{TensorTruncation, AMBIENT_CAP};
use crate::LabError;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Residual allowed on identities checked numerically.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Largest per-factor order searched when looking for minimal periods.
pub const MAX_ORDER: usize = 720;

/// `β = Ad(⊗_f W_f)` on a tensor truncation, with `B_n` the span of the
/// factors listed at level `n` and `d_n` the claimed period on `B_n`.
#[derive(Clone, Debug)]
pub struct NestedSystem {
    pub truncation: TensorTruncation,
    pub beta: Vec<DenseUnitary>,
    pub levels: Vec<Vec<usize>>,
    pub periods: Vec<usize>,
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

pub fn lcm_up_to(m: usize) -> usize {
    (1..=m).fold(1, lcm)
}

impl NestedSystem {
    pub fn new(
        truncation: TensorTruncation,
        beta: Vec<DenseUnitary>,
        levels: Vec<Vec<usize>>,
        periods: Vec<usize>,
    ) -> Result<Self, LabError> {
        let r = truncation.factors.len();
        if beta.len() != r
            || beta
                .iter()
                .zip(&truncation.factors)
                .any(|(w, &n)| w.dim() != n)
        {
            return Err(LabError::InvalidSystem(
                "one unitary per factor, of matching size".into(),
            ));
        }
        if levels.is_empty() || periods.len() != levels.len() {
            return Err(LabError::InvalidSystem("one period per level".into()));
        }
        if periods.contains(&0) {
            return Err(LabError::InvalidSystem("periods must be ≥ 1".into()));
        }
        let mut levels = levels;
        for l in &mut levels {
            l.sort_unstable();
            l.dedup();
            if l.iter().any(|&f| f >= r) {
                return Err(LabError::InvalidSystem(
                    "level names a missing factor".into(),
                ));
            }
        }
        for w in levels.windows(2) {
            if !w[0].iter().all(|f| w[1].contains(f)) {
                return Err(LabError::InvalidSystem("levels must be nested".into()));
            }
        }
        Ok(NestedSystem {
            truncation,
            beta,
            levels,
            periods,
        })
    }

    /// `β = σ` on the given factors.
    pub fn sigma(
        factors: Vec<usize>,
        levels: Vec<Vec<usize>>,
        periods: Vec<usize>,
    ) -> Result<Self, LabError> {
        let truncation = TensorTruncation::new(factors)?;
        let beta = truncation
            .factors
            .iter()
            .map(|&n| shift_unitary(n))
            .collect();
        NestedSystem::new(truncation, beta, levels, periods)
    }

    /// `⊗_{n≤m} M_n` with `B_n = ⊗_{j≤n} M_j` and `d_n = lcm(1,…,n)`.
    pub fn example_truncation(m: usize) -> Result<Self, LabError> {
        let levels = (1..=m).map(|n| (0..n).collect()).collect();
        let periods = (1..=m).map(lcm_up_to).collect();
        NestedSystem::sigma((1..=m).collect(), levels, periods)
    }

    /// `M_2 ⊗ M_3 ⊗ M_{m′}` under `σ`, with `B_0 = B_1 = B_2 = M_2 ⊗ 1 ⊗ 1`.
    /// Unitaries in the middle factor commute with `B_2`; towers live in the last.
    pub fn stabilization(m_prime: usize) -> Result<Self, LabError> {
        NestedSystem::sigma(vec![2, 3, m_prime], vec![vec![0]; 3], vec![2; 3])
    }

    pub fn ambient_dim(&self) -> usize {
        self.truncation.ambient_dim()
    }

    pub fn beta(&self) -> Conjugation {
        let w = self
            .beta
            .iter()
            .fold(DenseUnitary::identity(1), |acc, w| acc.kron(w));
        Conjugation::new(w)
    }

    /// Ambient matrix units of every factor at level `n`.
    pub fn generators(&self, n: usize) -> Vec<CMat> {
        self.levels[n]
            .iter()
            .flat_map(|&f| {
                let size = self.truncation.factors[f];
                (0..size * size).map(move |rs| (f, size, rs))
            })
            .map(|(f, size, rs)| {
                let mut e = CMat::zeros(size, size);
                e[(rs / size, rs % size)] = c(1.0, 0.0);
                self.truncation.embed(f, &e)
            })
            .collect()
    }

    pub fn level_dim(&self, n: usize) -> usize {
        self.levels[n]
            .iter()
            .map(|&f| self.truncation.factors[f])
            .product()
    }

    /// `β|_{B_n}` written on `B_n ≅ M_{dim}`.
    pub fn level_conjugation(&self, n: usize) -> Conjugation {
        let w = self.levels[n]
            .iter()
            .fold(DenseUnitary::identity(1), |acc, &f| acc.kron(&self.beta[f]));
        Conjugation::new(w)
    }

    /// Trace-preserving conditional expectation onto `⊗_{f∈keep} M_f ⊗ 1`.
    pub fn conditional_expectation(&self, x: &CMat, keep: &[usize]) -> CMat {
        let t = &self.truncation;
        let n = t.ambient_dim();
        let split = |i: usize| {
            let (mut kept, mut rest) = (0usize, 0usize);
            for (f, &size) in t.factors.iter().enumerate() {
                let coord = t.coordinate(i, f);
                if keep.contains(&f) {
                    kept = kept * size + coord;
                } else {
                    rest = rest * size + coord;
                }
            }
            (kept, rest)
        };
        let parts: Vec<(usize, usize)> = (0..n).map(split).collect();
        let kept_dim: usize = keep.iter().map(|&f| t.factors[f]).product();
        let rest_dim = n / kept_dim;
        let mut reduced = CMat::zeros(kept_dim, kept_dim);
        for i in 0..n {
            for j in 0..n {
                if parts[i].1 == parts[j].1 {
                    reduced[(parts[i].0, parts[j].0)] += x[(i, j)];
                }
            }
        }
        reduced /= c(rest_dim as f64, 0.0);
        CMat::from_fn(n, n, |i, j| {
            if parts[i].1 == parts[j].1 {
                reduced[(parts[i].0, parts[j].0)]
            } else {
                c(0.0, 0.0)
            }
        })
    }
}

/// Smallest `d ≤ MAX_ORDER` with `W^d` scalar, i.e. the order of `Ad W`.
fn ad_order(w: &DenseUnitary) -> Option<usize> {
    let n = w.dim();
    let mut p = w.matrix().clone();
    for d in 1..=MAX_ORDER {
        let scalar = p[(0, 0)];
        if (&p - CMat::identity(n, n) * scalar).norm() <= IDENTITY_TOL {
            return Some(d);
        }
        p = &p * w.matrix();
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelPeriodicity {
    pub level: usize,
    pub factors: Vec<usize>,
    pub dim: usize,
    /// `max ‖β(g) − E_n(β(g))‖_F` over generators `g` of `B_n`.
    pub invariance_residual: f64,
    pub period: usize,
    /// `max ‖β^{d_n}(g) − g‖_F` over generators.
    pub period_residual: f64,
    pub minimal_period: Option<usize>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub levels: Vec<LevelPeriodicity>,
    pub pass: bool,
}

/// Check `β(B_n) = B_n` and `β^{d_n}|_{B_n} = id` on matrix-unit generators.
/// Frobenius norms are used throughout; they bound the operator norm.
pub fn limit_periodic_verify(sys: &NestedSystem) -> PeriodicityReport {
    let beta = sys.beta();
    let levels: Vec<LevelPeriodicity> = (0..sys.levels.len())
        .map(|n| {
            let keep = &sys.levels[n];
            let d = sys.periods[n];
            let power = beta.power(d);
            let gens = sys.generators(n);
            let mut invariance_residual = 0.0f64;
            let mut period_residual = 0.0f64;
            for g in &gens {
                let image = beta.apply(g);
                let projected = sys.conditional_expectation(&image, keep);
                invariance_residual = invariance_residual.max((&image - projected).norm());
                period_residual = period_residual.max((power.apply(g) - g).norm());
            }
            let minimal_period = keep.iter().try_fold(1usize, |acc, &f| {
                ad_order(&sys.beta[f]).map(|o| lcm(acc, o))
            });
            let pass = invariance_residual <= IDENTITY_TOL && period_residual <= IDENTITY_TOL;
            LevelPeriodicity {
                level: n,
                factors: keep.iter().map(|&f| sys.truncation.factors[f]).collect(),
                dim: sys.level_dim(n),
                invariance_residual,
                period: d,
                period_residual,
                minimal_period,
                pass,
            }
        })
        .collect();
    let pass = levels.iter().all(|l| l.pass);
    PeriodicityReport { levels, pass }
}

/// `φ_n : B_n → B_n ⊗ M_{d_n}`.
#[derive(Clone, Debug)]
pub struct VoiculescuMap {
    pub level_dim: usize,
    pub period: usize,
    /// `Ad(β^j)` on `B_n` for `j = 1, …, d_n`.
    powers: Vec<Conjugation>,
    /// `Ad(1 ⊗ S)` with `S E_jj S* = E_{j−1,j−1}`.
    shift: Conjugation,
    beta: Conjugation,
}

impl VoiculescuMap {
    pub fn amplified_dim(&self) -> usize {
        self.level_dim * self.period
    }

    /// Diagonal blocks `β^j(b)`, `j = 1, …, d_n`.
    pub fn blocks(&self, b: &CMat) -> Vec<CMat> {
        self.powers.iter().map(|p| p.apply(b)).collect()
    }

    pub fn apply(&self, b: &CMat) -> CMat {
        let d = self.period;
        let mut out = CMat::zeros(self.amplified_dim(), self.amplified_dim());
        for (j, block) in self.blocks(b).iter().enumerate() {
            let mut e = CMat::zeros(d, d);
            e[(j, j)] = c(1.0, 0.0);
            out += block.kronecker(&e);
        }
        out
    }

    pub fn beta(&self, b: &CMat) -> CMat {
        self.beta.apply(b)
    }

    /// `(1⊗S) x (1⊗S)*`.
    pub fn shift(&self, x: &CMat) -> CMat {
        self.shift.apply(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub level: usize,
    pub level_dim: usize,
    pub period: usize,
    pub amplified_dim: usize,
    pub hom_residual: f64,
    pub adjoint_residual: f64,
    pub covariance_residual: f64,
    pub projections_checked: usize,
    /// Pairs `(p, q)` with equal amplified rank.
    pub equal_rank_pairs: usize,
    /// Every amplified trace is an integer equal to `d_n · rank p`, and equal
    /// amplified ranks force equal ranks.
    pub ranks_exact: bool,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct VoiculescuEmbedding {
    pub map: VoiculescuMap,
    pub report: EmbeddingReport,
}

fn diagonal_projection(bits: &[bool]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        bits.len(),
        bits.iter().map(|&b| c(f64::from(u8::from(b)), 0.0)),
    ))
}

/// Build `φ_n` and check it is a covariant `*`-homomorphism with exact
/// rank bookkeeping.
pub fn voiculescu_embedding(sys: &NestedSystem, n: usize) -> Result<VoiculescuEmbedding, LabError> {
    if n >= sys.levels.len() {
        return Err(LabError::InvalidSystem(format!("no level {n}")));
    }
    let dim = sys.level_dim(n);
    let d = sys.periods[n];
    if dim * d > AMBIENT_CAP {
        return Err(LabError::DimensionTooLarge {
            dim: dim * d,
            cap: AMBIENT_CAP,
        });
    }
    let beta = sys.level_conjugation(n);
    let local = TensorTruncation::new(
        sys.levels[n]
            .iter()
            .map(|&f| sys.truncation.factors[f])
            .collect(),
    )?;
    let mut tests: Vec<CMat> = Vec::new();
    for f in 0..local.factors.len() {
        let size = local.factors[f];
        for rs in 0..size * size {
            let mut e = CMat::zeros(size, size);
            e[(rs / size, rs % size)] = c(1.0, 0.0);
            tests.push(local.embed(f, &e));
        }
    }
    let powers: Vec<Conjugation> = (1..=d).map(|j| beta.power(j)).collect();
    let period_residual = tests
        .iter()
        .map(|g| (powers[d - 1].apply(g) - g).norm())
        .fold(0.0, f64::max);
    if period_residual > IDENTITY_TOL {
        return Err(LabError::PeriodMismatch {
            level: n,
            period: d,
            residual: period_residual,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ n as u64);
    for _ in 0..3 {
        let a = random_unitary(dim, &mut rng).into_matrix();
        let b = random_unitary(dim, &mut rng).into_matrix();
        tests.push(a + b * c(0.5, -0.25));
    }
    let shift = Conjugation::new(DenseUnitary::identity(dim).kron(&shift_unitary(d).adjoint()));
    let map = VoiculescuMap {
        level_dim: dim,
        period: d,
        powers,
        shift,
        beta,
    };

    let mut hom_residual = 0.0f64;
    let mut adjoint_residual = 0.0f64;
    let mut covariance_residual = 0.0f64;
    for (i, a) in tests.iter().enumerate() {
        let pa = map.blocks(a);
        // φ is block diagonal, so its Frobenius residuals add over blocks.
        for b in tests.iter().skip(i) {
            let pb = map.blocks(b);
            let pab = map.blocks(&(a * b));
            let r: f64 = (0..d)
                .map(|j| (&pab[j] - &pa[j] * &pb[j]).norm_squared())
                .sum();
            hom_residual = hom_residual.max(r.sqrt());
        }
        let r: f64 = (0..d)
            .map(|j| (map.blocks(&a.adjoint())[j].clone() - pa[j].adjoint()).norm_squared())
            .sum();
        adjoint_residual = adjoint_residual.max(r.sqrt());
        let lhs = map.apply(&map.beta(a));
        let rhs = map.shift(&map.apply(a));
        covariance_residual = covariance_residual.max((lhs - rhs).norm());
    }

    let subsets: Vec<Vec<bool>> = if dim <= 6 {
        (0..1usize << dim)
            .map(|mask| (0..dim).map(|i| mask >> i & 1 == 1).collect())
            .collect()
    } else {
        (0..64)
            .map(|_| (0..dim).map(|_| rng.random::<bool>()).collect())
            .collect()
    };
    let mut ranks = Vec::with_capacity(subsets.len());
    let mut ranks_exact = true;
    for bits in &subsets {
        let p = diagonal_projection(bits);
        let image = map.apply(&p);
        let trace: f64 = image.diagonal().iter().map(|z| z.re).sum();
        let amplified = trace.round();
        let rank = bits.iter().filter(|&&b| b).count();
        if (trace - amplified).abs() > IDENTITY_TOL || amplified as usize != d * rank {
            ranks_exact = false;
        }
        ranks.push((rank, amplified as usize));
    }
    let mut equal_rank_pairs = 0;
    for (i, &(rp, ap)) in ranks.iter().enumerate() {
        for &(rq, aq) in &ranks[i + 1..] {
            if ap == aq {
                equal_rank_pairs += 1;
                // d·([p] − [q]) = 0 in K₀(B_n) = ℤ forces [p] = [q].
                if rp != rq {
                    ranks_exact = false;
                }
            }
        }
    }
    let pass = hom_residual <= IDENTITY_TOL
        && adjoint_residual <= IDENTITY_TOL
        && covariance_residual <= IDENTITY_TOL
        && ranks_exact;
    let report = EmbeddingReport {
        level: n,
        level_dim: dim,
        period: d,
        amplified_dim: map.amplified_dim(),
        hom_residual,
        adjoint_residual,
        covariance_residual,
        projections_checked: subsets.len(),
        equal_rank_pairs,
        ranks_exact,
        pass,
    };
    Ok(VoiculescuEmbedding { map, report })
}

/// Named systems exercised by the tests and the command line.
pub fn nested_corpus() -> Vec<(&'static str, NestedSystem)> {
    let diag = |entries: &[num_complex::Complex64]| {
        DenseUnitary::new(CMat::from_diagonal(&DVector::from_vec(entries.to_vec())))
            .expect("diagonal unitary")
    };
    let single = |w: DenseUnitary, d: usize| {
        let n = w.dim();
        NestedSystem::new(
            TensorTruncation::new(vec![n]).expect("small"),
            vec![w],
            vec![vec![0]],
            vec![d],
        )
        .expect("valid")
    };
    vec![
        ("identity-m2", single(DenseUnitary::identity(2), 1)),
        ("swap-m2", single(shift_unitary(2), 2)),
        (
            "order-four-m2",
            single(diag(&[c(1.0, 0.0), c(0.0, 1.0)]), 4),
        ),
        (
            "sigma-truncation-3",
            NestedSystem::example_truncation(3).expect("valid"),
        ),
        (
            "sigma-m2-m3",
            NestedSystem::sigma(vec![2, 3], vec![vec![0], vec![0, 1]], vec![2, 6]).expect("valid"),
        ),
        (
            "phase-and-swap",
            NestedSystem::new(
                TensorTruncation::new(vec![2, 2]).expect("small"),
                vec![diag(&[c(1.0, 0.0), c(0.0, 1.0)]), shift_unitary(2)],
                vec![vec![0], vec![0, 1]],
                vec![4, 4],
            )
            .expect("valid"),
        ),
        (
            "stabilization-5",
            NestedSystem::stabilization(5).expect("valid"),
        ),
    ]
}
