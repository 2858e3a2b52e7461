//! Stabilization of a unitary `u` commuting with `B_2`: a unitary `v` with
//! `‖u − vβ(v*)‖ ≤ 4/(k−1)`, built from an exact Rohlin tower of height `k`.

use crate::dense::{
    op_norm, op_norm_svd, polar_unitary, random_unitary, unitarity_residual, CMat, DenseUnitary,
};
use crate::logpath::unitary_log_path;
use crate::nested::{NestedSystem, IDENTITY_TOL};
use crate::tower::rohlin_tower;
use crate::LabError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A single tower of height `k` in tensor factor `factor` (of size `m′ = s·k`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerSpec {
    pub factor: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizeResult {
    pub k: usize,
    pub m_prime: usize,
    pub ambient_dim: usize,
    /// Seed of the random `u`, when the run came from a sweep.
    pub seed: Option<u64>,
    /// `‖u − vβ(v*)‖` by power iteration.
    pub defect: f64,
    /// The same norm from a full SVD.
    pub defect_svd: f64,
    /// `4/(k−1)`.
    pub bound: f64,
    /// `π/(k−1)`, the estimate left once every commutator term vanishes.
    pub sharp_bound: f64,
    /// `max_j ‖β(e_j) − e_{j+1}‖`.
    pub tower_shift_defect: f64,
    /// `‖v′*v′ − 1‖`; zero when the towers commute with every `ũ_j`.
    pub v_prime_unitarity: f64,
    /// `max ‖[v, g]‖_F` over generators of `B_0`.
    pub b0_commutator: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct StabilizeOutcome {
    pub v: DenseUnitary,
    pub result: StabilizeResult,
}

/// Index of the level holding `B_2` (the last one if there are fewer).
fn b2_level(sys: &NestedSystem) -> usize {
    sys.levels.len().min(3) - 1
}

/// `ũ_j = u β(u) ⋯ β^{j−1}(u)`, `v′ = Σ_j ũ_j β^j(w^{(1−j/(k−1))}) e_j` with
/// `w` the log path of `ũ_k`, and `v` its polar part.
pub fn stabilize_experiment(
    u: &DenseUnitary,
    sys: &NestedSystem,
    tower: TowerSpec,
) -> Result<StabilizeOutcome, LabError> {
    let n = sys.ambient_dim();
    let t = &sys.truncation;
    if u.dim() != n {
        return Err(LabError::InvalidSystem(format!(
            "u has size {}, ambient is {n}",
            u.dim()
        )));
    }
    if tower.factor >= t.factors.len() {
        return Err(LabError::InvalidSystem(format!(
            "no factor {}",
            tower.factor
        )));
    }
    let b2 = b2_level(sys);
    if sys.levels[b2].contains(&tower.factor) {
        return Err(LabError::PreconditionFailed(
            "the tower factor lies in B_2".into(),
        ));
    }
    let k = tower.k;
    if k < 2 {
        return Err(LabError::PreconditionFailed(
            "tower height must be ≥ 2".into(),
        ));
    }
    let m_prime = t.factors[tower.factor];
    let tw = rohlin_tower(m_prime, k)?;
    let commutator = sys
        .generators(b2)
        .iter()
        .map(|g| (u.matrix() * g - g * u.matrix()).norm())
        .fold(0.0, f64::max);
    if commutator > IDENTITY_TOL {
        return Err(LabError::PreconditionFailed(format!(
            "u does not commute with B_2 (residual {commutator:.3e})"
        )));
    }

    let beta = sys.beta();
    let level: Vec<usize> = (0..n)
        .map(|i| tw.level_of(t.coordinate(i, tower.factor)))
        .collect();
    let projection = |j: usize| {
        CMat::from_fn(n, n, |a, b| {
            crate::dense::c(f64::from(u8::from(a == b && level[a] == j)), 0.0)
        })
    };
    let tower_shift_defect = (0..k)
        .map(|j| op_norm(&(beta.apply(&projection(j)) - projection((j + 1) % k))))
        .fold(0.0, f64::max);

    let mut utilde = Vec::with_capacity(k + 1);
    utilde.push(CMat::identity(n, n));
    let mut shifted = u.matrix().clone();
    for j in 1..=k {
        let next = &utilde[j - 1] * &shifted;
        utilde.push(next);
        shifted = beta.apply(&shifted);
    }
    let path = unitary_log_path(&DenseUnitary::new(utilde[k].clone())?)?;

    let mut v_prime = CMat::zeros(n, n);
    for (j, uj) in utilde.iter().take(k).enumerate() {
        let time = 1.0 - j as f64 / (k - 1) as f64;
        let x = uj * beta.power(j).apply(&path.at(time));
        // Right multiplication by the diagonal projection e_j keeps its columns.
        for col in (0..n).filter(|&col| level[col] == j) {
            v_prime.set_column(col, &x.column(col));
        }
    }
    let v_prime_unitarity = unitarity_residual(&v_prime);
    let v = polar_unitary(&v_prime)?;
    let diff = u.matrix() - v.matrix() * beta.apply(v.matrix()).adjoint();
    let defect = op_norm(&diff);
    let defect_svd = op_norm_svd(&diff);
    let b0_commutator = sys
        .generators(0)
        .iter()
        .map(|g| (v.matrix() * g - g * v.matrix()).norm())
        .fold(0.0, f64::max);
    let bound = 4.0 / (k - 1) as f64;
    let result = StabilizeResult {
        k,
        m_prime,
        ambient_dim: n,
        seed: None,
        defect,
        defect_svd,
        bound,
        sharp_bound: PI / (k - 1) as f64,
        tower_shift_defect,
        v_prime_unitarity,
        b0_commutator,
        pass: defect <= bound && defect_svd <= bound,
    };
    Ok(StabilizeOutcome { v, result })
}

/// Deterministic seed of run `run` at height `k`.
pub fn run_seed(base: u64, k: usize, run: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((k as u64) << 32)
        .wrapping_add(run as u64)
}

/// `1 ⊗ V ⊗ 1` with `V` Haar-random in the middle factor of
/// [`NestedSystem::stabilization`]; it commutes with `B_2`.
pub fn commuting_unitary(sys: &NestedSystem, seed: u64) -> DenseUnitary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = random_unitary(sys.truncation.factors[1], &mut rng);
    DenseUnitary::new(sys.truncation.embed(1, v.matrix())).expect("embedded unitary")
}

/// One experiment with the standard system of height `k` and seed `seed`.
pub fn standard_run(k: usize, seed: u64) -> Result<StabilizeResult, LabError> {
    let sys = NestedSystem::stabilization(k)?;
    let u = commuting_unitary(&sys, seed);
    let mut r = stabilize_experiment(&u, &sys, TowerSpec { factor: 2, k })?.result;
    r.seed = Some(seed);
    Ok(r)
}

/// `runs` random instances per height, heights run on separate threads.
pub fn stabilize_sweep(
    ks: &[usize],
    runs: usize,
    base_seed: u64,
) -> Result<Vec<StabilizeResult>, LabError> {
    let per_k: Vec<Result<Vec<StabilizeResult>, LabError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ks
            .iter()
            .map(|&k| {
                scope.spawn(move || {
                    (0..runs)
                        .map(|run| standard_run(k, run_seed(base_seed, k, run)))
                        .collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep thread"))
            .collect()
    });
    let mut out = Vec::new();
    for r in per_k {
        out.extend(r?);
    }
    Ok(out)
}

/// Median defect per height, in the order heights first appear.
pub fn median_defects(results: &[StabilizeResult]) -> Vec<(usize, f64)> {
    let mut ks: Vec<usize> = Vec::new();
    for r in results {
        if !ks.contains(&r.k) {
            ks.push(r.k);
        }
    }
    ks.into_iter()
        .map(|k| {
            let mut d: Vec<f64> = results
                .iter()
                .filter(|r| r.k == k)
                .map(|r| r.defect)
                .collect();
            d.sort_by(f64::total_cmp);
            let m = d.len();
            let median = if m % 2 == 1 {
                d[m / 2]
            } else {
                (d[m / 2 - 1] + d[m / 2]) / 2.0
            };
            (k, median)
        })
        .collect()
}

pub const CSV_HEADER: &str = "k,m_prime,ambient_dim,seed,defect,bound,pass";

pub fn to_csv(results: &[StabilizeResult]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in results {
        let seed = r.seed.map(|x| x.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{:.12e},{:.12e},{}\n",
            r.k, r.m_prime, r.ambient_dim, seed, r.defect, r.bound, r.pass
        ));
    }
    s
}
