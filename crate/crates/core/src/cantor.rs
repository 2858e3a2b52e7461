//! Finite models of a homeomorphism `φ` of a compact metric space: ε-chain
//! recurrence, attracting sets, and the positivity-rigidity check on
//! integer-valued functions.
//!
//! Distances are exact. In coordinate mode squared Euclidean distances are
//! compared with `ε²`, so nothing depends on square roots.

use crate::json;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CantorError {
    #[error("the system has no points")]
    Empty,
    #[error("map has length {len}, expected {expected}")]
    MapLength { len: usize, expected: usize },
    #[error("map sends point {from} to {to}, which does not exist")]
    MapOutOfRange { from: usize, to: usize },
    #[error("coordinates of point {index} have dimension {len}, expected {expected}")]
    CoordDimension {
        index: usize,
        len: usize,
        expected: usize,
    },
    #[error("distance matrix row {row} has length {len}, expected {expected}")]
    DistShape {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("distance matrix is not symmetric at ({0}, {1})")]
    DistNotSymmetric(usize, usize),
    #[error("distance matrix has nonzero diagonal at {0}")]
    DistDiagonal(usize),
    #[error("negative distance at ({0}, {1})")]
    DistNegative(usize, usize),
    #[error("triangle inequality fails for ({0}, {1}, {2})")]
    Triangle(usize, usize, usize),
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("epsilon list must be nonempty and strictly descending")]
    EpsilonsNotDescending,
    #[error("map is not a bijection")]
    NotBijective,
    #[error("function has {len} values, expected {expected}")]
    FunctionLength { len: usize, expected: usize },
    #[error("example size too small")]
    SizeTooSmall,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Points of ℚ^m with the Euclidean distance.
    Coords(#[serde(with = "json::rat_vec_vec")] Vec<Vec<BigRational>>),
    /// Symmetric distance matrix.
    Dist(#[serde(with = "json::rat_vec_vec")] Vec<Vec<BigRational>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteDynSystem {
    pub points: Vec<String>,
    #[serde(flatten)]
    pub metric: Metric,
    pub map: Vec<usize>,
}

impl FiniteDynSystem {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<(), CantorError> {
        let n = self.len();
        if n == 0 {
            return Err(CantorError::Empty);
        }
        if self.map.len() != n {
            return Err(CantorError::MapLength {
                len: self.map.len(),
                expected: n,
            });
        }
        if let Some((from, &to)) = self.map.iter().enumerate().find(|(_, &t)| t >= n) {
            return Err(CantorError::MapOutOfRange { from, to });
        }
        match &self.metric {
            Metric::Coords(c) => {
                if c.len() != n {
                    return Err(CantorError::MapLength {
                        len: c.len(),
                        expected: n,
                    });
                }
                let m = c[0].len();
                if let Some((index, v)) = c.iter().enumerate().find(|(_, v)| v.len() != m) {
                    return Err(CantorError::CoordDimension {
                        index,
                        len: v.len(),
                        expected: m,
                    });
                }
            }
            Metric::Dist(d) => {
                if d.len() != n {
                    return Err(CantorError::DistShape {
                        row: d.len(),
                        len: d.len(),
                        expected: n,
                    });
                }
                for (row, r) in d.iter().enumerate() {
                    if r.len() != n {
                        return Err(CantorError::DistShape {
                            row,
                            len: r.len(),
                            expected: n,
                        });
                    }
                }
                for i in 0..n {
                    if !d[i][i].is_zero() {
                        return Err(CantorError::DistDiagonal(i));
                    }
                    for j in 0..n {
                        if d[i][j] != d[j][i] {
                            return Err(CantorError::DistNotSymmetric(i, j));
                        }
                        if d[i][j].is_negative() {
                            return Err(CantorError::DistNegative(i, j));
                        }
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            if d[i][k] > &d[i][j] + &d[j][k] {
                                return Err(CantorError::Triangle(i, j, k));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `d(i, j)²`.
    pub fn dist_sq(&self, i: usize, j: usize) -> BigRational {
        match &self.metric {
            Metric::Coords(c) => c[i]
                .iter()
                .zip(&c[j])
                .map(|(a, b)| {
                    let t = a - b;
                    &t * &t
                })
                .sum(),
            Metric::Dist(d) => &d[i][j] * &d[i][j],
        }
    }

    /// Strict `d(i, j) < ε`.
    pub fn closer_than(&self, i: usize, j: usize, eps: &BigRational) -> bool {
        self.dist_sq(i, j) < eps * eps
    }

    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; self.len()];
        for &t in &self.map {
            if t >= seen.len() || seen[t] {
                return false;
            }
            seen[t] = true;
        }
        true
    }

    /// The ε-chain graph: `x → y` iff `d(φ(x), y) < ε`.
    pub fn chain_graph(&self, eps: &BigRational) -> DiGraph<(), ()> {
        let n = self.len();
        let mut g = DiGraph::with_capacity(n, n);
        let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        let eps_sq = eps * eps;
        for x in 0..n {
            let fx = self.map[x];
            for y in 0..n {
                if self.dist_sq(fx, y) < eps_sq {
                    g.add_edge(nodes[x], nodes[y], ());
                }
            }
        }
        g
    }

    /// Largest squared distance between consecutive points in listed order,
    /// wrapping from the last point to the first.
    pub fn max_consecutive_gap_sq(&self) -> BigRational {
        let n = self.len();
        (0..n)
            .map(|i| self.dist_sq(i, (i + 1) % n))
            .max()
            .unwrap_or_else(BigRational::zero)
    }
}

fn check_eps(eps: &BigRational) -> Result<(), CantorError> {
    if eps.is_positive() {
        Ok(())
    } else {
        Err(CantorError::NonPositiveEpsilon)
    }
}

/// Points lying on a directed cycle of the ε-chain graph.
pub fn chain_recurrent_set(
    sys: &FiniteDynSystem,
    eps: &BigRational,
) -> Result<BTreeSet<usize>, CantorError> {
    sys.validate()?;
    check_eps(eps)?;
    let g = sys.chain_graph(eps);
    let mut out = BTreeSet::new();
    for comp in tarjan_scc(&g) {
        let cyclic = comp.len() > 1 || g.contains_edge(comp[0], comp[0]);
        if cyclic {
            out.extend(comp.iter().map(|v| v.index()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainReport {
    #[serde(with = "json::rat_vec")]
    pub epsilons: Vec<BigRational>,
    pub recurrent_sets: Vec<BTreeSet<usize>>,
    pub intersection: BTreeSet<usize>,
    /// The sweep only sees the sampled resolution; it approximates `X(φ)`.
    pub note: String,
}

/// Recurrent sets along a strictly descending ε-sweep and their intersection.
pub fn pseudo_nonwandering(
    sys: &FiniteDynSystem,
    epsilons: &[BigRational],
) -> Result<ChainReport, CantorError> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[0] <= w[1]) {
        return Err(CantorError::EpsilonsNotDescending);
    }
    let recurrent_sets = epsilons
        .iter()
        .map(|e| chain_recurrent_set(sys, e))
        .collect::<Result<Vec<_>, _>>()?;
    for w in recurrent_sets.windows(2) {
        assert!(w[1].is_subset(&w[0]), "ε-chain recurrence must be monotone");
    }
    let intersection = recurrent_sets
        .iter()
        .skip(1)
        .fold(recurrent_sets[0].clone(), |acc, s| &acc & s);
    Ok(ChainReport {
        epsilons: epsilons.to_vec(),
        recurrent_sets,
        intersection,
        note: "finite ε-sweep at sample resolution".to_string(),
    })
}

/// `V` with `N_ε(φ(V)) ⊆ V` and a point `x ∈ V ∖ N_ε(φ(V))`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttractingWitness {
    pub set: BTreeSet<usize>,
    pub point: usize,
}

impl AttractingWitness {
    pub fn verify(&self, sys: &FiniteDynSystem, eps: &BigRational) -> bool {
        let n = sys.len();
        if !self.set.contains(&self.point) || self.set.iter().any(|&v| v >= n) {
            return false;
        }
        let nbhd: BTreeSet<usize> = self
            .set
            .iter()
            .flat_map(|&v| (0..n).filter(move |&y| sys.closer_than(sys.map[v], y, eps)))
            .collect();
        nbhd.is_subset(&self.set) && !nbhd.contains(&self.point)
    }
}

/// Discrete attracting set: for a non-recurrent `x`, `V = {x} ∪` everything
/// reachable from `x` in at least one step. A chain back into `x` would make
/// `x` recurrent, so `x ∉ N_ε(φ(V))`. Picks the `x` with the smallest `V`.
pub fn attracting_clopen_witness(
    sys: &FiniteDynSystem,
    eps: &BigRational,
) -> Result<Option<AttractingWitness>, CantorError> {
    let recurrent = chain_recurrent_set(sys, eps)?;
    let n = sys.len();
    let g = sys.chain_graph(eps);
    let mut best: Option<AttractingWitness> = None;
    for x in (0..n).filter(|x| !recurrent.contains(x)) {
        let mut set = BTreeSet::from([x]);
        let mut stack: Vec<usize> = g
            .neighbors(petgraph::graph::NodeIndex::new(x))
            .map(|v| v.index())
            .collect();
        while let Some(v) = stack.pop() {
            if set.insert(v) {
                stack.extend(
                    g.neighbors(petgraph::graph::NodeIndex::new(v))
                        .map(|w| w.index()),
                );
            }
        }
        if best.as_ref().is_none_or(|b| set.len() < b.set.len()) {
            best = Some(AttractingWitness { set, point: x });
        }
    }
    debug_assert!(best.as_ref().is_none_or(|w| w.verify(sys, eps)));
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntFunction {
    pub values: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RigidityVerdict {
    /// `f∘φ⁻¹ = f`; each level set `f⁻¹(s)` is `φ`-invariant.
    Rigid {
        level_sets: Vec<(i64, BTreeSet<usize>)>,
    },
    /// `f(φ⁻¹(x)) < f(x)`.
    NotMonotone { point: usize },
    /// `f∘φ⁻¹ ≥ f` without equality; impossible for a bijection of a finite set.
    Violation { point: usize },
}

/// With `g = f∘φ⁻¹ − f`: a negative value refutes monotonicity; otherwise
/// `Σ g = 0` forces `g ≡ 0`, which is confirmed on the level sets.
pub fn positivity_rigidity(
    sys: &FiniteDynSystem,
    f: &IntFunction,
) -> Result<RigidityVerdict, CantorError> {
    sys.validate()?;
    let n = sys.len();
    if !sys.is_bijective() {
        return Err(CantorError::NotBijective);
    }
    if f.values.len() != n {
        return Err(CantorError::FunctionLength {
            len: f.values.len(),
            expected: n,
        });
    }
    let mut inv = vec![0usize; n];
    for (x, &y) in sys.map.iter().enumerate() {
        inv[y] = x;
    }
    let g: Vec<i128> = (0..n)
        .map(|x| f.values[inv[x]] as i128 - f.values[x] as i128)
        .collect();
    if let Some(point) = g.iter().position(|&v| v < 0) {
        return Ok(RigidityVerdict::NotMonotone { point });
    }
    let values: BTreeSet<i64> = f.values.iter().copied().collect();
    let mut level_sets = Vec::new();
    for s in values {
        let e: BTreeSet<usize> = (0..n).filter(|&x| f.values[x] == s).collect();
        let image: BTreeSet<usize> = e.iter().map(|&x| sys.map[x]).collect();
        if image != e {
            let point = *image.difference(&e).next().expect("image differs");
            return Ok(RigidityVerdict::Violation { point });
        }
        level_sets.push((s, e));
    }
    if let Some(point) = g.iter().position(|&v| v != 0) {
        return Ok(RigidityVerdict::Violation { point });
    }
    Ok(RigidityVerdict::Rigid { level_sets })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExampleKind {
    /// `{1/k} ∪ {0}` with cycles of lengths 2, 3, 4, … on consecutive points.
    #[serde(rename = "remark_4_3")]
    HarmonicCycles,
    /// `ℤ ∪ {∞}` on the circle, `n ↦ n + 1`, `∞` fixed.
    #[serde(rename = "remark_4_8")]
    CircleShift,
}

impl std::str::FromStr for ExampleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "remark_4_3" => Ok(Self::HarmonicCycles),
            "remark_4_8" => Ok(Self::CircleShift),
            other => Err(format!("unknown example kind {other:?}")),
        }
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Built-in systems.
///
/// `HarmonicCycles`, size `N`: the points `1, 1/2, …, 1/K` and `0`, where `K ≤ N`
/// is the largest sum `2 + 3 + … + c`; the points past the last complete
/// cycle are dropped. `CircleShift`, size `N`: `n ∈ {−N, …, N}` at angle
/// `2·arctan n` on the unit circle, exactly `((1−n²)/(1+n²), 2n/(1+n²))`,
/// plus `∞ = (−1, 0)`; `N ↦ ∞` closes the truncated shift.
pub fn example_generator(kind: ExampleKind, size: usize) -> Result<FiniteDynSystem, CantorError> {
    if size < 1 || (kind == ExampleKind::HarmonicCycles && size < 2) {
        return Err(CantorError::SizeTooSmall);
    }
    match kind {
        ExampleKind::HarmonicCycles => {
            let mut map = Vec::new();
            let mut len = 2;
            while map.len() + len <= size {
                let start = map.len();
                map.extend((0..len).map(|i| start + (i + 1) % len));
                len += 1;
            }
            let k = map.len();
            let mut points: Vec<String> = (1..=k)
                .map(|i| if i == 1 { "1".into() } else { format!("1/{i}") })
                .collect();
            points.push("0".into());
            map.push(k);
            let mut coords: Vec<Vec<BigRational>> = (1..=k as i64).map(|i| vec![q(1, i)]).collect();
            coords.push(vec![BigRational::zero()]);
            Ok(FiniteDynSystem {
                points,
                metric: Metric::Coords(coords),
                map,
            })
        }
        ExampleKind::CircleShift => {
            let n = size as i64;
            let mut points = Vec::new();
            let mut coords = Vec::new();
            for k in -n..=n {
                points.push(k.to_string());
                let den = 1 + k * k;
                coords.push(vec![q(1 - k * k, den), q(2 * k, den)]);
            }
            points.push("inf".into());
            coords.push(vec![q(-1, 1), BigRational::zero()]);
            let inf = points.len() - 1;
            let map = (0..points.len()).map(|i| (i + 1).min(inf)).collect();
            Ok(FiniteDynSystem {
                points,
                metric: Metric::Coords(coords),
                map,
            })
        }
    }
}

/// Points `0, 1, 2` on a line with `2 → 1 → 0 → 0`.
pub fn contracting_line() -> FiniteDynSystem {
    FiniteDynSystem {
        points: vec!["0".into(), "1".into(), "2".into()],
        metric: Metric::Coords(vec![vec![q(0, 1)], vec![q(1, 1)], vec![q(2, 1)]]),
        map: vec![0, 0, 1],
    }
}

/// Periodic points of the map (those returning to themselves).
pub fn periodic_points(sys: &FiniteDynSystem) -> BTreeSet<usize> {
    let n = sys.len();
    (0..n)
        .filter(|&x| {
            let mut y = sys.map[x];
            for _ in 0..n {
                if y == x {
                    return true;
                }
                y = sys.map[y];
            }
            false
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> FiniteDynSystem {
        // Index gaps on an n-cycle.
        let d = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = (i as i64 - j as i64).rem_euclid(n as i64);
                        q(k.min(n as i64 - k), 1)
                    })
                    .collect()
            })
            .collect();
        FiniteDynSystem {
            points: (0..n).map(|i| i.to_string()).collect(),
            metric: Metric::Dist(d),
            map: (0..n).map(|i| (i + 1) % n).collect(),
        }
    }

    #[test]
    fn identity_is_recurrent() {
        let mut s = contracting_line();
        s.map = vec![0, 1, 2];
        assert_eq!(chain_recurrent_set(&s, &q(1, 100)).unwrap().len(), 3);
        assert_eq!(attracting_clopen_witness(&s, &q(1, 2)).unwrap(), None);
    }

    #[test]
    fn contracting_line_cases() {
        let s = contracting_line();
        assert_eq!(
            chain_recurrent_set(&s, &q(1, 2)).unwrap(),
            BTreeSet::from([0])
        );
        let w = attracting_clopen_witness(&s, &q(1, 2)).unwrap().unwrap();
        assert_eq!(w.set, BTreeSet::from([0, 1]));
        assert_eq!(w.point, 1);
        let r = pseudo_nonwandering(&s, &[q(1, 2), q(1, 4)]).unwrap();
        assert_eq!(r.intersection, BTreeSet::from([0]));
    }

    #[test]
    fn rotation_cycle() {
        let s = circle(12);
        s.validate().unwrap();
        assert_eq!(chain_recurrent_set(&s, &q(1, 1000)).unwrap().len(), 12);
        assert_eq!(attracting_clopen_witness(&s, &q(1, 1000)).unwrap(), None);
    }

    #[test]
    fn bad_epsilons() {
        let s = contracting_line();
        assert_eq!(
            pseudo_nonwandering(&s, &[q(1, 4), q(1, 2)]),
            Err(CantorError::EpsilonsNotDescending)
        );
        assert_eq!(
            chain_recurrent_set(&s, &q(0, 1)),
            Err(CantorError::NonPositiveEpsilon)
        );
    }

    #[test]
    fn rigidity_examples() {
        let mut swap = contracting_line();
        swap.points.truncate(2);
        swap.metric = Metric::Coords(vec![vec![q(0, 1)], vec![q(1, 1)]]);
        swap.map = vec![1, 0];
        assert_eq!(
            positivity_rigidity(&swap, &IntFunction { values: vec![1, 0] }).unwrap(),
            RigidityVerdict::NotMonotone { point: 0 }
        );
        assert!(matches!(
            positivity_rigidity(&swap, &IntFunction { values: vec![3, 3] }).unwrap(),
            RigidityVerdict::Rigid { .. }
        ));
        assert_eq!(
            positivity_rigidity(
                &contracting_line(),
                &IntFunction {
                    values: vec![0, 0, 0]
                }
            ),
            Err(CantorError::NotBijective)
        );
    }

    #[test]
    fn harmonic_cycle_shapes() {
        let s = example_generator(ExampleKind::HarmonicCycles, 5).unwrap();
        assert_eq!(s.points, vec!["1", "1/2", "1/3", "1/4", "1/5", "0"]);
        assert_eq!(s.map, vec![1, 0, 3, 4, 2, 5]);
        let s = example_generator(ExampleKind::HarmonicCycles, 2).unwrap();
        assert_eq!(s.map, vec![1, 0, 2]);
        let s = example_generator(ExampleKind::HarmonicCycles, 6).unwrap();
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn circle_shift_shape() {
        let s = example_generator(ExampleKind::CircleShift, 1).unwrap();
        s.validate().unwrap();
        assert_eq!(s.points, vec!["-1", "0", "1", "inf"]);
        assert_eq!(s.map, vec![1, 2, 3, 3]);
        // Every sample lies on the unit circle.
        if let Metric::Coords(c) = &s.metric {
            for p in c {
                assert_eq!(&p[0] * &p[0] + &p[1] * &p[1], q(1, 1));
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let s = example_generator(ExampleKind::CircleShift, 2).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"coords\""));
        let back: FiniteDynSystem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let d: FiniteDynSystem =
            serde_json::from_str(r#"{"points":["a","b"],"dist":[[0,0.5],[0.5,0]],"map":[1,0]}"#)
                .unwrap();
        assert_eq!(d.dist_sq(0, 1), q(1, 4));
    }
}
