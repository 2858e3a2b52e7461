//! Bratteli diagrams and their dimension groups.
//!
//! A diagram is either stationary (one matrix `M` repeated forever; `sizes`
//! is a validated prefix) or of finite depth (`maps.len() + 1` stages, the
//! dimension group being the last stage with its orthant).

use crate::json;
use crate::linalg::{
    is_nonnegative_vec, is_zero_vec, neg_vec, perron_enclosure, primitivity_exponent,
    solve_integer, sub_vec, IntMatrix, IntVec, PerronEnclosure,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BratteliError {
    #[error("diagram has no stages")]
    NoStages,
    #[error("stage {stage}: size vector is empty or has a nonpositive entry")]
    BadSize { stage: usize },
    #[error("map {map} has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    MapShape {
        map: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("stationary diagram must have exactly one square map, found {0} maps")]
    StationaryMaps(usize),
    #[error(
        "finite diagram needs one map between consecutive stages ({sizes} stages, {maps} maps)"
    )]
    StageCount { sizes: usize, maps: usize },
    #[error("stage {stage}: sizes violate s_(n+1) >= A_n s_n")]
    SizeMismatch { stage: usize },
    #[error("map {map} has a negative multiplicity")]
    NegativeMultiplicity { map: usize },
    #[error("stage {stage}: unital flag set but s_(n+1) != A_n s_n")]
    NonUnitalFlaggedUnital { stage: usize },
    #[error("stage {stage} is beyond the last stage {last}")]
    StageOutOfRange { stage: usize, last: usize },
    #[error("vector of length {len} does not match stage {stage} with {expected} vertices")]
    VectorLength {
        stage: usize,
        len: usize,
        expected: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BratteliDiagram {
    #[serde(with = "json::int_vec_vec")]
    pub sizes: Vec<IntVec>,
    pub maps: Vec<IntMatrix>,
    #[serde(default)]
    pub stationary: bool,
    #[serde(default)]
    pub unital: bool,
}

impl BratteliDiagram {
    /// Stationary diagram with a `prefix`-stage size list starting at `s_0`;
    /// unital sizes follow `s_n = M^n s_0`.
    pub fn stationary(m: IntMatrix, s0: IntVec, unital: bool, prefix: usize) -> Self {
        let mut sizes = vec![s0];
        for _ in 1..prefix.max(1) {
            let next = m.mul_vec(sizes.last().unwrap());
            // Non-unital prefixes grow by one extra unit per vertex.
            let next = if unital {
                next
            } else {
                next.into_iter().map(|a| a + 1).collect()
            };
            sizes.push(next);
        }
        Self {
            sizes,
            maps: vec![m],
            stationary: true,
            unital,
        }
    }

    pub fn finite(sizes: Vec<IntVec>, maps: Vec<IntMatrix>, unital: bool) -> Self {
        Self {
            sizes,
            maps,
            stationary: false,
            unital,
        }
    }

    pub fn validate(&self) -> Result<(), BratteliError> {
        if self.sizes.is_empty() {
            return Err(BratteliError::NoStages);
        }
        for (n, s) in self.sizes.iter().enumerate() {
            if s.is_empty() || s.iter().any(|x| !x.is_positive()) {
                return Err(BratteliError::BadSize { stage: n });
            }
        }
        if self.stationary {
            if self.maps.len() != 1 || !self.maps[0].is_square() {
                return Err(BratteliError::StationaryMaps(self.maps.len()));
            }
        } else if self.maps.len() + 1 != self.sizes.len() {
            return Err(BratteliError::StageCount {
                sizes: self.sizes.len(),
                maps: self.maps.len(),
            });
        }
        for (k, a) in self.maps.iter().enumerate() {
            if !a.is_nonnegative() {
                return Err(BratteliError::NegativeMultiplicity { map: k });
            }
        }
        for n in 0..self.sizes.len() - 1 {
            let a = self.map(n);
            let (s, t) = (&self.sizes[n], &self.sizes[n + 1]);
            if a.cols() != s.len() || a.rows() != t.len() {
                return Err(BratteliError::MapShape {
                    map: n,
                    rows: a.rows(),
                    cols: a.cols(),
                    expected_rows: t.len(),
                    expected_cols: s.len(),
                });
            }
            let image = a.mul_vec(s);
            if self.unital && image != *t {
                return Err(BratteliError::NonUnitalFlaggedUnital { stage: n });
            }
            if !is_nonnegative_vec(&sub_vec(t, &image)) {
                return Err(BratteliError::SizeMismatch { stage: n });
            }
        }
        if self.stationary && self.sizes[0].len() != self.maps[0].cols() {
            let a = &self.maps[0];
            return Err(BratteliError::MapShape {
                map: 0,
                rows: a.rows(),
                cols: a.cols(),
                expected_rows: self.sizes[0].len(),
                expected_cols: self.sizes[0].len(),
            });
        }
        Ok(())
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// The repeated matrix of a stationary diagram.
    pub fn stationary_matrix(&self) -> Option<&IntMatrix> {
        self.stationary.then(|| &self.maps[0])
    }

    /// Index of the last stage, `None` for stationary (infinite) diagrams.
    pub fn last_stage(&self) -> Option<usize> {
        (!self.stationary).then(|| self.sizes.len() - 1)
    }

    /// Map from stage `n` to stage `n + 1`.
    pub fn map(&self, n: usize) -> &IntMatrix {
        if self.stationary {
            &self.maps[0]
        } else {
            &self.maps[n]
        }
    }

    pub fn vertex_count(&self, stage: usize) -> usize {
        if self.stationary {
            self.maps[0].rows()
        } else {
            self.sizes[stage].len()
        }
    }

    /// Rank of the limit group for finite-depth diagrams, vertex count for stationary ones.
    pub fn limit_rank(&self) -> usize {
        match self.last_stage() {
            Some(n) => self.sizes[n].len(),
            None => self.maps[0].rows(),
        }
    }

    fn check_stage(&self, stage: usize) -> Result<(), BratteliError> {
        match self.last_stage() {
            Some(last) if stage > last => Err(BratteliError::StageOutOfRange { stage, last }),
            _ => Ok(()),
        }
    }

    pub fn element(&self, stage: usize, vec: IntVec) -> Result<K0Element, BratteliError> {
        self.check_stage(stage)?;
        let expected = self.vertex_count(stage);
        if vec.len() != expected {
            return Err(BratteliError::VectorLength {
                stage,
                len: vec.len(),
                expected,
            });
        }
        Ok(K0Element { stage, vec })
    }

    pub fn order_unit(&self) -> Option<K0Element> {
        self.unital.then(|| K0Element {
            stage: 0,
            vec: self.sizes[0].clone(),
        })
    }
}

/// A class in the dimension group, represented at a stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct K0Element {
    pub stage: usize,
    #[serde(with = "json::int_vec")]
    pub vec: IntVec,
}

impl K0Element {
    pub fn new(stage: usize, vec: IntVec) -> Self {
        Self { stage, vec }
    }

    pub fn neg(&self) -> Self {
        Self::new(self.stage, neg_vec(&self.vec))
    }
}

/// `A_{to−1} ··· A_{stage} · x`.
pub fn push(d: &BratteliDiagram, x: &K0Element, to_stage: usize) -> Result<IntVec, BratteliError> {
    assert!(to_stage >= x.stage, "cannot push backwards");
    d.check_stage(to_stage)?;
    if let Some(m) = d.stationary_matrix() {
        return Ok(m.pow((to_stage - x.stage) as u32).mul_vec(&x.vec));
    }
    let mut v = x.vec.clone();
    for n in x.stage..to_stage {
        v = d.maps[n].mul_vec(&v);
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ClassEquality {
    Equal { stage: usize },
    NotEqual,
    Unknown,
}

/// Equality in the direct limit.
///
/// Stationary diagrams are decided exactly: the kernels of `M^k` stabilize by
/// `k = d`, so `x ~ y` iff `M^d (x − y) = 0` at a common stage. Finite-depth
/// diagrams compare pushes up to `depth` further stages; reaching the last
/// stage decides the question.
pub fn class_equal(
    d: &BratteliDiagram,
    x: &K0Element,
    y: &K0Element,
    depth: usize,
) -> ClassEquality {
    let common = x.stage.max(y.stage);
    let (Ok(px), Ok(py)) = (push(d, x, common), push(d, y, common)) else {
        return ClassEquality::Unknown;
    };
    let mut z = sub_vec(&px, &py);
    if let Some(m) = d.stationary_matrix() {
        for k in 0..=m.rows() {
            if is_zero_vec(&z) {
                return ClassEquality::Equal { stage: common + k };
            }
            z = m.mul_vec(&z);
        }
        return ClassEquality::NotEqual;
    }
    let last = d.last_stage().expect("finite diagram");
    let mut stage = common;
    loop {
        if is_zero_vec(&z) {
            return ClassEquality::Equal { stage };
        }
        if stage == last {
            return ClassEquality::NotEqual;
        }
        if stage - common == depth {
            return ClassEquality::Unknown;
        }
        z = d.maps[stage].mul_vec(&z);
        stage += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NotPositiveCertificate {
    /// `−x` is positive at `stage` and `x` is not zero in the limit.
    NegationPositive { stage: usize },
    /// The enclosure of the left Perron eigenvector gives `ℓ·x ≤ upper < 0`.
    PerronNegative {
        enclosure: PerronEnclosure,
        #[serde(with = "json::rat")]
        upper: BigRational,
    },
    /// Finite-depth diagram: the push to the last stage has a negative entry.
    FinalStageNegative { stage: usize, index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PositivityVerdict {
    Positive { stage: usize },
    NotPositive { certificate: NotPositiveCertificate },
    Unknown { depth: usize },
}

impl PositivityVerdict {
    pub fn is_positive(&self) -> bool {
        matches!(self, PositivityVerdict::Positive { .. })
    }
}

/// First stage within `depth` pushes where `x` becomes componentwise nonnegative.
pub fn positive_stage(d: &BratteliDiagram, x: &K0Element, depth: usize) -> Option<usize> {
    let mut v = x.vec.clone();
    let mut stage = x.stage;
    loop {
        if is_nonnegative_vec(&v) {
            return Some(stage);
        }
        if stage - x.stage == depth || d.last_stage() == Some(stage) {
            return None;
        }
        v = d.map(stage).mul_vec(&v);
        stage += 1;
    }
}

/// Membership in the positive cone with a push budget.
///
/// Once a push is nonnegative every later push is, since the maps are
/// nonnegative, so `Positive` is monotone in `depth`.
pub fn positivity(d: &BratteliDiagram, x: &K0Element, depth: usize) -> PositivityVerdict {
    positivity_with(d, x, depth, None)
}

/// As [`positivity`], reusing a precomputed Perron enclosure for stationary primitive diagrams.
pub fn positivity_with(
    d: &BratteliDiagram,
    x: &K0Element,
    depth: usize,
    perron: Option<&PerronEnclosure>,
) -> PositivityVerdict {
    if let Some(stage) = positive_stage(d, x, depth) {
        return PositivityVerdict::Positive { stage };
    }
    if let Some(last) = d.last_stage() {
        if x.stage + depth >= last {
            let v = push(d, x, last).expect("last stage is in range");
            let index = v
                .iter()
                .position(|a| a.is_negative())
                .expect("not nonnegative");
            return PositivityVerdict::NotPositive {
                certificate: NotPositiveCertificate::FinalStageNegative { stage: last, index },
            };
        }
    }
    if let Some(stage) = positive_stage(d, &x.neg(), depth) {
        if class_equal(
            d,
            x,
            &K0Element::new(x.stage, vec![BigInt::zero(); x.vec.len()]),
            depth,
        ) == ClassEquality::NotEqual
        {
            return PositivityVerdict::NotPositive {
                certificate: NotPositiveCertificate::NegationPositive { stage },
            };
        }
    }
    if let Some(m) = d.stationary_matrix() {
        let owned;
        let enc = match perron {
            Some(e) => Some(e),
            None => {
                owned = perron_enclosure(m, &default_precision()).ok();
                owned.as_ref()
            }
        };
        if let Some(enc) = enc {
            let (_, hi) = enc.functional_interval(&x.vec);
            if hi.is_negative() {
                return PositivityVerdict::NotPositive {
                    certificate: NotPositiveCertificate::PerronNegative {
                        enclosure: enc.clone(),
                        upper: hi,
                    },
                };
            }
        }
    }
    PositivityVerdict::Unknown { depth }
}

/// Default width for Perron eigenvalue enclosures.
pub fn default_precision() -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(1_000_000))
}

/// Scale membership `0 ≤ x ≤ [1]` for unital diagrams.
pub fn in_scale(d: &BratteliDiagram, x: &K0Element, depth: usize) -> Option<bool> {
    let u = d.order_unit()?;
    let stage = x.stage.max(u.stage);
    let xs = K0Element::new(stage, push(d, x, stage).ok()?);
    let us = push(d, &u, stage).ok()?;
    let rest = K0Element::new(stage, sub_vec(&us, &xs.vec));
    let a = positivity(d, &xs, depth);
    let b = positivity(d, &rest, depth);
    match (a, b) {
        (PositivityVerdict::Positive { .. }, PositivityVerdict::Positive { .. }) => Some(true),
        (PositivityVerdict::NotPositive { .. }, _) | (_, PositivityVerdict::NotPositive { .. }) => {
            Some(false)
        }
        _ => None,
    }
}

/// Move `x` to the earliest stage where it has an exact preimage.
pub fn normal_form(d: &BratteliDiagram, x: &K0Element) -> K0Element {
    let mut cur = x.clone();
    while cur.stage > 0 {
        match solve_integer(d.map(cur.stage - 1), &cur.vec) {
            Some(pre) => cur = K0Element::new(cur.stage - 1, pre),
            None => break,
        }
    }
    cur
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramSummary {
    pub order_unit: Option<K0Element>,
    /// `None` for finite-depth diagrams.
    pub primitive: Option<bool>,
    pub simple: bool,
    pub perron: Option<PerronEnclosure>,
}

pub fn diagram_summary(d: &BratteliDiagram, precision: &BigRational) -> DiagramSummary {
    let order_unit = d.order_unit();
    match d.stationary_matrix() {
        Some(m) => {
            let primitive = primitivity_exponent(m).is_some();
            let perron = if primitive {
                perron_enclosure(m, precision).ok()
            } else {
                None
            };
            DiagramSummary {
                order_unit,
                primitive: Some(primitive),
                simple: primitive,
                perron,
            }
        }
        None => DiagramSummary {
            order_unit,
            primitive: None,
            simple: d.limit_rank() == 1,
            perron: None,
        },
    }
}
