//! The embeddability decision: `H_α ∩ K₀⁺ = {0}`.

use super::fop::{fop_check, FopEntry, FopVerdict};
use super::functional::invariant_functional;
use super::witness::{h_witness_search, render, HWitness};
use super::{CrossedError, EmbedProblem, LimitEndomorphism};
use crate::bratteli::{default_precision, diagram_summary, BratteliDiagram};
use crate::json;
use crate::linalg::{
    lattice_meets_orthant, primitivity_exponent, solve_integer, FarkasCertificate, IntMatrix,
    Lattice, OrthantVerdict, RatVector,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

/// Search limits for the undecidable part of the problem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Push depth for positivity and the orbit search.
    pub stages: usize,
    /// `‖x‖∞` bound for witness enumeration and lattice search.
    pub box_bound: u64,
    pub orbit_bound: usize,
    /// Perron enclosure width.
    #[serde(with = "json::rat")]
    pub precision: BigRational,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            stages: 6,
            box_bound: 4,
            orbit_bound: 12,
            precision: default_precision(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimpleUnitalData {
    /// `None` for finite-depth diagrams.
    pub primitivity_exponent: Option<u32>,
    pub unit_fixed_stage: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddableReason {
    /// Unital simple dimension group: every state is faithful.
    SimpleUnital(SimpleUnitalData),
    Fop {
        stage: usize,
        entries: Vec<FopEntry>,
    },
    InvariantFaithfulFunctional {
        #[serde(with = "json::rat_vec")]
        ell: RatVector,
        #[serde(with = "json::int")]
        lambda: BigInt,
    },
    /// The rational span of `H_α` meets the orthant only at 0.
    TrivialIntersectionExhausted {
        lattice: Lattice,
        certificate: Option<FarkasCertificate>,
    },
    /// The diagram and `α_*` split along the vertex sets; `α_*` is the
    /// identity off `kept`, so `H_α` lives on `kept`, where `reason` applies.
    BlockReduction {
        kept: Vec<usize>,
        reason: Box<EmbeddableReason>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EmbeddabilityVerdict {
    CertifiedEmbeddable { reason: EmbeddableReason },
    CertifiedNotEmbeddable { witness: HWitness },
    Unknown { budget: Budget },
}

impl EmbeddabilityVerdict {
    pub fn is_certified(&self) -> bool {
        !matches!(self, Self::Unknown { .. })
    }
}

/// Decide embeddability with certificates; `Unknown` when the budget runs out.
pub fn decide_embeddable(
    p: &EmbedProblem,
    budget: &Budget,
) -> Result<EmbeddabilityVerdict, CrossedError> {
    p.validate()?;
    let unit_stage = p.unit_fixed_stage()?;
    if let Some(witness) = h_witness_search(p, budget.stages, budget.box_bound) {
        return Ok(EmbeddabilityVerdict::CertifiedNotEmbeddable { witness });
    }
    if let Some(reason) = embeddable_reason(p, budget, unit_stage) {
        return Ok(EmbeddabilityVerdict::CertifiedEmbeddable { reason });
    }
    if let Some((_, d0)) = p.orthant_model() {
        if let OrthantVerdict::Witness { vector } =
            lattice_meets_orthant(&Lattice::column_span(&d0), budget.box_bound)
        {
            if let Some(x) = solve_integer(&d0, &vector) {
                return Ok(EmbeddabilityVerdict::CertifiedNotEmbeddable {
                    witness: render(p, x, 0),
                });
            }
        }
    }
    if let Some((kept, sub)) = block_reduction(p) {
        match decide_embeddable(&sub, budget)? {
            EmbeddabilityVerdict::CertifiedEmbeddable { reason } => {
                return Ok(EmbeddabilityVerdict::CertifiedEmbeddable {
                    reason: EmbeddableReason::BlockReduction {
                        kept,
                        reason: Box::new(reason),
                    },
                });
            }
            EmbeddabilityVerdict::CertifiedNotEmbeddable { witness } => {
                let d = p.diagram.limit_rank();
                let mut x = vec![BigInt::zero(); d];
                for (i, &k) in kept.iter().enumerate() {
                    x[k] = witness.x.vec[i].clone();
                }
                let k = witness.positive_stage.saturating_sub(witness.h.stage);
                return Ok(EmbeddabilityVerdict::CertifiedNotEmbeddable {
                    witness: render(p, x, k),
                });
            }
            EmbeddabilityVerdict::Unknown { .. } => {}
        }
    }
    Ok(EmbeddabilityVerdict::Unknown {
        budget: budget.clone(),
    })
}

fn embeddable_reason(
    p: &EmbedProblem,
    budget: &Budget,
    unit_stage: Option<usize>,
) -> Option<EmbeddableReason> {
    if let Some(stage) = unit_stage {
        if diagram_summary(&p.diagram, &budget.precision).simple {
            return Some(EmbeddableReason::SimpleUnital(SimpleUnitalData {
                primitivity_exponent: p.diagram.stationary_matrix().and_then(primitivity_exponent),
                unit_fixed_stage: stage,
            }));
        }
    }
    if let FopVerdict::Fop { stage, entries } = fop_check(p, 0, budget.orbit_bound) {
        return Some(EmbeddableReason::Fop { stage, entries });
    }
    if let Some(f) = invariant_functional(p) {
        return Some(EmbeddableReason::InvariantFaithfulFunctional {
            ell: f.ell,
            lambda: f.lambda,
        });
    }
    if let Some((_, d0)) = p.orthant_model() {
        let lattice = Lattice::column_span(&d0);
        if let OrthantVerdict::CertifiedEmpty { certificate } =
            lattice_meets_orthant(&lattice, budget.box_bound)
        {
            return Some(EmbeddableReason::TrivialIntersectionExhausted {
                lattice,
                certificate,
            });
        }
    }
    None
}

/// Vertex components of the graph with an edge wherever `M`, `F` or `M^s`
/// couples two vertices.
pub fn coupling_components(p: &EmbedProblem) -> Vec<Vec<usize>> {
    let m = p.connecting_matrix();
    let ms = m.pow(p.endo.shift as u32);
    let d = m.rows();
    let mut uf = UnionFind::<usize>::new(d);
    for a in [&m, &p.endo.mat, &ms] {
        for i in 0..d {
            for j in 0..d {
                if !a.get(i, j).is_zero() {
                    uf.union(i, j);
                }
            }
        }
    }
    let labels = uf.into_labeling();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for (v, &l) in labels.iter().enumerate() {
        match seen.iter().position(|&x| x == l) {
            Some(i) => comps[i].push(v),
            None => {
                seen.push(l);
                comps.push(vec![v]);
            }
        }
    }
    comps
}

fn restrict(a: &IntMatrix, idx: &[usize]) -> IntMatrix {
    let rows = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| a.get(i, j).clone()).collect())
        .collect();
    IntMatrix::from_rows(rows).expect("nonempty index set")
}

/// Drop the components on which `F − M^s` vanishes, if that leaves a proper
/// nonempty set of vertices.
pub fn block_reduction(p: &EmbedProblem) -> Option<(Vec<usize>, EmbedProblem)> {
    let diff = p.difference_matrix();
    let kept: Vec<usize> = coupling_components(p)
        .into_iter()
        .filter(|c| {
            c.iter()
                .any(|&i| c.iter().any(|&j| !diff.get(i, j).is_zero()))
        })
        .flatten()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let d = p.diagram.limit_rank();
    if kept.is_empty() || kept.len() == d {
        return None;
    }
    Some((kept.clone(), restrict_problem(p, &kept)))
}

pub fn restrict_problem(p: &EmbedProblem, kept: &[usize]) -> EmbedProblem {
    let d = &p.diagram;
    let pick = |v: &Vec<BigInt>| kept.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
    let diagram = match d.stationary_matrix() {
        Some(m) => BratteliDiagram {
            sizes: d.sizes.iter().map(pick).collect(),
            maps: vec![restrict(m, kept)],
            stationary: true,
            unital: d.unital,
        },
        None => BratteliDiagram::finite(
            vec![pick(d.sizes.last().expect("validated"))],
            vec![],
            d.unital,
        ),
    };
    EmbedProblem {
        diagram,
        endo: LimitEndomorphism::new(restrict(&p.endo.mat, kept), p.endo.shift),
        subgroup: None,
    }
}
