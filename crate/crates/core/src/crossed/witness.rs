//! Search for positive nonzero elements of `H_α`.

use super::EmbedProblem;
use crate::bratteli::{push, K0Element};
use crate::json;
use crate::linalg::{lattice_meets_orthant, IntMatrix, IntVec, Lattice, OrthantVerdict};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

/// Rank data for the partial isometry built from `x = [p] − [q]` with
/// `α_*(x) − x = [r]`: cancellation gives `v` from `diag(p, α(q), r)` onto
/// `diag(α(p), q, 0)`, and `w = diag(p u*, u q, 0)` maps that back to
/// `diag(p, α(q), 0)`. The product `w v` is an isometry onto a proper
/// subprojection. All ranks are vectors at `stage`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialIsometryWitness {
    pub stage: usize,
    #[serde(with = "json::int_vec")]
    pub p: IntVec,
    #[serde(with = "json::int_vec")]
    pub q: IntVec,
    #[serde(with = "json::int_vec")]
    pub alpha_p: IntVec,
    #[serde(with = "json::int_vec")]
    pub alpha_q: IntVec,
    #[serde(with = "json::int_vec")]
    pub r: IntVec,
    pub rendering: String,
}

/// `x` with `h = α_*(x) − x` positive (nonnegative push at `positive_stage`) and nonzero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HWitness {
    pub x: K0Element,
    pub h: K0Element,
    pub positive_stage: usize,
    pub partial_isometry: PartialIsometryWitness,
}

/// Stage where the search places `x`: 0 for stationary diagrams, the last stage otherwise.
fn action_stage(p: &EmbedProblem) -> usize {
    p.diagram.last_stage().unwrap_or(0)
}

/// Enumerate `x` with `‖x‖∞ ≤ box_bound` in `(‖x‖∞, ‖x‖₁, lex)` order and return
/// the first whose `h = (F − M^s)x` is positive within `stage_bound` pushes
/// and nonzero in the limit.
///
/// For a stationary diagram the set `{(F − M^s)x}` is the same at every
/// stage, so `x` is taken at stage 0 and `stage_bound` is the push budget.
/// For a finite-depth diagram `x` lives on the last stage, where positivity
/// is the orthant.
pub fn h_witness_search(p: &EmbedProblem, stage_bound: usize, box_bound: u64) -> Option<HWitness> {
    let d = p.diagram.limit_rank();
    let diff = p.difference_matrix();
    let (m, depth) = match p.diagram.stationary_matrix() {
        Some(m) => (m.clone(), stage_bound),
        None => (IntMatrix::identity(d), 0),
    };
    let small = SmallSearch::new(&m, &diff, depth).and_then(|s| s.run(box_bound));
    let found = match small {
        Some(result) => result,
        None => big_search(&m, &diff, depth, box_bound),
    }?;
    let (x, k) = found;
    Some(render(p, x, k))
}

pub(crate) fn render(p: &EmbedProblem, x: IntVec, k: usize) -> HWitness {
    let n = action_stage(p);
    let s = p.endo.shift;
    let x = K0Element::new(n, x);
    let h = K0Element::new(n + s, p.difference_matrix().mul_vec(&x.vec));
    let positive_stage = if p.diagram.is_stationary() {
        n + s + k
    } else {
        n
    };
    let partial_isometry = partial_isometry(p, &x, &h, positive_stage);
    HWitness {
        x,
        h,
        positive_stage,
        partial_isometry,
    }
}

pub fn partial_isometry(
    p: &EmbedProblem,
    x: &K0Element,
    h: &K0Element,
    stage: usize,
) -> PartialIsometryWitness {
    let d = &p.diagram;
    let plus: IntVec = x
        .vec
        .iter()
        .map(|a| a.max(&BigInt::zero()).clone())
        .collect();
    let minus: IntVec = x.vec.iter().map(|a| (-a).max(BigInt::zero())).collect();
    let at = |v: &IntVec, from: usize| {
        push(d, &K0Element::new(from, v.clone()), stage).expect("stage in range")
    };
    let shifted = x.stage + p.endo.shift;
    PartialIsometryWitness {
        stage,
        p: at(&plus, x.stage),
        q: at(&minus, x.stage),
        alpha_p: at(&p.endo.mat.mul_vec(&plus), shifted),
        alpha_q: at(&p.endo.mat.mul_vec(&minus), shifted),
        r: at(&h.vec, h.stage),
        rendering: "diag(p u*, u q, 0)".to_string(),
    }
}

/// Machine-integer search; `None` from `new` when entries do not fit.
struct SmallSearch {
    d: usize,
    /// `M^k` for `k = 0..=max(depth, d)`, row-major.
    powers: Vec<Vec<i64>>,
    diff: Vec<i64>,
    depth: usize,
}

impl SmallSearch {
    fn new(m: &IntMatrix, diff: &IntMatrix, depth: usize) -> Option<Self> {
        let d = m.rows();
        let top = depth.max(d);
        let mut powers = Vec::with_capacity(top + 1);
        let mut cur = IntMatrix::identity(d);
        for k in 0..=top {
            if k > 0 {
                cur = cur.mul(m);
            }
            powers.push(to_i64(&cur)?);
        }
        Some(Self {
            d,
            powers,
            diff: to_i64(diff)?,
            depth,
        })
    }

    /// Outer `None` means an overflow forced the caller onto the big-integer path.
    fn run(&self, box_bound: u64) -> Option<Option<(IntVec, usize)>> {
        let b = i64::try_from(box_bound).ok()?;
        let mut h = vec![0i64; self.d];
        for norm in 1..=b {
            for x in shell(self.d, norm).iter() {
                if !self.fill_h(x, &mut h) {
                    return None;
                }
                if let Some(k) = self.positive_power(&h) {
                    if !self.vanishes(&h) {
                        return Some(Some((x.iter().map(|&v| BigInt::from(v)).collect(), k)));
                    }
                }
            }
        }
        Some(None)
    }

    /// `h = D x`; false on overflow.
    fn fill_h(&self, x: &[i64], h: &mut [i64]) -> bool {
        let d = self.d;
        for i in 0..d {
            let mut acc: i128 = 0;
            for j in 0..d {
                acc += self.diff[i * d + j] as i128 * x[j] as i128;
            }
            match i64::try_from(acc) {
                Ok(v) => h[i] = v,
                Err(_) => return false,
            }
        }
        true
    }

    fn apply(&self, k: usize, h: &[i64], i: usize) -> i128 {
        let d = self.d;
        let row = &self.powers[k][i * d..(i + 1) * d];
        row.iter()
            .zip(h)
            .map(|(&a, &b)| a as i128 * b as i128)
            .sum()
    }

    fn positive_power(&self, h: &[i64]) -> Option<usize> {
        (0..=self.depth).find(|&k| (0..self.d).all(|i| self.apply(k, h, i) >= 0))
    }

    fn vanishes(&self, h: &[i64]) -> bool {
        (0..self.d).all(|i| self.apply(self.d, h, i) == 0)
    }
}

fn to_i64(m: &IntMatrix) -> Option<Vec<i64>> {
    // Keep entries small enough that d products of two entries fit in i128 comfortably.
    m.entries()
        .iter()
        .map(|x| x.to_i64().filter(|v| v.unsigned_abs() < (1 << 40)))
        .collect()
}

fn big_search(
    m: &IntMatrix,
    diff: &IntMatrix,
    depth: usize,
    box_bound: u64,
) -> Option<(IntVec, usize)> {
    let d = m.rows();
    let powers: Vec<IntMatrix> = (0..=depth.max(d)).map(|k| m.pow(k as u32)).collect();
    let b = i64::try_from(box_bound).ok()?;
    for norm in 1..=b {
        for x in shell(d, norm).iter() {
            let xv: IntVec = x.iter().map(|&v| BigInt::from(v)).collect();
            let h = diff.mul_vec(&xv);
            let pos = (0..=depth).find(|&k| powers[k].mul_vec(&h).iter().all(|v| !v.is_negative()));
            if let Some(k) = pos {
                if !powers[d].mul_vec(&h).iter().all(Zero::is_zero) {
                    return Some((xv, k));
                }
            }
        }
    }
    None
}

/// Shells above this size are not cached.
const SHELL_CACHE_LIMIT: usize = 1 << 20;

type ShellCache = HashMap<(usize, i64), Rc<Vec<Vec<i64>>>>;

thread_local! {
    static SHELLS: RefCell<ShellCache> = RefCell::new(HashMap::new());
}

/// All `x ∈ ℤ^d` with `‖x‖∞ = norm`, ordered by `(‖x‖₁, lex)`.
///
/// Together with the outer loop over `norm` this is the search order
/// `(‖x‖∞, ‖x‖₁, lex)`: among witnesses of equal size the sparsest wins.
pub(crate) fn shell(d: usize, norm: i64) -> Rc<Vec<Vec<i64>>> {
    if let Some(s) = SHELLS.with(|c| c.borrow().get(&(d, norm)).cloned()) {
        return s;
    }
    let mut out = Vec::new();
    let mut x = vec![-norm; d];
    loop {
        if x.iter().any(|v| v.abs() == norm) {
            out.push(x.clone());
        }
        if !crate::linalg::odometer(&mut x, norm) {
            break;
        }
    }
    out.sort_by_key(|x| (x.iter().map(|v| v.abs()).sum::<i64>(), x.clone()));
    let out = Rc::new(out);
    if out.len() <= SHELL_CACHE_LIMIT {
        SHELLS.with(|c| c.borrow_mut().insert((d, norm), out.clone()));
    }
    out
}

/// Lattice view of `H_α` at one stage: for finite-depth diagrams the image of
/// `F − I` on the last stage, for stationary ones the image of `M^d (F − M^s)`
/// inside the eventual range.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageImageReport {
    pub stage: usize,
    pub lattice: Lattice,
    pub verdict: OrthantVerdict,
}

pub fn stage_image_check(p: &EmbedProblem, box_bound: u64) -> StageImageReport {
    let diff = p.difference_matrix();
    let (stage, image) = match p.diagram.stationary_matrix() {
        Some(m) => {
            let d = m.rows();
            (p.endo.shift + d, m.pow(d as u32).mul(&diff))
        }
        None => (action_stage(p), diff),
    };
    let lattice = Lattice::column_span(&image);
    let verdict = lattice_meets_orthant(&lattice, box_bound);
    StageImageReport {
        stage,
        lattice,
        verdict,
    }
}
