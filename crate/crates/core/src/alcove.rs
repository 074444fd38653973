//! The fundamental alcove of SU(n), its faces, torus elements and the
//! reversal involution used when two punctures are glued.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matgroup::{diagonal, CMat, C64, GROUP_TOL};

/// Tolerance for the ordering and trace conditions.
pub const ALCOVE_TOL: f64 = 1e-12;
/// Gap size above which αᵢ > αᵢ₊₁ counts as strict.
pub const FACE_TOL: f64 = 1e-10;
/// Slack used when searching for the alcove branch of a logarithm.
const BRANCH_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlcoveError {
    #[error("empty weight vector")]
    Empty,
    #[error("weights are not non-increasing at position {0}")]
    NotOrdered(usize),
    #[error("last weight {last} is below first weight minus one ({first} - 1)")]
    AffineBoundViolated { first: f64, last: f64 },
    #[error("weights sum to {0}, not zero")]
    NotTraceless(f64),
    #[error("no ordering of the logarithms lands in the alcove")]
    NoAlcoveBranch,
    #[error("torus element is not diagonal with nonzero entries and unit determinant")]
    InvalidTorus,
}

/// Ordered traceless weight vector α₁ ≥ … ≥ αₙ ≥ α₁ − 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AlcovePoint {
    alpha: Vec<f64>,
}

impl<'de> Deserialize<'de> for AlcovePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let alpha = Vec::<f64>::deserialize(d)?;
        validate_alcove(&alpha).map_err(serde::de::Error::custom)
    }
}

impl AlcovePoint {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn rank(&self) -> usize {
        self.alpha.len()
    }

    /// One-based component αᵏ, or `None` outside 1..=n.
    pub fn component(&self, k: isize) -> Option<f64> {
        if k >= 1 && (k as usize) <= self.alpha.len() {
            Some(self.alpha[k as usize - 1])
        } else {
            None
        }
    }

    pub fn barycenter(n: usize) -> Self {
        Self { alpha: vec![0.0; n] }
    }
}

pub fn validate_alcove(alpha: &[f64]) -> Result<AlcovePoint, AlcoveError> {
    let n = alpha.len();
    if n == 0 {
        return Err(AlcoveError::Empty);
    }
    for i in 0..n - 1 {
        if alpha[i] < alpha[i + 1] - ALCOVE_TOL {
            return Err(AlcoveError::NotOrdered(i + 1));
        }
    }
    if alpha[n - 1] < alpha[0] - 1.0 - ALCOVE_TOL {
        return Err(AlcoveError::AffineBoundViolated { first: alpha[0], last: alpha[n - 1] });
    }
    let sum: f64 = alpha.iter().sum();
    if sum.abs() > ALCOVE_TOL {
        return Err(AlcoveError::NotTraceless(sum));
    }
    Ok(AlcovePoint { alpha: alpha.to_vec() })
}

/// Strict-gap set I ⊂ {1, …, n−1} of a face Δ^I, one based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct FaceIndex(pub BTreeSet<usize>);

impl FaceIndex {
    pub fn from_slice(indices: &[usize]) -> Self {
        Self(indices.iter().copied().collect())
    }

    /// {n − i : i ∈ I}.
    pub fn reversed(&self, n: usize) -> Self {
        Self(self.0.iter().map(|i| n - i).collect())
    }

    pub fn is_interior(&self, n: usize) -> bool {
        self.0.len() + 1 == n
    }
}

pub fn face_of(p: &AlcovePoint) -> FaceIndex {
    let a = p.alpha();
    FaceIndex((1..a.len()).filter(|&i| a[i - 1] - a[i] > FACE_TOL).collect())
}

/// Diagonal element of the complexified maximal torus with unit determinant.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusElement {
    entries: Vec<C64>,
}

impl TorusElement {
    pub fn new(entries: Vec<C64>) -> Result<Self, AlcoveError> {
        if entries.is_empty() || entries.iter().any(|z| z.norm() == 0.0 || !z.is_finite()) {
            return Err(AlcoveError::InvalidTorus);
        }
        let det: C64 = entries.iter().product();
        if (det - C64::new(1.0, 0.0)).norm() > GROUP_TOL {
            return Err(AlcoveError::InvalidTorus);
        }
        Ok(Self { entries })
    }

    pub fn from_matrix(m: &CMat) -> Result<Self, AlcoveError> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(AlcoveError::InvalidTorus);
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && m[(i, j)].norm() > GROUP_TOL {
                    return Err(AlcoveError::InvalidTorus);
                }
            }
        }
        Self::new((0..n).map(|k| m[(k, k)]).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self { entries: vec![C64::new(1.0, 0.0); n] }
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn matrix(&self) -> CMat {
        diagonal(&self.entries)
    }

    pub fn inverse(&self) -> Self {
        Self { entries: self.entries.iter().map(|z| z.inv()).collect() }
    }

    pub fn is_unitary(&self) -> bool {
        self.entries.iter().all(|z| (z.norm() - 1.0).abs() <= GROUP_TOL)
    }

    pub fn rank(&self) -> usize {
        self.entries.len()
    }
}

impl Serialize for TorusElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        crate::matgroup::serialize_matrix(&self.matrix(), s)
    }
}

impl<'de> Deserialize<'de> for TorusElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = crate::matgroup::deserialize_matrix(d)?;
        TorusElement::from_matrix(&m).map_err(serde::de::Error::custom)
    }
}

/// v = exp(2πi α).
pub fn torus_exp(p: &AlcovePoint) -> TorusElement {
    TorusElement {
        entries: p.alpha().iter().map(|a| C64::from_polar(1.0, 2.0 * PI * a)).collect(),
    }
}

/// Alcove branch of a list of normalized arguments θ ∈ (−1/2, 1/2].
///
/// Returns the weights together with the source index of every slot.
/// Candidates shift the top k (or bottom k) arguments by ∓1; the
/// lexicographically largest valid weight vector wins.
pub(crate) fn alcove_branch(thetas: &[f64]) -> Option<(Vec<f64>, Vec<usize>)> {
    let n = thetas.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| thetas[b].total_cmp(&thetas[a]).then(a.cmp(&b)));
    let mut best: Option<(Vec<f64>, Vec<usize>)> = None;
    for k in -(n as isize)..=(n as isize) {
        let mut cand: Vec<(f64, usize)> = order
            .iter()
            .enumerate()
            .map(|(pos, &idx)| {
                let shift = if k > 0 && (pos as isize) < k {
                    -1.0
                } else if k < 0 && pos as isize >= n as isize + k {
                    1.0
                } else {
                    0.0
                };
                (thetas[idx] + shift, idx)
            })
            .collect();
        cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let alpha: Vec<f64> = cand.iter().map(|c| c.0).collect();
        let sum: f64 = alpha.iter().sum();
        let ordered = alpha.windows(2).all(|w| w[0] >= w[1] - BRANCH_TOL);
        let bounded = alpha[n - 1] >= alpha[0] - 1.0 - BRANCH_TOL;
        if sum.abs() <= BRANCH_TOL && ordered && bounded {
            let better = match &best {
                None => true,
                Some((b, _)) => {
                    alpha.iter().zip(b).find(|(x, y)| (*x - *y).abs() > BRANCH_TOL).is_some_and(
                        |(x, y)| x > y,
                    )
                }
            };
            if better {
                best = Some((alpha, cand.iter().map(|c| c.1).collect()));
            }
        }
    }
    best.map(|(mut alpha, perm)| {
        // Remove the rounding left over in the trace.
        let mean = alpha.iter().sum::<f64>() / n as f64;
        alpha.iter_mut().for_each(|a| *a -= mean);
        (alpha, perm)
    })
}

/// Principal arguments divided by 2π, in (−1/2, 1/2].
pub(crate) fn normalized_args(entries: &[C64]) -> Vec<f64> {
    entries
        .iter()
        .map(|z| {
            let t = z.arg() / (2.0 * PI);
            if t <= -0.5 {
                t + 1.0
            } else {
                t
            }
        })
        .collect()
}

/// Recovers α ∈ Δ from a unitary torus element.
pub fn torus_log(v: &TorusElement) -> Result<AlcovePoint, AlcoveError> {
    if !v.is_unitary() {
        return Err(AlcoveError::NoAlcoveBranch);
    }
    let (alpha, _) = alcove_branch(&normalized_args(v.entries())).ok_or(AlcoveError::NoAlcoveBranch)?;
    Ok(AlcovePoint { alpha })
}

/// (α₁, …, αₙ) ↦ (−αₙ, …, −α₁).
pub fn glue_partner(p: &AlcovePoint) -> AlcovePoint {
    AlcovePoint { alpha: p.alpha().iter().rev().map(|a| -a).collect() }
}

/// Uniform sample from the alcove via a flat Dirichlet draw of the n gaps.
pub fn random_alcove_point<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> AlcovePoint {
    let gaps: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let total: f64 = gaps.iter().sum();
    // gaps[0] is the affine gap αₙ − (α₁ − 1); the rest are αᵢ − αᵢ₊₁.
    let mut alpha = vec![0.0; n];
    for i in 1..n {
        alpha[i] = alpha[i - 1] - gaps[i] / total;
    }
    let mean = alpha.iter().sum::<f64>() / n as f64;
    alpha.iter_mut().for_each(|a| *a -= mean);
    AlcovePoint { alpha }
}
