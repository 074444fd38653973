//! Determinant Hamiltonians built from transported flag bases, their closed
//! form on normalized triples, recovery of the unipotent part n₃⁺, projective
//! coordinates and the real combinations on the unitary locus.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::alcove::AlcovePoint;
use crate::double::NormalizedTriple;
use crate::matgroup::{c, diag_entries, identity, involution, CMat, GroupElement, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolumesError {
    #[error("index ({0},{1},{2}) is not admissible for rank {3}")]
    NotAdmissible(usize, usize, usize, usize),
    #[error("zero denominator while recovering entry ({0},{1})")]
    ZeroDenominator(usize, usize),
    #[error("all coordinates vanish")]
    AllZero,
    #[error("table is missing index {0}")]
    MissingIndex(VolumeIndex),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("bad index key {0:?}")]
    BadKey(String),
}

/// (j₁, j₂, j₃) with j₁ + j₂ + j₃ = n and every jᵢ ≤ n − 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VolumeIndex {
    pub j1: usize,
    pub j2: usize,
    pub j3: usize,
}

impl VolumeIndex {
    pub fn new(n: usize, j1: usize, j2: usize, j3: usize) -> Result<Self, VolumesError> {
        if j1 + j2 + j3 != n || j1 >= n || j2 >= n || j3 >= n {
            return Err(VolumesError::NotAdmissible(j1, j2, j3, n));
        }
        Ok(Self { j1, j2, j3 })
    }

    pub fn rank(&self) -> usize {
        self.j1 + self.j2 + self.j3
    }

    /// Every admissible index for rank n, in lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for j1 in 0..n {
            for j2 in 0..n {
                if j1 + j2 <= n && n - j1 - j2 < n {
                    out.push(Self { j1, j2, j3: n - j1 - j2 });
                }
            }
        }
        out
    }
}

impl fmt::Display for VolumeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.j1, self.j2, self.j3)
    }
}

impl FromStr for VolumeIndex {
    type Err = VolumesError;
    fn from_str(s: &str) -> Result<Self, VolumesError> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| VolumesError::BadKey(s.to_string()))?;
        match parts[..] {
            [j1, j2, j3] => Self::new(j1 + j2 + j3, j1, j2, j3),
            _ => Err(VolumesError::BadKey(s.to_string())),
        }
    }
}

/// Values on every admissible index of one rank.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeTable {
    n: usize,
    values: BTreeMap<VolumeIndex, C64>,
}

impl VolumeTable {
    pub fn new(n: usize, values: BTreeMap<VolumeIndex, C64>) -> Result<Self, VolumesError> {
        for idx in values.keys() {
            if idx.rank() != n {
                return Err(VolumesError::SizeMismatch(n, idx.rank()));
            }
        }
        for idx in VolumeIndex::all(n) {
            if !values.contains_key(&idx) {
                return Err(VolumesError::MissingIndex(idx));
            }
        }
        Ok(Self { n, values })
    }

    fn from_fn(n: usize, f: impl Fn(VolumeIndex) -> C64) -> Self {
        Self { n, values: VolumeIndex::all(n).into_iter().map(|i| (i, f(i))).collect() }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn get(&self, idx: VolumeIndex) -> C64 {
        self.values[&idx]
    }

    pub fn values(&self) -> &BTreeMap<VolumeIndex, C64> {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VolumeIndex, &C64)> {
        self.values.iter()
    }

    /// Largest entrywise difference.
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .map(|(k, v)| other.values.get(k).map_or(f64::INFINITY, |w| (v - w).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Serialize for VolumeTable {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, [f64; 2]> =
            self.values.iter().map(|(k, v)| (k.to_string(), [v.re + 0.0, v.im + 0.0])).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for VolumeTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, [f64; 2]>::deserialize(d)?;
        let mut values = BTreeMap::new();
        for (k, [re, im]) in raw {
            let idx: VolumeIndex = k.parse().map_err(D::Error::custom)?;
            values.insert(idx, c(re, im));
        }
        let n = values.keys().next().map(|i| i.rank()).ok_or_else(|| D::Error::custom("empty table"))?;
        VolumeTable::new(n, values).map_err(D::Error::custom)
    }
}

/// Column indices (0-based) taken from each frame, in order.
fn frame_columns(idx: VolumeIndex, n: usize) -> [Vec<usize>; 3] {
    [
        (0..idx.j1).collect(),
        (0..idx.j2).map(|k| n - 1 - k).collect(),
        (0..idx.j3).map(|k| n - 1 - k).collect(),
    ]
}

/// Columns u₁e₁,…,u₁e_{j₁}, u₂eₙ,…,u₂e_{n−j₂+1}, u₃eₙ,…,u₃e_{n−j₃+1}.
pub fn g_matrix(idx: VolumeIndex, u1: &CMat, u2: &CMat, u3: &CMat) -> CMat {
    let n = u1.nrows();
    let mut g = CMat::zeros(n, n);
    let mut col = 0;
    for (frame, cols) in [u1, u2, u3].into_iter().zip(frame_columns(idx, n)) {
        for k in cols {
            g.set_column(col, &frame.column(k));
            col += 1;
        }
    }
    g
}

/// Derivative of det G along a variation `du3` of the third frame.
pub fn g_determinant_derivative(idx: VolumeIndex, u1: &CMat, u2: &CMat, u3: &CMat, du3: &CMat) -> C64 {
    let n = u1.nrows();
    let g = g_matrix(idx, u1, u2, u3);
    let offset = idx.j1 + idx.j2;
    let mut total = c(0.0, 0.0);
    for (slot, k) in frame_columns(idx, n)[2].iter().enumerate() {
        let mut h = g.clone();
        h.set_column(offset + slot, &du3.column(*k));
        total += h.determinant();
    }
    total
}

/// Table of det G over all admissible indices for three frames.
pub fn volume_table(u1: &CMat, u2: &CMat, u3: &CMat) -> VolumeTable {
    VolumeTable::from_fn(u1.nrows(), |idx| g_matrix(idx, u1, u2, u3).determinant())
}

/// Sign picked up when the closed form is read off the column determinant.
pub fn closed_form_sign(idx: VolumeIndex) -> f64 {
    let m = idx.j2 + idx.j3;
    if (m * m.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn minor(m: &CMat, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> C64 {
    if rows.is_empty() {
        return c(1.0, 0.0);
    }
    m.view((rows.start, cols.start), (rows.len(), cols.len())).determinant()
}

/// ± d₁,₁⋯d₁,_{j₁} · det(b₃⁺ rows j₁+1..j₁+j₃, cols n−j₃+1..n).
pub fn hg_closed_form(d1: &[C64], b3_plus: &CMat) -> VolumeTable {
    let n = d1.len();
    VolumeTable::from_fn(n, |idx| {
        let prod: C64 = d1[..idx.j1].iter().product();
        let m = minor(b3_plus, idx.j1..idx.j1 + idx.j3, n - idx.j3..n);
        prod * m * closed_form_sign(idx)
    })
}

/// The determinant Hamiltonians of a normalized triple, from the columns of
/// b₁⁺, n₂⁻ and b₃⁺.
pub fn hg(t: &NormalizedTriple) -> VolumeTable {
    volume_table(&t.b1_plus, &t.n2_minus, &t.b3_plus)
}

/// Reconstructs n₃⁺ from the table, working up each column from the last.
pub fn recover_unipotent(table: &VolumeTable, d1: &[C64], d3: &[C64]) -> Result<GroupElement, VolumesError> {
    let n = table.rank();
    if d1.len() != n || d3.len() != n {
        return Err(VolumesError::SizeMismatch(n, d1.len().min(d3.len())));
    }
    // m(j1, k): the minor of n₃⁺ on rows j1+1..j1+k, last k columns.
    let normalized = |j1: usize, k: usize, at: (usize, usize)| -> Result<C64, VolumesError> {
        if k == 0 {
            return Ok(c(1.0, 0.0));
        }
        let idx = VolumeIndex::new(n, j1, n - j1 - k, k)?;
        let scale: C64 = d1[..j1].iter().product::<C64>()
            * d3[n - k..].iter().product::<C64>()
            * closed_form_sign(idx);
        if scale.norm() == 0.0 {
            return Err(VolumesError::ZeroDenominator(at.0, at.1));
        }
        Ok(table.get(idx) / scale)
    };
    let mut u = identity(n);
    for k in 1..n {
        let col = n - k;
        for i in (0..col).rev() {
            let cofactor = normalized(i + 1, k - 1, (i + 1, col + 1))?;
            if cofactor.norm() <= f64::EPSILON * table.max_modulus().max(1.0) {
                return Err(VolumesError::ZeroDenominator(i + 1, col + 1));
            }
            u[(i, col)] = c(0.0, 0.0);
            let d0 = minor(&u, i..i + k, col..n);
            u[(i, col)] = (normalized(i, k, (i + 1, col + 1))? - d0) / cofactor;
        }
    }
    Ok(GroupElement::new(u).expect("unipotent"))
}

/// Homogeneous coordinates over the admissible indices, scaled so the
/// first entry of largest modulus is 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectivePoint {
    pub coordinates: VolumeTable,
}

impl ProjectivePoint {
    pub fn from_table(table: &VolumeTable) -> Result<Self, VolumesError> {
        let (_, pivot) = table
            .iter()
            .fold((0.0, c(0.0, 0.0)), |(best, z), (_, v)| if v.norm() > best { (v.norm(), *v) } else { (best, z) });
        if pivot.norm() == 0.0 {
            return Err(VolumesError::AllZero);
        }
        let values = table.iter().map(|(k, v)| (*k, v / pivot)).collect();
        Ok(Self { coordinates: VolumeTable { n: table.rank(), values } })
    }

    /// Entrywise distance between normalized representatives.
    pub fn distance(&self, other: &Self) -> f64 {
        self.coordinates.max_difference(&other.coordinates)
    }
}

pub fn projective_coordinates(t: &NormalizedTriple) -> Result<ProjectivePoint, VolumesError> {
    ProjectivePoint::from_table(&hg(t))
}

/// Difference of the 1-based weights a and b, or `None` when either falls
/// outside 1..n.
fn gap(w: &[C64], a: isize, b: isize) -> Option<C64> {
    let n = w.len() as isize;
    if a < 1 || b < 1 || a > n || b > n {
        return None;
    }
    Some(w[a as usize - 1] - w[b as usize - 1])
}

/// 1-based position pairs of the three gap factors at `idx`.
fn gap_positions(idx: VolumeIndex) -> [(isize, isize); 3] {
    let n = idx.rank() as isize;
    let (j1, j2, j3) = (idx.j1 as isize, idx.j2 as isize, idx.j3 as isize);
    [(j1 + 1, j1), (n - j2, n - j2 + 1), (n - j3, n - j3 + 1)]
}

/// The weight prefactor A·f₁f₂f₃ of the real Hamiltonian at `idx`, for
/// possibly complexified weights. Gaps reaching outside 1..n count as 1.
pub fn weight_prefactor(idx: VolumeIndex, weights: [&[C64]; 3]) -> C64 {
    let n = idx.rank() as isize;
    let one = c(1.0, 0.0);
    weights
        .iter()
        .zip(gap_positions(idx))
        .map(|(w, (a, b))| (gap(w, 1, n).unwrap_or(one) - one) * gap(w, a, b).unwrap_or(one))
        .product()
}

/// Gradient of [`weight_prefactor`] in the third set of weights.
pub fn weight_prefactor_gradient(idx: VolumeIndex, weights: [&[C64]; 3]) -> Vec<C64> {
    let n = idx.rank();
    let one = c(1.0, 0.0);
    let positions = gap_positions(idx);
    let mut rest = one;
    for k in 0..2 {
        let w = weights[k];
        rest *= (gap(w, 1, n as isize).unwrap_or(one) - one) * gap(w, positions[k].0, positions[k].1).unwrap_or(one);
    }
    let w = weights[2];
    let a3 = gap(w, 1, n as isize).unwrap_or(one) - one;
    let (p, q) = positions[2];
    let f3 = gap(w, p, q).unwrap_or(one);
    let mut grad = vec![c(0.0, 0.0); n];
    grad[0] += rest * f3;
    grad[n - 1] -= rest * f3;
    if gap(w, p, q).is_some() {
        grad[p as usize - 1] += rest * a3;
        grad[q as usize - 1] -= rest * a3;
    }
    grad
}

/// The real prefactor on alcove weights.
pub fn hgg_prefactor(idx: VolumeIndex, alphas: [&AlcovePoint; 3]) -> f64 {
    let w: Vec<Vec<C64>> = alphas.iter().map(|p| p.alpha().iter().map(|x| c(*x, 0.0)).collect()).collect();
    weight_prefactor(idx, [&w[0], &w[1], &w[2]]).re
}

/// Frames of a normalized triple after the involution g ↦ (g*)⁻¹.
pub fn involuted_frames(t: &NormalizedTriple) -> [CMat; 3] {
    let u3 = GroupElement::projected(t.u3()).expect("group element");
    [
        involution(&t.b1_plus).matrix().clone(),
        involution(&t.n2_minus).matrix().clone(),
        involution(&u3).matrix().clone(),
    ]
}

/// A·f₁f₂f₃·conj(H^G∘I)·H^G on every admissible index; real on the unitary locus.
pub fn hgg(t: &NormalizedTriple, alphas: [&AlcovePoint; 3]) -> VolumeTable {
    let direct = hg(t);
    let [i1, i2, i3] = involuted_frames(t);
    let mirrored = volume_table(&i1, &i2, &i3);
    VolumeTable::from_fn(t.rank(), |idx| {
        mirrored.get(idx).conj() * direct.get(idx) * hgg_prefactor(idx, alphas)
    })
}

/// Number of admissible indices plus the 2n diagonal parameters, against
/// the closed count (n+4)(n−1)/2 + 2n.
pub fn function_count(n: usize) -> (usize, usize) {
    (VolumeIndex::all(n).len() + 2 * n, (n + 4) * (n - 1) / 2 + 2 * n)
}

/// Diagonal of the third frame's upper triangular factor.
pub fn third_diagonal(t: &NormalizedTriple) -> Vec<C64> {
    diag_entries(&t.b3_plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alcove::validate_alcove;
    use crate::double::random_normalized_triple;
    use crate::matgroup::{diagonal, max_abs, random_sl, random_su};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn idx(j1: usize, j2: usize, j3: usize) -> VolumeIndex {
        VolumeIndex::new(j1 + j2 + j3, j1, j2, j3).unwrap()
    }

    fn example() -> (Vec<C64>, CMat) {
        let d1 = vec![c(5.0, 0.0), c(0.2, 0.0)];
        let b3 = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(3.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        (d1, b3)
    }

    #[test]
    fn admissible_indices() {
        assert_eq!(VolumeIndex::all(2), vec![idx(0, 1, 1), idx(1, 0, 1), idx(1, 1, 0)]);
        assert!(VolumeIndex::new(2, 2, 0, 0).is_err());
        assert!(VolumeIndex::new(3, 1, 1, 0).is_err());
        for n in 2..=8 {
            let (count, closed) = function_count(n);
            assert_eq!(count, closed);
        }
    }

    #[test]
    fn g_matrix_identity_frames() {
        let id = identity(2);
        let g = g_matrix(idx(1, 1, 0), &id, &id, &id);
        assert_eq!(g, identity(2));
        assert_eq!(g_matrix(idx(0, 1, 1), &id, &id, &id).determinant(), c(0.0, 0.0));
        let t = volume_table(&identity(4), &identity(4), &identity(4));
        assert_eq!(t.get(idx(3, 0, 1)), c(1.0, 0.0));
        assert_eq!(t.get(idx(2, 1, 1)), c(0.0, 0.0));
    }

    #[test]
    fn hadamard_bound_for_unitary_frames() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=4 {
            let us: Vec<GroupElement> = (0..3).map(|_| random_su(n, &mut rng)).collect();
            let t = volume_table(&us[0], &us[1], &us[2]);
            assert!(t.max_modulus() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn closed_form_example() {
        let (d1, b3) = example();
        let closed = hg_closed_form(&d1, &b3);
        assert!((closed.get(idx(0, 1, 1)) - c(-3.0, 0.0)).norm() < 1e-14);
        assert!((closed.get(idx(1, 0, 1)) - c(2.5, 0.0)).norm() < 1e-14);
        assert!((closed.get(idx(1, 1, 0)) - c(5.0, 0.0)).norm() < 1e-14);
        let columns = volume_table(&diagonal(&d1), &identity(2), &b3);
        assert!(columns.max_difference(&closed) < 1e-14);
    }

    #[test]
    fn both_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            for _ in 0..40 {
                let t = random_normalized_triple(n, &mut rng);
                let a = hg(&t);
                let b = hg_closed_form(&t.d1(), &t.b3_plus);
                assert!(a.max_difference(&b) <= 1e-10 * a.max_modulus().max(1.0));
            }
        }
    }

    #[test]
    fn left_invariance_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let us: Vec<GroupElement> = (0..3).map(|_| random_sl(3, &mut rng)).collect();
        let base = volume_table(&us[0], &us[1], &us[2]);
        let g = random_sl(3, &mut rng);
        let moved: Vec<CMat> = us.iter().map(|u| g.matrix() * u.matrix()).collect();
        let after = volume_table(&moved[0], &moved[1], &moved[2]);
        assert!(after.max_difference(&base) <= 1e-9 * base.max_modulus());
        let lambda = c(0.7, 0.4);
        let scaled: Vec<CMat> = us.iter().map(|u| u.matrix() * lambda).collect();
        let st = volume_table(&scaled[0], &scaled[1], &scaled[2]);
        let l3 = lambda * lambda * lambda;
        for (k, v) in base.iter() {
            assert!((st.get(*k) - v * l3).norm() <= 1e-12 * base.max_modulus());
        }
        let p = ProjectivePoint::from_table(&base).unwrap();
        assert!(p.distance(&ProjectivePoint::from_table(&st).unwrap()) < 1e-12);
    }

    #[test]
    fn torus_action_is_seen() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_normalized_triple(3, &mut rng);
        let base = hg(&t);
        let s = diagonal(&[c(2.0, 0.0), c(1.0, 0.0), c(0.5, 0.0)]);
        let moved = volume_table(&t.b1_plus, &t.n2_minus, &(t.b3_plus.matrix() * s));
        assert!(moved.max_difference(&base) > 1e-6);
    }

    #[test]
    fn recover_example() {
        let mut values = BTreeMap::new();
        values.insert(idx(0, 1, 1), c(-3.0, 0.0));
        values.insert(idx(1, 0, 1), c(1.0, 0.0));
        values.insert(idx(1, 1, 0), c(1.0, 0.0));
        let table = VolumeTable::new(2, values).unwrap();
        let d3 = [c(2.0, 0.0), c(0.5, 0.0)];
        let n = recover_unipotent(&table, &[c(1.0, 0.0); 2], &d3).unwrap();
        assert!((n[(0, 1)] - c(6.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn recover_identity() {
        let d1 = [c(2.0, 0.0), c(0.5, 0.0)];
        let d3 = [c(0.25, 0.0), c(4.0, 0.0)];
        let table = hg_closed_form(&d1, &diagonal(&d3));
        let n = recover_unipotent(&table, &d1, &d3).unwrap();
        assert!(max_abs(&(n.matrix() - identity(2))) < 1e-14);
    }

    #[test]
    fn recover_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=5 {
            for _ in 0..20 {
                let t = random_normalized_triple(n, &mut rng);
                let table = hg(&t);
                let n3 = recover_unipotent(&table, &t.d1(), &t.d3()).unwrap();
                let b3 = n3.matrix() * diagonal(&t.d3());
                let again = hg_closed_form(&t.d1(), &b3);
                assert!(again.max_difference(&table) <= 1e-9, "n = {n}");
            }
        }
    }

    #[test]
    fn recover_reports_zero_denominator() {
        let d1 = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        let d3 = [c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)];
        // Zero (1,2) entry of the third frame kills the cofactor m(1, 1).
        let mut b3 = identity(3);
        b3[(1, 2)] = c(0.0, 0.0);
        b3[(0, 2)] = c(1.0, 0.0);
        let table = hg_closed_form(&d1, &b3);
        assert!(matches!(recover_unipotent(&table, &d1, &d3), Err(VolumesError::ZeroDenominator(_, _))));
        assert!(matches!(
            recover_unipotent(&table, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], &d3),
            Err(VolumesError::ZeroDenominator(_, _))
        ));
    }

    #[test]
    fn projective_points() {
        let id = identity(2);
        let p = ProjectivePoint::from_table(&volume_table(&id, &id, &id)).unwrap();
        assert_eq!(p.coordinates.get(idx(0, 1, 1)), c(0.0, 0.0));
        let zero = VolumeTable::from_fn(2, |_| c(0.0, 0.0));
        assert_eq!(ProjectivePoint::from_table(&zero), Err(VolumesError::AllZero));
    }

    #[test]
    fn hgg_example_value() {
        let a = validate_alcove(&[0.25, -0.25]).unwrap();
        assert!((hgg_prefactor(idx(1, 1, 0), [&a, &a, &a]) - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn hgg_is_real_on_unitary_locus() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..=3 {
            for _ in 0..20 {
                let t = random_normalized_triple(n, &mut rng);
                let alphas: Vec<AlcovePoint> =
                    [&t.v1, &t.v2, &t.v3].iter().map(|v| crate::alcove::torus_log(v).unwrap()).collect();
                let table = hgg(&t, [&alphas[0], &alphas[1], &alphas[2]]);
                let scale = table.max_modulus().max(1.0);
                for (_, v) in table.iter() {
                    assert!(v.im.abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn table_json_shape() {
        let (d1, b3) = example();
        let t = hg_closed_form(&d1, &b3);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"0,1,1":[-3.0,0.0],"1,0,1":[2.5,0.0],"1,1,0":[5.0,0.0]}"#);
        let back: VolumeTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<VolumeTable>(r#"{"0,1,1":[1.0,0.0]}"#).is_err());
        assert!(serde_json::from_str::<VolumeTable>(r#"{"2,0,0":[1.0,0.0]}"#).is_err());
    }
}
