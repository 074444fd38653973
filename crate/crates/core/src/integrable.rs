//! Local, torus, diagonal and determinant Hamiltonians on a chart of the
//! third framed double, their fields and Poisson brackets.
//!
//! The chart coordinates are (n⁺, d, n⁻, v) with b⁺ = n⁺d and u₃ = b⁺n⁻.
//! Tangent directions, in basis order:
//! n⁺ ↦ n⁺(1 + εE_ij) for i < j, d ↦ d(1 + εE_kk), n⁻ ↦ n⁻(1 + εE_ji) for
//! i < j, and v ↦ v(1 + εE_kk). Diagonals are not constrained to det 1.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::alcove::{torus_log, TorusElement};
use crate::double::{two_form, NormalizedTriple, TangentTriple};
use crate::matgroup::{
    c, diagonal, gauss_decompose, identity, inverse, unipotent_log, unit, dlog, CMat,
    GaussOrder, MatGroupError, C64,
};
use crate::volumes::{g_determinant_derivative, g_matrix, weight_prefactor, weight_prefactor_gradient, VolumeIndex};

/// Largest accepted condition number of the pairing matrix.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Relative residual allowed in the defining relation of a field.
pub const FIELD_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrableError {
    #[error(transparent)]
    Matrix(#[from] MatGroupError),
    #[error("pairing matrix condition number {0:e} exceeds limit")]
    IllConditioned(f64),
    #[error("field fails its defining relation by {0:e}")]
    FieldResidual(f64),
    #[error("index {0} is not valid for rank {1}")]
    BadIndex(String, usize),
    #[error("unparseable index {0:?}")]
    Parse(String),
    #[error("real Hamiltonians need alcove weights at all three punctures")]
    NoWeights,
}

/// Hamiltonian labels, 1-based as in `local(1,2)`, `torus(1)`,
/// `diagonal(2)`, `global(0,1,1)` and `real-global(0,1,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HamiltonianIndex {
    Local(usize, usize),
    Torus(usize),
    Diagonal(usize),
    Global(VolumeIndex),
    RealGlobal(VolumeIndex),
}

impl HamiltonianIndex {
    pub fn validate(&self, n: usize) -> Result<(), IntegrableError> {
        let ok = match *self {
            Self::Local(i, j) => 1 <= i && i < j && j <= n,
            Self::Torus(l) => 1 <= l && l < n,
            Self::Diagonal(l) => 1 <= l && l <= n,
            Self::Global(v) | Self::RealGlobal(v) => VolumeIndex::new(n, v.j1, v.j2, v.j3).is_ok(),
        };
        if ok {
            Ok(())
        } else {
            Err(IntegrableError::BadIndex(self.to_string(), n))
        }
    }

    pub fn locals(n: usize) -> Vec<Self> {
        upper_pairs(n).into_iter().map(|(i, j)| Self::Local(i + 1, j + 1)).collect()
    }

    pub fn tori(n: usize) -> Vec<Self> {
        (1..n).map(Self::Torus).collect()
    }

    pub fn diagonals(n: usize) -> Vec<Self> {
        (1..=n).map(Self::Diagonal).collect()
    }

    pub fn globals(n: usize) -> Vec<Self> {
        VolumeIndex::all(n).into_iter().map(Self::Global).collect()
    }
}

impl fmt::Display for HamiltonianIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Local(i, j) => write!(f, "local({i},{j})"),
            Self::Torus(l) => write!(f, "torus({l})"),
            Self::Diagonal(l) => write!(f, "diagonal({l})"),
            Self::Global(v) => write!(f, "global({v})"),
            Self::RealGlobal(v) => write!(f, "real-global({v})"),
        }
    }
}

impl FromStr for HamiltonianIndex {
    type Err = IntegrableError;
    fn from_str(s: &str) -> Result<Self, IntegrableError> {
        let bad = || IntegrableError::Parse(s.to_string());
        let (name, rest) = s.trim().split_once('(').ok_or_else(bad)?;
        let args: Vec<usize> = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let triple = |a: &[usize]| match a {
            [j1, j2, j3] => VolumeIndex::new(j1 + j2 + j3, *j1, *j2, *j3).map_err(|_| bad()),
            _ => Err(bad()),
        };
        match (name, &args[..]) {
            ("local", [i, j]) => Ok(Self::Local(*i, *j)),
            ("torus", [l]) => Ok(Self::Torus(*l)),
            ("diagonal", [l]) => Ok(Self::Diagonal(*l)),
            ("global", a) => triple(a).map(Self::Global),
            ("real-global", a) => triple(a).map(Self::RealGlobal),
            _ => Err(bad()),
        }
    }
}

impl Serialize for HamiltonianIndex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HamiltonianIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Pairs (i, j), i < j, 0-based, ordered by row then column.
pub fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// One chart direction, 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// n⁺ ↦ n⁺(1 + εE_ij).
    Upper(usize, usize),
    /// d ↦ d(1 + εE_kk).
    Diagonal(usize),
    /// n⁻ ↦ n⁻(1 + εE_ji), stored with i < j.
    Lower(usize, usize),
    /// v ↦ v(1 + εE_kk).
    Torus(usize),
}

pub fn basis(n: usize) -> Vec<Direction> {
    let pairs = upper_pairs(n);
    let mut out: Vec<Direction> = pairs.iter().map(|&(i, j)| Direction::Upper(i, j)).collect();
    out.extend((0..n).map(Direction::Diagonal));
    out.extend(pairs.iter().map(|&(i, j)| Direction::Lower(i, j)));
    out.extend((0..n).map(Direction::Torus));
    out
}

/// Chart of the third framed double at a normalized triple, with the first
/// two frames and the weights held fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    n_plus: CMat,
    d: Vec<C64>,
    n_minus: CMat,
    v: Vec<C64>,
    b1: CMat,
    n2: CMat,
    base_v: Vec<C64>,
    base_weights: Option<[Vec<f64>; 3]>,
}

fn check_unipotent(m: &CMat, upper: bool) -> Result<(), MatGroupError> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            let bad = if i == j {
                (z - c(1.0, 0.0)).norm() > 1e-12
            } else if (i < j) != upper {
                z.norm() > 1e-12
            } else {
                false
            };
            if bad {
                return Err(MatGroupError::NotUnipotent);
            }
        }
    }
    Ok(())
}

impl Chart {
    /// Chart with trivial first two frames and no weights.
    pub fn new(n_plus: CMat, d: Vec<C64>, n_minus: CMat, v: Vec<C64>) -> Result<Self, IntegrableError> {
        let n = d.len();
        for m in [&n_plus, &n_minus] {
            if m.nrows() != n || m.ncols() != n {
                return Err(MatGroupError::SizeMismatch(n, m.nrows()).into());
            }
        }
        if v.len() != n {
            return Err(MatGroupError::SizeMismatch(n, v.len()).into());
        }
        check_unipotent(&n_plus, true)?;
        check_unipotent(&n_minus, false)?;
        if d.iter().chain(&v).any(|z| z.norm() == 0.0) {
            return Err(MatGroupError::Singular.into());
        }
        let base_weights = None;
        Ok(Self { base_v: v.clone(), n_plus, d, n_minus, v, b1: identity(n), n2: identity(n), base_weights })
    }

    pub fn from_triple(t: &NormalizedTriple) -> Result<Self, IntegrableError> {
        let mut chart = Self::new(t.n3_plus(), t.d3(), t.n3_minus.matrix().clone(), t.v3.entries().to_vec())?;
        chart.b1 = t.b1_plus.matrix().clone();
        chart.n2 = t.n2_minus.matrix().clone();
        let weights: Option<Vec<Vec<f64>>> = [&t.v1, &t.v2, &t.v3]
            .iter()
            .map(|v| torus_log(v).ok().map(|p| p.alpha().to_vec()))
            .collect();
        chart.base_weights = weights.map(|w| [w[0].clone(), w[1].clone(), w[2].clone()]);
        Ok(chart)
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn dimension(&self) -> usize {
        let n = self.rank();
        n * (n - 1) + 2 * n
    }

    pub fn n_plus(&self) -> &CMat {
        &self.n_plus
    }

    pub fn n_minus(&self) -> &CMat {
        &self.n_minus
    }

    pub fn d(&self) -> &[C64] {
        &self.d
    }

    pub fn v(&self) -> &[C64] {
        &self.v
    }

    pub fn b_plus(&self) -> CMat {
        &self.n_plus * diagonal(&self.d)
    }

    pub fn u3(&self) -> CMat {
        self.b_plus() * &self.n_minus
    }

    /// The variation (β⁺, μ⁻, ζ) of a basis direction.
    pub fn tangent(&self, dir: Direction) -> TangentTriple {
        let n = self.rank();
        let mut t = TangentTriple::zero(n);
        match dir {
            Direction::Upper(i, j) => t.beta_plus[(i, j)] = self.d[j] / self.d[i],
            Direction::Diagonal(k) => t.beta_plus[(k, k)] = c(1.0, 0.0),
            Direction::Lower(i, j) => t.mu_minus[(j, i)] = c(1.0, 0.0),
            Direction::Torus(k) => t.zeta[(k, k)] = c(1.0, 0.0),
        }
        t
    }

    /// Linear combination of basis variations.
    pub fn tangent_of(&self, coords: &[C64]) -> TangentTriple {
        basis(self.rank())
            .into_iter()
            .zip(coords)
            .fold(TangentTriple::zero(self.rank()), |acc, (dir, x)| acc.add(&self.tangent(dir).scaled(*x)))
    }

    /// The chart point moved by h along `dir`.
    pub fn displaced(&self, dir: Direction, h: C64) -> Self {
        let n = self.rank();
        let mut out = self.clone();
        match dir {
            Direction::Upper(i, j) => out.n_plus = &self.n_plus * (identity(n) + unit(n, i, j) * h),
            Direction::Diagonal(k) => out.d[k] *= c(1.0, 0.0) + h,
            Direction::Lower(i, j) => out.n_minus = &self.n_minus * (identity(n) + unit(n, j, i) * h),
            Direction::Torus(k) => out.v[k] *= c(1.0, 0.0) + h,
        }
        out
    }

    /// The matrix Ω of the two-form on the chart basis.
    pub fn omega(&self) -> CMat {
        let dirs = basis(self.rank());
        let tangents: Vec<TangentTriple> = dirs.iter().map(|d| self.tangent(*d)).collect();
        let v = diagonal(&self.v);
        let m = dirs.len();
        let mut omega = CMat::zeros(m, m);
        for a in 0..m {
            for b in a + 1..m {
                let w = two_form(&self.n_minus, &v, &tangents[a], &tangents[b]);
                omega[(a, b)] = w;
                omega[(b, a)] = -w;
            }
        }
        omega
    }

    /// Torus weights of the third puncture, continued from the base point.
    fn third_weights(&self) -> Vec<C64> {
        let two_pi_i = c(0.0, 2.0 * PI);
        match &self.base_weights {
            Some(w) => w[2]
                .iter()
                .zip(self.v.iter().zip(&self.base_v))
                .map(|(a, (v, v0))| c(*a, 0.0) + (v / v0).ln() / two_pi_i)
                .collect(),
            None => self.v.iter().map(|v| v.ln() / two_pi_i).collect(),
        }
    }

    /// Value of a Hamiltonian at the chart point.
    pub fn value(&self, idx: HamiltonianIndex) -> Result<C64, IntegrableError> {
        idx.validate(self.rank())?;
        Ok(match idx {
            HamiltonianIndex::Local(i, j) => unipotent_log(&self.n_plus)?.matrix()[(i - 1, j - 1)],
            HamiltonianIndex::Torus(l) => self.third_weights()[l - 1],
            HamiltonianIndex::Diagonal(l) => self.d[l - 1],
            HamiltonianIndex::Global(vi) => g_matrix(vi, &self.b1, &self.n2, &self.b_plus()).determinant(),
            HamiltonianIndex::RealGlobal(vi) => {
                let w = self.base_weights.as_ref().ok_or(IntegrableError::NoWeights)?;
                let w1: Vec<C64> = w[0].iter().map(|x| c(*x, 0.0)).collect();
                let w2: Vec<C64> = w[1].iter().map(|x| c(*x, 0.0)).collect();
                let w3 = self.third_weights();
                let [i1, i2, i3] = self.involuted_frames()?;
                let mirrored = g_matrix(vi, &i1, &i2, &i3).determinant().conj();
                let direct = g_matrix(vi, &self.b1, &self.n2, &self.b_plus()).determinant();
                weight_prefactor(vi, [&w1, &w2, &w3]) * mirrored * direct
            }
        })
    }

    fn involuted_frames(&self) -> Result<[CMat; 3], IntegrableError> {
        let inv = |m: &CMat| inverse(&m.adjoint());
        Ok([inv(&self.b1)?, inv(&self.n2)?, inv(&self.u3())?])
    }

    /// Right-trivialized variation u₃⁻¹δu₃ of a basis direction.
    fn frame_variation(&self, dir: Direction) -> CMat {
        let n = self.rank();
        let t = self.tangent(dir);
        let n_inv = self.n_minus.clone().solve_lower_triangular(&identity(n)).expect("unipotent");
        n_inv * t.beta_plus * &self.n_minus + t.mu_minus
    }

    /// Differential of a Hamiltonian on the chart basis, computed from the
    /// series for the logarithm and multilinearity of determinants. Real
    /// Hamiltonians are differentiated through their holomorphic extension.
    pub fn differential(&self, idx: HamiltonianIndex) -> Result<Vec<C64>, IntegrableError> {
        let n = self.rank();
        idx.validate(n)?;
        let dirs = basis(n);
        let zero = c(0.0, 0.0);
        let mut out = vec![zero; dirs.len()];
        match idx {
            HamiltonianIndex::Local(i, j) => {
                let xi = unipotent_log(&self.n_plus)?;
                for (a, dir) in dirs.iter().enumerate() {
                    if let Direction::Upper(p, q) = *dir {
                        out[a] = dlog(&xi, &unit(n, p, q))?[(i - 1, j - 1)];
                    }
                }
            }
            HamiltonianIndex::Torus(l) => {
                for (a, dir) in dirs.iter().enumerate() {
                    if *dir == Direction::Torus(l - 1) {
                        out[a] = c(1.0, 0.0) / c(0.0, 2.0 * PI);
                    }
                }
            }
            HamiltonianIndex::Diagonal(l) => {
                for (a, dir) in dirs.iter().enumerate() {
                    if *dir == Direction::Diagonal(l - 1) {
                        out[a] = self.d[l - 1];
                    }
                }
            }
            HamiltonianIndex::Global(vi) => out = self.global_differential(vi),
            HamiltonianIndex::RealGlobal(vi) => {
                let w = self.base_weights.as_ref().ok_or(IntegrableError::NoWeights)?;
                let w1: Vec<C64> = w[0].iter().map(|x| c(*x, 0.0)).collect();
                let w2: Vec<C64> = w[1].iter().map(|x| c(*x, 0.0)).collect();
                let w3 = self.third_weights();
                let pre = weight_prefactor(vi, [&w1, &w2, &w3]);
                let grad = weight_prefactor_gradient(vi, [&w1, &w2, &w3]);
                let frames = self.involuted_frames()?;
                let b_plus = self.b_plus();
                let mirrored = g_matrix(vi, &frames[0], &frames[1], &frames[2]).determinant().conj();
                let direct = g_matrix(vi, &self.b1, &self.n2, &b_plus).determinant();
                let d_direct = self.global_differential(vi);
                for (a, dir) in dirs.iter().enumerate() {
                    // I(u₃(1 + εX)) = I(u₃)(1 − ε̄X* + …), so the conjugated
                    // factor varies holomorphically in ε.
                    let x = self.frame_variation(*dir);
                    let du = -(&frames[2] * x.adjoint());
                    let d_mirrored = g_determinant_derivative(vi, &frames[0], &frames[1], &frames[2], &du).conj();
                    let d_pre = match *dir {
                        Direction::Torus(k) => grad[k] / c(0.0, 2.0 * PI),
                        _ => zero,
                    };
                    out[a] = d_pre * mirrored * direct + pre * d_mirrored * direct + pre * mirrored * d_direct[a];
                }
            }
        }
        Ok(out)
    }

    fn global_differential(&self, vi: VolumeIndex) -> Vec<C64> {
        let n = self.rank();
        let b_plus = self.b_plus();
        let dd = diagonal(&self.d);
        basis(n)
            .iter()
            .map(|dir| {
                let du = match *dir {
                    Direction::Upper(i, j) => &self.n_plus * unit(n, i, j) * &dd,
                    Direction::Diagonal(k) => &b_plus * unit(n, k, k),
                    _ => return c(0.0, 0.0),
                };
                g_determinant_derivative(vi, &self.b1, &self.n2, &b_plus, &du)
            })
            .collect()
    }

    /// Central finite difference of a Hamiltonian along `dir`.
    pub fn finite_difference(&self, idx: HamiltonianIndex, dir: Direction, h: f64) -> Result<C64, IntegrableError> {
        let hp = self.displaced(dir, c(h, 0.0)).value(idx)?;
        let hm = self.displaced(dir, c(-h, 0.0)).value(idx)?;
        Ok((hp - hm) / c(2.0 * h, 0.0))
    }
}

/// The pairing A between the n⁺ directions (rows) and the mirrored n⁻
/// directions (columns), both indexed by `upper_pairs`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingMatrix {
    pub pairs: Vec<(usize, usize)>,
    pub matrix: CMat,
    pub condition: f64,
}

/// dH_{ij} along the n⁺ directions: entry (row p, column q) is the
/// derivative of H at pair q along the direction of pair p.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    pub pairs: Vec<(usize, usize)>,
    pub matrix: CMat,
}

fn condition_number(m: &CMat) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn pairing_matrix(chart: &Chart) -> Result<PairingMatrix, IntegrableError> {
    let n = chart.rank();
    let pairs = upper_pairs(n);
    let v = diagonal(chart.v());
    let mut a = CMat::zeros(pairs.len(), pairs.len());
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let x = chart.tangent(Direction::Upper(i, j));
        for (s, &(p, q)) in pairs.iter().enumerate() {
            a[(r, s)] = two_form(chart.n_minus(), &v, &x, &chart.tangent(Direction::Lower(p, q)));
        }
    }
    let condition = condition_number(&a);
    if condition > CONDITION_LIMIT {
        return Err(IntegrableError::IllConditioned(condition));
    }
    Ok(PairingMatrix { pairs, matrix: a, condition })
}

pub fn coefficient_matrix(chart: &Chart) -> Result<CoefficientMatrix, IntegrableError> {
    let n = chart.rank();
    let pairs = upper_pairs(n);
    let xi = unipotent_log(chart.n_plus())?;
    let mut m = CMat::zeros(pairs.len(), pairs.len());
    for (r, &(p, q)) in pairs.iter().enumerate() {
        let dl = dlog(&xi, &unit(n, p, q))?;
        for (s, &(i, j)) in pairs.iter().enumerate() {
            m[(r, s)] = dl[(i, j)];
        }
    }
    Ok(CoefficientMatrix { pairs, matrix: m })
}

pub fn local_hamiltonians(chart: &Chart) -> Result<BTreeMap<HamiltonianIndex, C64>, IntegrableError> {
    HamiltonianIndex::locals(chart.rank()).into_iter().map(|h| Ok((h, chart.value(h)?))).collect()
}

/// Normalized logarithms (1/2πi)log v_l, l = 1..n−1: the alcove branch on
/// the unitary locus, the principal branch otherwise.
pub fn torus_hamiltonians(v: &TorusElement) -> Vec<C64> {
    let n = v.rank();
    match torus_log(v) {
        Ok(p) => p.alpha()[..n - 1].iter().map(|a| c(*a, 0.0)).collect(),
        Err(_) => v.entries()[..n - 1].iter().map(|z| z.ln() / c(0.0, 2.0 * PI)).collect(),
    }
}

pub fn diagonal_hamiltonians(t: &NormalizedTriple) -> Vec<C64> {
    t.d3()
}

/// Diagonal of the n⁺dn⁻ factorization of a frame.
pub fn frame_diagonal(u3: &CMat) -> Result<Vec<C64>, IntegrableError> {
    Ok(gauss_decompose(u3, GaussOrder::UpperDiagLower)?.diagonal_entries())
}

/// Field coordinates X on the chart basis solving dF(P) = −ω(P, X).
pub fn field_coordinates(chart: &Chart, idx: HamiltonianIndex) -> Result<Vec<C64>, IntegrableError> {
    pairing_matrix(chart)?;
    let df = chart.differential(idx)?;
    let omega = chart.omega();
    let rhs = -CMat::from_column_slice(df.len(), 1, &df);
    let x = omega.clone().lu().solve(&rhs).ok_or(MatGroupError::Singular)?;
    let residual = (&omega * &x - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = omega.iter().map(|z| z.norm()).fold(0.0, f64::max) * x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let relative = residual / scale.max(rhs.iter().map(|z| z.norm()).fold(0.0, f64::max)).max(f64::MIN_POSITIVE);
    if relative > FIELD_TOL {
        return Err(IntegrableError::FieldResidual(relative));
    }
    Ok(x.iter().copied().collect())
}

pub fn hamiltonian_field(chart: &Chart, idx: HamiltonianIndex) -> Result<TangentTriple, IntegrableError> {
    Ok(chart.tangent_of(&field_coordinates(chart, idx)?))
}

/// Field of a local Hamiltonian as −Σ (A⁻¹C) times the mirrored n⁻
/// directions, without the full two-form solve.
pub fn local_field_from_coefficients(chart: &Chart, i: usize, j: usize) -> Result<TangentTriple, IntegrableError> {
    HamiltonianIndex::Local(i, j).validate(chart.rank())?;
    let a = pairing_matrix(chart)?;
    let cm = coefficient_matrix(chart)?;
    let m = a.matrix.clone().lu().solve(&cm.matrix).ok_or(MatGroupError::Singular)?;
    let col = a.pairs.iter().position(|&p| p == (i - 1, j - 1)).expect("pair present");
    let mut field = TangentTriple::zero(chart.rank());
    for (r, &(p, q)) in a.pairs.iter().enumerate() {
        field.mu_minus[(q, p)] = -m[(r, col)];
    }
    Ok(field)
}

fn pair_form(omega: &CMat, x: &[C64], y: &[C64]) -> C64 {
    let m = x.len();
    let mut total = c(0.0, 0.0);
    for a in 0..m {
        for b in a + 1..m {
            total += omega[(a, b)] * (x[a] * y[b] - x[b] * y[a]);
        }
    }
    total
}

/// {F, G} = ω(X_F, X_G).
pub fn poisson_bracket(chart: &Chart, f: HamiltonianIndex, g: HamiltonianIndex) -> Result<C64, IntegrableError> {
    let xf = field_coordinates(chart, f)?;
    let xg = field_coordinates(chart, g)?;
    Ok(pair_form(&chart.omega(), &xf, &xg))
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Bracket moduli |{F, G}| / max(1, ‖X_F‖‖X_G‖) for every pair of `family`,
/// row-major over the upper triangle.
pub fn bracket_table(
    chart: &Chart,
    family: &[HamiltonianIndex],
) -> Result<Vec<(HamiltonianIndex, HamiltonianIndex, f64)>, IntegrableError> {
    let omega = chart.omega();
    let fields: Vec<Vec<C64>> = family.iter().map(|h| field_coordinates(chart, *h)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for a in 0..family.len() {
        for b in a + 1..family.len() {
            let value = pair_form(&omega, &fields[a], &fields[b]).norm();
            out.push((family[a], family[b], value / (norm(&fields[a]) * norm(&fields[b])).max(1.0)));
        }
    }
    Ok(out)
}

/// #{H_ij} + #{H^V_l}.
pub fn local_system_count(n: usize) -> usize {
    HamiltonianIndex::locals(n).len() + HamiltonianIndex::tori(n).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alcove::{torus_exp, validate_alcove};
    use crate::double::random_normalized_triple;
    use crate::matgroup::max_abs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simple_chart() -> Chart {
        Chart::new(identity(2), vec![c(1.0, 0.0); 2], identity(2), vec![c(2.0, 0.0), c(0.5, 0.0)]).unwrap()
    }

    fn upper(n: usize, entries: &[((usize, usize), f64)]) -> CMat {
        let mut m = identity(n);
        for &((i, j), x) in entries {
            m[(i, j)] = c(x, 0.0);
        }
        m
    }

    #[test]
    fn index_text_round_trip() {
        for s in ["local(1,2)", "torus(1)", "diagonal(3)", "global(0,1,2)", "real-global(1,1,1)"] {
            let h: HamiltonianIndex = s.parse().unwrap();
            assert_eq!(h.to_string(), s);
        }
        assert!("local(1)".parse::<HamiltonianIndex>().is_err());
        assert!("global(3,0,0)".parse::<HamiltonianIndex>().is_err());
        assert!(HamiltonianIndex::Local(2, 2).validate(3).is_err());
        assert!(HamiltonianIndex::Torus(3).validate(3).is_err());
        assert_eq!(serde_json::to_string(&HamiltonianIndex::Local(1, 2)).unwrap(), "\"local(1,2)\"");
    }

    #[test]
    fn local_values() {
        let n3 = upper(3, &[((0, 1), 1.0), ((1, 2), 1.0)]);
        let chart = Chart::new(n3, vec![c(1.0, 0.0); 3], identity(3), vec![c(1.0, 0.0); 3]).unwrap();
        let h = local_hamiltonians(&chart).unwrap();
        assert!((h[&HamiltonianIndex::Local(1, 2)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((h[&HamiltonianIndex::Local(2, 3)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((h[&HamiltonianIndex::Local(1, 3)] - c(-0.5, 0.0)).norm() < 1e-15);
        let chart = Chart::new(upper(2, &[((0, 1), 0.3)]), vec![c(1.0, 0.0); 2], identity(2), vec![c(1.0, 0.0); 2])
            .unwrap();
        assert_eq!(chart.value(HamiltonianIndex::Local(1, 2)).unwrap(), c(0.3, 0.0));
    }

    #[test]
    fn torus_values() {
        let v = torus_exp(&validate_alcove(&[0.25, -0.25]).unwrap());
        assert!((torus_hamiltonians(&v)[0] - c(0.25, 0.0)).norm() < 1e-15);
        assert_eq!(torus_hamiltonians(&TorusElement::identity(3)), vec![c(0.0, 0.0); 2]);
        let w = TorusElement::new(vec![c(2.0, 0.0), c(0.5, 0.0)]).unwrap();
        let expected = c(2f64.ln(), 0.0) / c(0.0, 2.0 * PI);
        assert!((torus_hamiltonians(&w)[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn diagonal_values() {
        let u = upper(3, &[((0, 2), 4.0)]);
        assert_eq!(frame_diagonal(&u).unwrap(), vec![c(1.0, 0.0); 3]);
        let d = frame_diagonal(&diagonal(&[c(2.0, 0.0), c(0.5, 0.0)])).unwrap();
        assert_eq!(d, vec![c(2.0, 0.0), c(0.5, 0.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_normalized_triple(3, &mut rng);
        let prod: C64 = diagonal_hamiltonians(&t).iter().product();
        assert!((prod - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn pairing_example() {
        let a = pairing_matrix(&simple_chart()).unwrap();
        assert!((a.matrix[(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
        let x = field_coordinates(&simple_chart(), HamiltonianIndex::Local(1, 2)).unwrap();
        let field = simple_chart().tangent_of(&x);
        let mut expected = TangentTriple::zero(2);
        expected.mu_minus[(1, 0)] = c(-0.5, 0.0);
        assert!(field.add(&expected.scaled(c(-1.0, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn pairing_sparsity_and_invertibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t = random_normalized_triple(3, &mut rng);
            let chart = Chart::from_triple(&t).unwrap();
            let a = pairing_matrix(&chart).unwrap();
            for (r, &(i, j)) in a.pairs.iter().enumerate() {
                for (s, &(p, q)) in a.pairs.iter().enumerate() {
                    // Column (p, q) is the lower direction E_qp.
                    let nested = i <= p && q <= j;
                    if !nested {
                        assert_eq!(a.matrix[(r, s)], c(0.0, 0.0));
                    }
                }
            }
            assert!(a.condition < CONDITION_LIMIT);
        }
    }

    #[test]
    fn coefficient_matrix_cases() {
        let c2 = coefficient_matrix(&simple_chart()).unwrap();
        assert_eq!(c2.matrix, CMat::from_element(1, 1, c(1.0, 0.0)));
        let chart = Chart::new(identity(3), vec![c(1.0, 0.0); 3], identity(3), vec![c(1.0, 0.0); 3]).unwrap();
        assert_eq!(coefficient_matrix(&chart).unwrap().matrix, identity(3));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let chart = Chart::from_triple(&random_normalized_triple(3, &mut rng)).unwrap();
        let cm = coefficient_matrix(&chart).unwrap();
        for (r, &(p, q)) in cm.pairs.iter().enumerate() {
            for (s, &(i, j)) in cm.pairs.iter().enumerate() {
                let fd = chart.finite_difference(HamiltonianIndex::Local(i + 1, j + 1), Direction::Upper(p, q), 1e-5).unwrap();
                assert!((fd - cm.matrix[(r, s)]).norm() < 1e-6);
                if r == s {
                    assert!((cm.matrix[(r, s)] - c(1.0, 0.0)).norm() < 1e-14);
                }
                // H_ij only sees entries nested inside (i, j).
                if !(i <= p && q <= j) {
                    assert_eq!(cm.matrix[(r, s)], c(0.0, 0.0));
                }
            }
        }
    }

    fn all_indices(n: usize) -> Vec<HamiltonianIndex> {
        let mut v = HamiltonianIndex::locals(n);
        v.extend(HamiltonianIndex::tori(n));
        v.extend(HamiltonianIndex::diagonals(n));
        v.extend(HamiltonianIndex::globals(n));
        v.extend(VolumeIndex::all(n).into_iter().map(HamiltonianIndex::RealGlobal));
        v
    }

    #[test]
    fn differentials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for n in [2, 3] {
            let chart = Chart::from_triple(&random_normalized_triple(n, &mut rng)).unwrap();
            for idx in all_indices(n) {
                let df = chart.differential(idx).unwrap();
                let scale = df.iter().map(|z| z.norm()).fold(1.0, f64::max);
                for (a, dir) in basis(n).into_iter().enumerate() {
                    let fd = chart.finite_difference(idx, dir, 1e-5).unwrap();
                    assert!((fd - df[a]).norm() < 1e-6 * scale, "{idx} along {dir:?}: {fd} vs {}", df[a]);
                }
            }
        }
    }

    #[test]
    fn finite_difference_error_is_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let chart = Chart::from_triple(&random_normalized_triple(3, &mut rng)).unwrap();
        let idx = HamiltonianIndex::Local(1, 3);
        let dir = Direction::Upper(1, 2);
        let exact = chart.differential(idx).unwrap()[basis(3).iter().position(|d| *d == dir).unwrap()];
        let e1 = (chart.finite_difference(idx, dir, 1e-2).unwrap() - exact).norm();
        let e2 = (chart.finite_difference(idx, dir, 5e-3).unwrap() - exact).norm();
        assert!(e1 / e2 > 3.5 || e1 < 1e-13);
    }

    #[test]
    fn fields_agree_with_coefficient_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for n in [2, 3, 4] {
            let chart = Chart::from_triple(&random_normalized_triple(n, &mut rng)).unwrap();
            for h in HamiltonianIndex::locals(n) {
                let HamiltonianIndex::Local(i, j) = h else { unreachable!() };
                let a = hamiltonian_field(&chart, h).unwrap();
                let b = local_field_from_coefficients(&chart, i, j).unwrap();
                assert!(a.add(&b.scaled(c(-1.0, 0.0))).norm() <= 1e-8 * a.norm().max(1.0));
            }
        }
    }

    #[test]
    fn field_at_trivial_unipotent_is_single_direction() {
        let v = vec![c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0)];
        let chart = Chart::new(identity(3), vec![c(1.0, 0.0); 3], identity(3), v).unwrap();
        let a = pairing_matrix(&chart).unwrap();
        for h in HamiltonianIndex::locals(3) {
            let HamiltonianIndex::Local(i, j) = h else { unreachable!() };
            let f = hamiltonian_field(&chart, h).unwrap();
            let r = a.pairs.iter().position(|&p| p == (i - 1, j - 1)).unwrap();
            for p in 0..3 {
                for q in 0..3 {
                    let expected = if (p, q) == (j - 1, i - 1) { -a.matrix[(r, r)].inv() } else { c(0.0, 0.0) };
                    assert!((f.mu_minus[(p, q)] - expected).norm() < 1e-12);
                }
            }
            assert!(max_abs(&f.beta_plus) < 1e-12 && max_abs(&f.zeta) < 1e-12);
        }
    }

    #[test]
    fn defining_relation_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let chart = Chart::from_triple(&random_normalized_triple(3, &mut rng)).unwrap();
        let v = diagonal(chart.v());
        for idx in all_indices(3) {
            let x = hamiltonian_field(&chart, idx).unwrap();
            let df = chart.differential(idx).unwrap();
            for (a, dir) in basis(3).into_iter().enumerate() {
                let w = two_form(chart.n_minus(), &v, &chart.tangent(dir), &x);
                assert!((df[a] + w).norm() <= 1e-8 * x.norm().max(1.0));
            }
        }
    }

    #[test]
    fn brackets_vanish_for_commuting_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for n in [2, 3] {
            for _ in 0..10 {
                let chart = Chart::from_triple(&random_normalized_triple(n, &mut rng)).unwrap();
                // Torus functions pair with the diagonal ones and see the torus
                // dependence of the determinants, so they form their own family.
                let mut with_diagonal = HamiltonianIndex::diagonals(n);
                with_diagonal.extend(HamiltonianIndex::globals(n));
                for extra in [HamiltonianIndex::tori(n), with_diagonal] {
                    let mut family = HamiltonianIndex::locals(n);
                    family.extend(extra);
                    for (f, g, r) in bracket_table(&chart, &family).unwrap() {
                        assert!(r <= 1e-8, "{{{f}, {g}}} = {r:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let chart = Chart::from_triple(&random_normalized_triple(3, &mut rng)).unwrap();
        let f = HamiltonianIndex::RealGlobal(VolumeIndex::new(3, 1, 1, 1).unwrap());
        let g = HamiltonianIndex::Torus(1);
        assert_eq!(poisson_bracket(&chart, f, f).unwrap(), c(0.0, 0.0));
        let fg = poisson_bracket(&chart, f, g).unwrap();
        let gf = poisson_bracket(&chart, g, f).unwrap();
        assert!((fg + gf).norm() <= 1e-12 * fg.norm().max(1.0));
        // Away from normalized data there are no weights to build real Hamiltonians.
        assert_eq!(simple_chart().value(HamiltonianIndex::RealGlobal(VolumeIndex::new(2, 1, 1, 0).unwrap())), Err(IntegrableError::NoWeights));
    }

    #[test]
    fn omega_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let chart = Chart::from_triple(&random_normalized_triple(3, &mut rng)).unwrap();
        let omega = chart.omega();
        let dirs = basis(3);
        for (a, da) in dirs.iter().enumerate() {
            for (b, db) in dirs.iter().enumerate() {
                let lowerish = |d: &Direction| matches!(d, Direction::Lower(..) | Direction::Diagonal(_));
                if lowerish(da) && lowerish(db) {
                    assert_eq!(omega[(a, b)], c(0.0, 0.0));
                }
                assert_eq!(omega[(a, b)], -omega[(b, a)]);
            }
        }
    }

    #[test]
    fn ill_conditioned_pairing_is_rejected() {
        let v3 = vec![c(1e13, 0.0), c(1.0, 0.0), c(1e-13, 0.0)];
        let chart = Chart::new(identity(3), vec![c(1.0, 0.0); 3], identity(3), v3).unwrap();
        assert!(matches!(pairing_matrix(&chart), Err(IntegrableError::IllConditioned(_))));
        assert!(matches!(
            field_coordinates(&chart, HamiltonianIndex::Local(1, 2)),
            Err(IntegrableError::IllConditioned(_))
        ));
    }

    #[test]
    fn counts() {
        for n in 2..=10 {
            assert_eq!(local_system_count(n), n * (n - 1) / 2 + n - 1);
        }
    }
}
