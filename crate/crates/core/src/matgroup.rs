//! Complex matrix core: group elements, Gauss factorizations, the nilpotent
//! logarithm/exponential pair and the derivative of the exponential map.
//!
//! Everything here is double precision. Factorizations work on arbitrary
//! square matrices; [`GroupElement`] adds the unit-determinant check.

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Determinant and unitarity tolerance for group elements.
pub const GROUP_TOL: f64 = 1e-10;
/// Relative threshold below which a principal minor counts as zero.
pub const MINOR_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatGroupError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("determinant {0} differs from 1")]
    DeterminantNotOne(C64),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("principal minor {0} vanishes; point is outside the generic locus")]
    SingularMinor(usize),
    #[error("matrix is not unipotent triangular")]
    NotUnipotent,
    #[error("matrix is not strictly triangular")]
    NotStrictlyTriangular,
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("matrix is singular")]
    Singular,
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Elementary matrix with a single unit entry at `(i, j)` (zero based).
pub fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

pub fn diagonal(entries: &[C64]) -> CMat {
    let n = entries.len();
    let mut m = CMat::zeros(n, n);
    for (k, e) in entries.iter().enumerate() {
        m[(k, k)] = *e;
    }
    m
}

pub fn diag_entries(m: &CMat) -> Vec<C64> {
    (0..m.nrows()).map(|k| m[(k, k)]).collect()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Induced infinity norm (largest absolute row sum).
pub fn inf_norm(m: &CMat) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows()).map(|k| m[(k, k)]).sum()
}

pub fn inverse(m: &CMat) -> Result<CMat, MatGroupError> {
    m.clone().try_inverse().ok_or(MatGroupError::Singular)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Complex square matrix with finite entries.
///
/// Serializes as an array of rows, each entry an `[re, im]` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSquareMatrix(CMat);

impl ComplexSquareMatrix {
    pub fn new(m: CMat) -> Result<Self, MatGroupError> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(MatGroupError::NotSquare(m.nrows(), m.ncols()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MatGroupError::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, MatGroupError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(MatGroupError::NotSquare(n, bad.len()));
        }
        Self::new(CMat::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }
}

impl Deref for ComplexSquareMatrix {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

pub fn serialize_matrix<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    rows.serialize(s)
}

pub fn deserialize_matrix<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
    let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
    let rows: Vec<Vec<C64>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
        .collect();
    ComplexSquareMatrix::from_rows(&rows)
        .map(ComplexSquareMatrix::into_inner)
        .map_err(serde::de::Error::custom)
}

impl Serialize for ComplexSquareMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_matrix(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ComplexSquareMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        deserialize_matrix(d).map(ComplexSquareMatrix)
    }
}

/// Element of SL(n, C): a square matrix with determinant one.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement(ComplexSquareMatrix);

impl GroupElement {
    pub fn new(m: CMat) -> Result<Self, MatGroupError> {
        let m = ComplexSquareMatrix::new(m)?;
        let det = m.determinant();
        if (det - C64::new(1.0, 0.0)).norm() > GROUP_TOL {
            return Err(MatGroupError::DeterminantNotOne(det));
        }
        Ok(Self(m))
    }

    /// Rescales an invertible matrix by an n-th root of its determinant.
    pub fn projected(m: CMat) -> Result<Self, MatGroupError> {
        let n = m.nrows();
        let det = m.determinant();
        if det.norm() == 0.0 {
            return Err(MatGroupError::Singular);
        }
        let root = det.powf(1.0 / n as f64);
        Self::new(m / root)
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexSquareMatrix(identity(n)))
    }

    /// Checks the element is unitary, returning it unchanged when it is.
    pub fn assert_unitary(self) -> Result<Self, MatGroupError> {
        let r = unitarity_residual(&self);
        if r > GROUP_TOL {
            return Err(MatGroupError::NotUnitary(r));
        }
        Ok(self)
    }

    pub fn inverse(&self) -> GroupElement {
        // det = 1 so the inverse always exists.
        GroupElement(ComplexSquareMatrix(inverse(&self.0).expect("unit determinant")))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.size()
    }
}

impl Deref for GroupElement {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let m = deserialize_matrix(d)?;
        GroupElement::new(m).map_err(serde::de::Error::custom)
    }
}

pub fn unitarity_residual(g: &CMat) -> f64 {
    let n = g.nrows();
    max_abs(&(g * g.adjoint() - identity(n)))
}

/// Order of the factors in a Gauss decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussOrder {
    /// g = n⁺ d n⁻, governed by the trailing principal minors.
    UpperDiagLower,
    /// g = n⁻ d n⁺, governed by the leading principal minors.
    LowerDiagUpper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussFactors {
    pub upper_unipotent: CMat,
    pub diagonal: CMat,
    pub lower_unipotent: CMat,
    pub order: GaussOrder,
}

impl GaussFactors {
    pub fn reconstruct(&self) -> CMat {
        match self.order {
            GaussOrder::UpperDiagLower => {
                &self.upper_unipotent * &self.diagonal * &self.lower_unipotent
            }
            GaussOrder::LowerDiagUpper => {
                &self.lower_unipotent * &self.diagonal * &self.upper_unipotent
            }
        }
    }

    /// Upper triangular factor b⁺: n⁺d for `UpperDiagLower`, d n⁺ otherwise.
    pub fn upper_triangular(&self) -> CMat {
        match self.order {
            GaussOrder::UpperDiagLower => &self.upper_unipotent * &self.diagonal,
            GaussOrder::LowerDiagUpper => &self.diagonal * &self.upper_unipotent,
        }
    }

    pub fn diagonal_entries(&self) -> Vec<C64> {
        diag_entries(&self.diagonal)
    }
}

/// Doolittle elimination without pivoting: g = L D U with the k-th pivot
/// equal to the ratio of consecutive leading principal minors.
fn ldu(g: &CMat) -> Result<(CMat, CMat, CMat), MatGroupError> {
    let n = g.nrows();
    let scale = inf_norm(g).max(f64::MIN_POSITIVE);
    let mut a = g.clone();
    let mut lower = identity(n);
    let mut pivots = Vec::with_capacity(n);
    let mut minor = C64::new(1.0, 0.0);
    for k in 0..n {
        let pivot = a[(k, k)];
        minor *= pivot;
        if minor.norm() < MINOR_TOL * scale.powi(k as i32 + 1) || pivot.norm() == 0.0 {
            return Err(MatGroupError::SingularMinor(k + 1));
        }
        for i in k + 1..n {
            let factor = a[(i, k)] / pivot;
            lower[(i, k)] = factor;
            for j in k..n {
                let akj = a[(k, j)];
                a[(i, j)] -= factor * akj;
            }
        }
        pivots.push(pivot);
    }
    let mut upper = identity(n);
    for k in 0..n {
        for j in k + 1..n {
            upper[(k, j)] = a[(k, j)] / pivots[k];
        }
    }
    Ok((lower, diagonal(&pivots), upper))
}

fn flip(m: &CMat) -> CMat {
    let n = m.nrows();
    CMat::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)])
}

pub fn gauss_decompose(g: &CMat, order: GaussOrder) -> Result<GaussFactors, MatGroupError> {
    if g.nrows() != g.ncols() {
        return Err(MatGroupError::NotSquare(g.nrows(), g.ncols()));
    }
    match order {
        GaussOrder::LowerDiagUpper => {
            let (l, d, u) = ldu(g)?;
            Ok(GaussFactors { upper_unipotent: u, diagonal: d, lower_unipotent: l, order })
        }
        GaussOrder::UpperDiagLower => {
            // Conjugating by the reversal permutation swaps leading and
            // trailing minors and the two triangles.
            let (l, d, u) = ldu(&flip(g))?;
            Ok(GaussFactors {
                upper_unipotent: flip(&l),
                diagonal: flip(&d),
                lower_unipotent: flip(&u),
                order,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Triangle {
    Upper,
    Lower,
}

fn triangle_of(m: &CMat, strict: bool) -> Option<Triangle> {
    let n = m.nrows();
    let zero_below = (0..n).all(|i| (0..i).all(|j| m[(i, j)] == C64::new(0.0, 0.0)));
    let zero_above = (0..n).all(|i| (i + 1..n).all(|j| m[(i, j)] == C64::new(0.0, 0.0)));
    let diag_zero = (0..n).all(|k| m[(k, k)] == C64::new(0.0, 0.0));
    if strict && !diag_zero {
        return None;
    }
    if zero_below {
        Some(Triangle::Upper)
    } else if zero_above {
        Some(Triangle::Lower)
    } else {
        None
    }
}

/// Strictly triangular matrix; its n-th power vanishes by shape.
#[derive(Clone, Debug, PartialEq)]
pub struct NilpotentMatrix {
    matrix: CMat,
    triangle: Triangle,
}

impl NilpotentMatrix {
    pub fn new(matrix: CMat) -> Result<Self, MatGroupError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(MatGroupError::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        let triangle = triangle_of(&matrix, true).ok_or(MatGroupError::NotStrictlyTriangular)?;
        Ok(Self { matrix, triangle })
    }

    /// Keeps only the strictly upper part of `m`.
    pub fn strictly_upper_part(m: &CMat) -> Self {
        let n = m.nrows();
        let matrix = CMat::from_fn(n, n, |i, j| if j > i { m[(i, j)] } else { C64::new(0.0, 0.0) });
        Self { matrix, triangle: Triangle::Upper }
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: CMat::zeros(n, n), triangle: Triangle::Upper }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn triangle(&self) -> Triangle {
        self.triangle
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Logarithm of a unipotent triangular matrix by the terminating series
/// log(I + N) = N − N²/2 + … ± N^{n−1}/(n−1).
pub fn unipotent_log(u: &CMat) -> Result<NilpotentMatrix, MatGroupError> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(MatGroupError::NotSquare(n, u.ncols()));
    }
    if (0..n).any(|k| (u[(k, k)] - C64::new(1.0, 0.0)).norm() > 1e-12) {
        return Err(MatGroupError::NotUnipotent);
    }
    let mut nil = u - identity(n);
    for k in 0..n {
        nil[(k, k)] = C64::new(0.0, 0.0);
    }
    if triangle_of(&nil, true).is_none() {
        return Err(MatGroupError::NotUnipotent);
    }
    let mut result = CMat::zeros(n, n);
    let mut power = nil.clone();
    for k in 1..n {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        result += &power * C64::new(sign / k as f64, 0.0);
        power = &power * &nil;
    }
    NilpotentMatrix::new(result)
}

/// exp(ξ) = Σ_{k<n} ξ^k / k!.
pub fn nilpotent_exp(xi: &NilpotentMatrix) -> CMat {
    let n = xi.size();
    let mut result = identity(n);
    let mut power = identity(n);
    let mut fact = 1.0;
    for k in 1..n {
        fact *= k as f64;
        power = &power * xi.matrix();
        result += &power * C64::new(1.0 / fact, 0.0);
    }
    result
}

/// ad(ξ) is nilpotent of index at most 2n − 1 on n×n matrices.
fn ad_powers(xi: &CMat, zeta: &CMat) -> Vec<CMat> {
    let n = xi.nrows();
    let mut out = vec![zeta.clone()];
    for _ in 1..(2 * n).saturating_sub(1) {
        let next = commutator(xi, out.last().unwrap());
        if next.iter().all(|z| z.norm() == 0.0) {
            break;
        }
        out.push(next);
    }
    out
}

/// Derivative of the exponential map at ξ in direction ζ:
/// exp(ξ)·((1 − e^{−ad ξ})/ad ξ)(ζ), summed until ad(ξ)^k ζ vanishes.
pub fn dexp(xi: &NilpotentMatrix, zeta: &CMat) -> Result<CMat, MatGroupError> {
    if zeta.nrows() != xi.size() || zeta.ncols() != xi.size() {
        return Err(MatGroupError::SizeMismatch(xi.size(), zeta.nrows()));
    }
    let mut series = CMat::zeros(xi.size(), xi.size());
    let mut fact = 1.0;
    for (k, term) in ad_powers(xi.matrix(), zeta).iter().enumerate() {
        fact *= (k + 1) as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        series += term * C64::new(sign / fact, 0.0);
    }
    Ok(nilpotent_exp(xi) * series)
}

/// Bernoulli numbers with B₁ = +1/2, the Taylor coefficients (times k!)
/// of x / (1 − e^{−x}).
fn bernoulli_plus(count: usize) -> Vec<f64> {
    let mut b = vec![0.0; count.max(1)];
    b[0] = 1.0;
    for m in 1..count {
        let mut binom = 1.0; // C(m+1, 0)
        let mut acc = 0.0;
        for (k, bk) in b.iter().enumerate().take(m) {
            acc += binom * bk;
            binom = binom * (m + 1 - k) as f64 / (k + 1) as f64;
        }
        b[m] = -acc / (m + 1) as f64;
    }
    if count > 1 {
        b[1] = 0.5;
    }
    b
}

/// Inverse of the left-trivialized differential of exp: the η with
/// d/dt log(exp(ξ)·(1 + t w)) = η, i.e. (ad ξ/(1 − e^{−ad ξ}))(w).
pub fn dlog(xi: &NilpotentMatrix, w: &CMat) -> Result<CMat, MatGroupError> {
    if w.nrows() != xi.size() || w.ncols() != xi.size() {
        return Err(MatGroupError::SizeMismatch(xi.size(), w.nrows()));
    }
    let powers = ad_powers(xi.matrix(), w);
    let bern = bernoulli_plus(powers.len());
    let mut out = CMat::zeros(xi.size(), xi.size());
    let mut fact = 1.0;
    for (k, term) in powers.iter().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        out += term * C64::new(bern[k] / fact, 0.0);
    }
    Ok(out)
}

/// The anti-holomorphic involution g ↦ (g*)⁻¹ whose fixed points are SU(n).
pub fn involution(g: &GroupElement) -> GroupElement {
    g.inverse().adjoint_group()
}

impl GroupElement {
    fn adjoint_group(&self) -> GroupElement {
        GroupElement(ComplexSquareMatrix(self.0.adjoint()))
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Gaussian traceless matrix; anti-Hermitian when `unitary` is set.
pub fn random_traceless<R: Rng + ?Sized>(n: usize, unitary: bool, rng: &mut R) -> CMat {
    let mut m = CMat::from_fn(n, n, |_, _| complex_gaussian(rng));
    if unitary {
        m = (&m - m.adjoint()) * C64::new(0.5, 0.0);
    }
    let tr = trace(&m) / C64::new(n as f64, 0.0);
    for k in 0..n {
        m[(k, k)] -= tr;
    }
    m
}

/// Random element of SL(n, C) from the exponential of a Gaussian traceless
/// matrix, rescaled so the determinant is exactly one up to rounding.
pub fn random_sl<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupElement {
    let x = random_traceless(n, false, rng) * C64::new(0.5, 0.0);
    GroupElement::projected(x.exp()).expect("exponential is invertible")
}

/// Random element of SU(n).
pub fn random_su<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupElement {
    let x = random_traceless(n, true, rng);
    GroupElement::projected(x.exp()).expect("exponential is invertible")
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn gauss_factors_reconstruct(seed in any::<u64>(), n in 1usize..6, lower_first in any::<bool>()) {
            let g = random_sl(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let order = if lower_first { GaussOrder::LowerDiagUpper } else { GaussOrder::UpperDiagLower };
            let f = gauss_decompose(g.matrix(), order).unwrap();
            prop_assert!(max_abs(&(f.reconstruct() - g.matrix())) <= 1e-10 * inf_norm(g.matrix()));
            prop_assert!((f.diagonal_entries().iter().product::<C64>() - c(1.0, 0.0)).norm() <= 1e-9);
        }

        #[test]
        fn log_inverts_exp(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xi = NilpotentMatrix::strictly_upper_part(&CMat::from_fn(n, n, |_, _| complex_gaussian(&mut rng)));
            let back = unipotent_log(&nilpotent_exp(&xi)).unwrap();
            prop_assert!(max_abs(&(back.matrix() - xi.matrix())) <= 1e-9);
        }

        #[test]
        fn involution_squares_to_identity(seed in any::<u64>(), n in 2usize..5) {
            let g = random_sl(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let twice = involution(&involution(&g));
            prop_assert!(max_abs(&(twice.matrix() - g.matrix())) <= 1e-9 * inf_norm(g.matrix()).powi(2));
        }
    }
}
