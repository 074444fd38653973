//! The double DK = K × K, its two-form and moment map, the imploded
//! cross-section, the trinion relation and the generic frame normalization.

use std::f64::consts::PI;

use nalgebra::Schur;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alcove::{
    alcove_branch, face_of, normalized_args, random_alcove_point, torus_exp, AlcoveError,
    AlcovePoint, FaceIndex, TorusElement, FACE_TOL,
};
use crate::matgroup::{
    c, diag_entries, diagonal, gauss_decompose, identity, inverse, max_abs, random_su, trace,
    CMat, GaussOrder, GroupElement, MatGroupError, C64,
};

/// Residual allowed in the trinion relation u₁v₁u₁⁻¹u₂v₂u₂⁻¹u₃v₃u₃⁻¹ = 1.
pub const RELATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoubleError {
    #[error(transparent)]
    Matrix(#[from] MatGroupError),
    #[error(transparent)]
    Alcove(#[from] AlcoveError),
    #[error("relation residual {0:e} exceeds tolerance")]
    RelationResidual(f64),
    #[error("matrix is not diagonalizable")]
    DefectiveMatrix,
    #[error("slot {0} has the wrong triangular shape")]
    Shape(&'static str),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
}

/// A point (u, v) of the double with the K × K action
/// (k₁, k₂)·(u, v) = (k₁uk₂⁻¹, k₂vk₂⁻¹).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublePoint {
    pub u: GroupElement,
    pub v: GroupElement,
}

impl DoublePoint {
    pub fn new(u: GroupElement, v: GroupElement) -> Result<Self, DoubleError> {
        if u.size() != v.size() {
            return Err(DoubleError::SizeMismatch(u.size(), v.size()));
        }
        Ok(Self { u, v })
    }

    /// Point of the restricted cross-section K × T.
    pub fn cross_section(u: GroupElement, v: &TorusElement) -> Result<Self, DoubleError> {
        Self::new(u, GroupElement::new(v.matrix())?)
    }

    pub fn torus(&self) -> Option<TorusElement> {
        TorusElement::from_matrix(&self.v).ok()
    }
}

/// (Ad(u)v⁻¹, v).
pub fn moment_map(p: &DoublePoint) -> (GroupElement, GroupElement) {
    let first = p.u.matrix() * p.v.inverse().matrix() * p.u.inverse().matrix();
    (GroupElement::projected(first).expect("conjugate of a group element"), p.v.clone())
}

pub fn group_act(k1: &GroupElement, k2: &GroupElement, p: &DoublePoint) -> DoublePoint {
    let k2_inv = k2.inverse();
    let u = k1.matrix() * p.u.matrix() * k2_inv.matrix();
    let v = k2.matrix() * p.v.matrix() * k2_inv.matrix();
    DoublePoint {
        u: GroupElement::projected(u).expect("product of group elements"),
        v: GroupElement::projected(v).expect("product of group elements"),
    }
}

/// Point of the imploded cross-section, labelled by its stratum Δ_I.
///
/// The [K_I, K_I] quotient on boundary strata is recorded by the label only.
#[derive(Clone, Debug, PartialEq)]
pub struct ImplodedPoint {
    pub point: DoublePoint,
    pub alpha: AlcovePoint,
    pub stratum: FaceIndex,
}

impl ImplodedPoint {
    pub fn new(u: GroupElement, alpha: AlcovePoint) -> Result<Self, DoubleError> {
        let point = DoublePoint::cross_section(u, &torus_exp(&alpha))?;
        let stratum = face_of(&alpha);
        Ok(Self { point, alpha, stratum })
    }

    pub fn is_generic(&self) -> bool {
        self.stratum.is_interior(self.alpha.rank())
    }
}

/// Infinitesimal variation (β⁺, μ⁻, ζ): b⁺ ↦ b⁺(1 + εβ⁺), n⁻ ↦ n⁻(1 + εμ⁻),
/// v ↦ v(1 + εζ). Diagonal variations δ sit on the diagonal of β⁺.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentTriple {
    pub beta_plus: CMat,
    pub mu_minus: CMat,
    pub zeta: CMat,
}

impl TangentTriple {
    pub fn new(beta_plus: CMat, mu_minus: CMat, zeta: CMat) -> Result<Self, DoubleError> {
        let n = beta_plus.nrows();
        for m in [&beta_plus, &mu_minus, &zeta] {
            if m.nrows() != n || m.ncols() != n {
                return Err(DoubleError::SizeMismatch(n, m.nrows()));
            }
        }
        let zero = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                if i > j && beta_plus[(i, j)] != zero {
                    return Err(DoubleError::Shape("beta_plus"));
                }
                if i <= j && mu_minus[(i, j)] != zero {
                    return Err(DoubleError::Shape("mu_minus"));
                }
                if i != j && zeta[(i, j)] != zero {
                    return Err(DoubleError::Shape("zeta"));
                }
            }
        }
        Ok(Self { beta_plus, mu_minus, zeta })
    }

    pub fn zero(n: usize) -> Self {
        Self { beta_plus: CMat::zeros(n, n), mu_minus: CMat::zeros(n, n), zeta: CMat::zeros(n, n) }
    }

    pub fn size(&self) -> usize {
        self.beta_plus.nrows()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            beta_plus: &self.beta_plus * s,
            mu_minus: &self.mu_minus * s,
            zeta: &self.zeta * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            beta_plus: &self.beta_plus + &other.beta_plus,
            mu_minus: &self.mu_minus + &other.mu_minus,
            zeta: &self.zeta + &other.zeta,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.beta_plus.norm_squared() + self.mu_minus.norm_squared() + self.zeta.norm_squared())
            .sqrt()
    }
}

/// The two-form of the double evaluated on two variations at a point with
/// lower unipotent factor n⁻ and torus part v:
///
/// ½tr(Wβ̂′ − Ŵβ′) + ½tr(Wμ̂ − Ŵμ) + (1/2πi)tr((β′ + μ)ζ̂ − (β̂′ + μ̂)ζ)
///
/// with β′ = (n⁻)⁻¹β⁺n⁻ and W = vβ′v⁻¹.
pub fn two_form(n_minus: &CMat, v: &CMat, x: &TangentTriple, y: &TangentTriple) -> C64 {
    let n = v.nrows();
    // Triangular and diagonal inverses keep structural zeros exact.
    let n_inv = n_minus
        .solve_lower_triangular(&identity(n))
        .expect("unipotent factor is invertible");
    let v_inv = diagonal(&diag_entries(v).iter().map(|z| z.inv()).collect::<Vec<_>>());
    let bx = &n_inv * &x.beta_plus * n_minus;
    let by = &n_inv * &y.beta_plus * n_minus;
    let wx = v * &bx * &v_inv;
    let wy = v * &by * &v_inv;
    let half = C64::new(0.5, 0.0);
    let first = half * (trace(&(&wx * &by)) - trace(&(&wy * &bx)));
    let second = half * (trace(&(&wx * &y.mu_minus)) - trace(&(&wy * &x.mu_minus)));
    let third = (trace(&((&bx + &x.mu_minus) * &y.zeta)) - trace(&((&by + &y.mu_minus) * &x.zeta)))
        / C64::new(0.0, 2.0 * PI);
    first + second + third
}

/// Three framed double points at a common base point satisfying the
/// trinion relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFramedTriple")]
pub struct FramedTriple {
    pub u1: GroupElement,
    pub v1: TorusElement,
    pub u2: GroupElement,
    pub v2: TorusElement,
    pub u3: GroupElement,
    pub v3: TorusElement,
}

#[derive(Deserialize)]
struct RawFramedTriple {
    u1: GroupElement,
    v1: TorusElement,
    u2: GroupElement,
    v2: TorusElement,
    u3: GroupElement,
    v3: TorusElement,
}

impl TryFrom<RawFramedTriple> for FramedTriple {
    type Error = DoubleError;
    fn try_from(r: RawFramedTriple) -> Result<Self, DoubleError> {
        FramedTriple::new(r.u1, r.v1, r.u2, r.v2, r.u3, r.v3)
    }
}

fn conj(u: &CMat, v: &CMat) -> CMat {
    u * v * inverse(u).expect("group element")
}

pub fn relation_residual(
    u1: &CMat,
    v1: &CMat,
    u2: &CMat,
    v2: &CMat,
    u3: &CMat,
    v3: &CMat,
) -> f64 {
    let n = u1.nrows();
    max_abs(&(conj(u1, v1) * conj(u2, v2) * conj(u3, v3) - identity(n)))
}

impl FramedTriple {
    pub fn new(
        u1: GroupElement,
        v1: TorusElement,
        u2: GroupElement,
        v2: TorusElement,
        u3: GroupElement,
        v3: TorusElement,
    ) -> Result<Self, DoubleError> {
        let n = u1.size();
        for k in [u2.size(), u3.size(), v1.rank(), v2.rank(), v3.rank()] {
            if k != n {
                return Err(DoubleError::SizeMismatch(n, k));
            }
        }
        let t = Self { u1, v1, u2, v2, u3, v3 };
        let r = t.residual();
        if r > RELATION_TOL {
            return Err(DoubleError::RelationResidual(r));
        }
        Ok(t)
    }

    pub fn residual(&self) -> f64 {
        relation_residual(
            &self.u1,
            &self.v1.matrix(),
            &self.u2,
            &self.v2.matrix(),
            &self.u3,
            &self.v3.matrix(),
        )
    }

    pub fn rank(&self) -> usize {
        self.u1.size()
    }
}

/// Eigendecomposition P = X diag(λ) X⁻¹ through the complex Schur form.
/// Normal matrices keep their unitary Schur vectors.
pub fn eigendecompose(p: &CMat) -> Result<(CMat, Vec<C64>), DoubleError> {
    let n = p.nrows();
    let schur = Schur::try_new(p.clone(), f64::EPSILON, 10_000).ok_or(DoubleError::DefectiveMatrix)?;
    let (q, t) = schur.unpack();
    let lambdas = diag_entries(&t);
    let scale = max_abs(&t).max(1.0);
    let off_diag = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .fold(0.0_f64, |acc, (i, j)| acc.max(t[(i, j)].norm()));
    if off_diag <= 1e-12 * scale {
        return Ok((q, lambdas));
    }
    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = c(1.0, 0.0);
        for i in (0..k).rev() {
            let num: C64 = (i + 1..=k).map(|j| t[(i, j)] * y[(j, k)]).sum();
            let den = t[(i, i)] - lambdas[k];
            if den.norm() <= 1e-12 * scale {
                if num.norm() <= 1e-10 * scale {
                    y[(i, k)] = c(0.0, 0.0);
                } else {
                    return Err(DoubleError::DefectiveMatrix);
                }
            } else {
                y[(i, k)] = -num / den;
            }
        }
    }
    let mut x = q * y;
    for k in 0..n {
        let norm = x.column(k).norm();
        x.column_mut(k).unscale_mut(norm);
    }
    let det = x.determinant();
    if det.norm() < 1e-10 {
        return Err(DoubleError::DefectiveMatrix);
    }
    Ok((x, lambdas))
}

/// Canonical orthonormal basis of the span of `cols`: reduced echelon
/// form, Gram–Schmidt, then first nonzero entry of each vector made real
/// and positive.
fn canonical_basis(cols: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = cols[0].len();
    let mut rows: Vec<Vec<C64>> = cols.to_vec();
    let mut r = 0;
    for col in 0..n {
        if r == rows.len() {
            break;
        }
        let Some(piv) = (r..rows.len()).max_by(|&a, &b| rows[a][col].norm().total_cmp(&rows[b][col].norm()))
        else {
            break;
        };
        if rows[piv][col].norm() <= 1e-9 {
            continue;
        }
        rows.swap(r, piv);
        let p = rows[r][col];
        for z in rows[r].iter_mut() {
            *z /= p;
        }
        for k in 0..rows.len() {
            if k != r {
                let f = rows[k][col];
                let pivot_row = rows[r].clone();
                for (z, w) in rows[k].iter_mut().zip(pivot_row) {
                    *z -= f * w;
                }
            }
        }
        r += 1;
    }
    let mut out: Vec<Vec<C64>> = Vec::new();
    for mut v in rows {
        for q in &out {
            let dot: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (z, w) in v.iter_mut().zip(q) {
                *z -= dot * w;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let phase = v.iter().find(|z| z.norm() > 1e-10 * norm).map_or(C64::new(1.0, 0.0), |z| z / z.norm());
        for z in v.iter_mut() {
            *z /= phase * norm;
        }
        out.push(v);
    }
    out
}

/// Solves the trinion relation for the third puncture: diagonalizes
/// P = (u₁v₁u₁⁻¹u₂v₂u₂⁻¹)⁻¹ = u₃v₃u₃⁻¹ with v₃ on the alcove branch.
pub fn solve_trinion(
    u1: &GroupElement,
    v1: &TorusElement,
    u2: &GroupElement,
    v2: &TorusElement,
) -> Result<(GroupElement, AlcovePoint), DoubleError> {
    let n = u1.size();
    let p = inverse(&(conj(u1, &v1.matrix()) * conj(u2, &v2.matrix())))?;
    let (vecs, lambdas) = eigendecompose(&p)?;
    if lambdas.iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
        return Err(AlcoveError::NoAlcoveBranch.into());
    }
    let (alpha, perm) = alcove_branch(&normalized_args(&lambdas)).ok_or(AlcoveError::NoAlcoveBranch)?;
    // Slots sharing an eigenvalue (weights differing by an integer) get a
    // canonical basis of the common eigenspace.
    let mut u3 = CMat::zeros(n, n);
    let mut done = vec![false; n];
    for k in 0..n {
        if done[k] {
            continue;
        }
        let class: Vec<usize> = (k..n)
            .filter(|&j| {
                let d = alpha[k] - alpha[j];
                !done[j] && (d - d.round()).abs() <= FACE_TOL
            })
            .collect();
        let cols: Vec<Vec<C64>> = class.iter().map(|&j| vecs.column(perm[j]).iter().copied().collect()).collect();
        for (&slot, v) in class.iter().zip(canonical_basis(&cols)) {
            done[slot] = true;
            for (i, z) in v.into_iter().enumerate() {
                u3[(i, slot)] = z;
            }
        }
    }
    let u3 = GroupElement::projected(u3)?;
    let alpha = crate::alcove::validate_alcove(&alpha)?;
    let v3 = torus_exp(&alpha);
    let r = relation_residual(u1, &v1.matrix(), u2, &v2.matrix(), &u3, &v3.matrix());
    if r > RELATION_TOL {
        return Err(DoubleError::RelationResidual(r));
    }
    Ok((u3, alpha))
}

/// Point of the normalized generic locus: u₁ = b₁⁺, u₂ = n₂⁻, u₃ = b₃⁺n₃⁻.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNormalizedTriple")]
pub struct NormalizedTriple {
    pub b1_plus: GroupElement,
    pub n2_minus: GroupElement,
    pub b3_plus: GroupElement,
    pub n3_minus: GroupElement,
    pub v1: TorusElement,
    pub v2: TorusElement,
    pub v3: TorusElement,
}

#[derive(Deserialize)]
struct RawNormalizedTriple {
    b1_plus: GroupElement,
    n2_minus: GroupElement,
    b3_plus: GroupElement,
    n3_minus: GroupElement,
    v1: TorusElement,
    v2: TorusElement,
    v3: TorusElement,
}

impl TryFrom<RawNormalizedTriple> for NormalizedTriple {
    type Error = DoubleError;
    fn try_from(r: RawNormalizedTriple) -> Result<Self, DoubleError> {
        NormalizedTriple::new(r.b1_plus, r.n2_minus, r.b3_plus, r.n3_minus, r.v1, r.v2, r.v3)
    }
}

fn is_upper(m: &CMat) -> bool {
    (0..m.nrows()).all(|i| (0..i).all(|j| m[(i, j)].norm() <= 1e-12))
}

fn is_lower_unipotent(m: &CMat) -> bool {
    let n = m.nrows();
    (0..n).all(|i| {
        (m[(i, i)] - c(1.0, 0.0)).norm() <= 1e-12 && (i + 1..n).all(|j| m[(i, j)].norm() <= 1e-12)
    })
}

impl NormalizedTriple {
    pub fn new(
        b1_plus: GroupElement,
        n2_minus: GroupElement,
        b3_plus: GroupElement,
        n3_minus: GroupElement,
        v1: TorusElement,
        v2: TorusElement,
        v3: TorusElement,
    ) -> Result<Self, DoubleError> {
        let n = b1_plus.size();
        for k in [n2_minus.size(), b3_plus.size(), n3_minus.size(), v1.rank(), v2.rank(), v3.rank()] {
            if k != n {
                return Err(DoubleError::SizeMismatch(n, k));
            }
        }
        if !is_upper(&b1_plus) {
            return Err(DoubleError::Shape("b1_plus"));
        }
        if !is_upper(&b3_plus) {
            return Err(DoubleError::Shape("b3_plus"));
        }
        if !is_lower_unipotent(&n2_minus) {
            return Err(DoubleError::Shape("n2_minus"));
        }
        if !is_lower_unipotent(&n3_minus) {
            return Err(DoubleError::Shape("n3_minus"));
        }
        let t = Self { b1_plus, n2_minus, b3_plus, n3_minus, v1, v2, v3 };
        let r = t.residual();
        if r > RELATION_TOL {
            return Err(DoubleError::RelationResidual(r));
        }
        Ok(t)
    }

    pub fn rank(&self) -> usize {
        self.b1_plus.size()
    }

    pub fn u3(&self) -> CMat {
        self.b3_plus.matrix() * self.n3_minus.matrix()
    }

    pub fn residual(&self) -> f64 {
        relation_residual(
            &self.b1_plus,
            &self.v1.matrix(),
            &self.n2_minus,
            &self.v2.matrix(),
            &self.u3(),
            &self.v3.matrix(),
        )
    }

    /// Diagonal of b₁⁺ = n₁⁺d₁.
    pub fn d1(&self) -> Vec<C64> {
        diag_entries(&self.b1_plus)
    }

    /// Diagonal of b₃⁺ = n₃⁺d₃.
    pub fn d3(&self) -> Vec<C64> {
        diag_entries(&self.b3_plus)
    }

    /// Upper unipotent part n₃⁺ = b₃⁺d₃⁻¹.
    pub fn n3_plus(&self) -> CMat {
        let inv: Vec<C64> = self.d3().iter().map(|z| z.inv()).collect();
        let mut m = self.b3_plus.matrix() * diagonal(&inv);
        for k in 0..self.rank() {
            m[(k, k)] = c(1.0, 0.0);
        }
        m
    }

    pub fn to_framed(&self) -> FramedTriple {
        FramedTriple {
            u1: self.b1_plus.clone(),
            v1: self.v1.clone(),
            u2: self.n2_minus.clone(),
            v2: self.v2.clone(),
            u3: GroupElement::projected(self.u3()).expect("product of group elements"),
            v3: self.v3.clone(),
        }
    }
}

/// Normalizes the frame at the base point by a left SL(n, C) translation g:
/// g u₁ upper triangular, g u₂ lower unipotent and g u₃ = b₃⁺n₃⁻. Returns g too.
///
/// Writing u₂⁻¹u₁ = l d n⁺ (leading minors) gives g = l⁻¹u₂⁻¹.
pub fn normalize_frame_with_gauge(
    t: &FramedTriple,
) -> Result<(NormalizedTriple, GroupElement), DoubleError> {
    let u2_inv = t.u2.inverse();
    let f = gauss_decompose(&(u2_inv.matrix() * t.u1.matrix()), GaussOrder::LowerDiagUpper)?;
    let g = inverse(&f.lower_unipotent)? * u2_inv.matrix();
    let g = GroupElement::projected(g)?;
    let b1 = g.matrix() * t.u1.matrix();
    let n2 = g.matrix() * t.u2.matrix();
    let third = gauss_decompose(&(g.matrix() * t.u3.matrix()), GaussOrder::UpperDiagLower)?;
    let clean_upper = |m: &CMat| CMat::from_fn(m.nrows(), m.ncols(), |i, j| if i > j { c(0.0, 0.0) } else { m[(i, j)] });
    let clean_lower = |m: &CMat| {
        CMat::from_fn(m.nrows(), m.ncols(), |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => c(0.0, 0.0),
            std::cmp::Ordering::Equal => c(1.0, 0.0),
            std::cmp::Ordering::Greater => m[(i, j)],
        })
    };
    let nt = NormalizedTriple::new(
        GroupElement::new(clean_upper(&b1))?,
        GroupElement::new(clean_lower(&n2))?,
        GroupElement::new(clean_upper(&third.upper_triangular()))?,
        GroupElement::new(clean_lower(&third.lower_unipotent))?,
        t.v1.clone(),
        t.v2.clone(),
        t.v3.clone(),
    )?;
    Ok((nt, g))
}

pub fn normalize_frame(t: &FramedTriple) -> Result<NormalizedTriple, DoubleError> {
    normalize_frame_with_gauge(t).map(|(nt, _)| nt)
}

/// Dimension n + n(n+1)/2 of the normalized framing data.
pub fn moduli_dimension(n: usize) -> usize {
    n + n * (n + 1) / 2
}

/// The same count in the form (n+2)(n+1)/2 − 1.
pub fn moduli_dimension_closed_form(n: usize) -> usize {
    (n + 2) * (n + 1) / 2 - 1
}

/// Random framed triple on the unitary locus with interior weights at the
/// first two punctures; the third is solved from the relation.
pub fn random_unitary_framed_triple<R: Rng + ?Sized>(n: usize, rng: &mut R) -> FramedTriple {
    loop {
        let u1 = random_su(n, rng);
        let u2 = random_su(n, rng);
        let a1 = random_alcove_point(n, rng);
        let a2 = random_alcove_point(n, rng);
        let (v1, v2) = (torus_exp(&a1), torus_exp(&a2));
        if let Ok((u3, a3)) = solve_trinion(&u1, &v1, &u2, &v2) {
            if face_of(&a3).is_interior(n) {
                if let Ok(t) = FramedTriple::new(u1, v1, u2, v2, u3, torus_exp(&a3)) {
                    return t;
                }
            }
        }
    }
}

/// Random point of the normalized generic locus, obtained by normalizing a
/// random unitary configuration.
pub fn random_normalized_triple<R: Rng + ?Sized>(n: usize, rng: &mut R) -> NormalizedTriple {
    loop {
        let t = random_unitary_framed_triple(n, rng);
        if let Ok(nt) = normalize_frame(&t) {
            return nt;
        }
    }
}
