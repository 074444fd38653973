//! Newton–Okounkov bodies of linear systems spanned by polynomials with
//! rational coefficients: lexicographic valuations, the graded valuation
//! semigroup, exact convex hulls and lattice point counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OkounkovError {
    #[error("valuation of the zero polynomial")]
    ZeroPolynomial,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    Empty,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("order is not a permutation of 0..{0}")]
    BadOrder(usize),
    #[error("bad coefficient {0:?}")]
    BadCoefficient(String),
    #[error("generator {0} is zero")]
    ZeroGenerator(usize),
}

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Sparse polynomial in d variables with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    d: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl Polynomial {
    pub fn zero(d: usize) -> Self {
        Self { d, terms: BTreeMap::new() }
    }

    pub fn monomial(exponents: Vec<u32>, coefficient: Rational) -> Self {
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, coefficient);
        p
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Result<Self, OkounkovError> {
        let mut p = Self::zero(d);
        for (e, c) in terms {
            if e.len() != d {
                return Err(OkounkovError::DimensionMismatch(d, e.len()));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        let entry = self.terms.entry(e).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, Rational> {
        &self.terms
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.d);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let e = a.iter().zip(b).map(|(i, j)| i + j).collect();
                out.add_term(e, x * y);
            }
        }
        out
    }

    /// self − factor·other.
    fn sub_scaled(&self, factor: &Rational, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -(factor * c));
        }
        out
    }
}

/// Lexicographic key of an exponent vector read in the given coordinate order.
fn ordered(e: &[u32], order: &[usize]) -> Vec<u32> {
    order.iter().map(|&k| e[k]).collect()
}

fn check_order(order: &[usize], d: usize) -> Result<(), OkounkovError> {
    let mut seen = order.to_vec();
    seen.sort_unstable();
    if seen != (0..d).collect::<Vec<_>>() {
        return Err(OkounkovError::BadOrder(d));
    }
    Ok(())
}

/// Smallest exponent of `g` in the lexicographic order comparing the
/// coordinates `order[0]`, `order[1]`, … in turn, listed in that order.
pub fn lex_valuation(g: &Polynomial, order: &[usize]) -> Result<Vec<u32>, OkounkovError> {
    check_order(order, g.d)?;
    g.terms.keys().map(|e| ordered(e, order)).min().ok_or(OkounkovError::ZeroPolynomial)
}

fn leading(g: &Polynomial, order: &[usize]) -> Option<(Vec<u32>, Vec<u32>)> {
    g.terms.keys().map(|e| (ordered(e, order), e.clone())).min()
}

/// A linear system: d coordinates and a finite list of nonzero generators.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialSystem {
    d: usize,
    generators: Vec<Polynomial>,
}

impl MonomialSystem {
    pub fn new(d: usize, generators: Vec<Polynomial>) -> Result<Self, OkounkovError> {
        for (k, g) in generators.iter().enumerate() {
            if g.d != d {
                return Err(OkounkovError::DimensionMismatch(d, g.d));
            }
            if g.is_zero() {
                return Err(OkounkovError::ZeroGenerator(k));
            }
        }
        Ok(Self { d, generators })
    }

    /// Generators given by single monomials with coefficient 1.
    pub fn monomials(d: usize, exponents: &[Vec<u32>]) -> Result<Self, OkounkovError> {
        Self::new(d, exponents.iter().map(|e| Polynomial::monomial(e.clone(), q(1))).collect())
    }

    /// 1, x₁, …, x_d.
    pub fn projective_space(d: usize) -> Self {
        let mut exps = vec![vec![0; d]];
        for k in 0..d {
            let mut e = vec![0; d];
            e[k] = 1;
            exps.push(e);
        }
        Self::monomials(d, &exps).expect("valid system")
    }

    /// Sections of O(2) on the plane vanishing at the origin:
    /// x, y, x², xy, y².
    pub fn blown_up_plane() -> Self {
        Self::monomials(2, &[vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]).expect("valid system")
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoefficientJson {
    Text(String),
    Integer(i64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GeneratorJson {
    Term(Vec<u32>, CoefficientJson),
    Terms(Vec<(Vec<u32>, CoefficientJson)>),
}

#[derive(Deserialize)]
struct SystemJson {
    d: usize,
    generators: Vec<GeneratorJson>,
}

fn parse_coefficient(c: CoefficientJson) -> Result<Rational, OkounkovError> {
    match c {
        CoefficientJson::Integer(k) => Ok(q(k)),
        CoefficientJson::Text(s) => s.trim().parse::<Rational>().map_err(|_| OkounkovError::BadCoefficient(s)),
    }
}

impl MonomialSystem {
    /// Reads `{"d": 2, "generators": [[[1, 0], "1/2"], …]}`; a generator
    /// is one term or a list of terms.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: SystemJson = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut gens = Vec::new();
        for g in raw.generators {
            let terms = match g {
                GeneratorJson::Term(e, c) => vec![(e, c)],
                GeneratorJson::Terms(t) => t,
            };
            let parsed: Vec<(Vec<u32>, Rational)> = terms
                .into_iter()
                .map(|(e, c)| parse_coefficient(c).map(|c| (e, c)))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            gens.push(Polynomial::from_terms(raw.d, parsed).map_err(|e| e.to_string())?);
        }
        Self::new(raw.d, gens).map_err(|e| e.to_string())
    }
}

/// Points (m, ν) of the graded valuation semigroup up to a cutoff.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GradedPointSet {
    pub points: BTreeSet<(u32, Vec<u32>)>,
}

impl GradedPointSet {
    pub fn level(&self, m: u32) -> BTreeSet<Vec<u32>> {
        self.points.iter().filter(|(k, _)| *k == m).map(|(_, v)| v.clone()).collect()
    }
}

/// Echelon basis of a span keyed by leading exponent; the keys are exactly
/// the valuations attained on the span.
fn echelon(polys: impl IntoIterator<Item = Polynomial>, order: &[usize]) -> BTreeMap<Vec<u32>, Polynomial> {
    let mut basis: BTreeMap<Vec<u32>, Polynomial> = BTreeMap::new();
    for mut p in polys {
        while let Some((key, exp)) = leading(&p, order) {
            match basis.get(&key) {
                Some(b) => {
                    let factor = &p.terms[&exp] / &b.terms[&exp];
                    p = p.sub_scaled(&factor, b);
                }
                None => {
                    basis.insert(key, p);
                    break;
                }
            }
        }
    }
    basis
}

/// (m, ν(g)) for every nonzero g in the span of m-fold products of
/// generators, m ≤ m_max, with ν read in the given coordinate order.
pub fn semigroup_points_ordered(s: &MonomialSystem, m_max: u32, order: &[usize]) -> Result<GradedPointSet, OkounkovError> {
    check_order(order, s.d)?;
    let mut points = BTreeSet::new();
    let mut level: Vec<Polynomial> = vec![Polynomial::monomial(vec![0; s.d], q(1))];
    for m in 1..=m_max {
        let products = level.iter().flat_map(|b| s.generators.iter().map(move |g| b.mul(g)));
        let basis = echelon(products, order);
        points.extend(basis.keys().map(|k| (m, k.clone())));
        level = basis.into_values().collect();
    }
    Ok(GradedPointSet { points })
}

pub fn semigroup_points(s: &MonomialSystem, m_max: u32) -> GradedPointSet {
    let order: Vec<usize> = (0..s.d).collect();
    semigroup_points_ordered(s, m_max, &order).expect("identity order")
}

// Exact linear algebra over the rationals.

/// Reduced row echelon form in place; returns pivot columns.
fn rref(rows: &mut [Vec<Rational>]) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][col].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                let pivot_row = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}

/// Basis of {x : rows·x = 0}.
fn null_space(rows: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut m: Vec<Vec<Rational>> = rows.to_vec();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); ncols];
            v[f] = q(1);
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f].clone();
            }
            v
        })
        .collect()
}

/// Unique solution of a square system, if any.
fn solve(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut aug: Vec<Vec<Rational>> =
        a.iter().zip(b).map(|(row, x)| row.iter().cloned().chain([x.clone()]).collect()).collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n].clone()).collect())
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// {x : a·x ≤ b for each inequality, c·x = e for each equality}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalfSpaces {
    pub dimension: usize,
    pub inequalities: Vec<(Vec<Rational>, Rational)>,
    pub equalities: Vec<(Vec<Rational>, Rational)>,
}

impl HalfSpaces {
    pub fn contains(&self, x: &[Rational]) -> bool {
        self.inequalities.iter().all(|(a, b)| &dot(a, x) <= b) && self.equalities.iter().all(|(a, b)| &dot(a, x) == b)
    }

    /// Affine parametrization x = x₀ + N t of the equality set.
    fn parametrize(&self) -> Option<(Vec<Rational>, Vec<Vec<Rational>>)> {
        let d = self.dimension;
        let mut aug: Vec<Vec<Rational>> =
            self.equalities.iter().map(|(a, b)| a.iter().cloned().chain([b.clone()]).collect()).collect();
        let pivots = rref(&mut aug);
        if pivots.contains(&d) {
            return None;
        }
        let mut x0 = vec![Rational::zero(); d];
        for (r, &p) in pivots.iter().enumerate() {
            x0[p] = aug[r][d].clone();
        }
        let rows: Vec<Vec<Rational>> = self.equalities.iter().map(|(a, _)| a.clone()).collect();
        Some((x0, null_space(&rows, d)))
    }

    /// Vertices, by exact enumeration of basic feasible solutions.
    pub fn vertices(&self) -> Result<Vec<Vec<Rational>>, OkounkovError> {
        let (x0, basis) = self.parametrize().ok_or(OkounkovError::Empty)?;
        let k = basis.len();
        let lift = |t: &[Rational]| -> Vec<Rational> {
            (0..self.dimension)
                .map(|i| &x0[i] + basis.iter().zip(t).map(|(v, s)| &v[i] * s).sum::<Rational>())
                .collect()
        };
        // Inequalities in the parameters t.
        let reduced: Vec<(Vec<Rational>, Rational)> = self
            .inequalities
            .iter()
            .map(|(a, b)| (basis.iter().map(|v| dot(a, v)).collect(), b - dot(a, &x0)))
            .collect();
        if k == 0 {
            return if self.contains(&x0) { Ok(vec![x0]) } else { Err(OkounkovError::Empty) };
        }
        let rows: Vec<Vec<Rational>> = reduced.iter().map(|(a, _)| a.clone()).collect();
        let mut probe = rows.clone();
        if rref(&mut probe).len() < k {
            return Err(OkounkovError::Unbounded);
        }
        // Recession cone {A t ≤ 0} must be {0}: test the edge directions cut
        // out by k − 1 tight rows.
        for subset in (0..rows.len()).combinations(k - 1) {
            let sub: Vec<Vec<Rational>> = subset.iter().map(|&i| rows[i].clone()).collect();
            let ns = null_space(&sub, k);
            if ns.len() != 1 {
                continue;
            }
            for sign in [1, -1] {
                let r: Vec<Rational> = ns[0].iter().map(|x| x * q(sign)).collect();
                if rows.iter().all(|a| !dot(a, &r).is_positive()) {
                    return Err(OkounkovError::Unbounded);
                }
            }
        }
        let mut found = BTreeSet::new();
        for subset in (0..rows.len()).combinations(k) {
            let a: Vec<Vec<Rational>> = subset.iter().map(|&i| rows[i].clone()).collect();
            let b: Vec<Rational> = subset.iter().map(|&i| reduced[i].1.clone()).collect();
            if let Some(t) = solve(&a, &b) {
                if reduced.iter().all(|(a, b)| &dot(a, &t) <= b) {
                    found.insert(lift(&t));
                }
            }
        }
        if found.is_empty() {
            return Err(OkounkovError::Empty);
        }
        Ok(found.into_iter().collect())
    }

    pub fn polytope(&self) -> Result<RationalPolytope, OkounkovError> {
        RationalPolytope::from_points(self.dimension, self.vertices()?)
    }
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

#[derive(Serialize)]
struct ConstraintJson {
    normal: Vec<String>,
    bound: String,
}

impl Serialize for HalfSpaces {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let conv = |v: &[(Vec<Rational>, Rational)]| -> Vec<ConstraintJson> {
            v.iter().map(|(a, b)| ConstraintJson { normal: strings(a), bound: b.to_string() }).collect()
        };
        let mut st = serializer.serialize_struct("HalfSpaces", 3)?;
        st.serialize_field("dimension", &self.dimension)?;
        st.serialize_field("inequalities", &conv(&self.inequalities))?;
        st.serialize_field("equalities", &conv(&self.equalities))?;
        st.end()
    }
}

/// Convex hull of finitely many rational points, stored by its vertices in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPolytope {
    dimension: usize,
    vertices: Vec<Vec<Rational>>,
}

struct Hull {
    vertices: Vec<Vec<Rational>>,
    halfspaces: HalfSpaces,
    affine_dimension: usize,
}

fn hull(d: usize, points: &BTreeSet<Vec<Rational>>) -> Hull {
    let pts: Vec<&Vec<Rational>> = points.iter().collect();
    let p0 = pts[0].clone();
    let diffs: Vec<Vec<Rational>> = pts[1..].iter().map(|p| p.iter().zip(&p0).map(|(a, b)| a - b).collect()).collect();
    let mut span = diffs.clone();
    let pivots = if span.is_empty() { Vec::new() } else { rref(&mut span) };
    let k = pivots.len();
    span.truncate(k);
    // Equalities cut out the affine hull.
    let equalities: Vec<(Vec<Rational>, Rational)> = null_space(&span, d)
        .into_iter()
        .map(|n| {
            let b = dot(&n, &p0);
            (n, b)
        })
        .collect();
    let proj = |p: &Vec<Rational>| -> Vec<Rational> { pivots.iter().map(|&c| p[c].clone()).collect() };
    let projected: Vec<Vec<Rational>> = pts.iter().map(|p| proj(p)).collect();
    let mut facets: BTreeSet<(Vec<Rational>, Rational)> = BTreeSet::new();
    if k >= 1 {
        for subset in (0..projected.len()).combinations(k) {
            let base = &projected[subset[0]];
            let rows: Vec<Vec<Rational>> = subset[1..]
                .iter()
                .map(|&i| projected[i].iter().zip(base).map(|(a, b)| a - b).collect())
                .collect();
            let ns = null_space(&rows, k);
            if ns.len() != 1 {
                continue;
            }
            let mut a = ns[0].clone();
            let mut b = dot(&a, base);
            let values: Vec<Rational> = projected.iter().map(|p| dot(&a, p)).collect();
            let above = values.iter().any(|v| v > &b);
            let below = values.iter().any(|v| v < &b);
            if above && below {
                continue;
            }
            if above {
                a = a.iter().map(|x| -x).collect();
                b = -b;
            }
            let lead = a.iter().find(|x| !x.is_zero()).expect("nonzero normal").abs();
            a = a.iter().map(|x| x / &lead).collect();
            b /= lead;
            facets.insert((a, b));
        }
    }
    let on: Vec<Vec<bool>> =
        projected.iter().map(|p| facets.iter().map(|(a, b)| &dot(a, p) == b).collect()).collect();
    let vertices: Vec<Vec<Rational>> = (0..pts.len())
        .filter(|&i| {
            k == 0
                || !(0..pts.len()).any(|j| {
                    j != i && facets.iter().enumerate().all(|(f, _)| !on[i][f] || on[j][f])
                })
        })
        .map(|i| pts[i].clone())
        .collect();
    let inequalities = facets
        .into_iter()
        .map(|(a, b)| {
            let mut full = vec![Rational::zero(); d];
            for (x, &c) in a.into_iter().zip(&pivots) {
                full[c] = x;
            }
            (full, b)
        })
        .collect();
    Hull { vertices, halfspaces: HalfSpaces { dimension: d, inequalities, equalities }, affine_dimension: k }
}

impl RationalPolytope {
    pub fn from_points(d: usize, points: impl IntoIterator<Item = Vec<Rational>>) -> Result<Self, OkounkovError> {
        let mut set = BTreeSet::new();
        for p in points {
            if p.len() != d {
                return Err(OkounkovError::DimensionMismatch(d, p.len()));
            }
            set.insert(p);
        }
        if set.is_empty() {
            return Err(OkounkovError::Empty);
        }
        let mut vertices = hull(d, &set).vertices;
        vertices.sort();
        Ok(Self { dimension: d, vertices })
    }

    /// Convex hull of integer points.
    pub fn from_integer_points(d: usize, points: &[Vec<i64>]) -> Result<Self, OkounkovError> {
        Self::from_points(d, points.iter().map(|p| p.iter().map(|x| q(*x)).collect()))
    }

    /// The standard d-simplex.
    pub fn standard_simplex(d: usize) -> Self {
        let mut pts = vec![vec![0; d]];
        for k in 0..d {
            let mut e = vec![0; d];
            e[k] = 1;
            pts.push(e);
        }
        Self::from_integer_points(d, &pts).expect("nonempty")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> HalfSpaces {
        hull(self.dimension, &self.vertices.iter().cloned().collect()).halfspaces
    }

    /// Dimension of the affine hull.
    pub fn affine_dimension(&self) -> usize {
        hull(self.dimension, &self.vertices.iter().cloned().collect()).affine_dimension
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.halfspaces().contains(x)
    }

    pub fn contains_polytope(&self, other: &Self) -> bool {
        let h = self.halfspaces();
        other.vertices.iter().all(|v| h.contains(v))
    }

    /// Vertices as "p/q" strings.
    pub fn vertex_strings(&self) -> Vec<Vec<String>> {
        self.vertices.iter().map(|v| strings(v)).collect()
    }
}

impl Serialize for RationalPolytope {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("RationalPolytope", 2)?;
        st.serialize_field("dimension", &self.dimension)?;
        st.serialize_field("vertices", &self.vertex_strings())?;
        st.end()
    }
}

impl fmt::Display for RationalPolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.vertices.iter().map(|v| format!("({})", v.iter().join(", "))).collect();
        write!(f, "conv{{{}}}", parts.join(", "))
    }
}

/// Hull of ν/m over the semigroup points up to level m_max.
pub fn okounkov_body(s: &MonomialSystem, m_max: u32) -> RationalPolytope {
    body_from_points(s.d, &semigroup_points(s, m_max))
}

fn body_from_points(d: usize, points: &GradedPointSet) -> RationalPolytope {
    let scaled = points
        .points
        .iter()
        .map(|(m, v)| v.iter().map(|x| Rational::new(BigInt::from(*x), BigInt::from(*m))).collect());
    RationalPolytope::from_points(d, scaled).expect("level one is nonempty")
}

/// Bodies at cutoffs m_max − 1 and m_max, and whether they coincide.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BodyReport {
    pub body: RationalPolytope,
    pub previous: Option<RationalPolytope>,
    pub stabilized: bool,
}

pub fn okounkov_body_report(s: &MonomialSystem, m_max: u32) -> BodyReport {
    let pts = semigroup_points(s, m_max);
    let body = body_from_points(s.d, &pts);
    let previous = (m_max > 1).then(|| {
        let lower = GradedPointSet { points: pts.points.iter().filter(|(m, _)| *m < m_max).cloned().collect() };
        body_from_points(s.d, &lower)
    });
    let stabilized = previous.as_ref().is_some_and(|p| p == &body);
    BodyReport { body, previous, stabilized }
}

fn floor(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

fn ceil(x: &Rational) -> BigInt {
    x.ceil().to_integer()
}

fn count_in_box(h: &HalfSpaces, lo: &[BigInt], hi: &[BigInt]) -> u64 {
    let d = lo.len();
    let mut count = 0;
    let mut current: Vec<BigInt> = lo.to_vec();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return 0;
    }
    loop {
        let x: Vec<Rational> = current.iter().map(|v| Rational::from_integer(v.clone())).collect();
        if h.contains(&x) {
            count += 1;
        }
        let mut k = 0;
        loop {
            if k == d {
                return count;
            }
            if current[k] < hi[k] {
                current[k] += 1;
                break;
            }
            current[k] = lo[k].clone();
            k += 1;
        }
    }
}

fn scaled_halfspaces(h: &HalfSpaces, scale: u64) -> HalfSpaces {
    let s = Rational::from_integer(BigInt::from(scale));
    let scale_all = |v: &Vec<(Vec<Rational>, Rational)>| v.iter().map(|(a, b)| (a.clone(), b * &s)).collect();
    HalfSpaces { dimension: h.dimension, inequalities: scale_all(&h.inequalities), equalities: scale_all(&h.equalities) }
}

/// #(scale·P ∩ ℤ^d).
pub fn lattice_count(p: &RationalPolytope, scale: u64) -> u64 {
    let s = Rational::from_integer(BigInt::from(scale));
    let d = p.dimension;
    let lo: Vec<BigInt> = (0..d).map(|i| ceil(&(p.vertices.iter().map(|v| &v[i] * &s).min().expect("vertex")))).collect();
    let hi: Vec<BigInt> = (0..d).map(|i| floor(&(p.vertices.iter().map(|v| &v[i] * &s).max().expect("vertex")))).collect();
    count_in_box(&scaled_halfspaces(&p.halfspaces(), scale), &lo, &hi)
}

/// Lattice count for a polytope given by half-spaces.
pub fn lattice_count_halfspaces(h: &HalfSpaces, scale: u64) -> Result<u64, OkounkovError> {
    let p = h.polytope()?;
    Ok(lattice_count(&p, scale))
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
