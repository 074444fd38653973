//! Gluing bookkeeping: torsion patterns of framed sheaves at a puncture,
//! matching of face types and weights across a node, and trinion graphs
//! with their assembled weight polytopes.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alcove::{AlcovePoint, FaceIndex};
use crate::okounkov::{HalfSpaces, OkounkovError, Rational, RationalPolytope};

/// Which vanishing condition on the exterior framings failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SheafClause {
    /// β at the top degree n must vanish when there is torsion.
    TopDegreeVanishes,
    /// β at degree i below the torsion rank must vanish.
    BelowTorsionVanishes(usize),
    /// β at degree equal to the torsion rank must be nonzero.
    TorsionDegreeNonzero,
}

impl fmt::Display for SheafClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TopDegreeVanishes => write!(f, "beta^n must vanish"),
            Self::BelowTorsionVanishes(i) => write!(f, "beta^{i} must vanish"),
            Self::TorsionDegreeNonzero => write!(f, "beta^s must be nonzero"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlueError {
    #[error("rank must be positive")]
    ZeroRank,
    #[error("puncture {puncture}: torsion rank {s} is not below {n}")]
    TorsionTooLarge { puncture: usize, s: usize, n: usize },
    #[error("puncture {puncture}: {clause}")]
    TorsionPatternViolation { puncture: usize, clause: SheafClause },
    #[error("puncture {puncture}: degree {degree} outside 1..={n}")]
    DegreeOutOfRange { puncture: usize, degree: usize, n: usize },
    #[error("rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(usize),
    #[error("trinion polytope has dimension {got}, expected {expected}")]
    PolytopeShape { expected: String, got: usize },
    #[error(transparent)]
    Polytope(#[from] OkounkovError),
}

/// Torsion rank and nonvanishing framing degrees at one puncture.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PunctureData {
    pub torsion_rank: usize,
    pub beta_nonzero: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramedSheafDescriptor {
    pub n: usize,
    pub punctures: Vec<PunctureData>,
}

impl FramedSheafDescriptor {
    pub fn single(n: usize, torsion_rank: usize, beta_nonzero: &[usize]) -> Self {
        Self { n, punctures: vec![PunctureData { torsion_rank, beta_nonzero: beta_nonzero.iter().copied().collect() }] }
    }
}

fn check_puncture(n: usize, k: usize, p: &PunctureData) -> Result<(), GlueError> {
    if let Some(&degree) = p.beta_nonzero.iter().find(|&&i| i == 0 || i > n) {
        return Err(GlueError::DegreeOutOfRange { puncture: k, degree, n });
    }
    let s = p.torsion_rank;
    if s >= n {
        return Err(GlueError::TorsionTooLarge { puncture: k, s, n });
    }
    if s == 0 {
        return Ok(());
    }
    let violation = |clause| Err(GlueError::TorsionPatternViolation { puncture: k, clause });
    if p.beta_nonzero.contains(&n) {
        return violation(SheafClause::TopDegreeVanishes);
    }
    if let Some(&i) = p.beta_nonzero.range(..s).next() {
        return violation(SheafClause::BelowTorsionVanishes(i));
    }
    if !p.beta_nonzero.contains(&s) {
        return violation(SheafClause::TorsionDegreeNonzero);
    }
    Ok(())
}

/// Checks the torsion pattern at every puncture; punctures are reported
/// zero based.
pub fn validate_framed_sheaf(d: FramedSheafDescriptor) -> Result<FramedSheafDescriptor, GlueError> {
    if d.n == 0 {
        return Err(GlueError::ZeroRank);
    }
    for (k, p) in d.punctures.iter().enumerate() {
        check_puncture(d.n, k, p)?;
    }
    Ok(d)
}

/// Whether two faces have matching vanishing patterns across a node.
pub fn match_patterns(i1: &FaceIndex, i2: &FaceIndex, n: usize) -> bool {
    *i2 == i1.reversed(n)
}

/// max |α₁ⁱ + α₂^{n−i+1}|.
pub fn glue_residual(a1: &AlcovePoint, a2: &AlcovePoint) -> Result<f64, GlueError> {
    if a1.rank() != a2.rank() {
        return Err(GlueError::RankMismatch(a1.rank(), a2.rank()));
    }
    Ok(a1.alpha().iter().zip(a2.alpha().iter().rev()).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max))
}

/// A puncture slot (trinion, slot ∈ {0, 1, 2}).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot(pub usize, pub usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph")]
pub struct TrinionGraph {
    trinions: usize,
    edges: Vec<(Slot, Slot)>,
}

#[derive(Deserialize)]
struct RawGraph {
    trinions: usize,
    edges: Vec<(Slot, Slot)>,
}

impl TryFrom<RawGraph> for TrinionGraph {
    type Error = GlueError;
    fn try_from(raw: RawGraph) -> Result<Self, GlueError> {
        Self::new(raw.trinions, raw.edges)
    }
}

impl TrinionGraph {
    pub fn new(trinions: usize, edges: Vec<(Slot, Slot)>) -> Result<Self, GlueError> {
        let mut used = BTreeSet::new();
        for &(a, b) in &edges {
            for s in [a, b] {
                if s.0 >= trinions || s.1 >= 3 {
                    return Err(GlueError::InvalidGraph(format!("slot ({}, {}) does not exist", s.0, s.1)));
                }
                if !used.insert(s) {
                    return Err(GlueError::InvalidGraph(format!("slot ({}, {}) used twice", s.0, s.1)));
                }
            }
        }
        Ok(Self { trinions, edges })
    }

    pub fn trinion_count(&self) -> usize {
        self.trinions
    }

    pub fn edges(&self) -> &[(Slot, Slot)] {
        &self.edges
    }

    pub fn free_punctures(&self) -> Vec<Slot> {
        let used: BTreeSet<Slot> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        (0..self.trinions).flat_map(|t| (0..3).map(move |s| Slot(t, s))).filter(|s| !used.contains(s)).collect()
    }

    pub fn is_fully_glued(&self) -> bool {
        self.free_punctures().is_empty()
    }

    /// Genus of a fully glued connected graph, from 2g − 2 trinions.
    pub fn genus(&self) -> Option<usize> {
        (self.is_fully_glued() && self.trinions >= 2 && self.trinions.is_multiple_of(2)).then_some(self.trinions / 2 + 1)
    }

    /// For each trinion, the (trinion, slot) glued to each of its slots.
    pub fn adjacency(&self) -> Vec<[Option<Slot>; 3]> {
        let mut adj = vec![[None; 3]; self.trinions];
        for &(a, b) in &self.edges {
            adj[a.0][a.1] = Some(b);
            adj[b.0][b.1] = Some(a);
        }
        adj
    }
}

/// 2g − 2 trinions in a cycle, slot 1 of each glued to slot 2 of the next,
/// with consecutive pairs also glued along slot 0.
pub fn trinion_graph(g: usize) -> Result<TrinionGraph, GlueError> {
    if g < 2 {
        return Err(GlueError::GenusTooSmall(g));
    }
    let t = 2 * g - 2;
    let mut edges: Vec<(Slot, Slot)> = (0..t).map(|k| (Slot(k, 1), Slot((k + 1) % t, 2))).collect();
    edges.extend((0..t / 2).map(|k| (Slot(2 * k, 0), Slot(2 * k + 1, 0))));
    TrinionGraph::new(t, edges)
}

/// Product of copies of the trinion polytope, one per trinion, cut by the
/// anti-diagonal identification at every edge.
///
/// The trinion polytope has 3k coordinates, k per puncture in slot order.
/// With k = n they are the full weights; with k = n − 1 the last weight is
/// minus the sum of the others.
pub fn assemble_moment_polytope(
    graph: &TrinionGraph,
    trinion_polytope: &RationalPolytope,
    n: usize,
) -> Result<RationalPolytope, GlueError> {
    if !graph.is_fully_glued() {
        return Err(GlueError::InvalidGraph("graph has free punctures".into()));
    }
    let dt = trinion_polytope.dimension();
    let k = dt / 3;
    if !dt.is_multiple_of(3) || !(k == n || k + 1 == n) || n < 2 {
        return Err(GlueError::PolytopeShape { expected: format!("3·{n} or 3·{}", n.saturating_sub(1)), got: dt });
    }
    let d = dt * graph.trinion_count();
    let h = trinion_polytope.halfspaces();
    let embed = |block: usize, a: &[Rational]| -> Vec<Rational> {
        let mut full = vec![Rational::zero(); d];
        full[block * dt..(block + 1) * dt].clone_from_slice(a);
        full
    };
    let mut inequalities = Vec::new();
    let mut equalities = Vec::new();
    for t in 0..graph.trinion_count() {
        inequalities.extend(h.inequalities.iter().map(|(a, b)| (embed(t, a), b.clone())));
        equalities.extend(h.equalities.iter().map(|(a, b)| (embed(t, a), b.clone())));
    }
    // Coefficient vector of the weight αⁱ at a slot, i one based.
    let weight = |s: Slot, i: usize| -> Vec<Rational> {
        let mut v = vec![Rational::zero(); d];
        let base = s.0 * dt + s.1 * k;
        if i <= k {
            v[base + i - 1] = Rational::from_integer(BigInt::from(1));
        } else {
            for j in 0..k {
                v[base + j] = Rational::from_integer(BigInt::from(-1));
            }
        }
        v
    };
    for &(a, b) in graph.edges() {
        for i in 1..=n {
            let row: Vec<Rational> = weight(a, i).iter().zip(weight(b, n - i + 1)).map(|(x, y)| x + y).collect();
            if row.iter().any(|x| !x.is_zero()) {
                equalities.push((row, Rational::zero()));
            }
        }
    }
    Ok(HalfSpaces { dimension: d, inequalities, equalities }.polytope()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alcove::{glue_partner, random_alcove_point, validate_alcove};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sheaf_examples() {
        assert!(validate_framed_sheaf(FramedSheafDescriptor::single(3, 2, &[2])).is_ok());
        assert_eq!(
            validate_framed_sheaf(FramedSheafDescriptor::single(3, 3, &[])),
            Err(GlueError::TorsionTooLarge { puncture: 0, s: 3, n: 3 })
        );
        assert_eq!(
            validate_framed_sheaf(FramedSheafDescriptor::single(3, 2, &[1, 2])),
            Err(GlueError::TorsionPatternViolation { puncture: 0, clause: SheafClause::BelowTorsionVanishes(1) })
        );
        assert_eq!(
            validate_framed_sheaf(FramedSheafDescriptor::single(3, 1, &[1, 3])),
            Err(GlueError::TorsionPatternViolation { puncture: 0, clause: SheafClause::TopDegreeVanishes })
        );
        assert_eq!(
            validate_framed_sheaf(FramedSheafDescriptor::single(3, 2, &[])),
            Err(GlueError::TorsionPatternViolation { puncture: 0, clause: SheafClause::TorsionDegreeNonzero })
        );
        assert!(matches!(
            validate_framed_sheaf(FramedSheafDescriptor::single(3, 0, &[4])),
            Err(GlueError::DegreeOutOfRange { degree: 4, .. })
        ));
        assert_eq!(validate_framed_sheaf(FramedSheafDescriptor::single(0, 0, &[])), Err(GlueError::ZeroRank));
        let mut two = FramedSheafDescriptor::single(2, 0, &[1, 2]);
        two.punctures.push(PunctureData { torsion_rank: 1, beta_nonzero: [2].into_iter().collect() });
        assert!(matches!(validate_framed_sheaf(two), Err(GlueError::TorsionPatternViolation { puncture: 1, .. })));
    }

    #[test]
    fn face_matching() {
        let f = |v: &[usize]| FaceIndex::from_slice(v);
        assert!(match_patterns(&f(&[1]), &f(&[2]), 3));
        assert!(match_patterns(&f(&[1]), &f(&[1]), 2));
        assert!(!match_patterns(&f(&[1]), &f(&[1]), 3));
        // Symmetric under simultaneous reversal.
        for n in 2..=5 {
            let all: Vec<FaceIndex> = (0..1u32 << (n - 1))
                .map(|m| FaceIndex((1..n).filter(|i| m >> (i - 1) & 1 == 1).collect()))
                .collect();
            for a in &all {
                for b in &all {
                    assert_eq!(match_patterns(a, b, n), match_patterns(&b.reversed(n), &a.reversed(n), n));
                    assert_eq!(match_patterns(a, b, n), match_patterns(b, a, n));
                }
                assert!(match_patterns(a, &a.reversed(n), n));
                assert_eq!(a.reversed(n).reversed(n), *a);
            }
        }
    }

    #[test]
    fn residual_examples() {
        let p = |v: &[f64]| validate_alcove(v).unwrap();
        let r = glue_residual(&p(&[0.3, 0.1, -0.4]), &p(&[0.4, -0.1, -0.3])).unwrap();
        assert!(r < 1e-15);
        assert_eq!(glue_residual(&p(&[0.25, -0.25]), &p(&[0.25, -0.25])).unwrap(), 0.0);
        let r = glue_residual(&p(&[0.3, 0.1, -0.4]), &p(&[0.3, 0.1, -0.4])).unwrap();
        assert!((r - 0.2).abs() < 1e-15);
        assert_eq!(glue_residual(&p(&[0.25, -0.25]), &p(&[0.3, 0.1, -0.4])), Err(GlueError::RankMismatch(2, 3)));
    }

    proptest! {
        #[test]
        fn partner_has_zero_residual(seed in any::<u64>(), n in 2usize..7) {
            let a = random_alcove_point(n, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(glue_residual(&a, &glue_partner(&a)).unwrap(), 0.0);
        }
    }

    #[test]
    fn graph_counts() {
        for g in 2..=8 {
            let gr = trinion_graph(g).unwrap();
            assert_eq!(gr.trinion_count(), 2 * g - 2);
            assert_eq!(gr.edges().len(), 3 * g - 3);
            assert_eq!(3 * gr.trinion_count(), 2 * gr.edges().len() + gr.free_punctures().len());
            assert_eq!(gr.genus(), Some(g));
            // Connected: first Betti number E − V + 1 equals g.
            let adj = gr.adjacency();
            let mut seen = vec![false; gr.trinion_count()];
            let mut stack = vec![0];
            while let Some(t) = stack.pop() {
                if !std::mem::replace(&mut seen[t], true) {
                    stack.extend(adj[t].iter().flatten().map(|s| s.0));
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
        assert_eq!(trinion_graph(1), Err(GlueError::GenusTooSmall(1)));
    }

    #[test]
    fn graph_validation_and_json() {
        assert!(TrinionGraph::new(1, vec![(Slot(0, 0), Slot(0, 0))]).is_err());
        assert!(TrinionGraph::new(1, vec![(Slot(0, 3), Slot(0, 0))]).is_err());
        assert!(TrinionGraph::new(1, vec![(Slot(1, 0), Slot(0, 0))]).is_err());
        let g = trinion_graph(2).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<TrinionGraph>(&text).unwrap(), g);
        assert!(serde_json::from_str::<TrinionGraph>(r#"{"trinions":1,"edges":[[[0,0],[0,0]]]}"#).is_err());
        let open = TrinionGraph::new(2, vec![(Slot(0, 0), Slot(1, 0))]).unwrap();
        assert_eq!(open.free_punctures().len(), 4);
        assert_eq!(open.genus(), None);
        let simplex = RationalPolytope::standard_simplex(3);
        assert!(matches!(assemble_moment_polytope(&open, &simplex, 2), Err(GlueError::InvalidGraph(_))));
        assert!(matches!(assemble_moment_polytope(&g, &RationalPolytope::standard_simplex(2), 2), Err(GlueError::PolytopeShape { .. })));
    }

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a.into(), b.into())
    }

    #[test]
    fn genus_two_polytope() {
        let g = trinion_graph(2).unwrap();
        let p = assemble_moment_polytope(&g, &RationalPolytope::standard_simplex(3), 2).unwrap();
        assert_eq!(p.dimension(), 6);
        assert_eq!(p.affine_dimension(), 3);
        assert_eq!(p.vertices().len(), 4);
        // Oracle: every vertex lies in both simplices and satisfies each edge
        // identification a_slot = a_partner.
        for v in p.vertices() {
            for (a, b) in g.edges() {
                assert_eq!(v[a.0 * 3 + a.1], v[b.0 * 3 + b.1]);
            }
            for t in 0..2 {
                let block = &v[3 * t..3 * t + 3];
                assert!(block.iter().all(|x| x >= &r(0, 1)));
                assert!(block.iter().sum::<Rational>() <= r(1, 1));
            }
        }
        assert!(p.contains(&[r(1, 4), r(1, 5), r(1, 6), r(1, 4), r(1, 6), r(1, 5)]));
    }

    #[test]
    fn full_weight_coordinates() {
        // Each puncture weight (a, −a) with 0 ≤ a ≤ 1/2, all three free.
        let mut pts = Vec::new();
        for m in 0..8 {
            let mut v = Vec::new();
            for s in 0..3 {
                let a = if m >> s & 1 == 1 { r(1, 2) } else { r(0, 1) };
                v.push(a.clone());
                v.push(-a);
            }
            pts.push(v);
        }
        let cube = RationalPolytope::from_points(6, pts).unwrap();
        let p = assemble_moment_polytope(&trinion_graph(2).unwrap(), &cube, 2).unwrap();
        assert_eq!(p.affine_dimension(), 3);
        assert_eq!(p.vertices().len(), 8);
    }
}
