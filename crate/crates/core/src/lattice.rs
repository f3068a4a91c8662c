//! Integer-lattice convex geometry: Newton polytopes in halfspace form,
//! their face lattices, and the family of polytopes `Δ(γ)` sharing the
//! facet normals of a fixed Newton polytope.
//!
//! Hulls are computed exactly. A facet is found by taking `n` affinely
//! independent points, computing the primitive integer normal of their
//! affine span, and keeping it when every point lies on one side. This is
//! exponential in `n` but exact, and the supported range is `n <= 4`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, Rational};

/// Maximum ambient dimension accepted by the hull routines.
pub const MAX_HULL_DIM: usize = 4;

/// Integer exponent vector `α ∈ ℤⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVector(pub Vec<i64>);

impl ExponentVector {
    pub fn new(entries: Vec<i64>) -> Self {
        ExponentVector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        ExponentVector(vec![0; n])
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = vec![0; n];
        v[k] = 1;
        ExponentVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[i64] {
        &self.0
    }

    pub fn dot(&self, other: &[i64]) -> i64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn dot_f64(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(&a, b)| a as f64 * b).sum()
    }

    pub fn add(&self, other: &ExponentVector) -> ExponentVector {
        ExponentVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &ExponentVector) -> ExponentVector {
        ExponentVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for ExponentVector {
    fn from(v: Vec<i64>) -> Self {
        ExponentVector(v)
    }
}

/// Halfspace `⟨mu, σ⟩ ≥ nu` with `mu` a primitive inward normal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Facet {
    pub mu: Vec<i64>,
    pub nu: i64,
}

impl Facet {
    pub fn new(mu: Vec<i64>, nu: i64) -> Self {
        Facet { mu, nu }
    }

    pub fn value(&self, point: &[i64]) -> i64 {
        self.mu.iter().zip(point).map(|(a, b)| a * b).sum()
    }

    pub fn value_f64(&self, point: &[f64]) -> f64 {
        self.mu.iter().zip(point).map(|(&a, b)| a as f64 * b).sum()
    }

    pub fn value_rational(&self, point: &[Rational]) -> Rational {
        self.mu
            .iter()
            .zip(point)
            .map(|(&a, b)| exact::rat(a) * b)
            .sum()
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, σ> >= {}", ExponentVector(self.mu.clone()), self.nu)
    }
}

/// Full-dimensional lattice polytope with vertices and primitive facets.
///
/// Facets are ordered lexicographically by `mu`; offset vectors `γ` used
/// with [`ShiftedPolytope`] index into this order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewtonPolytope {
    pub dim: usize,
    pub vertices: Vec<ExponentVector>,
    pub facets: Vec<Facet>,
}

/// A face together with the lattice points of a support set lying on it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Face {
    /// Indices of the facets whose supporting hyperplanes contain the face.
    pub facets: Vec<usize>,
    pub dim: usize,
    pub support: Vec<ExponentVector>,
}

impl Face {
    pub fn is_top(&self) -> bool {
        self.facets.is_empty()
    }
}

fn dedup_points(points: &[ExponentVector]) -> Result<Vec<ExponentVector>> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("empty point set".into()))?;
    let n = first.dim();
    if n == 0 {
        return Err(Error::InvalidInput("zero-dimensional exponent vectors".into()));
    }
    if let Some(bad) = points.iter().find(|p| p.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.dim(),
        });
    }
    let set: BTreeSet<ExponentVector> = points.iter().cloned().collect();
    Ok(set.into_iter().collect())
}

/// Affine dimension of a finite set of lattice points.
pub fn affine_dimension(points: &[ExponentVector]) -> usize {
    let raw: Vec<Vec<i64>> = points.iter().map(|p| p.0.clone()).collect();
    exact::affine_rank_i64(&raw)
}

fn combinations(len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > len {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == i - 1 + len - k {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Computes the halfspace representation of `conv(points)`.
pub fn facet_representation(points: &[ExponentVector]) -> Result<NewtonPolytope> {
    let pts = dedup_points(points)?;
    let n = pts[0].dim();
    if n > MAX_HULL_DIM {
        return Err(Error::UnsupportedDimension {
            dim: n,
            reason: "exact hull supports at most 4 variables",
        });
    }
    let found = affine_dimension(&pts);
    if found < n {
        return Err(Error::DegeneratePolytope { found, expected: n });
    }

    let mut facets: BTreeSet<Facet> = BTreeSet::new();
    if n == 1 {
        let lo = pts.iter().map(|p| p.0[0]).min().unwrap();
        let hi = pts.iter().map(|p| p.0[0]).max().unwrap();
        facets.insert(Facet::new(vec![1], lo));
        facets.insert(Facet::new(vec![-1], -hi));
    } else {
        for combo in combinations(pts.len(), n) {
            let base = &pts[combo[0]];
            let diffs: Vec<Vec<i64>> = combo[1..].iter().map(|&i| pts[i].sub(base).0).collect();
            let m = exact::to_rational_matrix(&diffs);
            let ker = exact::kernel(&m, n);
            if ker.len() != 1 {
                continue;
            }
            let mu = exact::primitive_integer(&ker[0]);
            let c = base.dot(&mu);
            let values: Vec<i64> = pts.iter().map(|p| p.dot(&mu)).collect();
            if values.iter().all(|&v| v >= c) {
                facets.insert(Facet::new(mu, c));
            } else if values.iter().all(|&v| v <= c) {
                facets.insert(Facet::new(mu.iter().map(|x| -x).collect(), -c));
            }
        }
    }
    let facets: Vec<Facet> = facets.into_iter().collect();

    let vertices: Vec<ExponentVector> = pts
        .iter()
        .filter(|p| {
            let tight: Vec<Vec<i64>> = facets
                .iter()
                .filter(|f| f.value(&p.0) == f.nu)
                .map(|f| f.mu.clone())
                .collect();
            !tight.is_empty() && exact::rank_i64(&tight) == n
        })
        .cloned()
        .collect();

    Ok(NewtonPolytope {
        dim: n,
        vertices,
        facets,
    })
}

impl NewtonPolytope {
    pub fn from_points(points: &[ExponentVector]) -> Result<Self> {
        facet_representation(points)
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn nu(&self) -> Vec<i64> {
        self.facets.iter().map(|f| f.nu).collect()
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.facets.iter().all(|f| f.value(point) >= f.nu)
    }

    pub fn contains_f64(&self, sigma: &[f64], strict: bool) -> bool {
        delta_contains(self, &self.nu(), sigma, strict).unwrap_or(false)
    }

    pub fn on_boundary(&self, point: &[i64]) -> bool {
        self.contains(point) && self.facets.iter().any(|f| f.value(point) == f.nu)
    }

    /// Index of the facet with the given normal, if present.
    pub fn facet_index(&self, mu: &[i64]) -> Option<usize> {
        self.facets.iter().position(|f| f.mu == mu)
    }

    pub fn shifted(&self, gamma: Vec<i64>) -> Result<ShiftedPolytope> {
        ShiftedPolytope::new(self, gamma)
    }
}

/// All faces of `p`, each carrying the points of `support_set` lying on it.
///
/// Faces are sorted by decreasing dimension, so the top face is at index 0.
pub fn enumerate_faces(p: &NewtonPolytope, support_set: &[ExponentVector]) -> Vec<Face> {
    let facet_vertex_sets: Vec<BTreeSet<usize>> = p
        .facets
        .iter()
        .map(|f| {
            p.vertices
                .iter()
                .enumerate()
                .filter(|(_, v)| f.value(&v.0) == f.nu)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    let mut seen: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    let mut queue: Vec<BTreeSet<usize>> = Vec::new();
    for set in &facet_vertex_sets {
        if seen.insert(set.clone()) {
            queue.push(set.clone());
        }
    }
    while let Some(current) = queue.pop() {
        for set in &facet_vertex_sets {
            let inter: BTreeSet<usize> = current.intersection(set).copied().collect();
            if !inter.is_empty() && seen.insert(inter.clone()) {
                queue.push(inter);
            }
        }
    }

    let mut faces: Vec<Face> = seen
        .into_iter()
        .map(|vset| {
            let defining: Vec<usize> = p
                .facets
                .iter()
                .enumerate()
                .filter(|(_, f)| vset.iter().all(|&v| f.value(&p.vertices[v].0) == f.nu))
                .map(|(k, _)| k)
                .collect();
            let verts: Vec<ExponentVector> = vset.iter().map(|&v| p.vertices[v].clone()).collect();
            let support = support_set
                .iter()
                .filter(|a| defining.iter().all(|&k| p.facets[k].value(&a.0) == p.facets[k].nu))
                .cloned()
                .collect();
            Face {
                facets: defining,
                dim: affine_dimension(&verts),
                support,
            }
        })
        .collect();

    faces.push(Face {
        facets: Vec::new(),
        dim: p.dim,
        support: support_set.to_vec(),
    });
    faces.sort_by(|a, b| b.dim.cmp(&a.dim).then_with(|| a.facets.cmp(&b.facets)));
    faces
}

/// Membership test for `Δ(γ) = ∩ {⟨μ_k, σ⟩ ≥ γ_k}` using the facet normals of `p`.
pub fn delta_contains(p: &NewtonPolytope, gamma: &[i64], sigma: &[f64], strict: bool) -> Result<bool> {
    if gamma.len() != p.facets.len() {
        return Err(Error::DimensionMismatch {
            expected: p.facets.len(),
            found: gamma.len(),
        });
    }
    if sigma.len() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: sigma.len(),
        });
    }
    Ok(p.facets.iter().zip(gamma).all(|(f, &g)| {
        let v = f.value_f64(sigma);
        if strict {
            v > g as f64
        } else {
            v >= g as f64
        }
    }))
}

/// Vertex set of the Minkowski sum `p + q`.
pub fn minkowski_sum(p: &NewtonPolytope, q: &NewtonPolytope) -> Result<NewtonPolytope> {
    if p.dim != q.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: q.dim,
        });
    }
    let sums: Vec<ExponentVector> = p
        .vertices
        .iter()
        .flat_map(|v| q.vertices.iter().map(move |w| v.add(w)))
        .collect();
    facet_representation(&sums)
}

/// The polytope `Δ(γ)` with normals taken from a fixed Newton polytope.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftedPolytope {
    pub normals: Vec<Vec<i64>>,
    pub gamma: Vec<i64>,
}

impl ShiftedPolytope {
    pub fn new(p: &NewtonPolytope, gamma: Vec<i64>) -> Result<Self> {
        if gamma.len() != p.facets.len() {
            return Err(Error::DimensionMismatch {
                expected: p.facets.len(),
                found: gamma.len(),
            });
        }
        Ok(ShiftedPolytope {
            normals: p.facets.iter().map(|f| f.mu.clone()).collect(),
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.normals.first().map_or(0, |m| m.len())
    }

    pub fn facet(&self, k: usize) -> Facet {
        Facet::new(self.normals[k].clone(), self.gamma[k])
    }

    pub fn contains(&self, sigma: &[f64], strict: bool) -> bool {
        (0..self.normals.len()).all(|k| {
            let v = self.facet(k).value_f64(sigma);
            let g = self.gamma[k] as f64;
            if strict {
                v > g
            } else {
                v >= g
            }
        })
    }

    pub fn contains_lattice(&self, point: &[i64]) -> bool {
        (0..self.normals.len()).all(|k| self.facet(k).value(point) >= self.gamma[k])
    }

    pub fn contains_rational(&self, point: &[Rational], strict: bool) -> bool {
        (0..self.normals.len()).all(|k| {
            let v = self.facet(k).value_rational(point);
            let g = exact::rat(self.gamma[k]);
            if strict {
                v > g
            } else {
                v >= g
            }
        })
    }

    /// Exact vertices; empty when the polytope is empty.
    pub fn vertices(&self) -> Vec<Vec<Rational>> {
        let n = self.dim();
        let mut out: BTreeMap<Vec<Rational>, ()> = BTreeMap::new();
        for combo in combinations(self.normals.len(), n) {
            let a: Vec<Vec<Rational>> = combo
                .iter()
                .map(|&k| self.normals[k].iter().map(|&v| exact::rat(v)).collect())
                .collect();
            let b: Vec<Rational> = combo.iter().map(|&k| exact::rat(self.gamma[k])).collect();
            if let Some(x) = exact::solve(&a, &b) {
                if self.contains_rational(&x, false) {
                    out.insert(x, ());
                }
            }
        }
        out.into_keys().collect()
    }

    pub fn has_interior(&self) -> bool {
        let v = self.vertices();
        !v.is_empty() && exact::affine_rank_rational(&v) == self.dim()
    }

    /// Vertex centroid; lies in the interior whenever the interior is nonempty.
    pub fn interior_point(&self) -> Option<Vec<f64>> {
        let v = self.vertices();
        if v.is_empty() || exact::affine_rank_rational(&v) < self.dim() {
            return None;
        }
        let count = exact::rat(v.len() as i64);
        Some(
            (0..self.dim())
                .map(|j| {
                    let s: Rational = v.iter().map(|p| p[j].clone()).sum();
                    exact::to_f64(&(s / &count))
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(v: &[i64]) -> ExponentVector {
        ExponentVector(v.to_vec())
    }

    fn four_term_points() -> Vec<ExponentVector> {
        vec![ev(&[0, 0]), ev(&[0, 1]), ev(&[2, 0]), ev(&[1, 2])]
    }

    #[test]
    fn four_term_facets() {
        let p = facet_representation(&four_term_points()).unwrap();
        let expected: BTreeSet<Facet> = [
            Facet::new(vec![1, 0], 0),
            Facet::new(vec![1, -1], -1),
            Facet::new(vec![-2, -1], -4),
            Facet::new(vec![0, 1], 0),
        ]
        .into_iter()
        .collect();
        let got: BTreeSet<Facet> = p.facets.iter().cloned().collect();
        assert_eq!(got, expected);
        // lexicographic by mu
        let mus: Vec<Vec<i64>> = p.facets.iter().map(|f| f.mu.clone()).collect();
        assert_eq!(mus, vec![vec![-2, -1], vec![0, 1], vec![1, -1], vec![1, 0]]);
        assert_eq!(p.vertices.len(), 4);
    }

    #[test]
    fn interval_and_square() {
        let p = facet_representation(&[ev(&[0]), ev(&[1])]).unwrap();
        assert_eq!(p.facets, vec![Facet::new(vec![-1], -1), Facet::new(vec![1], 0)]);
        let sq = facet_representation(&[ev(&[0, 0]), ev(&[1, 0]), ev(&[0, 1]), ev(&[1, 1])]).unwrap();
        let got: BTreeSet<Facet> = sq.facets.iter().cloned().collect();
        let expected: BTreeSet<Facet> = [
            Facet::new(vec![1, 0], 0),
            Facet::new(vec![0, 1], 0),
            Facet::new(vec![-1, 0], -1),
            Facet::new(vec![0, -1], -1),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn interior_points_are_not_vertices() {
        let pts = vec![ev(&[0, 0]), ev(&[2, 0]), ev(&[0, 2]), ev(&[1, 0]), ev(&[0, 1]), ev(&[1, 1]) /* edge */];
        let p = facet_representation(&pts).unwrap();
        assert_eq!(p.vertices, vec![ev(&[0, 0]), ev(&[0, 2]), ev(&[2, 0])]);
        assert_eq!(p.facets.len(), 3);
    }

    #[test]
    fn degenerate_hull_is_rejected() {
        let err = facet_representation(&[ev(&[0, 0]), ev(&[1, 1]), ev(&[2, 2])]).unwrap_err();
        assert_eq!(err, Error::DegeneratePolytope { found: 1, expected: 2 });
        assert!(matches!(
            facet_representation(&[ev(&[1, 1])]),
            Err(Error::DegeneratePolytope { found: 0, .. })
        ));
        assert!(matches!(
            facet_representation(&[ev(&[0; 5]), ev(&[1, 0, 0, 0, 0])]),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn three_dimensional_simplex_and_cube() {
        let simplex = [ev(&[0, 0, 0]), ev(&[1, 0, 0]), ev(&[0, 1, 0]), ev(&[0, 0, 1])];
        let p = facet_representation(&simplex).unwrap();
        assert_eq!(p.facets.len(), 4);
        assert!(p.facets.contains(&Facet::new(vec![-1, -1, -1], -1)));
        let cube: Vec<ExponentVector> = (0..8)
            .map(|i| ev(&[i & 1, (i >> 1) & 1, (i >> 2) & 1]))
            .collect();
        let c = facet_representation(&cube).unwrap();
        assert_eq!(c.facets.len(), 6);
        assert_eq!(c.vertices.len(), 8);
        let faces = enumerate_faces(&c, &cube);
        // 8 vertices, 12 edges, 6 squares, 1 top
        assert_eq!(faces.len(), 27);
    }

    #[test]
    fn face_counts() {
        let sq_pts = [ev(&[0, 0]), ev(&[1, 0]), ev(&[0, 1]), ev(&[1, 1])];
        let sq = facet_representation(&sq_pts).unwrap();
        let faces = enumerate_faces(&sq, &sq_pts);
        let count = |d| faces.iter().filter(|f| f.dim == d).count();
        assert_eq!((count(0), count(1), count(2)), (4, 4, 1));
        assert!(faces[0].is_top());

        let interval_pts = [ev(&[0]), ev(&[5])];
        let iv = facet_representation(&interval_pts).unwrap();
        let faces = enumerate_faces(&iv, &interval_pts);
        assert_eq!(faces.len(), 3);

        let quad = facet_representation(&four_term_points()).unwrap();
        let faces = enumerate_faces(&quad, &four_term_points());
        let count = |d| faces.iter().filter(|f| f.dim == d).count();
        assert_eq!((count(0), count(1), count(2)), (4, 4, 1));
        for face in &faces {
            assert!(!face.support.is_empty());
            for a in &face.support {
                for &k in &face.facets {
                    assert_eq!(quad.facets[k].value(&a.0), quad.facets[k].nu);
                }
            }
        }
    }

    #[test]
    fn delta_membership_examples() {
        let p = facet_representation(&four_term_points()).unwrap();
        let e1 = p.facet_index(&[1, 0]).unwrap();
        let mut gamma = p.nu();
        gamma[e1] -= 1;
        assert!(delta_contains(&p, &gamma, &[-0.5, 0.3], false).unwrap());
        assert!(!delta_contains(&p, &p.nu(), &[-0.5, 0.3], false).unwrap());
        assert!(!delta_contains(&p, &p.nu(), &[0.0, 0.0], true).unwrap());
        assert!(delta_contains(&p, &p.nu(), &[0.0, 0.0], false).unwrap());

        let tri = facet_representation(&[ev(&[0, 0]), ev(&[1, 0]), ev(&[0, 1])]).unwrap();
        assert!(delta_contains(&tri, &tri.nu(), &[0.5, 0.25], true).unwrap());
        assert!(delta_contains(&tri, &[0, 0], &[0.5, 0.25], true).is_err());
    }

    #[test]
    fn minkowski_examples() {
        let tri_pts = [ev(&[0, 0]), ev(&[1, 0]), ev(&[0, 1])];
        let tri = facet_representation(&tri_pts).unwrap();
        let doubled = minkowski_sum(&tri, &tri).unwrap();
        assert_eq!(doubled.vertices, vec![ev(&[0, 0]), ev(&[0, 2]), ev(&[2, 0])]);

        let a = facet_representation(&[ev(&[0]), ev(&[1])]).unwrap();
        let b = facet_representation(&[ev(&[0]), ev(&[2])]).unwrap();
        let s = minkowski_sum(&a, &b).unwrap();
        assert_eq!(s.vertices, vec![ev(&[0]), ev(&[3])]);

        let quad = facet_representation(&four_term_points()).unwrap();
        let sum = minkowski_sum(&quad, &quad).unwrap();
        let doubled_nu: Vec<i64> = quad.nu().iter().map(|v| 2 * v).collect();
        let target = quad.shifted(doubled_nu).unwrap();
        for v in &sum.vertices {
            assert!(target.contains_lattice(&v.0));
        }
    }

    #[test]
    fn shifted_vertices_reproduce_newton_polytope() {
        let quad = facet_representation(&four_term_points()).unwrap();
        let d = quad.shifted(quad.nu()).unwrap();
        let verts: Vec<Vec<i64>> = d
            .vertices()
            .iter()
            .map(|v| v.iter().map(|r| r.to_integer().try_into().unwrap()).collect())
            .collect();
        let expected: Vec<Vec<i64>> = quad.vertices.iter().map(|v| v.0.clone()).collect();
        let mut verts_sorted = verts.clone();
        verts_sorted.sort();
        assert_eq!(verts_sorted, expected);
        assert!(d.has_interior());
        let empty = quad.shifted(vec![10, 10, 10, 10]).unwrap();
        assert!(!empty.has_interior());
    }

    #[test]
    fn combinations_enumerates_all() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(5, 5).len(), 1);
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
        assert!(combinations(2, 3).is_empty());
    }
}
