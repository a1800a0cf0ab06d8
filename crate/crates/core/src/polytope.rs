//! Labelled simple polytopes in H-representation.
//!
//! A polytope is `P = { x : l_s(x) > 0 for all s }` with `l_s(x) = <n_s, x> + c_s`.
//! The normals `n_s` are the labels: their length is data, not a normalization
//! artefact. Facets keep the input order everywhere.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{affine_rank, dist, dot, norm, simplex_measure, solve};

/// Relative factor applied to the polytope diameter for incidence decisions.
pub const TOL_GEOM_REL: f64 = 1e-9;

/// The affine function `l(x) = <normal, x> + offset`; the open halfspace is `l > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().all(|&v| v == 0.0) || normal.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::InvalidInput(format!("degenerate halfspace normal {normal:?}, offset {offset}")));
        }
        Ok(Self { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) + self.offset
    }

    /// Signed Euclidean distance to the supporting hyperplane.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.eval(x) / norm(&self.normal)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { normal: self.normal.iter().map(|v| v * a).collect(), offset: self.offset * a }
    }
}

/// A vertex together with the facets it lies on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    pub point: Vec<f64>,
    pub active: Vec<usize>,
}

/// An embedded `k`-simplex given by its `k + 1` corner points.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplex {
    pub points: Vec<Vec<f64>>,
}

impl Simplex {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        Self { points }
    }

    /// Intrinsic dimension `k`.
    pub fn dim(&self) -> usize {
        self.points.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.points[0].len()
    }

    /// `k`-dimensional volume.
    pub fn measure(&self) -> f64 {
        simplex_measure(&self.points)
    }

    /// Point with barycentric coordinates `bary` (length `k + 1`).
    pub fn at(&self, bary: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient_dim()];
        for (p, &w) in self.points.iter().zip(bary) {
            for (xi, pi) in x.iter_mut().zip(p) {
                *xi += w * pi;
            }
        }
        x
    }

    pub fn centroid(&self) -> Vec<f64> {
        let w = 1.0 / self.points.len() as f64;
        self.at(&vec![w; self.points.len()])
    }

    /// Signed full-dimensional volume (only meaningful when `k == n`).
    pub fn signed_volume(&self) -> f64 {
        let e = crate::linalg::edge_matrix(&self.points);
        e.determinant() / crate::linalg::factorial(self.dim() as u32)
    }
}

/// Generators of a lattice in the Lie algebra; `basis[j]` is the `j`-th generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub basis: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn standard(n: usize) -> Self {
        Self { basis: (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect() }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.basis.len();
        DMatrix::from_fn(n, n, |i, j| self.basis[j][i])
    }

    /// Coordinates of `v` in the lattice basis.
    pub fn coordinates(&self, v: &[f64]) -> Result<Vec<f64>> {
        let m = self.matrix();
        let c = solve(&m, &DVector::from_column_slice(v))
            .ok_or_else(|| Error::InvalidInput("lattice basis is not invertible".into()))?;
        Ok(c.iter().copied().collect())
    }
}

/// Per-facet densities of the boundary measure against Euclidean surface measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMeasure {
    pub weights: Vec<f64>,
}

impl BoundaryMeasure {
    pub fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }

    /// Linear combination `a * self + b * other` of two measures on the same polytope.
    pub fn combine(&self, a: f64, other: &BoundaryMeasure, b: f64) -> BoundaryMeasure {
        BoundaryMeasure { weights: self.weights.iter().zip(&other.weights).map(|(x, y)| a * x + b * y).collect() }
    }
}

/// A bounded simple polytope with its labelling, vertices and facet incidences.
#[derive(Clone, Debug)]
pub struct LabelledPolytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    vertices: Vec<Vertex>,
    facets: Vec<Vec<usize>>,
    tol_geom: f64,
    diameter: f64,
    triangulation: OnceLock<Vec<Simplex>>,
    facet_triangulations: OnceLock<Vec<Vec<Simplex>>>,
}

/// Result of clipping: the polytope plus, for each of its facets, the index of
/// the facet of the input polytope it came from (`None` for the clipping halfspace).
#[derive(Clone, Debug)]
pub struct Clipped {
    pub polytope: LabelledPolytope,
    pub origin: Vec<Option<usize>>,
}

/// JSON description of a labelled polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSpec {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<Vec<f64>>,
}

impl PolytopeSpec {
    pub fn build(&self) -> Result<LabelledPolytope> {
        for (i, h) in self.halfspaces.iter().enumerate() {
            if h.dim() != self.dim {
                return Err(Error::InvalidInput(format!(
                    "halfspaces[{i}].normal has {} components, expected dim = {}",
                    h.dim(),
                    self.dim
                )));
            }
        }
        LabelledPolytope::build(self.halfspaces.clone())
    }

    pub fn lattice(&self) -> Option<Lattice> {
        self.lattice.as_ref().map(|b| Lattice { basis: b.clone() })
    }
}

fn combinations(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            if d - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

impl LabelledPolytope {
    /// Builds and validates a labelled simple polytope from `d >= n + 1` halfspaces.
    pub fn build(halfspaces: Vec<Halfspace>) -> Result<Self> {
        let n = halfspaces.first().map(Halfspace::dim).unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        if halfspaces.len() < n + 1 {
            return Err(Error::InvalidInput(format!("need at least {} halfspaces, got {}", n + 1, halfspaces.len())));
        }
        for h in &halfspaces {
            if h.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: h.dim() });
            }
            Halfspace::new(h.normal.clone(), h.offset)?;
        }
        let p = Self::assemble(n, halfspaces, true)?.ok_or(Error::UnboundedOrEmpty)?;
        p.check_bounded()?;
        Ok(p)
    }

    /// Vertex enumeration over all `n`-subsets of facet hyperplanes. In strict mode
    /// the result must be simple with every halfspace supporting a facet; otherwise
    /// non-facet halfspaces are dropped and non-simple vertices are accepted.
    fn assemble(n: usize, halfspaces: Vec<Halfspace>, strict: bool) -> Result<Option<Self>> {
        let d = halfspaces.len();
        let norms: Vec<f64> = halfspaces.iter().map(|h| norm(&h.normal)).collect();
        let scale = 1.0 + halfspaces.iter().zip(&norms).map(|(h, nn)| h.offset.abs() / nn).fold(0.0, f64::max);
        let loose = TOL_GEOM_REL * scale;

        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for subset in combinations(d, n) {
            let a = DMatrix::from_fn(n, n, |i, j| halfspaces[subset[i]].normal[j] / norms[subset[i]]);
            let b = DVector::from_fn(n, |i, _| -halfspaces[subset[i]].offset / norms[subset[i]]);
            let lu = a.lu();
            let det = lu.determinant();
            if det.abs() < 1e-12 {
                continue;
            }
            let Some(x) = lu.solve(&b) else { continue };
            let x: Vec<f64> = x.iter().copied().collect();
            if x.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let feasible = halfspaces.iter().zip(&norms).all(|(h, nn)| h.eval(&x) / nn >= -loose);
            if feasible && !candidates.iter().any(|c| dist(c, &x) <= 10.0 * loose) {
                candidates.push(x);
            }
        }
        if candidates.is_empty() {
            return if strict { Err(Error::UnboundedOrEmpty) } else { Ok(None) };
        }
        let mut diameter = 0.0f64;
        for i in 0..candidates.len() {
            for j in i + 1..candidates.len() {
                diameter = diameter.max(dist(&candidates[i], &candidates[j]));
            }
        }
        let tol_geom = TOL_GEOM_REL * diameter.max(f64::MIN_POSITIVE);
        if diameter <= 10.0 * loose || affine_rank(&candidates, 1e3 * tol_geom.max(loose)) < n {
            return if strict { Err(Error::UnboundedOrEmpty) } else { Ok(None) };
        }

        let incidence = |x: &[f64]| -> Vec<usize> {
            (0..d).filter(|&s| (halfspaces[s].eval(x) / norms[s]).abs() <= tol_geom.max(loose)).collect()
        };

        let mut vertices: Vec<Vertex> = candidates
            .into_iter()
            .map(|point| {
                let active = incidence(&point);
                Vertex { point, active }
            })
            .collect();

        let mut keep: Vec<bool> = vec![true; d];
        for s in 0..d {
            let pts: Vec<Vec<f64>> =
                vertices.iter().filter(|v| v.active.contains(&s)).map(|v| v.point.clone()).collect();
            let rank = if pts.is_empty() { None } else { Some(affine_rank(&pts, 1e3 * tol_geom)) };
            if rank.map_or(true, |r| r < n - 1) || (n == 1 && pts.is_empty()) {
                if strict {
                    return Err(Error::RedundantFacet(s));
                }
                keep[s] = false;
            }
        }

        let index_map: Vec<Option<usize>> = {
            let mut next = 0;
            keep.iter()
                .map(|&k| {
                    if k {
                        next += 1;
                        Some(next - 1)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let halfspaces: Vec<Halfspace> =
            halfspaces.into_iter().zip(&keep).filter(|(_, &k)| k).map(|(h, _)| h).collect();
        for v in &mut vertices {
            v.active = v.active.iter().filter_map(|&s| index_map[s]).collect();
        }
        if strict {
            for v in &vertices {
                if v.active.len() > n {
                    return Err(Error::NotSimple { vertex: v.point.clone(), facets: v.active.len() });
                }
            }
        }
        let facets: Vec<Vec<usize>> = (0..halfspaces.len())
            .map(|s| (0..vertices.len()).filter(|&i| vertices[i].active.contains(&s)).collect())
            .collect();
        Ok(Some(Self {
            dim: n,
            halfspaces,
            vertices,
            facets,
            tol_geom,
            diameter,
            triangulation: OnceLock::new(),
            facet_triangulations: OnceLock::new(),
        }))
    }

    /// At each (simple) vertex, every edge must hit another facet.
    fn check_bounded(&self) -> Result<()> {
        let n = self.dim;
        for v in &self.vertices {
            let a = DMatrix::from_fn(n, n, |i, j| self.halfspaces[v.active[i]].normal[j]);
            let Some(inv) = a.try_inverse() else {
                return Err(Error::NotSimple { vertex: v.point.clone(), facets: v.active.len() });
            };
            for k in 0..n {
                let dir: Vec<f64> = (0..n).map(|i| inv[(i, k)]).collect();
                let dn = norm(&dir);
                let blocked = self
                    .halfspaces
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| !v.active.contains(s))
                    .any(|(_, h)| dot(&h.normal, &dir) / (norm(&h.normal) * dn) < -1e-12);
                if !blocked {
                    return Err(Error::UnboundedOrEmpty);
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_facets(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn halfspace(&self, s: usize) -> &Halfspace {
        &self.halfspaces[s]
    }

    /// The label `n_s`.
    pub fn label(&self, s: usize) -> &[f64] {
        &self.halfspaces[s].normal
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Indices (into `vertices()`) of the vertices on facet `s`.
    pub fn facet_vertices(&self, s: usize) -> &[usize] {
        &self.facets[s]
    }

    pub fn tol_geom(&self) -> f64 {
        self.tol_geom
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn spec(&self) -> PolytopeSpec {
        PolytopeSpec { dim: self.dim, halfspaces: self.halfspaces.clone(), lattice: None, basepoint: None }
    }

    /// All `l_s(x)`.
    pub fn slacks(&self, x: &[f64]) -> Vec<f64> {
        self.halfspaces.iter().map(|h| h.eval(x)).collect()
    }

    /// Smallest signed distance from `x` to a facet hyperplane (positive inside).
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.halfspaces.iter().map(|h| h.distance(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.depth(x) >= -self.tol_geom
    }

    pub fn is_interior(&self, x: &[f64]) -> bool {
        self.depth(x) > self.tol_geom
    }

    /// Same polytope with labels `n_s -> factors[s] * n_s`.
    pub fn rescale_labels(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.num_facets() || factors.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidInput("label factors must be positive, one per facet".into()));
        }
        let mut out = self.clone();
        out.halfspaces = self.halfspaces.iter().zip(factors).map(|(h, &a)| h.scaled(a)).collect();
        Ok(out)
    }

    pub fn volume(&self) -> f64 {
        self.triangulate().iter().map(Simplex::measure).sum()
    }

    /// Centroid of `P` with respect to `dx`.
    pub fn barycenter(&self) -> Vec<f64> {
        let mut vol = 0.0;
        let mut acc = vec![0.0; self.dim];
        for s in self.triangulate() {
            let m = s.measure();
            vol += m;
            for (a, c) in acc.iter_mut().zip(s.centroid()) {
                *a += m * c;
            }
        }
        acc.iter().map(|a| a / vol).collect()
    }

    /// Densities `w_s = 1 / |n_s|` of the boundary measure defined by the labels.
    pub fn boundary_measure(&self) -> BoundaryMeasure {
        BoundaryMeasure { weights: self.halfspaces.iter().map(|h| 1.0 / norm(&h.normal)).collect() }
    }

    /// Delzant condition per vertex: the labels at each vertex form a basis of the lattice.
    pub fn check_delzant(&self, lattice: &Lattice) -> Result<Vec<bool>> {
        if lattice.basis.len() != self.dim || lattice.basis.iter().any(|b| b.len() != self.dim) {
            return Err(Error::DimensionMismatch { expected: self.dim, got: lattice.basis.len() });
        }
        let mut coords = Vec::with_capacity(self.num_facets());
        for s in 0..self.num_facets() {
            let c = lattice.coordinates(self.label(s))?;
            let tol = 1e-9 * (1.0 + c.iter().map(|v| v.abs()).fold(0.0, f64::max));
            if c.iter().any(|v| (v - v.round()).abs() > tol) {
                return Err(Error::NonIntegralLabel { facet: s, coords: c });
            }
            coords.push(c.iter().map(|v| v.round()).collect::<Vec<f64>>());
        }
        let n = self.dim;
        Ok(self
            .vertices
            .iter()
            .map(|v| {
                if v.active.len() != n {
                    return false;
                }
                let m = DMatrix::from_fn(n, n, |i, j| coords[v.active[i]][j]);
                (m.determinant().abs() - 1.0).abs() < 1e-9
            })
            .collect())
    }

    /// Intersection with `h`, with redundant facets removed. `None` when the
    /// intersection has empty interior.
    pub fn clip(&self, h: &Halfspace) -> Option<LabelledPolytope> {
        self.clip_tracked(h).map(|c| c.polytope)
    }

    pub fn clip_tracked(&self, h: &Halfspace) -> Option<Clipped> {
        // P entirely inside h: nothing to do.
        if self.vertices.iter().all(|v| h.distance(&v.point) >= -self.tol_geom) {
            let origin = (0..self.num_facets()).map(Some).collect();
            return Some(Clipped { polytope: self.clone(), origin });
        }
        if self.vertices.iter().all(|v| h.distance(&v.point) <= self.tol_geom) {
            return None;
        }
        let mut hs = self.halfspaces.clone();
        hs.push(h.clone());
        let tagged: Vec<(Halfspace, Option<usize>)> = hs
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, hh)| (hh, if i < self.num_facets() { Some(i) } else { None }))
            .collect();
        let p = Self::assemble(self.dim, hs, false).ok().flatten()?;
        // recover provenance: kept halfspaces are an order-preserving subsequence
        let mut origin = Vec::with_capacity(p.num_facets());
        let mut it = tagged.iter();
        for kept in &p.halfspaces {
            for (cand, tag) in it.by_ref() {
                if cand == kept {
                    origin.push(*tag);
                    break;
                }
            }
        }
        Some(Clipped { polytope: p, origin })
    }

    /// Vertex-index sets of the proper subfaces of the face `face` (of dimension `k`).
    fn subfaces(&self, face: &[usize], k: usize) -> Vec<Vec<usize>> {
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for s in 0..self.num_facets() {
            let sub: Vec<usize> = face.iter().copied().filter(|&i| self.vertices[i].active.contains(&s)).collect();
            if sub.len() == face.len() || sub.is_empty() {
                continue;
            }
            let pts: Vec<Vec<f64>> = sub.iter().map(|&i| self.vertices[i].point.clone()).collect();
            if affine_rank(&pts, 1e3 * self.tol_geom) + 1 == k {
                seen.insert(sub);
            }
        }
        seen.into_iter().collect()
    }

    /// Pulling triangulation of a face from its lowest-index vertex.
    fn triangulate_face(&self, face: &[usize], k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![face[0]]];
        }
        let apex = *face.iter().min().unwrap();
        let mut out = Vec::new();
        for sub in self.subfaces(face, k) {
            if sub.contains(&apex) {
                continue;
            }
            for mut simplex in self.triangulate_face(&sub, k - 1) {
                simplex.insert(0, apex);
                out.push(simplex);
            }
        }
        out
    }

    /// Triangulation of `P` into positively oriented `n`-simplices.
    pub fn triangulate(&self) -> &[Simplex] {
        self.triangulation.get_or_init(|| {
            let all: Vec<usize> = (0..self.vertices.len()).collect();
            self.triangulate_face(&all, self.dim)
                .into_iter()
                .map(|idx| {
                    let mut s = Simplex::new(idx.iter().map(|&i| self.vertices[i].point.clone()).collect());
                    if s.dim() >= 2 && s.signed_volume() < 0.0 {
                        s.points.swap(1, 2);
                    } else if s.dim() == 1 && s.points[1][0] < s.points[0][0] {
                        s.points.swap(0, 1);
                    }
                    s
                })
                .collect()
        })
    }

    /// Triangulation of facet `s` into `(n-1)`-simplices.
    pub fn triangulate_facet(&self, s: usize) -> &[Simplex] {
        &self.facet_triangulations.get_or_init(|| {
            (0..self.num_facets())
                .map(|t| {
                    self.triangulate_face(&self.facets[t], self.dim - 1)
                        .into_iter()
                        .map(|idx| Simplex::new(idx.iter().map(|&i| self.vertices[i].point.clone()).collect()))
                        .collect()
                })
                .collect()
        })[s]
    }

    /// Faces of dimension `1..n-1` as (active facet set, vertex indices).
    pub fn proper_faces(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        for v in &self.vertices {
            let act = &v.active;
            let m = act.len();
            for mask in 1u32..(1u32 << m) {
                let set: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| act[i]).collect();
                if set.len() >= self.dim || seen.contains(&set) {
                    continue;
                }
                let verts: Vec<usize> = (0..self.vertices.len())
                    .filter(|&i| set.iter().all(|s| self.vertices[i].active.contains(s)))
                    .collect();
                let pts: Vec<Vec<f64>> = verts.iter().map(|&i| self.vertices[i].point.clone()).collect();
                if affine_rank(&pts, 1e3 * self.tol_geom) == self.dim - set.len() {
                    seen.insert(set.clone());
                    out.push((set, verts));
                }
            }
        }
        out
    }
}

/// How the metric extends across a facet when read against another labelling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    /// angle `2 pi a < 2 pi`
    ConeAngle,
    Smooth,
    /// angle `2 pi a > 2 pi`
    LargeAngle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeAngle {
    pub ratio: f64,
    pub angle: f64,
    pub kind: ConeKind,
}

/// Cone angles along each facet: `a_s` with `a_s n_s = m_s`, where `reference`
/// carries the labels `m` and `labelled` carries `n`.
pub fn cone_angles(reference: &LabelledPolytope, labelled: &LabelledPolytope) -> Result<Vec<ConeAngle>> {
    if reference.dim() != labelled.dim() || reference.num_facets() != labelled.num_facets() {
        return Err(Error::MismatchedPolytopes("dimension or facet count differs".into()));
    }
    let tol = reference.tol_geom().max(labelled.tol_geom()) * 10.0;
    for s in 0..reference.num_facets() {
        let a: Vec<&Vec<f64>> = reference.facet_vertices(s).iter().map(|&i| &reference.vertices()[i].point).collect();
        let b: Vec<&Vec<f64>> = labelled.facet_vertices(s).iter().map(|&i| &labelled.vertices()[i].point).collect();
        let same = a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| dist(p, q) <= tol));
        if !same {
            return Err(Error::MismatchedPolytopes(format!("facet {s} differs")));
        }
    }
    let mut out = Vec::with_capacity(reference.num_facets());
    for s in 0..reference.num_facets() {
        let m = reference.label(s);
        let nl = labelled.label(s);
        let (nm, nn) = (norm(m), norm(nl));
        let cos = dot(m, nl) / (nm * nn);
        if (cos - 1.0).abs() > 1e-9 {
            return Err(Error::MismatchedPolytopes(format!("labels of facet {s} are not positive multiples")));
        }
        let ratio = nm / nn;
        let kind = if (ratio - 1.0).abs() <= 1e-12 {
            ConeKind::Smooth
        } else if ratio < 1.0 {
            ConeKind::ConeAngle
        } else {
            ConeKind::LargeAngle
        };
        out.push(ConeAngle { ratio, angle: 2.0 * std::f64::consts::PI * ratio, kind });
    }
    Ok(out)
}

/// Convenience constructors for the polytopes used throughout the tests and examples.
pub mod shapes {
    use super::*;

    fn hs(normal: &[f64], offset: f64) -> Halfspace {
        Halfspace { normal: normal.to_vec(), offset }
    }

    /// `(a, b)` with labels `+left` at `a` and `-right` at `b`.
    pub fn interval(a: f64, b: f64, left: f64, right: f64) -> LabelledPolytope {
        LabelledPolytope::build(vec![hs(&[left], -left * a), hs(&[-right], right * b)]).expect("valid interval")
    }

    pub fn unit_square() -> LabelledPolytope {
        cube(2)
    }

    /// `[0,1]^n` with unit labels, facets ordered `x_1 > 0, ..., x_n > 0, 1 - x_1 > 0, ...`.
    pub fn cube(n: usize) -> LabelledPolytope {
        let mut h = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            h.push(hs(&e, 0.0));
        }
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = -1.0;
            h.push(hs(&e, 1.0));
        }
        LabelledPolytope::build(h).expect("valid cube")
    }

    /// Standard simplex `{x_i > 0, 1 - sum x_i > 0}`.
    pub fn simplex(n: usize) -> LabelledPolytope {
        let mut h = Vec::new();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            h.push(hs(&e, 0.0));
        }
        h.push(hs(&vec![-1.0; n], 1.0));
        LabelledPolytope::build(h).expect("valid simplex")
    }

    /// `{0 < x < 1, 0 < y < 1 - slope·x}` with unit labels.
    pub fn trapezoid(slope: f64) -> LabelledPolytope {
        LabelledPolytope::build(vec![
            hs(&[1.0, 0.0], 0.0),
            hs(&[0.0, 1.0], 0.0),
            hs(&[-1.0, 0.0], 1.0),
            hs(&[-slope, -1.0], 1.0),
        ])
        .expect("valid trapezoid")
    }

    /// Unit square with the corner `x + y > 3/2` cut off.
    pub fn pentagon() -> LabelledPolytope {
        LabelledPolytope::build(vec![
            hs(&[1.0, 0.0], 0.0),
            hs(&[0.0, 1.0], 0.0),
            hs(&[-1.0, 0.0], 1.0),
            hs(&[0.0, -1.0], 1.0),
            hs(&[-1.0, -1.0], 1.5),
        ])
        .expect("valid pentagon")
    }
}
