use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::field::MatrixField;
use crate::error::Result;
use crate::linalg::{orthogonal_complement, sub};
use crate::polynomial::{multi_indices, Polynomial};
use crate::polytope::{BoundaryMeasure, LabelledPolytope, Simplex};
use crate::quadrature::{integrate_fn_bulk, integrate_poly_boundary, AdaptiveOptions};

pub const TOL_BC: f64 = 1e-7;
pub const TOL_PD: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacetCert {
    pub facet: usize,
    /// `max |H(n_s, ·)| / ‖n_s‖`.
    pub first_order: f64,
    /// `max |dH(n_s, n_s) - 2 n_s| / ‖n_s‖`.
    pub second_order: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCert {
    pub facets: Vec<FacetCert>,
    pub tol_bc: f64,
    pub pass: bool,
}

/// Labels realizing `σ` on `p`: same directions, `‖n_s‖ = 1 / w_s`.
pub fn labels_for(p: &LabelledPolytope, sigma: &BoundaryMeasure) -> Vec<Vec<f64>> {
    (0..p.num_facets())
        .map(|s| {
            let n = p.label(s);
            let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            n.iter().map(|v| v / (len * sigma.weight(s))).collect()
        })
        .collect()
}

/// `p` relabelled so that its boundary measure is `σ`.
pub fn relabel(p: &LabelledPolytope, sigma: &BoundaryMeasure) -> Result<LabelledPolytope> {
    let factors: Vec<f64> = (0..p.num_facets())
        .map(|s| {
            let len = p.label(s).iter().map(|v| v * v).sum::<f64>().sqrt();
            1.0 / (len * sigma.weight(s))
        })
        .collect();
    p.rescale_labels(&factors)
}

/// Points of the relative interior of a simplex on a barycentric grid of level `m`.
fn grid_points(s: &Simplex, m: usize, interior_only: bool) -> Vec<Vec<f64>> {
    let k = s.dim();
    let lo = if interior_only { 1 } else { 0 };
    multi_indices(k + 1, m as u32)
        .into_iter()
        .filter(|e| e.iter().sum::<u32>() == m as u32 && e.iter().all(|&c| c >= lo))
        .map(|e| s.at(&e.iter().map(|&c| c as f64 / m as f64).collect::<Vec<_>>()))
        .collect()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Sample points on facet `s`: an interior barycentric mesh with at least
/// `density` points, plus the barycenters of all faces contained in `F_s`.
pub fn facet_samples(p: &LabelledPolytope, s: usize, density: usize) -> Vec<Vec<f64>> {
    let simplices = p.triangulate_facet(s);
    let k = p.dim() - 1;
    let mut out: Vec<Vec<f64>> = Vec::new();
    if k == 0 {
        out.push(simplices[0].points[0].clone());
        return out;
    }
    let per = density.div_ceil(simplices.len());
    let mut m = k + 1;
    while binomial(m - 1, k) < per {
        m += 1;
    }
    for t in simplices {
        out.extend(grid_points(t, m, true));
    }
    let on_facet = |verts: &[usize]| verts.iter().all(|&v| p.vertices()[v].active.contains(&s));
    for (_, verts) in p.proper_faces() {
        if on_facet(&verts) {
            out.push(centroid(p, &verts));
        }
    }
    for &v in p.facet_vertices(s) {
        out.push(p.vertices()[v].point.clone());
    }
    out
}

fn centroid(p: &LabelledPolytope, verts: &[usize]) -> Vec<f64> {
    let n = p.dim();
    let mut c = vec![0.0; n];
    for &v in verts {
        for i in 0..n {
            c[i] += p.vertices()[v].point[i] / verts.len() as f64;
        }
    }
    c
}

/// Checks `H(n_s, ·) = 0` and `dH(n_s, n_s) = 2 n_s` on every facet, with the
/// labels determined by `σ`.
pub fn check_boundary(h: &MatrixField, p: &LabelledPolytope, sigma: &BoundaryMeasure) -> BoundaryCert {
    check_boundary_with(h, p, sigma, 64, TOL_BC)
}

pub fn check_boundary_with(
    h: &MatrixField,
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    density: usize,
    tol_bc: f64,
) -> BoundaryCert {
    let labels = labels_for(p, sigma);
    let n = p.dim();
    let facets: Vec<FacetCert> = (0..p.num_facets())
        .map(|s| {
            let ns = &labels[s];
            let len = ns.iter().map(|v| v * v).sum::<f64>().sqrt();
            let pts = facet_samples(p, s, density);
            let mut first: f64 = 0.0;
            let mut second: f64 = 0.0;
            for x in &pts {
                match (h.eval(x), h.gradient(x)) {
                    (Ok(m), Ok(dm)) => {
                        let v = &m * DMatrix::from_column_slice(n, 1, ns);
                        first = first.max(v.norm() / len);
                        let dnn: Vec<f64> = (0..n)
                            .map(|k| {
                                let q =
                                    DMatrix::from_row_slice(1, n, ns) * &dm[k] * DMatrix::from_column_slice(n, 1, ns);
                                q[(0, 0)] - 2.0 * ns[k]
                            })
                            .collect();
                        second = second.max(dnn.iter().map(|v| v * v).sum::<f64>().sqrt() / len);
                    }
                    _ => {
                        first = f64::INFINITY;
                        second = f64::INFINITY;
                    }
                }
            }
            FacetCert { facet: s, first_order: first, second_order: second, points: pts.len() }
        })
        .collect();
    let pass = facets.iter().all(|f| f.first_order <= tol_bc && f.second_order <= tol_bc);
    BoundaryCert { facets, tol_bc, pass }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FacePositivity {
    /// Facets containing the face.
    pub face: Vec<usize>,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub interior_min_eigenvalue: f64,
    pub interior_points: usize,
    /// Minimum eigenvalue of `H` restricted to each positive-dimensional proper face.
    pub faces: Vec<FacePositivity>,
    pub tol_pd: f64,
    pub pass: bool,
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Minimum eigenvalue of `H` over an interior mesh (barycentric level `level`
/// on each simplex of the triangulation) and of its tangential restriction on
/// every face.
pub fn check_positivity(h: &MatrixField, p: &LabelledPolytope, level: usize) -> PositivityReport {
    let mut interior = f64::INFINITY;
    let mut count = 0;
    for s in p.triangulate() {
        for x in grid_points(s, level.max(p.dim() + 1), true) {
            count += 1;
            interior = interior.min(h.eval(&x).map(|m| min_eig(&m)).unwrap_or(f64::NEG_INFINITY));
        }
    }
    let n = p.dim();
    let mut faces = Vec::new();
    for (active, verts) in p.proper_faces() {
        let normals: Vec<Vec<f64>> = active.iter().map(|&s| p.label(s).to_vec()).collect();
        let z = orthogonal_complement(&normals, n);
        let pts = face_points(p, &verts, level);
        let mut m = f64::INFINITY;
        for x in pts {
            m = m.min(h.eval(&x).map(|hx| min_eig(&(z.transpose() * hx * &z))).unwrap_or(f64::NEG_INFINITY));
        }
        faces.push(FacePositivity { face: active, min_eigenvalue: m });
    }
    let pass = interior > TOL_PD && faces.iter().all(|f| f.min_eigenvalue > TOL_PD);
    PositivityReport { interior_min_eigenvalue: interior, interior_points: count, faces, tol_pd: TOL_PD, pass }
}

/// Relative-interior points of a face: its centroid pulled toward each vertex.
fn face_points(p: &LabelledPolytope, verts: &[usize], level: usize) -> Vec<Vec<f64>> {
    let c = centroid(p, verts);
    let mut out = vec![c.clone()];
    for &v in verts {
        let d = sub(&p.vertices()[v].point, &c);
        for k in 1..level.max(2) {
            let t = k as f64 / level.max(2) as f64;
            out.push(c.iter().zip(&d).map(|(ci, di)| ci + t * di).collect());
        }
    }
    out
}

/// `|∫_P S(H) f dx - 2 ∫_{∂P} f σ|` for `f ∈ {1, x_1, ..., x_n}`.
pub fn parts_identity_check(
    h: &MatrixField,
    p: &LabelledPolytope,
    sigma: &BoundaryMeasure,
    opts: &AdaptiveOptions,
) -> Result<Vec<f64>> {
    let n = p.dim();
    let mut basis = vec![Polynomial::constant(n, 1.0)];
    basis.extend((0..n).map(|i| Polynomial::variable(n, i)));
    let mut out = Vec::with_capacity(n + 1);
    for f in &basis {
        // evaluation errors only occur on the boundary, which the rule never samples
        let g = |x: &[f64]| h.abreu(x).unwrap_or(f64::NAN) * f.eval(x);
        let bulk = integrate_fn_bulk(p, &g, opts)?.value;
        let boundary = integrate_poly_boundary(p, sigma, f, None)?.value;
        out.push((bulk - 2.0 * boundary).abs());
    }
    Ok(out)
}
