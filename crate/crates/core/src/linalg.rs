//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b))
}

/// Matrix whose columns are `points[i] - origin` for `i >= 1` (origin = `points[0]`).
pub(crate) fn edge_matrix(points: &[Vec<f64>]) -> DMatrix<f64> {
    let n = points[0].len();
    let k = points.len() - 1;
    DMatrix::from_fn(n, k, |i, j| points[j + 1][i] - points[0][i])
}

/// Rank of the affine hull of a point set, using singular values relative to `tol`.
pub(crate) fn affine_rank(points: &[Vec<f64>], tol: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let e = edge_matrix(points);
    let sv = e.singular_values();
    sv.iter().filter(|&&s| s > tol).count()
}

/// `k`-dimensional volume of the simplex spanned by `k + 1` points, via the Gram determinant.
pub(crate) fn simplex_measure(points: &[Vec<f64>]) -> f64 {
    let k = points.len() - 1;
    if k == 0 {
        return 1.0;
    }
    let e = edge_matrix(points);
    let gram = e.transpose() * &e;
    let det = gram.determinant().max(0.0);
    det.sqrt() / factorial(k as u32)
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Solves `a x = b` with partial-pivot LU; `None` if singular.
pub(crate) fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}

/// Rank of `m` (singular values above `rel_tol * max`) and an orthonormal basis
/// (as columns) of its null space: the eigenvectors of `mᵀm` belonging to the
/// `cols - rank` smallest eigenvalues.
pub(crate) fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> (usize, DMatrix<f64>) {
    let cols = m.ncols();
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > rel_tol * max).count();
    let eig = SymmetricEigen::new(m.transpose() * m);
    let mut idx: Vec<usize> = (0..cols).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let kernel = &idx[..cols - rank];
    let basis = DMatrix::from_fn(cols, kernel.len(), |r, c| eig.eigenvectors[(r, kernel[c])]);
    (rank, basis)
}

/// Orthonormal basis (columns) of the orthogonal complement of the span of `vectors` in R^n.
pub(crate) fn orthogonal_complement(vectors: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::identity(n, n);
    }
    let m = DMatrix::from_fn(vectors.len(), n, |i, j| vectors[i][j]);
    null_space(&m, 1e-10).1
}
