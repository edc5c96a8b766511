//! Small dense helpers on slices; anything needing a factorization goes
//! through nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| a.iter().map(|x| x / n).collect())
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_scaled(a: &[f64], t: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * y).collect()
}

pub fn scale(a: &[f64], t: f64) -> Vec<f64> {
    a.iter().map(|x| x * t).collect()
}

pub fn unit_vector(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// `(1/√d, …, 1/√d)`.
pub fn diffuse_unit_vector(d: usize) -> Vec<f64> {
    vec![1.0 / (d as f64).sqrt(); d]
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Sorted (ascending) eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Gram-Schmidt: component of `v` orthogonal to the unit vector `u`, normalized.
pub fn orthonormal_complement(u: &[f64], v: &[f64]) -> Option<Vec<f64>> {
    let c = dot(u, v);
    normalized(&add_scaled(v, -c, u))
}
