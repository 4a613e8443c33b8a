//! Gauss–Legendre rules from the Golub–Welsch eigenproblem.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes (ascending) and weights of the `q`-point rule on `[-1, 1]`.
pub fn golub_welsch(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(q, q);
    for k in 1..q {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..q)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `∫_a^b f` with the `q`-point rule mapped to `[a, b]`.
pub fn integrate(q: usize, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = golub_welsch(q);
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    x.iter().zip(&w).map(|(&xi, &wi)| half * wi * f(mid + half * xi)).sum()
}
