//! Dense least-squares projections and prox solves.

use nalgebra::{DMatrix, DVector};

/// Row-major dense matrix from a flat slice.
pub fn matrix(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

/// Moore–Penrose pseudo-inverse through the SVD with a relative cutoff.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = 1e-12 * smax.max(f64::MIN_POSITIVE) * a.nrows().max(a.ncols()) as f64;
    svd.pseudo_inverse(cutoff).expect("svd with both factors")
}

/// Euclidean projection of `f` onto `{x : B x = g}`: `f − B⁺(B f − g)`.
pub fn project_affine(b: &DMatrix<f64>, g: &[f64], f: &[f64]) -> Vec<f64> {
    let f = DVector::from_column_slice(f);
    let r = b * &f - DVector::from_column_slice(g);
    (f - pseudo_inverse(b) * r).as_slice().to_vec()
}

/// `(I + c BᵀB)⁻¹ (f + c Bᵀ g)` by dense LU.
pub fn relaxed_prox(b: &DMatrix<f64>, g: &[f64], f: &[f64], c: f64) -> Vec<f64> {
    let n = b.ncols();
    let lhs = DMatrix::<f64>::identity(n, n) + c * b.transpose() * b;
    let rhs = DVector::from_column_slice(f) + c * b.transpose() * DVector::from_column_slice(g);
    lhs.lu().solve(&rhs).expect("nonsingular").as_slice().to_vec()
}

/// Orthonormal basis of the null space of `b`, one column per direction.
pub fn null_space(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.ncols();
    let gram = b.transpose() * b;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&k| eig.eigenvalues[k] <= 1e-10 * scale)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_lands_on_constraints() {
        let b = matrix(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let p = project_affine(&b, &[1.0, 2.0], &[0.0, 0.0, 0.0]);
        let r = &b * DVector::from_column_slice(&p);
        assert!((r[0] - 1.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
        assert_eq!(null_space(&b).ncols(), 1);
    }

    #[test]
    fn relaxed_tends_to_projection() {
        let b = matrix(1, 2, &[1.0, 1.0]);
        let p = relaxed_prox(&b, &[2.0], &[0.0, 0.0], 1e8);
        assert!((p[0] - 1.0).abs() < 1e-6 && (p[1] - 1.0).abs() < 1e-6);
    }
}
