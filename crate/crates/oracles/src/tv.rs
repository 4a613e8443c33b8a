//! Projected-subgradient minimizers of discrete TV objectives, used as
//! slow but simple references for the primal-dual solvers.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{null_space, project_affine};

#[derive(Debug, Clone)]
pub struct Reference {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// `Σ_θ ‖(K f)_θ‖₂` for consecutive blocks of `d` rows.
pub fn block_objective(k: &DMatrix<f64>, d: usize, f: &DVector<f64>) -> f64 {
    let y = k * f;
    y.as_slice()
        .chunks(d)
        .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum()
}

/// Minimizes `Σ_θ ‖(K f)_θ‖` over `{B f = g}`.
///
/// Runs in the null-space coordinates of `B` from the least-norm feasible
/// point, with steps `step0 / √(k+1)` and the best iterate kept.
pub fn constrained_block_tv(
    k: &DMatrix<f64>,
    d: usize,
    b: &DMatrix<f64>,
    g: &[f64],
    iters: usize,
    step0: f64,
) -> Reference {
    let n = k.ncols();
    let f0 = DVector::from_column_slice(&project_affine(b, g, &vec![0.0; n]));
    let z = null_space(b);
    let kz = k * &z;
    let y0 = k * &f0;
    let mut c = DVector::<f64>::zeros(z.ncols());
    let mut best = f0.clone();
    let mut best_obj = block_objective(k, d, &f0);
    for it in 0..iters {
        let y = &y0 + &kz * &c;
        let mut s = DVector::<f64>::zeros(y.len());
        let mut obj = 0.0;
        for (blk, chunk) in y.as_slice().chunks(d).enumerate() {
            let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
            obj += norm;
            if norm > 0.0 {
                for (j, v) in chunk.iter().enumerate() {
                    s[blk * d + j] = v / norm;
                }
            }
        }
        if obj < best_obj {
            best_obj = obj;
            best = &f0 + &z * &c;
        }
        let sub = kz.transpose() * s;
        let norm = sub.norm();
        if norm == 0.0 {
            break;
        }
        c -= sub * (step0 / ((it + 1) as f64).sqrt() / norm);
    }
    Reference {
        x: best.as_slice().to_vec(),
        objective: best_obj,
    }
}

/// Forward-difference isotropic TV on a `dims` pixel grid (last axis
/// fastest), with a zero difference past the last slice of every axis.
pub fn pixel_tv(dims: &[usize], u: &[f64]) -> f64 {
    let d = dims.len();
    let mut stride = vec![1; d];
    for j in (0..d.saturating_sub(1)).rev() {
        stride[j] = stride[j + 1] * dims[j + 1];
    }
    let mut total = 0.0;
    for i in 0..u.len() {
        let mut sq = 0.0;
        for j in 0..d {
            if (i / stride[j]) % dims[j] + 1 < dims[j] {
                sq += (u[i + stride[j]] - u[i]).powi(2);
            }
        }
        total += sq.sqrt();
    }
    total
}

/// Dense forward-difference matrix matching [`pixel_tv`], `d` rows per pixel.
pub fn pixel_gradient_matrix(dims: &[usize]) -> DMatrix<f64> {
    let d = dims.len();
    let n: usize = dims.iter().product();
    let mut stride = vec![1; d];
    for j in (0..d.saturating_sub(1)).rev() {
        stride[j] = stride[j + 1] * dims[j + 1];
    }
    let mut m = DMatrix::zeros(n * d, n);
    for i in 0..n {
        for j in 0..d {
            if (i / stride[j]) % dims[j] + 1 < dims[j] {
                m[(i * d + j, i + stride[j])] = 1.0;
                m[(i * d + j, i)] = -1.0;
            }
        }
    }
    m
}

/// Minimizes [`pixel_tv`] over the pixels flagged in `unknown`, keeping the
/// others at `image`.
pub fn inpaint_pixel_tv(dims: &[usize], image: &[f64], unknown: &[bool], iters: usize, step0: f64) -> Reference {
    let n = image.len();
    let known: Vec<usize> = (0..n).filter(|&i| !unknown[i]).collect();
    let mut b = DMatrix::zeros(known.len(), n);
    for (r, &i) in known.iter().enumerate() {
        b[(r, i)] = 1.0;
    }
    let g: Vec<f64> = known.iter().map(|&i| image[i]).collect();
    constrained_block_tv(&pixel_gradient_matrix(dims), dims.len(), &b, &g, iters, step0)
}
