//! Pixel-domain TV inpainting: isotropic forward-difference TV minimized over
//! the unknown pixels with the known pixels held fixed.

use crate::collocation::InpaintingMask;
use crate::error::{Error, Result};
use crate::imaging::PixelImage;
use crate::optimizer::{
    known_mean, prox_f_star, starting_guess_random, Diagnostics, IterationRecord, SolverConfig, StartStrategy,
};
use crate::quadrature::block_norm_sum;

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for j in (0..dims.len().saturating_sub(1)).rev() {
        s[j] = s[j + 1] * dims[j + 1];
    }
    s
}

/// Forward differences with a zero component at the last slice of every
/// axis; output holds one `d`-vector per pixel.
pub fn pixel_gradient(dims: &[usize], u: &[f64]) -> Vec<f64> {
    let d = dims.len();
    let st = strides(dims);
    let mut out = vec![0.0; u.len() * d];
    for (i, &ui) in u.iter().enumerate() {
        for j in 0..d {
            let coord = (i / st[j]) % dims[j];
            if coord + 1 < dims[j] {
                out[i * d + j] = u[i + st[j]] - ui;
            }
        }
    }
    out
}

/// Negative adjoint of [`pixel_gradient`].
pub fn divergence(dims: &[usize], p: &[f64]) -> Vec<f64> {
    let d = dims.len();
    let st = strides(dims);
    let n = p.len() / d;
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..d {
            let coord = (i / st[j]) % dims[j];
            if coord + 1 < dims[j] {
                *o += p[i * d + j];
            }
            if coord > 0 {
                *o -= p[(i - st[j]) * d + j];
            }
        }
    }
    out
}

/// `Σ_pixels ‖∇u‖₂`.
pub fn pixel_tv(dims: &[usize], u: &[f64]) -> f64 {
    block_norm_sum(&pixel_gradient(dims, u), dims.len())
}

/// Initial pixels: known values kept, unknown ones random or the known mean.
pub fn pixel_start(image: &PixelImage, mask: &InpaintingMask, start: StartStrategy) -> Vec<f64> {
    let mut u = image.data().to_vec();
    match start {
        StartStrategy::Mean => {
            let omega = known_mean(image.data(), mask);
            for i in mask.unknown_indices() {
                u[i] = omega;
            }
        }
        StartStrategy::Random { seed } => {
            let unknown: Vec<usize> = mask.unknown_indices().collect();
            let values = starting_guess_random(unknown.len(), seed, (0.0, 255.0));
            for (&i, v) in unknown.iter().zip(values) {
                u[i] = v;
            }
        }
    }
    u
}

/// Primal-dual TV inpainting on the pixel grid; returns the best iterate.
pub fn solve_pixel_tv(
    image: &PixelImage,
    mask: &InpaintingMask,
    config: &SolverConfig,
    start: StartStrategy,
) -> Result<(PixelImage, Diagnostics)> {
    if mask.dims() != image.dims() {
        return Err(Error::DimensionMismatch(format!(
            "mask {:?} vs image {:?}",
            mask.dims(),
            image.dims()
        )));
    }
    let dims = image.dims();
    let d = dims.len();
    let known = image.data();
    let unknown: Vec<usize> = mask.unknown_indices().collect();
    let restore = |u: &mut [f64]| {
        for (i, v) in u.iter_mut().enumerate() {
            if !mask.is_unknown(i) {
                *v = known[i];
            }
        }
    };
    let mut u = pixel_start(image, mask, start);
    let l = config.operator_norm.unwrap_or((4.0 * d as f64).sqrt());
    let tau = config.tau.unwrap_or(0.95 / l);
    let sigma = config.sigma.unwrap_or(0.95 / l);

    let mut y = vec![0.0; u.len() * d];
    let mut u_bar = u.clone();
    let mut best = u.clone();
    let mut best_obj = pixel_tv(dims, &u);
    let mut best_iter = 0;
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = unknown.is_empty();
    let mut max_dual = 0.0f64;
    let mut iterations = 0;
    while !converged && iterations < config.max_iter {
        let grad = pixel_gradient(dims, &u_bar);
        for (yi, gi) in y.iter_mut().zip(&grad) {
            *yi += sigma * gi;
        }
        prox_f_star(&mut y, d, sigma);
        for b in y.chunks(d) {
            max_dual = max_dual.max(b.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let div = divergence(dims, &y);
        let mut next: Vec<f64> = u.iter().zip(&div).map(|(a, b)| a + tau * b).collect();
        restore(&mut next);
        let mut diff = 0.0;
        for &i in &unknown {
            u_bar[i] = next[i] + config.theta * (next[i] - u[i]);
            diff += (next[i] - u[i]) * (next[i] - u[i]);
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        residual = diff.sqrt() / norm.max(f64::MIN_POSITIVE);
        u = next;
        iterations += 1;
        let obj = pixel_tv(dims, &u);
        if config.record_history {
            history.push(IterationRecord {
                objective: obj,
                residual,
            });
        }
        if obj < best_obj {
            best_obj = obj;
            best.copy_from_slice(&u);
            best_iter = iterations;
        }
        if residual < config.tol {
            converged = true;
        }
    }
    let out = PixelImage::new(dims, best)?;
    Ok((
        out,
        Diagnostics {
            iterations,
            converged,
            residual: if iterations == 0 { 0.0 } else { residual },
            objective: best_obj,
            best_iteration: best_iter,
            operator_norm: l,
            tau,
            sigma,
            max_dual_norm: max_dual,
            history,
        },
    ))
}
