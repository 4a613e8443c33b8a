//! Splitting `min_f F(K f) + G(f)` with `F(z) = Σ_θ ‖z_θ‖₂` and `G` the
//! indicator of the interpolation constraint (or its quadratic relaxation),
//! solved by a first-order primal-dual iteration.

use std::sync::OnceLock;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::TensorKnotGrid;
use crate::collocation::{InpaintingMask, SiteSet};
use crate::error::{Error, Result};
use crate::projection::{ExactProjector, RelaxedProx};
use crate::quadrature::{block_norm_sum, GradientOperator};
use crate::sparse::{LinearOperator, SparseOperator};

/// How the known pixels enter the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// `B_{Ξ*} f = g` exactly.
    Exact,
    /// `G(f) = (ε/2) ‖B_{Ξ*} f − g‖²`.
    Relaxed { epsilon: f64 },
}

/// Operators and data of one inpainting problem.
#[derive(Debug, Clone)]
pub struct ProblemData {
    k: GradientOperator,
    g: Vec<f64>,
    projector: ExactProjector,
    relaxed: RelaxedProx,
    mode: Mode,
    norm: OnceLock<f64>,
}

impl ProblemData {
    /// `g` holds the known values at the constrained sites, in the order of
    /// [`SiteSet::constrained_sites`].
    pub fn new(grid: &TensorKnotGrid, sites: &SiteSet, k: GradientOperator, g: Vec<f64>, mode: Mode) -> Result<Self> {
        if k.ncols() != grid.num_coeffs() {
            return Err(Error::DimensionMismatch(format!(
                "gradient operator has {} columns, spline space has {} functions",
                k.ncols(),
                grid.num_coeffs()
            )));
        }
        if g.len() != sites.constrained_sites().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} data values for {} constrained sites",
                g.len(),
                sites.constrained_sites().len()
            )));
        }
        if let Mode::Relaxed { epsilon } = mode {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
            }
        }
        let projector = ExactProjector::new(grid, sites)?;
        if mode == Mode::Exact {
            projector.prepare()?;
        }
        Ok(Self {
            k,
            g,
            projector,
            relaxed: RelaxedProx::new(),
            mode,
            norm: OnceLock::new(),
        })
    }

    pub fn gradient_operator(&self) -> &GradientOperator {
        &self.k
    }

    pub fn data(&self) -> &[f64] {
        &self.g
    }

    pub fn num_coeffs(&self) -> usize {
        self.k.ncols()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// The exact projection, available in both modes.
    pub fn projector(&self) -> &ExactProjector {
        &self.projector
    }

    /// Collocation rows `B_{Ξ*}`.
    pub fn rows(&self) -> &SparseOperator {
        self.projector.rows()
    }

    /// `‖K‖`, estimated once by power iteration.
    pub fn operator_norm(&self) -> f64 {
        *self.norm.get_or_init(|| estimate_operator_norm(&self.k))
    }

    /// Default primal and dual step `0.95 / ‖K‖` (1 when `K = 0`).
    pub fn default_step(&self) -> f64 {
        let l = self.operator_norm();
        if l > 0.0 {
            0.95 / l
        } else {
            1.0
        }
    }

    /// Exact-mode prox: the projection onto the constraint set.
    pub fn prox_g_exact(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.projector.project(f, &self.g)
    }

    /// Relaxed-mode prox `(I + λεBᵀB)⁻¹(f + λεBᵀg)`.
    pub fn prox_g_relaxed(&self, f: &[f64], lambda: f64, epsilon: f64) -> Result<Vec<f64>> {
        self.relaxed.apply(self.projector.rows(), f, &self.g, lambda * epsilon)
    }

    /// `prox_{λG}` for the configured mode; `λ` is ignored in exact mode.
    pub fn prox_g(&self, f: &[f64], lambda: f64) -> Result<Vec<f64>> {
        match self.mode {
            Mode::Exact => self.prox_g_exact(f),
            Mode::Relaxed { epsilon } => self.prox_g_relaxed(f, lambda, epsilon),
        }
    }

    /// TV term `Σ_θ w_θ ‖∇s(θ)‖₂`.
    pub fn tv(&self, f: &[f64]) -> f64 {
        self.k.objective(f)
    }

    /// `G(f)`, zero in exact mode (infeasibility is not measured here).
    pub fn data_term(&self, f: &[f64]) -> f64 {
        match self.mode {
            Mode::Exact => 0.0,
            Mode::Relaxed { epsilon } => 0.5 * epsilon * self.data_residual_sq(f),
        }
    }

    /// `‖B_{Ξ*} f − g‖²`.
    pub fn data_residual_sq(&self, f: &[f64]) -> f64 {
        self.projector
            .collocate(f)
            .iter()
            .zip(&self.g)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Full objective `F(Kf) + G(f)`.
    pub fn objective(&self, f: &[f64]) -> f64 {
        self.tv(f) + self.data_term(f)
    }
}

/// `prox_{λF*}`: projects every block of length `d` onto the closed unit
/// ball. `F*` is an indicator, so `λ > 0` does not enter.
pub fn prox_f_star(y: &mut [f64], d: usize, lambda: f64) {
    debug_assert!(lambda > 0.0);
    for block in y.chunks_mut(d) {
        let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
        // a projected block can come out a few ulps above 1; leaving those
        // alone keeps the map idempotent
        if norm > 1.0 + 8.0 * f64::EPSILON {
            block.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// Largest singular value of `op` by power iteration on `opᵀ op`.
pub fn estimate_operator_norm<O: LinearOperator + ?Sized>(op: &O) -> f64 {
    estimate_operator_norm_with(op, 200, 1e-6)
}

pub fn estimate_operator_norm_with<O: LinearOperator + ?Sized>(op: &O, max_iter: usize, tol: f64) -> f64 {
    let n = op.ncols();
    if n == 0 || op.nrows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let dist = Uniform::new(-1.0, 1.0).expect("valid range");
    let mut v: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    let mut kv = vec![0.0; op.nrows()];
    let mut w = vec![0.0; n];
    let mut estimate = 0.0f64;
    for _ in 0..max_iter {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        op.apply(&v, &mut kv);
        op.apply_transpose(&kv, &mut w);
        let next = kv.iter().map(|x| x * x).sum::<f64>().sqrt();
        std::mem::swap(&mut v, &mut w);
        let done = estimate > 0.0 && (next - estimate).abs() <= tol * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// Step sizes and stopping rule of the primal-dual iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Primal step; defaults to `0.95 / L`.
    pub tau: Option<f64>,
    /// Dual step; defaults to `0.95 / L`.
    pub sigma: Option<f64>,
    pub theta: f64,
    pub max_iter: usize,
    /// Stop when `‖f^{k+1} − f^k‖ / ‖f^k‖` drops below this.
    pub tol: f64,
    /// Precomputed `‖K‖`; estimated when absent.
    pub operator_norm: Option<f64>,
    /// Keep per-iteration objective and residual.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: None,
            sigma: None,
            theta: 1.0,
            max_iter: 100,
            tol: 1e-6,
            operator_norm: None,
            record_history: true,
        }
    }
}

/// One iteration's record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub objective: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    /// Last fixed-point residual.
    pub residual: f64,
    /// Objective of the returned coefficients.
    pub objective: f64,
    pub best_iteration: usize,
    pub operator_norm: f64,
    pub tau: f64,
    pub sigma: f64,
    /// Largest dual block norm seen after any dual step.
    pub max_dual_norm: f64,
    pub history: Vec<IterationRecord>,
}

/// Iterates of the primal-dual method.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub f: Vec<f64>,
    pub y: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub iteration: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub coeffs: Vec<f64>,
    pub diagnostics: Diagnostics,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs the primal-dual iteration from `start` and returns the iterate with
/// the smallest objective. In exact mode the result is projected once more.
pub fn solve(data: &ProblemData, config: &SolverConfig, start: &[f64]) -> Result<Solution> {
    let n = data.num_coeffs();
    if start.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "start vector has {} entries, expected {n}",
            start.len()
        )));
    }
    let k = &data.k;
    let d = k.dim();
    let l = config.operator_norm.unwrap_or_else(|| data.operator_norm());
    if k.nrows() == 0 || l == 0.0 {
        // nothing to regularize; the feasible point nearest to the start
        // minimizes G in either mode
        let f = data.prox_g_exact(start)?;
        let objective = data.objective(&f);
        return Ok(Solution {
            coeffs: f,
            diagnostics: Diagnostics {
                iterations: 0,
                converged: true,
                residual: 0.0,
                objective,
                best_iteration: 0,
                operator_norm: l,
                tau: 0.0,
                sigma: 0.0,
                max_dual_norm: 0.0,
                history: Vec::new(),
            },
        });
    }
    let tau = config.tau.unwrap_or(0.95 / l);
    let sigma = config.sigma.unwrap_or(0.95 / l);
    if !(tau > 0.0 && sigma > 0.0) {
        return Err(Error::InvalidParameter("step sizes must be positive".into()));
    }
    if !(0.0..=1.0).contains(&config.theta) {
        return Err(Error::InvalidParameter(format!(
            "theta {} outside [0, 1]",
            config.theta
        )));
    }

    let mut state = SolverState {
        f: data.prox_g(start, tau)?,
        y: vec![0.0; k.nrows()],
        f_bar: Vec::new(),
        iteration: 0,
    };
    state.f_bar = state.f.clone();
    let mut kf = vec![0.0; k.nrows()];
    k.apply(&state.f, &mut kf);
    let mut kf_bar = kf.clone();
    let mut kt_y = vec![0.0; n];
    let mut kf_next = vec![0.0; k.nrows()];
    let mut v = vec![0.0; n];

    let mut best = state.f.clone();
    let mut best_obj = block_norm_sum(&kf, d) + data.data_term(&state.f);
    let mut best_iter = 0;
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut max_dual = 0.0f64;

    while state.iteration < config.max_iter {
        // dual step
        for (yi, kb) in state.y.iter_mut().zip(&kf_bar) {
            *yi += sigma * kb;
        }
        prox_f_star(&mut state.y, d, sigma);
        for b in state.y.chunks(d) {
            max_dual = max_dual.max(norm(b));
        }
        // primal step
        k.apply_transpose(&state.y, &mut kt_y);
        for ((vi, fi), ki) in v.iter_mut().zip(&state.f).zip(&kt_y) {
            *vi = fi - tau * ki;
        }
        let f_next = data.prox_g(&v, tau)?;
        k.apply(&f_next, &mut kf_next);
        let theta = config.theta;
        for i in 0..n {
            state.f_bar[i] = f_next[i] + theta * (f_next[i] - state.f[i]);
        }
        for i in 0..kf.len() {
            kf_bar[i] = kf_next[i] + theta * (kf_next[i] - kf[i]);
        }
        let diff: f64 = f_next
            .iter()
            .zip(&state.f)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        residual = diff / norm(&state.f).max(f64::MIN_POSITIVE);
        state.f = f_next;
        std::mem::swap(&mut kf, &mut kf_next);
        state.iteration += 1;

        let obj = block_norm_sum(&kf, d) + data.data_term(&state.f);
        if config.record_history {
            history.push(IterationRecord {
                objective: obj,
                residual,
            });
        }
        if obj < best_obj {
            best_obj = obj;
            best.copy_from_slice(&state.f);
            best_iter = state.iteration;
        }
        if residual < config.tol {
            converged = true;
            break;
        }
    }

    let coeffs = match data.mode() {
        Mode::Exact => data.prox_g_exact(&best)?,
        Mode::Relaxed { .. } => best,
    };
    let objective = data.objective(&coeffs);
    Ok(Solution {
        coeffs,
        diagnostics: Diagnostics {
            iterations: state.iteration,
            converged,
            residual,
            objective,
            best_iteration: best_iter,
            operator_norm: l,
            tau,
            sigma,
            max_dual_norm: max_dual,
            history,
        },
    })
}

/// Coefficients drawn independently and uniformly from `[lo, hi]`.
pub fn starting_guess_random(len: usize, seed: u64, range: (f64, f64)) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(range.0, range.1).expect("valid intensity range");
    (0..len).map(|_| dist.sample(&mut rng)).collect()
}

/// Mean of the known pixel values.
pub fn known_mean(image: &[f64], mask: &InpaintingMask) -> f64 {
    let (sum, count) = mask
        .known_indices()
        .fold((0.0, 0usize), |(s, c), i| (s + image[i], c + 1));
    sum / count.max(1) as f64
}

/// `prox_{λG}(ω_mean · 1)` with `ω_mean` the mean over the known pixels and
/// `λ` the solver's default step (which only matters in relaxed mode).
pub fn starting_guess_mean(data: &ProblemData, image: &[f64], mask: &InpaintingMask) -> Result<Vec<f64>> {
    let omega = known_mean(image, mask);
    data.prox_g(&vec![omega; data.num_coeffs()], data.default_step())
}

/// Initial guess for the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartStrategy {
    /// Uniform values on the intensity range, reproducible by seed.
    Random { seed: u64 },
    /// The constant image at the mean known value.
    Mean,
}

/// Converts a relaxed-model weight given in normalized units into the
/// pixel-unit weight used by [`Mode::Relaxed`].
///
/// Normalized units put intensities on `[0, 1]` and keep the pixel as the
/// unit of length. TV then scales with the intensity range and the
/// sum-of-squares data term with its square, so `ε_pixel = ε / range`.
pub fn normalized_epsilon(epsilon: f64, pixels: &crate::collocation::PixelGrid) -> f64 {
    let (lo, hi) = pixels.range();
    epsilon / (hi - lo)
}
