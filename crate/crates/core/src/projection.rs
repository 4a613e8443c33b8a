//! Projections onto the interpolation constraint `B_{Ξ*} f = g` and the
//! regularized normal equations of the relaxed model.
//!
//! The full square collocation matrix is a Kronecker product `B = ⊗ B_j`, so
//! `A = B Bᵀ = ⊗ (B_j B_jᵀ)` can be solved axis by axis with small banded
//! factors. The constrained rows form `B_{Ξ*}`; solving with
//! `B_{Ξ*} B_{Ξ*}ᵀ = A_CC` reduces to a dense Schur system of size `#(Ξ\Ξ*)`
//! built from `(A⁻¹)_UU = Π_j (A_j⁻¹)[u_j, u'_j]`. When many sites are free
//! the banded Gram factorization of `B_{Ξ*} B_{Ξ*}ᵀ` is used instead.

use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::basis::{unflatten, TensorKnotGrid};
use crate::collocation::{assemble_collocation, axis_collocation, Restrict, SiteSet};
use crate::error::{Error, Result};
use crate::sparse::{BandedCholesky, LinearOperator, SparseOperator};

#[derive(Debug, Clone)]
struct AxisFactor {
    colloc: SparseOperator,
    chol: BandedCholesky,
    inverse: Vec<f64>,
}

impl AxisFactor {
    fn new(grid: &TensorKnotGrid, sites: &SiteSet, axis: usize) -> Result<Self> {
        let a = grid.axis(axis);
        let n = a.num_basis();
        let colloc = SparseOperator::from_dense(n, n, &axis_collocation(a, sites.axis_sites(axis)));
        let chol = BandedCholesky::gram(&colloc)?;
        let mut inverse = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            chol.solve_in_place(&mut e);
            for r in 0..n {
                inverse[r * n + c] = e[r];
            }
        }
        Ok(Self { colloc, chol, inverse })
    }
}

/// Visits every fiber along `axis` as `(offset, step)`.
fn for_each_fiber<F: FnMut(usize, usize)>(dims: &[usize], axis: usize, mut f: F) {
    let step: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let span = step * dims[axis];
    for o in 0..outer {
        for i in 0..step {
            f(o * span + i, step);
        }
    }
}

fn apply_axis_sparse(op: &SparseOperator, transpose: bool, dims: &[usize], axis: usize, x: &mut [f64]) {
    let n = dims[axis];
    let mut src = vec![0.0; n];
    let mut dst = vec![0.0; n];
    for_each_fiber(dims, axis, |offset, step| {
        for (i, s) in src.iter_mut().enumerate() {
            *s = x[offset + i * step];
        }
        if transpose {
            op.apply_transpose(&src, &mut dst);
        } else {
            op.apply(&src, &mut dst);
        }
        for (i, d) in dst.iter().enumerate() {
            x[offset + i * step] = *d;
        }
    });
}

/// Euclidean projection onto `{f : B_{Ξ*} f = g}`.
#[derive(Debug, Clone)]
pub struct ExactProjector {
    dims: Vec<usize>,
    axes: Vec<AxisFactor>,
    constrained: Vec<usize>,
    free: Vec<usize>,
    rows: SparseOperator,
    use_schur: bool,
    route: OnceLock<Route>,
}

#[derive(Debug, Clone)]
enum Route {
    Schur(Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>),
    Gram { chol: BandedCholesky },
}

/// Which factorization backs an [`ExactProjector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionRoute {
    /// Pick the cheaper of the two by a flop estimate.
    Auto,
    Schur,
    Gram,
}

impl ExactProjector {
    pub fn new(grid: &TensorKnotGrid, sites: &SiteSet) -> Result<Self> {
        Self::with_route(grid, sites, ProjectionRoute::Auto)
    }

    pub fn with_route(grid: &TensorKnotGrid, sites: &SiteSet, route: ProjectionRoute) -> Result<Self> {
        let dims = grid.basis_dims();
        if sites.dims() != dims.as_slice() {
            return Err(Error::DimensionMismatch("site set does not match the knot grid".into()));
        }
        let axes = (0..grid.dim())
            .map(|j| AxisFactor::new(grid, sites, j))
            .collect::<Result<Vec<_>>>()?;
        let free = sites.free_sites().to_vec();
        let constrained = sites.constrained_sites().to_vec();
        let use_schur = match route {
            ProjectionRoute::Schur => true,
            ProjectionRoute::Gram => false,
            ProjectionRoute::Auto => {
                let u = free.len() as f64;
                let mut width = 0.0;
                let mut stride = 1.0;
                for (j, axis) in grid.axes().iter().enumerate().rev() {
                    width += 2.0 * (axis.order() as f64 - 1.0) * stride;
                    stride *= dims[j] as f64;
                }
                u * u * u / 3.0 <= constrained.len() as f64 * width * width
            }
        };
        Ok(Self {
            dims,
            axes,
            constrained,
            free,
            rows: assemble_collocation(grid, sites, Restrict::Constrained),
            use_schur,
            route: OnceLock::new(),
        })
    }

    /// Factorizes on first use.
    fn route(&self) -> Result<&Route> {
        if let Some(route) = self.route.get() {
            return Ok(route);
        }
        let route = if self.use_schur {
            Route::Schur(Self::schur_factor(&self.axes, &self.dims, &self.free)?)
        } else {
            Route::Gram {
                chol: BandedCholesky::gram(&self.rows)?,
            }
        };
        Ok(self.route.get_or_init(|| route))
    }

    /// Computes the factorization now instead of on the first projection.
    pub fn prepare(&self) -> Result<()> {
        self.route().map(|_| ())
    }

    fn schur_factor(
        axes: &[AxisFactor],
        dims: &[usize],
        free: &[usize],
    ) -> Result<Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>> {
        if free.is_empty() {
            return Ok(None);
        }
        let idx: Vec<Vec<usize>> = free.iter().map(|&u| unflatten(u, dims)).collect();
        let k = free.len();
        let s = DMatrix::from_fn(k, k, |r, c| {
            axes.iter()
                .enumerate()
                .map(|(j, ax)| ax.inverse[idx[r][j] * dims[j] + idx[c][j]])
                .product::<f64>()
        });
        nalgebra::Cholesky::new(s)
            .map(Some)
            .ok_or(Error::Factorization { pivot: 0 })
    }

    /// Number of constrained sites (rows of `B_{Ξ*}`).
    pub fn num_constraints(&self) -> usize {
        self.constrained.len()
    }

    pub fn num_coeffs(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn uses_schur(&self) -> bool {
        self.use_schur
    }

    /// Collocation rows `B_{Ξ*}`.
    pub fn rows(&self) -> &SparseOperator {
        &self.rows
    }

    /// `B f` on all of `Ξ`.
    pub fn collocate_all(&self, f: &[f64]) -> Vec<f64> {
        let mut x = f.to_vec();
        for (j, ax) in self.axes.iter().enumerate() {
            apply_axis_sparse(&ax.colloc, false, &self.dims, j, &mut x);
        }
        x
    }

    /// `B_{Ξ*} f`.
    pub fn collocate(&self, f: &[f64]) -> Vec<f64> {
        let full = self.collocate_all(f);
        self.constrained.iter().map(|&s| full[s]).collect()
    }

    /// Solves the square system `B f = v` on all of `Ξ`.
    pub fn interpolate_all(&self, values: &[f64]) -> Vec<f64> {
        // B⁻¹ = Bᵀ A⁻¹
        let mut x = values.to_vec();
        self.solve_a(&mut x);
        for (j, ax) in self.axes.iter().enumerate() {
            apply_axis_sparse(&ax.colloc, true, &self.dims, j, &mut x);
        }
        x
    }

    fn solve_a(&self, x: &mut [f64]) {
        for (j, ax) in self.axes.iter().enumerate() {
            for_each_fiber(&self.dims, j, |offset, step| ax.chol.solve_strided(x, offset, step));
        }
    }

    /// `f − B_{Ξ*}⁺ (B_{Ξ*} f − g)`.
    pub fn project(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.constrained.len() || f.len() != self.num_coeffs() {
            return Err(Error::DimensionMismatch(format!(
                "projection of {} coefficients onto {} constraints given {} values",
                f.len(),
                self.constrained.len(),
                g.len()
            )));
        }
        Ok(match self.route()? {
            Route::Schur(schur) => {
                let full = self.collocate_all(f);
                let mut e = vec![0.0; full.len()];
                for (r, &s) in self.constrained.iter().enumerate() {
                    e[s] = full[s] - g[r];
                }
                let mut w = e.clone();
                self.solve_a(&mut w);
                if let Some(chol) = schur {
                    let rhs = DVector::from_iterator(self.free.len(), self.free.iter().map(|&u| -w[u]));
                    let t = chol.solve(&rhs);
                    for (i, &u) in self.free.iter().enumerate() {
                        e[u] = t[i];
                    }
                    w.copy_from_slice(&e);
                    self.solve_a(&mut w);
                    for &u in &self.free {
                        w[u] = 0.0;
                    }
                }
                for (j, ax) in self.axes.iter().enumerate() {
                    apply_axis_sparse(&ax.colloc, true, &self.dims, j, &mut w);
                }
                f.iter().zip(&w).map(|(a, b)| a - b).collect()
            }
            Route::Gram { chol } => {
                let rows = &self.rows;
                let mut r = vec![0.0; rows.nrows()];
                rows.apply(f, &mut r);
                r.iter_mut().zip(g).for_each(|(a, b)| *a -= b);
                chol.solve_in_place(&mut r);
                let mut corr = vec![0.0; f.len()];
                rows.apply_transpose(&r, &mut corr);
                f.iter().zip(&corr).map(|(a, b)| a - b).collect()
            }
        })
    }
}

/// `f ↦ (I + c BᵀB)⁻¹ (f + c Bᵀ g)` with the factorization cached for the
/// most recent `c`.
#[derive(Debug, Default)]
pub struct RelaxedProx {
    cache: Mutex<Option<(f64, Arc<BandedCholesky>)>>,
}

impl Clone for RelaxedProx {
    fn clone(&self) -> Self {
        Self {
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl RelaxedProx {
    pub fn new() -> Self {
        Self::default()
    }

    fn factor(&self, rows: &SparseOperator, c: f64) -> Result<Arc<BandedCholesky>> {
        let mut cache = self.cache.lock().unwrap();
        if let Some((key, chol)) = cache.as_ref() {
            if *key == c {
                return Ok(Arc::clone(chol));
            }
        }
        let chol = Arc::new(BandedCholesky::normal_equations(rows, 1.0, c)?);
        *cache = Some((c, Arc::clone(&chol)));
        Ok(chol)
    }

    /// Applies the prox of `(1/2)‖B f − g‖²` with weight `c = λ ε`.
    pub fn apply(&self, rows: &SparseOperator, f: &[f64], g: &[f64], c: f64) -> Result<Vec<f64>> {
        if !(c >= 0.0) {
            return Err(Error::InvalidParameter(format!("prox weight {c} must be nonnegative")));
        }
        if c == 0.0 {
            return Ok(f.to_vec());
        }
        let mut rhs = vec![0.0; f.len()];
        rows.apply_transpose(g, &mut rhs);
        rhs.iter_mut().zip(f).for_each(|(r, &fi)| *r = fi + c * *r);
        let chol = self.factor(rows, c)?;
        chol.solve_in_place(&mut rhs);
        Ok(rhs)
    }
}
