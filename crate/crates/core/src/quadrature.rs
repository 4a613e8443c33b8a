//! Active region of the free basis functions, Gauss–Legendre rules on its
//! cells, and the weighted gradient operator evaluated at the rule nodes.

use crate::basis::{for_each_in_box, unflatten, LocalBasis, TensorKnotGrid, MAX_ORDER};
use crate::collocation::SiteSet;
use crate::error::{Error, Result};
use crate::sparse::{LinearOperator, SparseOperator};

/// Largest number of Gauss–Legendre points per axis.
pub const MAX_POINTS: usize = 16;

/// Free basis functions and the grid cells covered by their supports.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveRegion {
    free: Vec<usize>,
    cells: Vec<usize>,
    cell_dims: Vec<usize>,
    boxes: Vec<Vec<(usize, usize)>>,
}

impl ActiveRegion {
    /// Free basis indices, increasing.
    pub fn free(&self) -> &[usize] {
        &self.free
    }

    /// Flat indices of the active cells, increasing.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn cell_dims(&self) -> &[usize] {
        &self.cell_dims
    }

    /// Per free function, the inclusive cell range it covers on every axis.
    pub fn support_boxes(&self) -> &[Vec<(usize, usize)>] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell_index(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, &self.cell_dims)
    }

    /// Total volume of the active cells.
    pub fn volume(&self, grid: &TensorKnotGrid) -> f64 {
        self.cells
            .iter()
            .map(|&c| {
                let idx = self.cell_index(c);
                (0..grid.dim())
                    .map(|j| {
                        let (lo, hi) = grid.axis(j).cell_bounds(idx[j]);
                        hi - lo
                    })
                    .product::<f64>()
            })
            .sum()
    }
}

/// Union of the supports of every basis function whose site was removed.
pub fn active_region(grid: &TensorKnotGrid, sites: &SiteSet) -> ActiveRegion {
    let cell_dims = grid.cell_dims();
    let basis_dims = grid.basis_dims();
    let mut hit = vec![false; cell_dims.iter().product()];
    let mut boxes = Vec::with_capacity(sites.free_sites().len());
    let free: Vec<usize> = sites.free_sites().iter().map(|&s| sites.owner(s)).collect();
    for &alpha in &free {
        let idx = unflatten(alpha, &basis_dims);
        let ranges: Vec<(usize, usize)> = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| grid.axis(j).support_cells(i))
            .collect();
        for_each_in_box(&cell_dims, &ranges, |c| hit[c] = true);
        boxes.push(ranges);
    }
    let cells = hit.iter().enumerate().filter(|(_, &h)| h).map(|(c, _)| c).collect();
    ActiveRegion {
        free,
        cells,
        cell_dims,
        boxes,
    }
}

/// Gauss–Legendre nodes (increasing) and weights on `[-1, 1]`.
pub fn gauss_legendre_nodes(q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=MAX_POINTS).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "{q} Gauss-Legendre points requested, supported range is 1..={MAX_POINTS}"
        )));
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let qf = q as f64;
    for i in 0..q.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss–Legendre rule over the active cells.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<usize>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cells: Vec<usize>,
    cell_of_node: Vec<usize>,
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis per cell.
    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Active cells in the order their nodes appear.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    /// Position in [`cells`](Self::cells) of the cell owning node `i`.
    pub fn cell_of_node(&self, i: usize) -> usize {
        self.cell_of_node[i]
    }

    /// Nodes per cell; nodes of one cell are contiguous.
    pub fn nodes_per_cell(&self) -> usize {
        self.points.iter().product()
    }

    /// `Σ w_θ φ(θ)`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        (0..self.num_nodes()).map(|i| self.weights[i] * f(self.node(i))).sum()
    }
}

/// Maps `points[j]` Gauss–Legendre points onto every active cell.
pub fn build_rule(grid: &TensorKnotGrid, region: &ActiveRegion, points: &[usize]) -> Result<QuadratureRule> {
    let d = grid.dim();
    if points.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "{} quadrature orders for {d} axes",
            points.len()
        )));
    }
    let rules = points
        .iter()
        .map(|&q| gauss_legendre_nodes(q))
        .collect::<Result<Vec<_>>>()?;
    let per_cell: usize = points.iter().product();
    let mut nodes = Vec::with_capacity(region.cells().len() * per_cell * d);
    let mut weights = Vec::with_capacity(region.cells().len() * per_cell);
    let mut cell_of_node = Vec::with_capacity(region.cells().len() * per_cell);
    let mut local = vec![0usize; d];
    for (pos, &cell) in region.cells().iter().enumerate() {
        let idx = region.cell_index(cell);
        let bounds: Vec<(f64, f64)> = (0..d).map(|j| grid.axis(j).cell_bounds(idx[j])).collect();
        local.iter_mut().for_each(|l| *l = 0);
        for _ in 0..per_cell {
            let mut w = 1.0;
            for j in 0..d {
                let (lo, hi) = bounds[j];
                let half = 0.5 * (hi - lo);
                nodes.push(lo + half * (rules[j].0[local[j]] + 1.0));
                w *= half * rules[j].1[local[j]];
            }
            weights.push(w);
            cell_of_node.push(pos);
            for j in (0..d).rev() {
                local[j] += 1;
                if local[j] < points[j] {
                    break;
                }
                local[j] = 0;
            }
        }
    }
    Ok(QuadratureRule {
        dim: d,
        points: points.to_vec(),
        nodes,
        weights,
        cells: region.cells().to_vec(),
        cell_of_node,
    })
}

/// `K f = (w_θ ∇s(θ))_θ`, stored node by node.
///
/// All `d` rows of a node share one column list of length `Π n_j`; row
/// `θ d + j` holds `w_θ ∂_j B_α(θ)`.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    dim: usize,
    ncols: usize,
    local: usize,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl GradientOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.cols.len() / self.local.max(1)
    }

    /// `Σ_θ ‖(K f)_θ‖₂`.
    pub fn objective(&self, f: &[f64]) -> f64 {
        let mut y = vec![0.0; self.nrows()];
        self.apply(f, &mut y);
        block_norm_sum(&y, self.dim)
    }

    /// Assembles the same operator in CSR form.
    pub fn to_sparse(&self) -> SparseOperator {
        let mut op = SparseOperator::new(self.ncols);
        for node in 0..self.num_nodes() {
            let cols = &self.cols[node * self.local..(node + 1) * self.local];
            for j in 0..self.dim {
                let r = node * self.dim + j;
                op.push_row(cols, &self.vals[r * self.local..(r + 1) * self.local]);
            }
        }
        op
    }
}

impl LinearOperator for GradientOperator {
    fn nrows(&self) -> usize {
        self.num_nodes() * self.dim
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (d, l) = (self.dim, self.local);
        for node in 0..self.num_nodes() {
            let cols = &self.cols[node * l..(node + 1) * l];
            for j in 0..d {
                let r = node * d + j;
                let vals = &self.vals[r * l..(r + 1) * l];
                y[r] = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
            }
        }
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        let (d, l) = (self.dim, self.local);
        for node in 0..self.num_nodes() {
            let cols = &self.cols[node * l..(node + 1) * l];
            for j in 0..d {
                let r = node * d + j;
                let yr = y[r];
                if yr == 0.0 {
                    continue;
                }
                for (&c, &v) in cols.iter().zip(&self.vals[r * l..(r + 1) * l]) {
                    x[c] += v * yr;
                }
            }
        }
    }
}

/// Sum of Euclidean norms of consecutive blocks of length `d`.
pub fn block_norm_sum(y: &[f64], d: usize) -> f64 {
    y.chunks(d).map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt()).sum()
}

/// Weighted gradient rows at every node of `rule`.
pub fn assemble_gradient_operator(grid: &TensorKnotGrid, rule: &QuadratureRule) -> GradientOperator {
    let d = grid.dim();
    let local_size = grid.local_size();
    let dims = grid.basis_dims();
    let cell_dims = grid.cell_dims();
    let orders = grid.orders();
    let n = rule.num_nodes();
    let mut cols = Vec::with_capacity(n * local_size);
    let mut vals = vec![0.0; n * d * local_size];
    let mut local = LocalBasis {
        first: vec![0; d],
        orders: orders.clone(),
        values: vec![[0.0; MAX_ORDER]; d],
        derivs: vec![[0.0; MAX_ORDER]; d],
    };
    let mut spans = vec![0usize; d];
    for node in 0..n {
        let cell = unflatten(rule.cells()[rule.cell_of_node(node)], &cell_dims);
        for j in 0..d {
            spans[j] = cell[j] + orders[j] - 1;
        }
        let x = rule.node(node);
        grid.local_basis_on_spans(x, &spans, true, &mut local);
        let w = rule.weights()[node];
        let mut k = 0;
        local.for_each_term(&dims, |flat, locals| {
            cols.push(flat);
            for j in 0..d {
                let mut v = w;
                for (i, &li) in locals.iter().enumerate() {
                    v *= if i == j {
                        local.derivs[i][li]
                    } else {
                        local.values[i][li]
                    };
                }
                vals[(node * d + j) * local_size + k] = v;
            }
            k += 1;
        });
    }
    GradientOperator {
        dim: d,
        ncols: grid.num_coeffs(),
        local: local_size,
        cols,
        vals,
    }
}
