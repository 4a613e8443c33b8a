//! Tensor-product B-spline spaces over a rectangle.
//!
//! Every axis carries an open knot sequence whose end knots are repeated
//! `order` times, so the basis interpolates at the boundary of the rectangle
//! and forms a partition of unity on it. Basis functions are indexed from 0;
//! coefficient vectors are stored in lexicographic order of the multi-index
//! with the last axis running fastest.
//!
//! Evaluation is right-continuous at interior knots and uses the left limit at
//! the upper end of every axis, so `B(b) = 1` for the last basis function.

use crate::collocation::PixelGrid;
use crate::error::{Error, Result};

/// Largest spline order accepted on any axis.
pub const MAX_ORDER: usize = 12;

/// Knot sequence of one axis with full multiplicity at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisKnots {
    order: usize,
    interior: usize,
    knots: Vec<f64>,
}

impl AxisKnots {
    /// Validates `knots` (length `interior + 2 * order`) and wraps them.
    pub fn new(order: usize, knots: Vec<f64>) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidOrder {
                axis: 0,
                order,
                max: MAX_ORDER,
            });
        }
        if knots.len() < 2 * order + 1 {
            return Err(Error::InvalidKnots(format!(
                "{} knots are too few for order {order}",
                knots.len()
            )));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        let interior = knots.len() - 2 * order;
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        let (lo, hi) = (knots[0], knots[knots.len() - 1]);
        if knots[..order].iter().any(|&t| t != lo) || knots[interior + order..].iter().any(|&t| t != hi) {
            return Err(Error::InvalidKnots(
                "boundary knots must be repeated `order` times".into(),
            ));
        }
        for i in (order - 1)..(interior + order) {
            if knots[i] >= knots[i + order] {
                return Err(Error::InvalidKnots(format!("basis function {i} has an empty support")));
            }
        }
        Ok(Self { order, interior, knots })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of interior knots `m`.
    pub fn interior(&self) -> usize {
        self.interior
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn lo(&self) -> f64 {
        self.knots[0]
    }

    pub fn hi(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Number of basis functions, `m + n`.
    pub fn num_basis(&self) -> usize {
        self.interior + self.order
    }

    /// Largest gap between consecutive knots.
    pub fn grid_width(&self) -> f64 {
        self.knots.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Closed support `[t_i, t_{i+n}]` of basis function `i`.
    pub fn support(&self, index: usize) -> (f64, f64) {
        (self.knots[index], self.knots[index + self.order])
    }

    /// Number of nondegenerate knot intervals (grid cells along this axis).
    pub fn num_cells(&self) -> usize {
        self.interior + 1
    }

    /// Bounds of cell `c`, i.e. of knot interval `c + n - 1`.
    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        let k = cell + self.order - 1;
        (self.knots[k], self.knots[k + 1])
    }

    /// Cells (inclusive range) covered by the support of basis function `index`.
    pub fn support_cells(&self, index: usize) -> (usize, usize) {
        (index.saturating_sub(self.order - 1), index.min(self.interior))
    }

    /// Cell containing `x` (right-continuous, left limit at the upper end).
    pub fn cell_of(&self, x: f64) -> usize {
        self.span(x) + 1 - self.order
    }

    /// Knot interval index `k` with `t_k <= x < t_{k+1}`, restricted to the
    /// nondegenerate intervals.
    pub fn span(&self, x: f64) -> usize {
        let n = self.order;
        let last = self.interior + n - 1;
        if x >= self.hi() {
            return last;
        }
        let k = self.knots.partition_point(|&t| t <= x);
        k.saturating_sub(1).clamp(n - 1, last)
    }

    fn check_coord(&self, x: f64) -> Result<()> {
        if !(x >= self.lo() && x <= self.hi()) {
            return Err(Error::OutsideDomain {
                axis: 0,
                coord: x,
                lo: self.lo(),
                hi: self.hi(),
            });
        }
        Ok(())
    }

    /// Values of the `n` basis functions that can be nonzero on knot interval
    /// `span`, i.e. `B_{span-n+1}, .., B_span`, written to `values[..n]`.
    /// When `derivs` is given it receives their first derivatives.
    pub fn eval_local(&self, span: usize, x: f64, values: &mut [f64], derivs: Option<&mut [f64]>) {
        let n = self.order;
        let p = n - 1;
        let t = &self.knots;
        let mut left = [0.0; MAX_ORDER];
        let mut right = [0.0; MAX_ORDER];
        let mut lower = [0.0; MAX_ORDER];
        values[0] = 1.0;
        for j in 1..=p {
            if j == p {
                lower[..p].copy_from_slice(&values[..p]);
            }
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        if let Some(derivs) = derivs {
            // B'_i = p * (B_{i,p-1} / (t_{i+p} - t_i) - B_{i+1,p-1} / (t_{i+p+1} - t_{i+1}))
            let first = span - p;
            let pf = p as f64;
            for r in 0..=p {
                let i = first + r;
                let mut d = 0.0;
                if r >= 1 {
                    d += lower[r - 1] / (t[i + p] - t[i]);
                }
                if r < p {
                    d -= lower[r] / (t[i + p + 1] - t[i + 1]);
                }
                derivs[r] = pf * d;
            }
        }
    }

    /// Value of basis function `index` at `x`.
    pub fn eval(&self, index: usize, x: f64) -> Result<f64> {
        self.eval_with(index, x, false)
    }

    /// First derivative of basis function `index` at `x`.
    pub fn eval_derivative(&self, index: usize, x: f64) -> Result<f64> {
        self.eval_with(index, x, true)
    }

    fn eval_with(&self, index: usize, x: f64, derivative: bool) -> Result<f64> {
        if index >= self.num_basis() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.num_basis(),
            });
        }
        self.check_coord(x)?;
        let span = self.span(x);
        let first = span + 1 - self.order;
        if index < first || index > span {
            return Ok(0.0);
        }
        let mut values = [0.0; MAX_ORDER];
        let mut derivs = [0.0; MAX_ORDER];
        if derivative {
            self.eval_local(span, x, &mut values, Some(&mut derivs));
            Ok(derivs[index - first])
        } else {
            self.eval_local(span, x, &mut values, None);
            Ok(values[index - first])
        }
    }
}

/// Value of basis function `index` of `axis` at `x`.
pub fn eval_axis_bspline(axis: &AxisKnots, index: usize, x: f64) -> Result<f64> {
    axis.eval(index, x)
}

/// A multi-index, one 0-based component per axis.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<usize>);

/// Tensor product of per-axis knot sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorKnotGrid {
    axes: Vec<AxisKnots>,
}

impl TensorKnotGrid {
    pub fn new(axes: Vec<AxisKnots>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::DimensionMismatch("knot grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    pub fn axes(&self) -> &[AxisKnots] {
        &self.axes
    }

    pub fn axis(&self, j: usize) -> &AxisKnots {
        &self.axes[j]
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.axes.iter().map(AxisKnots::order).collect()
    }

    /// Basis functions per axis.
    pub fn basis_dims(&self) -> Vec<usize> {
        self.axes.iter().map(AxisKnots::num_basis).collect()
    }

    /// Cells per axis.
    pub fn cell_dims(&self) -> Vec<usize> {
        self.axes.iter().map(AxisKnots::num_cells).collect()
    }

    /// `#(I_R)`, the dimension of the spline space.
    pub fn num_coeffs(&self) -> usize {
        self.axes.iter().map(AxisKnots::num_basis).product()
    }

    /// Largest number of basis functions that are nonzero at one point.
    pub fn local_size(&self) -> usize {
        self.axes.iter().map(AxisKnots::order).product()
    }

    pub fn flat_index(&self, index: &MultiIndex) -> usize {
        flatten(&index.0, &self.basis_dims())
    }

    pub fn multi_index(&self, flat: usize) -> MultiIndex {
        MultiIndex(unflatten(flat, &self.basis_dims()))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, grid has {} axes",
                x.len(),
                self.dim()
            )));
        }
        for (j, (axis, &xj)) in self.axes.iter().zip(x).enumerate() {
            axis.check_coord(xj).map_err(|_| Error::OutsideDomain {
                axis: j,
                coord: xj,
                lo: axis.lo(),
                hi: axis.hi(),
            })?;
        }
        Ok(())
    }

    /// Per-axis local values (and optionally derivatives) at `x`; `x` must
    /// lie in the rectangle.
    pub fn local_basis(&self, x: &[f64], with_derivs: bool, local: &mut LocalBasis) {
        let spans: Vec<usize> = self.axes.iter().zip(x).map(|(a, &xj)| a.span(xj)).collect();
        self.local_basis_on_spans(x, &spans, with_derivs, local);
    }

    /// Like [`local_basis`](Self::local_basis) with precomputed knot spans.
    pub fn local_basis_on_spans(&self, x: &[f64], spans: &[usize], with_derivs: bool, local: &mut LocalBasis) {
        let d = self.dim();
        local.first.resize(d, 0);
        local.orders.resize(d, 0);
        local.values.resize(d, [0.0; MAX_ORDER]);
        local.derivs.resize(d, [0.0; MAX_ORDER]);
        for j in 0..d {
            let axis = &self.axes[j];
            let span = spans[j];
            local.first[j] = span + 1 - axis.order;
            local.orders[j] = axis.order;
            let (vals, ders) = (&mut local.values[j], &mut local.derivs[j]);
            axis.eval_local(span, x[j], vals, if with_derivs { Some(ders) } else { None });
        }
    }

    /// Row `(B_α(x))_α` over the whole index set; exact zeros are dropped.
    pub fn eval_tensor_row(&self, x: &[f64]) -> Result<SparseRow> {
        self.check_point(x)?;
        let mut local = LocalBasis::default();
        self.local_basis(x, false, &mut local);
        let mut row = SparseRow::default();
        let dims = self.basis_dims();
        local.for_each_term(&dims, |flat, locals| {
            let v: f64 = (0..locals.len()).map(|j| local.values[j][locals[j]]).product();
            if v != 0.0 {
                row.indices.push(flat);
                row.values.push(v);
            }
        });
        Ok(row)
    }

    /// Rows `(∂_j B_α(x))_α` for `j = 0..d`, all sharing the index list of the
    /// nonzero support at `x`.
    pub fn eval_gradient_rows(&self, x: &[f64]) -> Result<Vec<SparseRow>> {
        self.check_point(x)?;
        let mut local = LocalBasis::default();
        self.local_basis(x, true, &mut local);
        let d = self.dim();
        let mut rows = vec![SparseRow::default(); d];
        let dims = self.basis_dims();
        local.for_each_term(&dims, |flat, locals| {
            for (j, row) in rows.iter_mut().enumerate() {
                let v: f64 = (0..d)
                    .map(|i| {
                        if i == j {
                            local.derivs[i][locals[i]]
                        } else {
                            local.values[i][locals[i]]
                        }
                    })
                    .product();
                row.indices.push(flat);
                row.values.push(v);
            }
        });
        Ok(rows)
    }

    /// Spline value `s(x) = B(x) f`.
    pub fn eval_spline(&self, coeffs: &[f64], x: &[f64]) -> Result<f64> {
        Ok(self.eval_tensor_row(x)?.dot(coeffs))
    }

    /// Greville abscissae of every axis.
    pub fn greville(&self) -> Vec<Vec<f64>> {
        self.axes.iter().map(crate::collocation::greville_axis).collect()
    }

    /// Coefficients reproducing `s(x) = x_axis` exactly.
    pub fn linear_coefficients(&self, axis: usize) -> Vec<f64> {
        let greville = crate::collocation::greville_axis(&self.axes[axis]);
        let dims = self.basis_dims();
        (0..self.num_coeffs())
            .map(|flat| greville[unflatten(flat, &dims)[axis]])
            .collect()
    }
}

/// Per-axis nonzero basis values at one point.
#[derive(Debug, Clone, Default)]
pub struct LocalBasis {
    pub first: Vec<usize>,
    pub orders: Vec<usize>,
    pub values: Vec<[f64; MAX_ORDER]>,
    pub derivs: Vec<[f64; MAX_ORDER]>,
}

impl LocalBasis {
    /// Calls `f(flat_index, local_offsets)` for every tensor term, in
    /// lexicographic order of the multi-index.
    pub fn for_each_term<F: FnMut(usize, &[usize])>(&self, dims: &[usize], mut f: F) {
        let d = self.first.len();
        let mut locals = vec![0usize; d];
        loop {
            let mut flat = 0;
            for j in 0..d {
                flat = flat * dims[j] + self.first[j] + locals[j];
            }
            f(flat, &locals);
            let mut j = d;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                locals[j] += 1;
                if locals[j] < self.orders[j] {
                    break;
                }
                locals[j] = 0;
            }
        }
    }
}

/// Sparse row: column indices with their values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRow {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| v * x[i]).sum()
    }
}

pub fn eval_tensor_row(grid: &TensorKnotGrid, x: &[f64]) -> Result<SparseRow> {
    grid.eval_tensor_row(x)
}

pub fn eval_gradient_rows(grid: &TensorKnotGrid, x: &[f64]) -> Result<Vec<SparseRow>> {
    grid.eval_gradient_rows(x)
}

/// Knot grid whose Greville abscissae hit the pixel centers of `pixels`.
///
/// Odd orders place interior knots on pixel edges (`m = μ - 1`), even orders
/// on pixel centers (`m = μ`).
pub fn build_knot_grid(pixels: &PixelGrid, orders: &[usize]) -> Result<TensorKnotGrid> {
    if orders.len() != pixels.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} orders given for a {}-dimensional image",
            orders.len(),
            pixels.dim()
        )));
    }
    let mut axes = Vec::with_capacity(orders.len());
    for (j, &n) in orders.iter().enumerate() {
        if !(2..=MAX_ORDER).contains(&n) {
            return Err(Error::InvalidOrder {
                axis: j,
                order: n,
                max: MAX_ORDER,
            });
        }
        let mu = pixels.counts()[j];
        let odd = n % 2 == 1;
        let m = if odd { mu.saturating_sub(1) } else { mu };
        if m == 0 {
            return Err(Error::Sizing {
                axis: j,
                pixels: mu,
                order: n,
            });
        }
        let (a, b) = (pixels.lo()[j], pixels.hi()[j]);
        let p = pixels.pixel_size(j);
        let mut knots = Vec::with_capacity(m + 2 * n);
        knots.extend(std::iter::repeat_n(a, n));
        for k in 1..=m {
            let offset = if odd { k as f64 } else { k as f64 - 0.5 };
            knots.push(a + offset * p);
        }
        knots.extend(std::iter::repeat_n(b, n));
        axes.push(AxisKnots::new(n, knots).map_err(|e| match e {
            Error::InvalidOrder { order, max, .. } => Error::InvalidOrder { axis: j, order, max },
            other => other,
        })?);
    }
    TensorKnotGrid::new(axes)
}

/// Axis-aligned closed box.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// Subdomain of the rectangle used to select relevant basis functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Union of grid cells, given as per-axis cell indices. A basis function
    /// is relevant when it does not vanish identically on one of the cells.
    Cells(Vec<Vec<usize>>),
    /// Union of closed boxes. Supports that merely touch a box count.
    Boxes(Vec<AxisBox>),
}

/// Multi-indices of all basis functions relevant for `domain`, sorted.
pub fn index_set_for_domain(grid: &TensorKnotGrid, domain: &Domain) -> Vec<MultiIndex> {
    let dims = grid.basis_dims();
    let mut hit = vec![false; grid.num_coeffs()];
    match domain {
        Domain::Cells(cells) => {
            for cell in cells {
                // basis i covers cell c iff i in [c, c + n - 1]
                let ranges: Vec<(usize, usize)> = cell
                    .iter()
                    .zip(grid.axes())
                    .map(|(&c, axis)| (c, (c + axis.order() - 1).min(axis.num_basis() - 1)))
                    .collect();
                mark_box(&mut hit, &dims, &ranges);
            }
        }
        Domain::Boxes(boxes) => {
            for bx in boxes {
                let mut ranges = Vec::with_capacity(dims.len());
                for (j, axis) in grid.axes().iter().enumerate() {
                    let t = axis.knots();
                    let n = axis.order();
                    // closed overlap: t_i <= hi and t_{i+n} >= lo
                    let first = (0..axis.num_basis()).find(|&i| t[i + n] >= bx.lo[j]);
                    let last = (0..axis.num_basis()).rev().find(|&i| t[i] <= bx.hi[j]);
                    match (first, last) {
                        (Some(f), Some(l)) if f <= l && bx.lo[j] <= bx.hi[j] => ranges.push((f, l)),
                        _ => break,
                    }
                }
                if ranges.len() == dims.len() {
                    mark_box(&mut hit, &dims, &ranges);
                }
            }
        }
    }
    hit.iter()
        .enumerate()
        .filter(|(_, &h)| h)
        .map(|(flat, _)| MultiIndex(unflatten(flat, &dims)))
        .collect()
}

fn mark_box(hit: &mut [bool], dims: &[usize], ranges: &[(usize, usize)]) {
    for_each_in_box(dims, ranges, |flat| hit[flat] = true);
}

/// Visits the flat indices of a box of multi-indices (inclusive ranges).
pub(crate) fn for_each_in_box<F: FnMut(usize)>(dims: &[usize], ranges: &[(usize, usize)], mut f: F) {
    let d = dims.len();
    if ranges.iter().any(|&(lo, hi)| lo > hi) {
        return;
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        f(flatten(&idx, dims));
        let mut j = d;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] <= ranges[j].1 {
                break;
            }
            idx[j] = ranges[j].0;
        }
    }
}

/// Lexicographic flattening, last axis fastest.
pub fn flatten(index: &[usize], dims: &[usize]) -> usize {
    index.iter().zip(dims).fold(0, |acc, (&i, &n)| acc * n + i)
}

pub fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for j in (0..dims.len()).rev() {
        out[j] = flat % dims[j];
        flat /= dims[j];
    }
    out
}
