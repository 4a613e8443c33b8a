//! Row-sparse operators and the banded/dense factorizations used by the
//! proximal steps.

use crate::error::{Error, Result};

/// Linear map that can be applied together with its adjoint.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `x = Aᵀ y`
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]);
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    pub fn new(ncols: usize) -> Self {
        Self {
            nrows: 0,
            ncols,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Appends a row; column indices must be below `ncols`.
    pub fn push_row(&mut self, cols: &[usize], vals: &[f64]) {
        debug_assert_eq!(cols.len(), vals.len());
        debug_assert!(cols.iter().all(|&c| c < self.ncols));
        self.cols.extend_from_slice(cols);
        self.vals.extend_from_slice(vals);
        self.nrows += 1;
        self.row_ptr.push(self.cols.len());
    }

    /// Builds a matrix from row-major dense data, dropping zeros.
    pub fn from_dense(nrows: usize, ncols: usize, data: &[f64]) -> Self {
        let mut op = Self::new(ncols);
        for r in 0..nrows {
            let row = &data[r * ncols..(r + 1) * ncols];
            let (cols, vals): (Vec<usize>, Vec<f64>) = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(c, &v)| (c, v))
                .unzip();
            op.push_row(&cols, &vals);
        }
        op
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }

    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[r * self.ncols + c] += v;
            }
        }
        out
    }

    /// Half bandwidth of `AᵀA` in the column ordering.
    pub fn normal_bandwidth(&self) -> usize {
        (0..self.nrows)
            .map(|r| {
                let (cols, _) = self.row(r);
                match (cols.iter().min(), cols.iter().max()) {
                    (Some(lo), Some(hi)) => hi - lo,
                    _ => 0,
                }
            })
            .max()
            .unwrap_or(0)
    }
}

impl LinearOperator for SparseOperator {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            *yr = self.row_dot(r, x);
        }
    }

    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (r, &yr) in y.iter().enumerate().take(self.nrows) {
            if yr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                x[c] += v * yr;
            }
        }
    }
}

/// Cholesky factor of a symmetric positive definite band matrix.
///
/// Storage is the lower band, `band[i * (w + 1) + (w - (i - j))] = L[i][j]`
/// for `i - w <= j <= i`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    width: usize,
    band: Vec<f64>,
}

impl BandedCholesky {
    /// Assembles `diag * I + scale * AᵀA` and factors it.
    pub fn normal_equations(a: &SparseOperator, diag: f64, scale: f64) -> Result<Self> {
        let n = a.ncols();
        let width = a.normal_bandwidth();
        let stride = width + 1;
        let mut band = vec![0.0; n * stride];
        for i in 0..n {
            band[i * stride + width] = diag;
        }
        for r in 0..a.nrows() {
            let (cols, vals) = a.row(r);
            for (p, (&ci, &vi)) in cols.iter().zip(vals).enumerate() {
                for (&cj, &vj) in cols[..=p].iter().zip(&vals[..=p]) {
                    let (i, j) = if ci >= cj { (ci, cj) } else { (cj, ci) };
                    band[i * stride + width - (i - j)] += scale * vi * vj;
                }
            }
        }
        Self::factor(n, width, band)
    }

    /// Assembles `A Aᵀ` (rows of `a` become unknowns) and factors it.
    pub fn gram(a: &SparseOperator) -> Result<Self> {
        // transpose pattern: for every column, the rows touching it
        let n = a.nrows();
        let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); a.ncols()];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                col_rows[c].push((r, v));
            }
        }
        let width = col_rows
            .iter()
            .map(|rows| match (rows.first(), rows.last()) {
                (Some(f), Some(l)) => l.0 - f.0,
                _ => 0,
            })
            .max()
            .unwrap_or(0);
        let stride = width + 1;
        let mut band = vec![0.0; n * stride];
        for rows in &col_rows {
            for (p, &(ri, vi)) in rows.iter().enumerate() {
                for &(rj, vj) in &rows[..=p] {
                    band[ri * stride + width - (ri - rj)] += vi * vj;
                }
            }
        }
        Self::factor(n, width, band)
    }

    fn factor(n: usize, width: usize, mut band: Vec<f64>) -> Result<Self> {
        let stride = width + 1;
        for i in 0..n {
            let j0 = i.saturating_sub(width);
            for j in j0..=i {
                // L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j]
                let k0 = j0.max(j.saturating_sub(width));
                let mut s = band[i * stride + width - (i - j)];
                let original = s;
                for k in k0..j {
                    s -= band[i * stride + width - (i - k)] * band[j * stride + width - (j - k)];
                }
                if i == j {
                    // relative pivot test catches numerically singular matrices
                    if !(s > 1e-13 * original.abs()) || !s.is_finite() {
                        return Err(Error::Factorization { pivot: i });
                    }
                    band[i * stride + width] = s.sqrt();
                } else {
                    band[i * stride + width - (i - j)] = s / band[j * stride + width];
                }
            }
        }
        Ok(Self { n, width, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.width
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, w, stride) = (self.n, self.width, self.width + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(w)..i {
                s -= self.band[i * stride + w - (i - k)] * x[k];
            }
            x[i] = s / self.band[i * stride + w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..(i + w + 1).min(n) {
                s -= self.band[k * stride + w - (k - i)] * x[k];
            }
            x[i] = s / self.band[i * stride + w];
        }
    }

    /// Strided variant of [`solve_in_place`](Self::solve_in_place) acting on
    /// `x[offset + i * step]`.
    pub fn solve_strided(&self, x: &mut [f64], offset: usize, step: usize) {
        let (n, w, stride) = (self.n, self.width, self.width + 1);
        let at = |i: usize| offset + i * step;
        for i in 0..n {
            let mut s = x[at(i)];
            for k in i.saturating_sub(w)..i {
                s -= self.band[i * stride + w - (i - k)] * x[at(k)];
            }
            x[at(i)] = s / self.band[i * stride + w];
        }
        for i in (0..n).rev() {
            let mut s = x[at(i)];
            for k in (i + 1)..(i + w + 1).min(n) {
                s -= self.band[k * stride + w - (k - i)] * x[at(k)];
            }
            x[at(i)] = s / self.band[i * stride + w];
        }
    }
}
