//! Discrete image model and the interpolation sites that make every known
//! pixel center a collocation point of the spline space.

use crate::basis::{flatten, unflatten, AxisKnots, LocalBasis, TensorKnotGrid};
use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Pixel layout over the rectangle `R = ⊗[a_j, b_j]`.
///
/// Pixel `β` (0-based) covers `[a_j + β_j p_j, a_j + (β_j + 1) p_j)` on each
/// axis and takes its value at the center `a_j + (β_j + 1/2) p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelGrid {
    counts: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    range: (f64, f64),
}

impl PixelGrid {
    /// Unit pixels, `R = ⊗[0, μ_j]`, intensity range `[0, 255]`.
    pub fn new(counts: &[usize]) -> Result<Self> {
        let hi = counts.iter().map(|&c| c as f64).collect();
        Self::with_rectangle(counts, vec![0.0; counts.len()], hi)
    }

    pub fn with_rectangle(counts: &[usize], lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if counts.is_empty() || lo.len() != counts.len() || hi.len() != counts.len() {
            return Err(Error::DimensionMismatch("pixel grid axes disagree".into()));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidParameter("pixel counts must be positive".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter("empty rectangle".into()));
        }
        Ok(Self {
            counts: counts.to_vec(),
            lo,
            hi,
            range: (0.0, 255.0),
        })
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = (lo, hi);
        self
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn num_pixels(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn pixel_size(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.counts[axis] as f64
    }

    /// Volume of one pixel.
    pub fn pixel_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.pixel_size(j)).product()
    }

    pub fn center(&self, axis: usize, beta: usize) -> f64 {
        self.lo[axis] + (beta as f64 + 0.5) * self.pixel_size(axis)
    }

    pub fn centers(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis]).map(|b| self.center(axis, b)).collect()
    }

    /// Pixel whose half-open interval contains `x`; the upper end of the
    /// rectangle belongs to the last pixel.
    pub fn pixel_of(&self, axis: usize, x: f64) -> usize {
        let p = self.pixel_size(axis);
        let b = ((x - self.lo[axis]) / p).floor();
        (b.max(0.0) as usize).min(self.counts[axis] - 1)
    }

    pub fn flat(&self, beta: &[usize]) -> usize {
        flatten(beta, &self.counts)
    }

    pub fn unflat(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, &self.counts)
    }

    /// Whether pixel `flat` lies on the outer ring of the image.
    pub fn is_border(&self, flat: usize) -> bool {
        self.unflat(flat)
            .iter()
            .zip(&self.counts)
            .any(|(&b, &c)| b == 0 || b + 1 == c)
    }
}

/// Unknown pixels of an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InpaintingMask {
    dims: Vec<usize>,
    unknown: Vec<bool>,
}

impl InpaintingMask {
    /// Validates a pixel-aligned mask (`true` = unknown). The mask may be
    /// empty, must leave at least one pixel known and may not touch the outer
    /// pixel ring of the image.
    pub fn new(dims: &[usize], unknown: Vec<bool>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if unknown.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} entries, image has {total} pixels",
                unknown.len()
            )));
        }
        if unknown.iter().all(|&u| u) {
            return Err(Error::InvalidMask("every pixel is unknown".into()));
        }
        let mask = Self {
            dims: dims.to_vec(),
            unknown,
        };
        if let Some(flat) = mask.unknown_indices().find(|&f| mask.is_border(f)) {
            let beta = unflatten(flat, dims);
            return Err(Error::InvalidMask(format!(
                "unknown pixel {beta:?} touches the image border"
            )));
        }
        Ok(mask)
    }

    pub fn empty(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            unknown: vec![false; dims.iter().product()],
        }
    }

    pub fn from_indices(dims: &[usize], indices: &[usize]) -> Result<Self> {
        let total: usize = dims.iter().product();
        let mut unknown = vec![false; total];
        for &i in indices {
            if i >= total {
                return Err(Error::InvalidMask(format!("pixel index {i} out of range")));
            }
            unknown[i] = true;
        }
        Self::new(dims, unknown)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.unknown
    }

    pub fn is_unknown(&self, flat: usize) -> bool {
        self.unknown[flat]
    }

    pub fn is_empty(&self) -> bool {
        !self.unknown.iter().any(|&u| u)
    }

    pub fn num_unknown(&self) -> usize {
        self.unknown.iter().filter(|&&u| u).count()
    }

    pub fn unknown_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.unknown.iter().enumerate().filter(|(_, &u)| u).map(|(i, _)| i)
    }

    pub fn known_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.unknown.iter().enumerate().filter(|(_, &u)| !u).map(|(i, _)| i)
    }

    fn is_border(&self, flat: usize) -> bool {
        unflatten(flat, &self.dims)
            .iter()
            .zip(&self.dims)
            .any(|(&b, &c)| b == 0 || b + 1 == c)
    }
}

/// Greville abscissae `ξ_γ = (t_{γ+1} + .. + t_{γ+n-1}) / (n - 1)`.
pub fn greville_axis(axis: &AxisKnots) -> Vec<f64> {
    let n = axis.order();
    let t = axis.knots();
    (0..axis.num_basis())
        .map(|g| t[g + 1..g + n].iter().sum::<f64>() / (n - 1) as f64)
        .collect()
}

/// Moves the Greville abscissae of boundary B-splines onto the pixel centers
/// they do not reach yet.
///
/// For every center not already hit by an abscissa, the nearest abscissa
/// that is neither on a center nor already moved is snapped onto it; ties go
/// to the smaller index. The result must be strictly increasing and keep
/// every site inside the support of its basis function.
pub fn snap_axis_sites(axis: &AxisKnots, greville: &[f64], centers: &[f64]) -> Result<Vec<f64>> {
    if greville.len() != axis.num_basis() {
        return Err(Error::DimensionMismatch(format!(
            "{} abscissae for {} basis functions",
            greville.len(),
            axis.num_basis()
        )));
    }
    let spacing = if centers.len() > 1 {
        centers[1] - centers[0]
    } else {
        axis.hi() - axis.lo()
    };
    let tol = 1e-9 * spacing.abs();
    let mut sites = greville.to_vec();
    let mut locked = vec![false; sites.len()];
    let mut unmatched = Vec::new();
    for &c in centers {
        match sites.iter().position(|&s| (s - c).abs() <= tol) {
            Some(g) => {
                sites[g] = c;
                locked[g] = true;
            }
            None => unmatched.push(c),
        }
    }
    for c in unmatched {
        let best = (0..sites.len()).filter(|&g| !locked[g]).min_by(|&a, &b| {
            let da = (greville[a] - c).abs();
            let db = (greville[b] - c).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        let Some(g) = best else {
            return Err(Error::DuplicateSite { axis: 0, site: 0 });
        };
        sites[g] = c;
        locked[g] = true;
    }
    for g in 1..sites.len() {
        if sites[g] <= sites[g - 1] {
            return Err(Error::DuplicateSite { axis: 0, site: g });
        }
    }
    for (g, &s) in sites.iter().enumerate() {
        if axis.eval(g, s)? <= 0.0 {
            return Err(Error::DuplicateSite { axis: 0, site: g });
        }
    }
    Ok(sites)
}

/// Interpolation sites `Ξ = ⊗ Ξ_j` and the constrained subset `Ξ*`.
///
/// Site `γ` belongs to basis function `γ` (same flat index).
#[derive(Debug, Clone)]
pub struct SiteSet {
    axis_sites: Vec<Vec<f64>>,
    axis_pixels: Vec<Vec<usize>>,
    dims: Vec<usize>,
    constrained: Vec<bool>,
    constrained_sites: Vec<usize>,
    free_sites: Vec<usize>,
    site_pixel: Vec<usize>,
}

impl SiteSet {
    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn axis_sites(&self, axis: usize) -> &[f64] {
        &self.axis_sites[axis]
    }

    /// Pixel index along `axis` of every site of that axis.
    pub fn axis_pixels(&self, axis: usize) -> &[usize] {
        &self.axis_pixels[axis]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_sites(&self) -> usize {
        self.constrained.len()
    }

    pub fn site(&self, flat: usize) -> Vec<f64> {
        unflatten(flat, &self.dims)
            .iter()
            .enumerate()
            .map(|(j, &g)| self.axis_sites[j][g])
            .collect()
    }

    /// Flat pixel index containing site `flat`.
    pub fn pixel_of_site(&self, flat: usize) -> usize {
        self.site_pixel[flat]
    }

    pub fn is_constrained(&self, flat: usize) -> bool {
        self.constrained[flat]
    }

    /// Sites in `Ξ*`, increasing.
    pub fn constrained_sites(&self) -> &[usize] {
        &self.constrained_sites
    }

    /// Sites in `Ξ \ Ξ*`, increasing. These are also the free basis indices.
    pub fn free_sites(&self) -> &[usize] {
        &self.free_sites
    }

    /// Basis function owning site `flat`.
    pub fn owner(&self, flat: usize) -> usize {
        flat
    }
}

/// Builds `Ξ` from snapped Greville abscissae and restricts it to the known
/// pixels.
pub fn build_site_sets(grid: &TensorKnotGrid, pixels: &PixelGrid, mask: &InpaintingMask) -> Result<SiteSet> {
    let d = grid.dim();
    if pixels.dim() != d || mask.dims() != pixels.counts() {
        return Err(Error::DimensionMismatch(
            "knot grid, pixel grid and mask disagree".into(),
        ));
    }
    let mut axis_sites = Vec::with_capacity(d);
    let mut axis_pixels = Vec::with_capacity(d);
    for j in 0..d {
        let axis = grid.axis(j);
        let sites = snap_axis_sites(axis, &greville_axis(axis), &pixels.centers(j)).map_err(|e| match e {
            Error::DuplicateSite { site, .. } => Error::DuplicateSite { axis: j, site },
            other => other,
        })?;
        axis_pixels.push(sites.iter().map(|&x| pixels.pixel_of(j, x)).collect::<Vec<_>>());
        axis_sites.push(sites);
    }
    let dims: Vec<usize> = axis_sites.iter().map(Vec::len).collect();
    let total: usize = dims.iter().product();
    let mut constrained = Vec::with_capacity(total);
    let mut site_pixel = Vec::with_capacity(total);
    let mut constrained_sites = Vec::new();
    let mut free_sites = Vec::new();
    for flat in 0..total {
        let gamma = unflatten(flat, &dims);
        let beta: Vec<usize> = gamma.iter().enumerate().map(|(j, &g)| axis_pixels[j][g]).collect();
        let pixel = pixels.flat(&beta);
        let known = !mask.is_unknown(pixel);
        constrained.push(known);
        site_pixel.push(pixel);
        if known {
            constrained_sites.push(flat);
        } else {
            free_sites.push(flat);
        }
    }
    Ok(SiteSet {
        axis_sites,
        axis_pixels,
        dims,
        constrained,
        constrained_sites,
        free_sites,
        site_pixel,
    })
}

/// Which rows to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restrict {
    /// All of `Ξ` (square, invertible).
    All,
    /// Only `Ξ*`.
    Constrained,
}

/// Collocation matrix `[B_α(ξ)]` with one row per selected site.
pub fn assemble_collocation(grid: &TensorKnotGrid, sites: &SiteSet, restrict: Restrict) -> SparseOperator {
    let rows: Vec<usize> = match restrict {
        Restrict::All => (0..sites.num_sites()).collect(),
        Restrict::Constrained => sites.constrained_sites().to_vec(),
    };
    let d = grid.dim();
    let dims = grid.basis_dims();
    // per-axis spans and local values of every axis site
    let axis_local: Vec<Vec<(usize, [f64; crate::basis::MAX_ORDER])>> = (0..d)
        .map(|j| {
            let axis = grid.axis(j);
            sites
                .axis_sites(j)
                .iter()
                .map(|&x| {
                    let span = axis.span(x);
                    let mut vals = [0.0; crate::basis::MAX_ORDER];
                    axis.eval_local(span, x, &mut vals, None);
                    (span, vals)
                })
                .collect()
        })
        .collect();
    let mut op = SparseOperator::new(grid.num_coeffs());
    let mut local = LocalBasis {
        first: vec![0; d],
        orders: grid.orders(),
        values: vec![[0.0; crate::basis::MAX_ORDER]; d],
        derivs: Vec::new(),
    };
    let mut cols = Vec::with_capacity(grid.local_size());
    let mut vals = Vec::with_capacity(grid.local_size());
    for flat in rows {
        let gamma = unflatten(flat, sites.dims());
        for j in 0..d {
            let (span, v) = &axis_local[j][gamma[j]];
            local.first[j] = span + 1 - local.orders[j];
            local.values[j] = *v;
        }
        cols.clear();
        vals.clear();
        local.for_each_term(&dims, |c, locals| {
            let v: f64 = (0..d).map(|j| local.values[j][locals[j]]).product();
            if v != 0.0 {
                cols.push(c);
                vals.push(v);
            }
        });
        op.push_row(&cols, &vals);
    }
    op
}

/// Dense square collocation matrix of one axis at its sites, row-major.
pub fn axis_collocation(axis: &AxisKnots, sites: &[f64]) -> Vec<f64> {
    let n = axis.num_basis();
    let mut out = vec![0.0; sites.len() * n];
    let mut vals = [0.0; crate::basis::MAX_ORDER];
    for (r, &x) in sites.iter().enumerate() {
        let span = axis.span(x);
        axis.eval_local(span, x, &mut vals, None);
        let first = span + 1 - axis.order();
        for (k, v) in vals[..axis.order()].iter().enumerate() {
            out[r * n + first + k] = *v;
        }
    }
    out
}

/// Known pixel values at the constrained sites, in the row order of the
/// constrained collocation matrix.
pub fn site_values(sites: &SiteSet, image: &[f64]) -> Vec<f64> {
    sites
        .constrained_sites()
        .iter()
        .map(|&s| image[sites.pixel_of_site(s)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_knot_grid;
    use crate::sparse::LinearOperator;
    use approx::assert_abs_diff_eq;

    fn axis_for(mu: usize, n: usize) -> (PixelGrid, TensorKnotGrid) {
        let pixels = PixelGrid::new(&[mu]).unwrap();
        let grid = build_knot_grid(&pixels, &[n]).unwrap();
        (pixels, grid)
    }

    #[test]
    fn greville_examples() {
        let odd = AxisKnots::new(3, vec![0., 0., 0., 1., 2., 3., 4., 5., 5., 5.]).unwrap();
        assert_eq!(greville_axis(&odd), vec![0., 0.5, 1.5, 2.5, 3.5, 4.5, 5.]);
        let even = AxisKnots::new(2, vec![0., 0., 0.5, 1.5, 2.5, 3.5, 4., 4.]).unwrap();
        assert_eq!(greville_axis(&even), vec![0., 0.5, 1.5, 2.5, 3.5, 4.]);
    }

    #[test]
    fn snapping_examples() {
        let (pixels, grid) = axis_for(5, 3);
        let g = greville_axis(grid.axis(0));
        let s = snap_axis_sites(grid.axis(0), &g, &pixels.centers(0)).unwrap();
        assert_eq!(s, vec![0., 0.5, 1.5, 2.5, 3.5, 4.5, 5.]);

        let (pixels, grid) = axis_for(4, 2);
        let g = greville_axis(grid.axis(0));
        let s = snap_axis_sites(grid.axis(0), &g, &pixels.centers(0)).unwrap();
        assert_eq!(s, g);
    }

    #[test]
    fn snapping_order_five() {
        let (pixels, grid) = axis_for(8, 5);
        let g = greville_axis(grid.axis(0));
        let s = snap_axis_sites(grid.axis(0), &g, &pixels.centers(0)).unwrap();
        for c in pixels.centers(0) {
            assert!(s.contains(&c), "center {c} missing from {s:?}");
        }
        for (a, b) in g.iter().zip(&s) {
            if a != b {
                assert!((a - b).abs() <= 0.5);
            }
        }
        // tie between 0.25 and 0.75 for center 0.5 goes to the smaller index
        assert_eq!(&s[..3], &[0.0, 0.5, 0.75]);
    }

    #[test]
    fn site_sets_and_masks() {
        let pixels = PixelGrid::new(&[8, 8]).unwrap();
        let grid = build_knot_grid(&pixels, &[3, 3]).unwrap();
        let empty = InpaintingMask::empty(&[8, 8]);
        let sites = build_site_sets(&grid, &pixels, &empty).unwrap();
        assert_eq!(sites.constrained_sites().len(), grid.num_coeffs());

        let one = InpaintingMask::from_indices(&[8, 8], &[pixels.flat(&[3, 4])]).unwrap();
        let sites = build_site_sets(&grid, &pixels, &one).unwrap();
        assert_eq!(sites.free_sites().len(), 1);
        let free = sites.free_sites()[0];
        assert_eq!(sites.site(free), vec![3.5, 4.5]);
    }

    #[test]
    fn border_masks_are_rejected() {
        assert!(InpaintingMask::from_indices(&[6, 6], &[2]).is_err());
        assert!(InpaintingMask::from_indices(&[6, 6], &[6 * 5 + 3]).is_err());
        assert!(InpaintingMask::from_indices(&[6, 6], &[6 + 5]).is_err());
        assert!(InpaintingMask::from_indices(&[6, 6], &[6 + 1, 6 * 4 + 4]).is_ok());
        assert!(InpaintingMask::new(&[3, 3], vec![true; 9]).is_err());
        assert!(InpaintingMask::new(&[3, 3], vec![false; 8]).is_err());
    }

    #[test]
    fn square_collocation_rows() {
        let pixels = PixelGrid::new(&[7, 9]).unwrap();
        let grid = build_knot_grid(&pixels, &[4, 3]).unwrap();
        let sites = build_site_sets(&grid, &pixels, &InpaintingMask::empty(&[7, 9])).unwrap();
        let b = assemble_collocation(&grid, &sites, Restrict::All);
        assert_eq!(b.nrows(), grid.num_coeffs());
        for r in 0..b.nrows() {
            let (cols, vals) = b.row(r);
            assert_abs_diff_eq!(vals.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            let diag = cols.iter().position(|&c| c == r).map(|p| vals[p]).unwrap_or(0.0);
            assert!(diag > 0.0, "row {r} has no positive diagonal");
        }
    }

    #[test]
    fn axis_collocation_matches_tensor_rows() {
        let pixels = PixelGrid::new(&[6, 5]).unwrap();
        let grid = build_knot_grid(&pixels, &[3, 4]).unwrap();
        let sites = build_site_sets(&grid, &pixels, &InpaintingMask::empty(&[6, 5])).unwrap();
        let b = assemble_collocation(&grid, &sites, Restrict::All).to_dense();
        let b0 = axis_collocation(grid.axis(0), sites.axis_sites(0));
        let b1 = axis_collocation(grid.axis(1), sites.axis_sites(1));
        let (n0, n1) = (grid.axis(0).num_basis(), grid.axis(1).num_basis());
        let n = n0 * n1;
        for r in 0..n {
            for c in 0..n {
                let kron = b0[(r / n1) * n0 + c / n1] * b1[(r % n1) * n1 + c % n1];
                assert_abs_diff_eq!(b[r * n + c], kron, epsilon = 1e-15);
            }
        }
    }
}
