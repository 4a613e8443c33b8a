//! End-to-end spline inpainting of one image.

use crate::basis::{build_knot_grid, TensorKnotGrid};
use crate::collocation::{build_site_sets, site_values, InpaintingMask, PixelGrid, SiteSet};
use crate::error::{Error, Result};
use crate::imaging::{render, PixelImage};
use crate::optimizer::{
    solve, starting_guess_mean, starting_guess_random, Diagnostics, Mode, ProblemData, SolverConfig, StartStrategy,
};
use crate::quadrature::{active_region, assemble_gradient_operator, build_rule, ActiveRegion, QuadratureRule};

/// Spline space, sites and quadrature for one image shape and mask.
#[derive(Debug, Clone)]
pub struct SplineModel {
    pixels: PixelGrid,
    grid: TensorKnotGrid,
    sites: SiteSet,
    region: ActiveRegion,
    rule: QuadratureRule,
}

impl SplineModel {
    /// `points` defaults to the spline order on every axis.
    pub fn new(pixels: PixelGrid, orders: &[usize], mask: &InpaintingMask, points: Option<&[usize]>) -> Result<Self> {
        if mask.dims() != pixels.counts() {
            return Err(Error::DimensionMismatch(format!(
                "mask {:?} vs image {:?}",
                mask.dims(),
                pixels.counts()
            )));
        }
        let grid = build_knot_grid(&pixels, orders)?;
        let sites = build_site_sets(&grid, &pixels, mask)?;
        let region = active_region(&grid, &sites);
        let points = points.map(<[usize]>::to_vec).unwrap_or_else(|| orders.to_vec());
        let rule = build_rule(&grid, &region, &points)?;
        Ok(Self {
            pixels,
            grid,
            sites,
            region,
            rule,
        })
    }

    pub fn pixels(&self) -> &PixelGrid {
        &self.pixels
    }

    pub fn grid(&self) -> &TensorKnotGrid {
        &self.grid
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn region(&self) -> &ActiveRegion {
        &self.region
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Assembles `K`, `B_{Ξ*}` and `g` for `image`.
    pub fn problem(&self, image: &PixelImage, mode: Mode) -> Result<ProblemData> {
        if image.dims() != self.pixels.counts() {
            return Err(Error::DimensionMismatch(format!(
                "image {:?} vs model {:?}",
                image.dims(),
                self.pixels.counts()
            )));
        }
        let k = assemble_gradient_operator(&self.grid, &self.rule);
        let g = site_values(&self.sites, image.data());
        ProblemData::new(&self.grid, &self.sites, k, g, mode)
    }

    pub fn render(&self, coeffs: &[f64]) -> Result<PixelImage> {
        render(&self.grid, coeffs, &self.pixels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintOptions {
    pub orders: Vec<usize>,
    /// Gauss–Legendre points per axis; the orders when absent.
    pub points: Option<Vec<usize>>,
    pub mode: Mode,
    pub solver: SolverConfig,
    pub start: StartStrategy,
}

impl InpaintOptions {
    pub fn new(order: usize, dim: usize) -> Self {
        Self {
            orders: vec![order; dim],
            points: None,
            mode: Mode::Exact,
            solver: SolverConfig::default(),
            start: StartStrategy::Mean,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub image: PixelImage,
    pub coeffs: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub num_coeffs: usize,
    pub active_cells: usize,
    pub nodes: usize,
}

/// Reconstructs the unknown pixels of `image`.
pub fn inpaint(image: &PixelImage, mask: &InpaintingMask, options: &InpaintOptions) -> Result<Reconstruction> {
    let pixels = PixelGrid::new(image.dims())?;
    let model = SplineModel::new(pixels, &options.orders, mask, options.points.as_deref())?;
    let data = model.problem(image, options.mode)?;
    let start = match options.start {
        StartStrategy::Mean => starting_guess_mean(&data, image.data(), mask)?,
        StartStrategy::Random { seed } => starting_guess_random(data.num_coeffs(), seed, model.pixels.range()),
    };
    let solution = solve(&data, &options.solver, &start)?;
    let out = model.render(&solution.coeffs)?;
    Ok(Reconstruction {
        image: out,
        coeffs: solution.coeffs,
        diagnostics: solution.diagnostics,
        num_coeffs: model.grid.num_coeffs(),
        active_cells: model.region.cells().len(),
        nodes: model.rule.num_nodes(),
    })
}
