//! Total-variation image inpainting in tensor-product B-spline spaces.
//!
//! Known pixels are interpolated (exactly, or in a least-squares sense in the
//! relaxed model) by a spline whose coefficients minimize a Gauss–Legendre
//! discretization of the total variation over the neighbourhood of the
//! unknown pixels.
//!
//! Conventions: indices are 0-based; images and coefficient vectors are
//! stored with the last axis running fastest (row-major for 2-d images, axis
//! 0 = rows); with the default [`PixelGrid::new`](collocation::PixelGrid::new)
//! every pixel is a unit square and intensities live on `[0, 255]`.

pub mod baseline_tv;
pub mod basis;
pub mod collocation;
pub mod corpus;
pub mod error;
pub mod imaging;
pub mod inpaint;
pub mod optimizer;
pub mod projection;
pub mod quadrature;
pub mod sparse;

pub use error::{Error, Result};
