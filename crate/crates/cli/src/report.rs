//! JSON sidecar files written next to every output image.

use std::path::Path;

use serde::Serialize;
use tvspline::inpaint::Reconstruction;

use crate::error::{io_err, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub command: &'static str,
    pub input: String,
    pub output: String,
    pub mask: Option<String>,
    pub order: usize,
    pub mode: &'static str,
    /// Relaxed weight as given on the command line (normalized units).
    pub epsilon: Option<f64>,
    pub start: &'static str,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub objective: f64,
    pub best_iteration: usize,
    pub operator_norm: f64,
    pub unknown_pixels: usize,
    pub coefficients: usize,
    pub active_cells: usize,
    pub quadrature_nodes: usize,
    /// `null` without ground truth or when the reconstruction is exact.
    pub snr_db: Option<f64>,
    pub snr_infinite: bool,
    pub wall_ms: f64,
}

impl Sidecar {
    /// Fills the solver fields from `rec`; the caller sets the rest.
    pub fn from_reconstruction(command: &'static str, rec: &Reconstruction) -> Self {
        let d = &rec.diagnostics;
        Self {
            command,
            input: String::new(),
            output: String::new(),
            mask: None,
            order: 0,
            mode: "exact",
            epsilon: None,
            start: "mean",
            seed: 0,
            max_iter: 0,
            tol: 0.0,
            iterations: d.iterations,
            converged: d.converged,
            residual: d.residual,
            objective: d.objective,
            best_iteration: d.best_iteration,
            operator_norm: d.operator_norm,
            unknown_pixels: 0,
            coefficients: rec.num_coeffs,
            active_cells: rec.active_cells,
            quadrature_nodes: rec.nodes,
            snr_db: None,
            snr_infinite: false,
            wall_ms: 0.0,
        }
    }

    pub fn set_snr(&mut self, snr: Option<f64>) {
        match snr {
            Some(v) if v.is_infinite() => {
                self.snr_db = None;
                self.snr_infinite = true;
            }
            other => self.snr_db = other,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    std::fs::write(path, text + "\n").map_err(io_err(path))
}
