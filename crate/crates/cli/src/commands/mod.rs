//! Subcommand implementations.

mod benchmark;
mod denoise;
mod inpaint;
mod mask;

use std::path::{Path, PathBuf};

pub use benchmark::{benchmark, BenchmarkRow, CSV_HEADER};
pub use denoise::denoise;
pub use inpaint::inpaint;
pub use mask::mask;

use tvspline::collocation::InpaintingMask;
use tvspline::imaging::{make_mask, read_image, MaskSpec, PixelImage};
use tvspline::optimizer::{SolverConfig, StartStrategy};

use crate::args::{Common, MaskFlags, Start};
use crate::error::{io_err, CliError, Context, Result};

pub(crate) fn load_image(path: &Path) -> Result<PixelImage> {
    read_image(path).context(|| format!("reading {}", path.display()))
}

/// Mask spec from the generation flags, if any were given.
pub(crate) fn mask_spec(flags: &MaskFlags, seed: u64) -> Option<MaskSpec> {
    if let Some(fraction) = flags.random {
        Some(MaskSpec::random(fraction, seed))
    } else {
        flags
            .scratches
            .map(|count| MaskSpec::scratches(count, flags.width, seed))
    }
}

pub(crate) fn generate_mask(spec: &MaskSpec, dims: &[usize]) -> Result<InpaintingMask> {
    make_mask(spec, dims).context(|| "generating mask".into())
}

pub(crate) fn solver_config(common: &Common) -> Result<SolverConfig> {
    if common.tol.is_nan() || common.tol < 0.0 {
        return Err(CliError::Input(format!("tolerance {} must be nonnegative", common.tol)));
    }
    Ok(SolverConfig {
        max_iter: common.iters,
        tol: common.tol,
        ..SolverConfig::default()
    })
}

pub(crate) fn start_strategy(start: Start, seed: u64) -> StartStrategy {
    match start {
        Start::Random => StartStrategy::Random { seed },
        Start::Mean => StartStrategy::Mean,
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<f64> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(epsilon)
    } else {
        Err(CliError::Input(format!("epsilon {epsilon} must be positive")))
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// `<dir>/<stem>-<suffix>.<ext>`, keeping the input's image format.
pub(crate) fn derived_path(dir: &Path, input: &Path, suffix: &str) -> PathBuf {
    let stem = input
        .file_stem()
        .map_or("image".into(), |s| s.to_string_lossy().into_owned());
    let ext = match input.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("png") => "png",
        _ => "pgm",
    };
    dir.join(format!("{stem}-{suffix}.{ext}"))
}

pub(crate) fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Formats an SNR for terminal output.
pub(crate) fn fmt_snr(snr: Option<f64>) -> String {
    match snr {
        None => "n/a".into(),
        Some(v) if v.is_infinite() => "inf".into(),
        Some(v) => format!("{v:.2} dB"),
    }
}
