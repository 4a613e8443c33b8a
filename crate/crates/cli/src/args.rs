//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Output directory used when neither `--out` nor a config file sets one.
pub const OUT_ENV: &str = "TVSPLINE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "tvspline",
    version,
    about = "Total-variation spline inpainting for grayscale images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct the unknown pixels of an image.
    Inpaint(InpaintArgs),
    /// Remove salt-and-pepper noise by inpainting its pixels with the relaxed model.
    Denoise(DenoiseArgs),
    /// Run repeated inpainting trials and write one CSV row per trial and method.
    Benchmark(BenchmarkArgs),
    /// Generate a mask file.
    Mask(MaskArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    /// Piecewise-constant content; spline order 2.
    Cartoon,
    /// Photographs; spline order 3.
    Natural,
}

impl Profile {
    pub fn order(self) -> usize {
        match self {
            Profile::Cartoon => 2,
            Profile::Natural => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Start {
    Random,
    Mean,
}

impl Start {
    pub fn name(self) -> &'static str {
        match self {
            Start::Random => "random",
            Start::Mean => "mean",
        }
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Key-value file with defaults for any flag (`key = value` per line).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Spline order per axis; overrides the profile.
    #[arg(long)]
    pub order: Option<usize>,
    /// Picks the spline order for the kind of image.
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Maximum solver iterations.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Relative fixed-point residual at which the solver stops.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Relaxed data weight in normalized units (intensities on [0, 1]);
    /// switches inpainting to the relaxed model.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Seed for masks, noise and random starts.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for benchmark trials (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, value_name = "DIR", env = OUT_ENV, default_value = ".")]
    pub out: PathBuf,
}

impl Common {
    /// Explicit order, then the profile, then `fallback`.
    pub fn resolve_order(&self, fallback: usize) -> usize {
        self.order.or(self.profile.map(Profile::order)).unwrap_or(fallback)
    }
}

/// Mask generation flags.
#[derive(Debug, Clone, Args)]
pub struct MaskFlags {
    /// Remove this fraction of the pixels at random.
    #[arg(long, value_name = "FRACTION", conflicts_with = "scratches")]
    pub random: Option<f64>,
    /// Draw this many random scratches.
    #[arg(long, value_name = "COUNT")]
    pub scratches: Option<usize>,
    /// Scratch width in pixels.
    #[arg(long, default_value_t = 4)]
    pub width: usize,
}

#[derive(Debug, Clone, Args)]
pub struct InpaintArgs {
    /// Input image (PGM or PNG).
    pub image: PathBuf,
    /// Mask file: image with nonzero unknown pixels, or run-length text.
    #[arg(long, conflicts_with_all = ["random", "scratches"])]
    pub mask: Option<PathBuf>,
    #[command(flatten)]
    pub mask_flags: MaskFlags,
    /// Ground truth for the SNR; defaults to the input when the mask is generated.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Starting guess.
    #[arg(long, value_enum, default_value_t = Start::Mean)]
    pub start: Start,
    /// Exit with status 0 even when the iteration cap is reached first.
    #[arg(long)]
    pub allow_unconverged: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct DenoiseArgs {
    /// Noisy input image, or a clean one when noise flags are given.
    pub image: PathBuf,
    /// Ground truth for the SNR.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Add Gaussian noise with this standard deviation first; the input
    /// becomes the ground truth.
    #[arg(long, value_name = "SIGMA")]
    pub noise_sigma: Option<f64>,
    /// Fraction of pixels set to 0 or 255 when adding noise.
    #[arg(long, value_name = "FRACTION")]
    pub salt_pepper: Option<f64>,
    /// Solve for each weight and write an SNR table; the best result is kept.
    #[arg(long, value_delimiter = ',', value_name = "EPS,..")]
    pub sweep: Vec<f64>,
    /// Starting guess.
    #[arg(long, value_enum, default_value_t = Start::Mean)]
    pub start: Start,
    /// Exit with status 0 even when the iteration cap is reached first.
    #[arg(long)]
    pub allow_unconverged: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// Ground-truth images.
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Methods: `spline-order-<k>` or `baseline-tv`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Starting guesses to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Start::Mean])]
    pub start: Vec<Start>,
    /// Trials per image; trial `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[command(flatten)]
    pub mask_flags: MaskFlags,
    /// CSV file; rows are appended when it already exists.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct MaskArgs {
    /// Take the mask shape from this image.
    #[arg(
        long,
        value_name = "IMAGE",
        conflicts_with = "size",
        required_unless_present = "size"
    )]
    pub like: Option<PathBuf>,
    /// Mask shape as `ROWSxCOLS`.
    #[arg(long, value_name = "ROWSxCOLS")]
    pub size: Option<String>,
    #[command(flatten)]
    pub mask_flags: MaskFlags,
    /// Output file (`.png`, `.pgm`, or `.txt` for run-length text).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}
