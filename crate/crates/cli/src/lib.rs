//! Command-line front end for TV spline inpainting.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Inpaint(a) => commands::inpaint(a),
        Command::Denoise(a) => commands::denoise(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Mask(a) => commands::mask(a),
    }
}
