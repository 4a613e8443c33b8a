use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use tvspline::collocation::PixelGrid;
use tvspline::imaging::{add_noise, extreme_value_mask, snr, write_image, NoiseSpec, PixelImage};
use tvspline::inpaint::{inpaint, InpaintOptions, Reconstruction};
use tvspline::optimizer::{normalized_epsilon, Mode};

use super::{check_epsilon, derived_path, elapsed_ms, ensure_dir, fmt_snr, load_image, solver_config, start_strategy};
use crate::args::DenoiseArgs;
use crate::error::{CliError, Context, Result};
use crate::report::{write_json, Sidecar};

/// Relaxed weight used without `--epsilon` or `--sweep`, in normalized units.
pub const DEFAULT_EPSILON: f64 = 10.0;

#[derive(Debug, Serialize)]
struct SweepRow {
    epsilon: f64,
    snr_db: Option<f64>,
    variance_ratio: f64,
    iters: usize,
    residual: f64,
    wall_ms: f64,
}

pub fn denoise(args: &DenoiseArgs) -> Result<()> {
    let common = &args.common;
    let input = load_image(&args.image)?;
    let adds_noise = args.noise_sigma.is_some() || args.salt_pepper.is_some();
    let (noisy, mask, truth) = if adds_noise {
        let spec = NoiseSpec {
            sigma: args.noise_sigma.unwrap_or(0.0),
            salt_pepper: args.salt_pepper.unwrap_or(0.0),
            seed: common.seed,
        };
        let (noisy, mask) = add_noise(&input, &spec).context(|| "adding noise".into())?;
        (noisy, mask, Some(input))
    } else {
        let mask = extreme_value_mask(&input).context(|| "salt-and-pepper mask".into())?;
        let truth = args.truth.as_deref().map(load_image).transpose()?;
        (input, mask, truth)
    };

    let weights = if args.sweep.is_empty() {
        vec![common.epsilon.unwrap_or(DEFAULT_EPSILON)]
    } else {
        args.sweep.clone()
    };
    for &eps in &weights {
        check_epsilon(eps)?;
    }
    let order = common.resolve_order(4);
    let pixels = PixelGrid::new(noisy.dims()).context(|| "image shape".into())?;

    ensure_dir(&common.out)?;
    let mut rows = Vec::new();
    let mut best: Option<(usize, Reconstruction, Option<f64>, f64)> = None;
    for (i, &eps) in weights.iter().enumerate() {
        let mut options = InpaintOptions::new(order, noisy.dims().len());
        options.mode = Mode::Relaxed {
            epsilon: normalized_epsilon(eps, &pixels),
        };
        options.solver = solver_config(common)?;
        options.start = start_strategy(args.start, common.seed);
        let clock = Instant::now();
        let rec = inpaint(&noisy, &mask, &options).context(|| format!("denoising with epsilon {eps}"))?;
        let wall_ms = elapsed_ms(clock);
        let snr_db = truth
            .as_ref()
            .map(|t| snr(t, &rec.image))
            .transpose()
            .context(|| "ground truth".into())?;
        rows.push(SweepRow {
            epsilon: eps,
            snr_db,
            variance_ratio: variance_ratio(&rec.image, &noisy),
            iters: rec.diagnostics.iterations,
            residual: rec.diagnostics.residual,
            wall_ms,
        });
        if weights.len() > 1 {
            println!("epsilon {eps}: SNR {}", fmt_snr(snr_db));
        }
        let better = match &best {
            None => true,
            Some((_, _, prev, _)) => snr_db.unwrap_or(f64::NEG_INFINITY) > prev.unwrap_or(f64::NEG_INFINITY),
        };
        if better {
            best = Some((i, rec, snr_db, wall_ms));
        }
    }

    if weights.len() > 1 {
        let path = common.out.join(format!("{}-sweep.csv", stem(&args.image)));
        let mut writer = csv::Writer::from_path(&path)?;
        for row in &rows {
            writer.serialize(row)?;
        }
        writer.flush().map_err(crate::error::io_err(&path))?;
    }
    if adds_noise {
        let path = derived_path(&common.out, &args.image, "noisy");
        write_image(&path, &noisy).context(|| format!("writing {}", path.display()))?;
    }

    let (index, rec, snr_db, wall_ms) = best.expect("at least one weight");
    let output = derived_path(&common.out, &args.image, "denoised");
    write_image(&output, &rec.image).context(|| format!("writing {}", output.display()))?;
    let mut side = Sidecar::from_reconstruction("denoise", &rec);
    side.input = args.image.display().to_string();
    side.output = output.display().to_string();
    side.order = order;
    side.mode = "relaxed";
    side.epsilon = Some(weights[index]);
    side.start = args.start.name();
    side.seed = common.seed;
    side.max_iter = common.iters;
    side.tol = common.tol;
    side.unknown_pixels = mask.num_unknown();
    side.set_snr(snr_db);
    side.wall_ms = wall_ms;
    write_json(&output.with_extension("json"), &side)?;

    let d = &rec.diagnostics;
    println!(
        "{}: epsilon {}, {} noisy pixels, {} iterations, SNR {}",
        output.display(),
        weights[index],
        mask.num_unknown(),
        d.iterations,
        fmt_snr(snr_db)
    );
    if !d.converged && !args.allow_unconverged {
        return Err(CliError::NotConverged {
            iterations: d.iterations,
            residual: d.residual,
            tol: common.tol,
        });
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or("image".into(), |s| s.to_string_lossy().into_owned())
}

/// Output variance over input variance; near zero for a flat result.
fn variance_ratio(image: &PixelImage, input: &PixelImage) -> f64 {
    let v = input.variance();
    if v > 0.0 {
        image.variance() / v
    } else {
        0.0
    }
}
