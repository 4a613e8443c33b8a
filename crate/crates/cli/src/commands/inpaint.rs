use std::time::Instant;

use tvspline::collocation::PixelGrid;
use tvspline::imaging::{read_mask, snr, write_image, write_mask};
use tvspline::inpaint::{inpaint as run_inpaint, InpaintOptions};
use tvspline::optimizer::{normalized_epsilon, Mode};

use super::{
    check_epsilon, derived_path, elapsed_ms, ensure_dir, fmt_snr, generate_mask, load_image, mask_spec, solver_config,
    start_strategy,
};
use crate::args::InpaintArgs;
use crate::error::{CliError, Context, Result};
use crate::report::{write_json, Sidecar};

pub fn inpaint(args: &InpaintArgs) -> Result<()> {
    let common = &args.common;
    let image = load_image(&args.image)?;
    let dims = image.dims().to_vec();
    let spec = mask_spec(&args.mask_flags, common.seed);
    let mask = match (&args.mask, &spec) {
        (Some(path), _) => read_mask(path, &dims).context(|| format!("reading mask {}", path.display()))?,
        (None, Some(spec)) => generate_mask(spec, &dims)?,
        (None, None) => {
            return Err(CliError::Usage(
                "a mask is required: pass --mask FILE, --random FRACTION or --scratches COUNT".into(),
            ))
        }
    };
    let truth = match &args.truth {
        Some(path) => Some(load_image(path)?),
        None if args.mask.is_none() => Some(image.clone()),
        None => None,
    };

    let order = common.resolve_order(2);
    let pixels = PixelGrid::new(&dims).context(|| "image shape".into())?;
    let mut options = InpaintOptions::new(order, dims.len());
    if let Some(eps) = common.epsilon {
        options.mode = Mode::Relaxed {
            epsilon: normalized_epsilon(check_epsilon(eps)?, &pixels),
        };
    }
    options.solver = solver_config(common)?;
    options.start = start_strategy(args.start, common.seed);

    let clock = Instant::now();
    let rec = run_inpaint(&image, &mask, &options).context(|| "inpainting".into())?;
    let wall_ms = elapsed_ms(clock);
    let snr_db = match &truth {
        Some(t) => Some(snr(t, &rec.image).context(|| "ground truth".into())?),
        None => None,
    };

    ensure_dir(&common.out)?;
    let output = derived_path(&common.out, &args.image, "inpainted");
    write_image(&output, &rec.image).context(|| format!("writing {}", output.display()))?;
    let mask_file = match &args.mask {
        Some(p) => p.clone(),
        None => {
            let p = common.out.join(format!(
                "{}-mask.png",
                args.image.file_stem().map_or("image".into(), |s| s.to_string_lossy())
            ));
            write_mask(&p, &mask).context(|| format!("writing {}", p.display()))?;
            p
        }
    };

    let mut side = Sidecar::from_reconstruction("inpaint", &rec);
    side.input = args.image.display().to_string();
    side.output = output.display().to_string();
    side.mask = Some(mask_file.display().to_string());
    side.order = order;
    if let Some(eps) = common.epsilon {
        side.mode = "relaxed";
        side.epsilon = Some(eps);
    }
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
        "{}: order {order}, {} unknown pixels, {} iterations, residual {:.2e}, SNR {}",
        output.display(),
        mask.num_unknown(),
        d.iterations,
        d.residual,
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
