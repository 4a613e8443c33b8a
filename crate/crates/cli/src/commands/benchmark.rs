use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tvspline::baseline_tv::solve_pixel_tv;
use tvspline::collocation::{InpaintingMask, PixelGrid};
use tvspline::imaging::{snr, MaskKind, MaskSpec, PixelImage};
use tvspline::inpaint::{inpaint, InpaintOptions};
use tvspline::optimizer::{normalized_epsilon, Mode, SolverConfig};

use super::{check_epsilon, elapsed_ms, generate_mask, load_image, mask_spec, solver_config, start_strategy};
use crate::args::{BenchmarkArgs, Start};
use crate::error::{io_err, CliError, Result};

pub const CSV_HEADER: &str = "image,method,mask_kind,mask_param,start,epsilon,iters,snr_db,wall_ms";

/// One CSV row; `snr_db` is `NaN` when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub image: String,
    pub method: String,
    pub mask_kind: String,
    pub mask_param: String,
    pub start: String,
    pub epsilon: Option<f64>,
    pub iters: usize,
    pub snr_db: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Spline(usize),
    PixelTv,
}

impl Method {
    fn parse(text: &str) -> Result<Self> {
        if text == "baseline-tv" {
            return Ok(Method::PixelTv);
        }
        text.strip_prefix("spline-order-")
            .and_then(|k| k.parse().ok())
            .filter(|&k| k >= 2)
            .map(Method::Spline)
            .ok_or_else(|| CliError::Usage(format!("unknown method `{text}`; use spline-order-<k> or baseline-tv")))
    }

    fn name(self) -> String {
        match self {
            Method::Spline(k) => format!("spline-order-{k}"),
            Method::PixelTv => "baseline-tv".into(),
        }
    }
}

struct Setup {
    methods: Vec<Method>,
    starts: Vec<Start>,
    solver: SolverConfig,
    epsilon: Option<f64>,
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let common = &args.common;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let methods = if args.methods.is_empty() {
        vec![Method::Spline(common.resolve_order(2)), Method::PixelTv]
    } else {
        args.methods.iter().map(|m| Method::parse(m)).collect::<Result<_>>()?
    };
    if let Some(eps) = common.epsilon {
        check_epsilon(eps)?;
    }
    let setup = Setup {
        methods,
        starts: args.start.clone(),
        solver: solver_config(common)?,
        epsilon: common.epsilon,
    };
    let images = args
        .images
        .iter()
        .map(|p| Ok((display_name(p), load_image(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut flags = args.mask_flags.clone();
    if flags.random.is_none() && flags.scratches.is_none() {
        flags.random = Some(0.03);
    }

    let jobs: Vec<(usize, u64)> = (0..images.len())
        .flat_map(|i| (0..args.trials as u64).map(move |t| (i, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    let rows: Vec<BenchmarkRow> = pool
        .install(|| {
            jobs.par_iter()
                .map(|&(i, t)| {
                    let spec = mask_spec(&flags, common.seed + t).expect("mask flags set");
                    let (name, image) = &images[i];
                    trial(name, image, &spec, common.seed + t, &setup)
                })
                .collect::<Result<Vec<_>>>()
        })?
        .into_iter()
        .flatten()
        .collect();

    if let Some(path) = &args.csv {
        append_rows(path, &rows)?;
    }
    print_summary(&rows);
    Ok(())
}

/// All methods and starts on one image and mask.
fn trial(name: &str, image: &PixelImage, spec: &MaskSpec, seed: u64, setup: &Setup) -> Result<Vec<BenchmarkRow>> {
    let mask = generate_mask(spec, image.dims())?;
    let (mask_kind, mask_param) = describe(&spec.kind);
    let mut rows = Vec::new();
    for &method in &setup.methods {
        for &start in &setup.starts {
            let clock = Instant::now();
            let outcome = run_method(method, image, &mask, start_strategy(start, seed), setup);
            let wall_ms = elapsed_ms(clock);
            let (iters, snr_db) = match outcome {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("warning: {name} {} trial seed {seed}: {e}", method.name());
                    (0, f64::NAN)
                }
            };
            rows.push(BenchmarkRow {
                image: name.to_string(),
                method: method.name(),
                mask_kind: mask_kind.clone(),
                mask_param: mask_param.clone(),
                start: start.name().into(),
                epsilon: match method {
                    Method::Spline(_) => setup.epsilon,
                    Method::PixelTv => None,
                },
                iters,
                snr_db,
                wall_ms,
            });
        }
    }
    Ok(rows)
}

fn run_method(
    method: Method,
    image: &PixelImage,
    mask: &InpaintingMask,
    start: tvspline::optimizer::StartStrategy,
    setup: &Setup,
) -> tvspline::Result<(usize, f64)> {
    match method {
        Method::Spline(order) => {
            let mut options = InpaintOptions::new(order, image.dims().len());
            if let Some(eps) = setup.epsilon {
                let pixels = PixelGrid::new(image.dims())?;
                options.mode = Mode::Relaxed {
                    epsilon: normalized_epsilon(eps, &pixels),
                };
            }
            options.solver = setup.solver.clone();
            options.start = start;
            let rec = inpaint(image, mask, &options)?;
            Ok((rec.diagnostics.iterations, snr(image, &rec.image)?))
        }
        Method::PixelTv => {
            let (out, diag) = solve_pixel_tv(image, mask, &setup.solver, start)?;
            Ok((diag.iterations, snr(image, &out)?))
        }
    }
}

fn describe(kind: &MaskKind) -> (String, String) {
    match kind {
        MaskKind::Random { fraction } => ("random".into(), format!("{fraction}")),
        MaskKind::Scratches { count, width } => ("scratches".into(), format!("{count}x{width}")),
        MaskKind::Bitmap { path } => ("bitmap".into(), path.display().to_string()),
    }
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Appends to `path`, writing the header only for a new or empty file.
fn append_rows(path: &PathBuf, rows: &[BenchmarkRow]) -> Result<()> {
    let existing = match std::fs::File::open(path) {
        Ok(file) => {
            let mut first = String::new();
            BufReader::new(file).read_line(&mut first).map_err(io_err(path))?;
            Some(first.trim_end().to_string())
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(io_err(path)(e)),
    };
    let fresh = existing.as_deref().is_none_or(str::is_empty);
    if let Some(header) = existing.as_deref().filter(|h| !h.is_empty()) {
        if header != CSV_HEADER {
            return Err(CliError::Input(format!(
                "{} has header `{header}`, expected `{CSV_HEADER}`",
                path.display()
            )));
        }
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let mut writer = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(io_err(path))?;
    writer
        .into_inner()
        .map_err(|e| io_err(path)(e.into_error()))?
        .flush()
        .map_err(io_err(path))
}

struct Group<'a> {
    key: [&'a str; 4],
    snr: Vec<f64>,
    runs: usize,
}

/// Mean SNR per method, start and mask over the finite runs.
fn print_summary(rows: &[BenchmarkRow]) {
    let mut groups: Vec<Group> = Vec::new();
    for row in rows {
        let key = [
            row.method.as_str(),
            row.start.as_str(),
            row.mask_kind.as_str(),
            row.mask_param.as_str(),
        ];
        let at = match groups.iter().position(|g| g.key == key) {
            Some(at) => at,
            None => {
                groups.push(Group {
                    key,
                    snr: Vec::new(),
                    runs: 0,
                });
                groups.len() - 1
            }
        };
        groups[at].runs += 1;
        if row.snr_db.is_finite() {
            groups[at].snr.push(row.snr_db);
        }
    }
    println!(
        "{:<16} {:<7} {:<18} {:>9} {:>5}",
        "method", "start", "mask", "mean_snr", "runs"
    );
    for Group {
        key: [method, start, kind, param],
        snr,
        runs,
    } in groups
    {
        let mean = snr.iter().sum::<f64>() / snr.len() as f64;
        println!(
            "{method:<16} {start:<7} {:<18} {mean:>9.3} {runs:>5}",
            format!("{kind} {param}")
        );
    }
}
