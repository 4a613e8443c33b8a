use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use tvspline::corpus::cartoon;
use tvspline::imaging::{read_image, write_image, PixelImage};

const BIN: &str = env!("CARGO_BIN_EXE_tvspline");

fn tvspline(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("TVSPLINE_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_cartoon(dir: &Path, name: &str, size: usize, seed: u64) -> PathBuf {
    let path = dir.join(name);
    write_image(&path, &cartoon(size, seed)).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn snr_column(csv: &Path) -> Vec<String> {
    let mut reader = csv::Reader::from_path(csv).unwrap();
    let at = reader.headers().unwrap().iter().position(|h| h == "snr_db").unwrap();
    reader.records().map(|r| r.unwrap()[at].to_string()).collect()
}

#[test]
fn benchmark_counts_rows_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 24, 1);
    write_cartoon(dir.path(), "b.pgm", 24, 2);
    let run = |csv: &str, jobs: &str| {
        let out = tvspline(
            dir.path(),
            &[
                "benchmark",
                "a.pgm",
                "b.pgm",
                "--methods",
                "spline-order-2,baseline-tv",
                "--trials",
                "3",
                "--random",
                "0.05",
                "--iters",
                "30",
                "--seed",
                "11",
                "--jobs",
                jobs,
                "--csv",
                csv,
            ],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        String::from_utf8(out.stdout).unwrap()
    };
    let summary = run("one.csv", "1");
    assert!(summary.contains("spline-order-2") && summary.contains("baseline-tv"));
    run("two.csv", "2");

    let text = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "image,method,mask_kind,mask_param,start,epsilon,iters,snr_db,wall_ms"
    );
    assert_eq!(lines.count(), 12);
    let snr = snr_column(&dir.path().join("one.csv"));
    assert_eq!(snr, snr_column(&dir.path().join("two.csv")));
    assert!(snr.iter().all(|v| v.parse::<f64>().unwrap().is_finite()));

    // Appending keeps a single header.
    run("one.csv", "1");
    let text = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(text.lines().count(), 25);
    assert_eq!(text.matches("image,method").count(), 1);
}

#[test]
fn benchmark_refuses_foreign_csv() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 16, 1);
    std::fs::write(dir.path().join("x.csv"), "a,b,c\n1,2,3\n").unwrap();
    let out = tvspline(dir.path(), &["benchmark", "a.pgm", "--trials", "1", "--csv", "x.csv"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("x.csv")).unwrap(),
        "a,b,c\n1,2,3\n"
    );
}

#[test]
fn benchmark_rejects_invalid_config() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 16, 1);
    for bad in [
        &["--methods", "wavelets"][..],
        &["--methods", "spline-order-1"],
        &["--trials", "0"],
    ] {
        let mut args = vec!["benchmark", "a.pgm"];
        args.extend_from_slice(bad);
        assert_eq!(code(&tvspline(dir.path(), &args)), 2, "{bad:?}");
    }
}

#[test]
fn border_masks_are_rejected() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 16, 1);
    let mut mask = PixelImage::filled(&[16, 16], 0.0);
    mask.data_mut()[16 * 5] = 255.0;
    write_image(&dir.path().join("mask.pgm"), &mask).unwrap();
    let out = tvspline(dir.path(), &["inpaint", "a.pgm", "--mask", "mask.pgm"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("border"), "{}", stderr(&out));
    assert!(!dir.path().join("a-inpainted.pgm").exists());
}

#[test]
fn mask_dimension_mismatch_is_invalid_input() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 16, 1);
    let out = tvspline(
        dir.path(),
        &["mask", "--size", "12x12", "--random", "0.1", "-o", "m.pgm"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = tvspline(dir.path(), &["inpaint", "a.pgm", "--mask", "m.pgm"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = tvspline(dir.path(), &["inpaint", "nope.pgm", "--random", "0.1"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&tvspline(dir.path(), &["inpaint"])), 2);
    assert_eq!(code(&tvspline(dir.path(), &["inpaint", "a.pgm", "--bogus"])), 2);
    write_cartoon(dir.path(), "a.pgm", 16, 1);
    assert_eq!(code(&tvspline(dir.path(), &["inpaint", "a.pgm"])), 2);
}

#[test]
fn mask_command() {
    let dir = TempDir::new().unwrap();
    let gen = |name: &str, extra: &[&str]| {
        let mut args = vec!["mask", "--size", "40x50", "-o", name];
        args.extend_from_slice(extra);
        let out = tvspline(dir.path(), &args);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        std::fs::read(dir.path().join(name)).unwrap()
    };
    let a = gen("a.png", &["--random", "0.03", "--seed", "7"]);
    assert_eq!(a, gen("b.png", &["--random", "0.03", "--seed", "7"]));
    assert_ne!(a, gen("c.png", &["--random", "0.03", "--seed", "8"]));

    gen("s.pgm", &["--scratches", "3", "--width", "4", "--seed", "3"]);
    let mask = read_image(&dir.path().join("s.pgm")).unwrap();
    let parts = components(&mask);
    assert!((1..=3).contains(&parts), "{parts} components");

    let out = tvspline(dir.path(), &["mask", "--size", "40x50", "--random", "1.0"]);
    assert_eq!(code(&out), 1);
}

/// 4-connected components of the nonzero pixels.
fn components(mask: &PixelImage) -> usize {
    let (h, w) = (mask.height(), mask.width());
    let mut seen = vec![false; h * w];
    let mut count = 0;
    for start in 0..h * w {
        if seen[start] || mask.data()[start] == 0.0 {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (r, c) = (i / w, i % w);
            let mut push = |j: usize| {
                if !seen[j] && mask.data()[j] != 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                push(i - w);
            }
            if r + 1 < h {
                push(i + w);
            }
            if c > 0 {
                push(i - 1);
            }
            if c + 1 < w {
                push(i + 1);
            }
        }
    }
    count
}

#[test]
fn non_convergence_writes_outputs_and_exits_4() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 24, 1);
    let out = tvspline(
        dir.path(),
        &["inpaint", "a.pgm", "--random", "0.05", "--iters", "2", "--out", "o"],
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(dir.path().join("o/a-inpainted.pgm").exists());
    let side = json(&dir.path().join("o/a-inpainted.json"));
    assert_eq!(side["converged"], false);
    assert_eq!(side["iterations"], 2);
    assert!(side["residual"].as_f64().unwrap() > 1e-6);
    assert!(side["objective"].as_f64().unwrap() > 0.0);

    let out = tvspline(
        dir.path(),
        &[
            "inpaint",
            "a.pgm",
            "--random",
            "0.05",
            "--iters",
            "2",
            "--out",
            "o",
            "--allow-unconverged",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn inpainting_keeps_known_pixels() {
    let dir = TempDir::new().unwrap();
    let path = write_cartoon(dir.path(), "a.pgm", 32, 4);
    let out = tvspline(
        dir.path(),
        &[
            "inpaint",
            "a.pgm",
            "--random",
            "0.05",
            "--order",
            "3",
            "--allow-unconverged",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let input = read_image(&path).unwrap();
    let output = read_image(&dir.path().join("o/a-inpainted.pgm")).unwrap();
    let mask = read_image(&dir.path().join("o/a-mask.png")).unwrap();
    let unknown = mask.data().iter().filter(|&&v| v != 0.0).count();
    assert_eq!(unknown, 51);
    for i in 0..input.len() {
        if mask.data()[i] == 0.0 {
            assert_eq!(input.data()[i], output.data()[i], "pixel {i}");
        }
    }
    let side = json(&dir.path().join("o/a-inpainted.json"));
    assert_eq!(side["order"], 3);
    assert_eq!(side["unknown_pixels"], 51);
    assert!(side["snr_db"].as_f64().unwrap() > 20.0);
}

#[test]
fn constant_image_reports_infinite_snr() {
    let dir = TempDir::new().unwrap();
    write_image(&dir.path().join("flat.pgm"), &PixelImage::filled(&[20, 20], 77.0)).unwrap();
    let out = tvspline(dir.path(), &["inpaint", "flat.pgm", "--scratches", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let output = read_image(&dir.path().join("flat-inpainted.pgm")).unwrap();
    assert!(output.data().iter().all(|&v| v == 77.0));
    let side = json(&dir.path().join("flat-inpainted.json"));
    assert_eq!(side["snr_infinite"], true);
    assert!(side["snr_db"].is_null());
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 24, 1);
    std::fs::write(
        dir.path().join("run.conf"),
        "# test config\niters = 3\nrandom = 0.05\nallow_unconverged = true\nout = from-config\n",
    )
    .unwrap();
    let out = tvspline(dir.path(), &["inpaint", "a.pgm", "--config", "run.conf"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&dir.path().join("from-config/a-inpainted.json"))["iterations"], 3);

    let out = tvspline(
        dir.path(),
        &[
            "inpaint", "a.pgm", "--config", "run.conf", "--iters", "5", "--out", "cli",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&dir.path().join("cli/a-inpainted.json"))["iterations"], 5);

    std::fs::write(dir.path().join("bad.conf"), "iters 3\n").unwrap();
    let out = tvspline(dir.path(), &["inpaint", "a.pgm", "--config", "bad.conf"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 16, 1);
    let run = |args: &[&str]| {
        Command::new(BIN)
            .args(args)
            .current_dir(dir.path())
            .env("TVSPLINE_OUT", "env-out")
            .output()
            .unwrap()
    };
    let out = run(&["inpaint", "a.pgm", "--random", "0.05", "--allow-unconverged"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("env-out/a-inpainted.pgm").exists());

    std::fs::write(dir.path().join("c.conf"), "out = conf-out\n").unwrap();
    let out = run(&[
        "inpaint",
        "a.pgm",
        "--random",
        "0.05",
        "--allow-unconverged",
        "--config",
        "c.conf",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("conf-out/a-inpainted.pgm").exists());
}

#[test]
fn denoise_without_noise_returns_the_input() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 24, 1);
    let out = tvspline(dir.path(), &["denoise", "a.pgm", "--noise-sigma", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let side = json(&dir.path().join("a-denoised.json"));
    assert!(side["snr_infinite"] == true || side["snr_db"].as_f64().unwrap() > 40.0);
    assert_eq!(side["mode"], "relaxed");
}

#[test]
fn denoise_sweep_writes_table() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 32, 1);
    let out = tvspline(
        dir.path(),
        &[
            "denoise",
            "a.pgm",
            "--noise-sigma",
            "10",
            "--salt-pepper",
            "0.2",
            "--sweep",
            "1,10,100",
            "--iters",
            "40",
            "--allow-unconverged",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut reader = csv::Reader::from_path(dir.path().join("a-sweep.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["epsilon", "snr_db", "variance_ratio", "iters", "residual", "wall_ms"]
    );
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // The smallest weight flattens the image.
    assert!(rows[0][2] < 0.05, "variance ratio {}", rows[0][2]);
    let best = rows.iter().map(|r| r[1]).fold(f64::NEG_INFINITY, f64::max);
    let side = json(&dir.path().join("a-denoised.json"));
    assert!((side["snr_db"].as_f64().unwrap() - best).abs() < 1e-9 * best.abs());
    assert!(dir.path().join("a-noisy.pgm").exists());
}

#[test]
fn invalid_epsilon_is_rejected() {
    let dir = TempDir::new().unwrap();
    write_cartoon(dir.path(), "a.pgm", 16, 1);
    let out = tvspline(dir.path(), &["denoise", "a.pgm", "--epsilon=-1"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let out = tvspline(dir.path(), &["inpaint", "a.pgm", "--random", "0.1", "--epsilon", "0"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}
