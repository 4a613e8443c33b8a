//! Pixel images: rendering splines, mask and noise generation, SNR, and
//! 8-bit grayscale file I/O (binary PGM, PNG, run-length mask text).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::basis::TensorKnotGrid;
use crate::collocation::{InpaintingMask, PixelGrid};
use crate::error::{Error, Result};

/// Real-valued image, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelImage {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl PixelImage {
    pub fn new(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if data.len() != total || dims.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for an image of shape {dims:?}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("image contains non-finite values".into()));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn filled(dims: &[usize], value: f64) -> Self {
        Self {
            dims: dims.to_vec(),
            data: vec![value; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Rows (axis 0).
    pub fn height(&self) -> usize {
        self.dims[0]
    }

    /// Columns (last axis).
    pub fn width(&self) -> usize {
        self.dims[self.dims.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width() + col]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    /// Values clamped to `[0, 255]` and rounded half away from zero.
    pub fn quantized(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }
}

/// Clamps to `[0, 255]` and rounds half away from zero.
pub fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Samples the spline `s = B f` at every pixel center.
pub fn render(grid: &TensorKnotGrid, coeffs: &[f64], pixels: &PixelGrid) -> Result<PixelImage> {
    if coeffs.len() != grid.num_coeffs() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a space of dimension {}",
            coeffs.len(),
            grid.num_coeffs()
        )));
    }
    let d = pixels.dim();
    let centers: Vec<Vec<f64>> = (0..d).map(|j| pixels.centers(j)).collect();
    let mut data = Vec::with_capacity(pixels.num_pixels());
    let mut x = vec![0.0; d];
    for flat in 0..pixels.num_pixels() {
        let beta = pixels.unflat(flat);
        for j in 0..d {
            x[j] = centers[j][beta[j]];
        }
        data.push(grid.eval_spline(coeffs, &x)?);
    }
    PixelImage::new(pixels.counts(), data)
}

/// Which pixels a generated mask removes.
#[derive(Debug, Clone, PartialEq)]
pub enum MaskKind {
    /// `⌊fraction · #pixels⌋` distinct interior pixels.
    Random { fraction: f64 },
    /// `count` random straight segments dilated by a `width × width` square.
    Scratches { count: usize, width: usize },
    /// Mask image read from disk (nonzero = unknown) or a run-length list.
    Bitmap { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub kind: MaskKind,
    pub seed: u64,
}

impl MaskSpec {
    pub fn random(fraction: f64, seed: u64) -> Self {
        Self {
            kind: MaskKind::Random { fraction },
            seed,
        }
    }

    pub fn scratches(count: usize, width: usize, seed: u64) -> Self {
        Self {
            kind: MaskKind::Scratches { count, width },
            seed,
        }
    }
}

fn interior_pixels(dims: &[usize]) -> Vec<usize> {
    let total: usize = dims.iter().product();
    (0..total)
        .filter(|&f| {
            crate::basis::unflatten(f, dims)
                .iter()
                .zip(dims)
                .all(|(&b, &c)| b > 0 && b + 1 < c)
        })
        .collect()
}

/// Generates the mask described by `spec` for an image of shape `dims`.
pub fn make_mask(spec: &MaskSpec, dims: &[usize]) -> Result<InpaintingMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total: usize = dims.iter().product();
    let interior = interior_pixels(dims);
    let unknown = match &spec.kind {
        MaskKind::Random { fraction } => {
            if !(*fraction > 0.0 && *fraction < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "mask fraction {fraction} must lie in (0, 1)"
                )));
            }
            let count = (fraction * total as f64).floor() as usize;
            if count >= interior.len() {
                return Err(Error::InvalidMask(format!(
                    "{count} unknown pixels leave no known interior pixel"
                )));
            }
            let mut unknown = vec![false; total];
            for i in sample(&mut rng, interior.len(), count) {
                unknown[interior[i]] = true;
            }
            unknown
        }
        MaskKind::Scratches { count, width } => {
            if dims.len() != 2 {
                return Err(Error::InvalidParameter("scratch masks need a 2-d image".into()));
            }
            if *width == 0 {
                return Err(Error::InvalidParameter("scratch width must be positive".into()));
            }
            if interior.is_empty() {
                return Err(Error::InvalidMask("image has no interior pixels".into()));
            }
            let (h, w) = (dims[0] as i64, dims[1] as i64);
            let mut unknown = vec![false; total];
            let lo = -((*width as i64 - 1) / 2);
            let hi = *width as i64 / 2;
            for _ in 0..*count {
                let p0 = interior[rng.random_range(0..interior.len())];
                let p1 = interior[rng.random_range(0..interior.len())];
                let (r0, c0) = ((p0 / dims[1]) as i64, (p0 % dims[1]) as i64);
                let (r1, c1) = ((p1 / dims[1]) as i64, (p1 % dims[1]) as i64);
                for (r, c) in line_pixels(r0, c0, r1, c1) {
                    for dr in lo..=hi {
                        for dc in lo..=hi {
                            let (rr, cc) = (r + dr, c + dc);
                            if rr > 0 && cc > 0 && rr < h - 1 && cc < w - 1 {
                                unknown[(rr * w + cc) as usize] = true;
                            }
                        }
                    }
                }
            }
            if interior.iter().all(|&i| unknown[i]) {
                return Err(Error::InvalidMask("scratches cover every interior pixel".into()));
            }
            unknown
        }
        MaskKind::Bitmap { path } => return read_mask(path, dims),
    };
    InpaintingMask::new(dims, unknown)
}

/// Bresenham rasterization of the segment between two pixels.
fn line_pixels(r0: i64, c0: i64, r1: i64, c1: i64) -> Vec<(i64, i64)> {
    let (dr, dc) = ((r1 - r0).abs(), -(c1 - c0).abs());
    let (sr, sc) = (if r0 < r1 { 1 } else { -1 }, if c0 < c1 { 1 } else { -1 });
    let (mut r, mut c, mut err) = (r0, c0, dr + dc);
    let mut out = Vec::new();
    loop {
        out.push((r, c));
        if r == r1 && c == c1 {
            return out;
        }
        let e2 = 2 * err;
        if e2 >= dc {
            err += dc;
            r += sr;
        }
        if e2 <= dr {
            err += dr;
            c += sc;
        }
    }
}

/// Gaussian noise followed by salt-and-pepper corruption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the additive Gaussian noise, in intensity units.
    pub sigma: f64,
    /// Fraction of all pixels set to 0 or 255 (interior pixels only).
    pub salt_pepper: f64,
    pub seed: u64,
}

/// Corrupts `image` and returns it with the mask of interior pixels whose
/// value is exactly 0 or 255.
pub fn add_noise(image: &PixelImage, spec: &NoiseSpec) -> Result<(PixelImage, InpaintingMask)> {
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma {} is invalid",
            spec.sigma
        )));
    }
    if !(0.0..1.0).contains(&spec.salt_pepper) {
        return Err(Error::InvalidParameter(format!(
            "salt-and-pepper fraction {} must lie in [0, 1)",
            spec.salt_pepper
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = image.clone();
    if spec.sigma > 0.0 {
        let normal = Normal::new(0.0, spec.sigma).expect("finite sigma");
        for v in out.data_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let interior = interior_pixels(image.dims());
    let count = ((spec.salt_pepper * image.len() as f64).floor() as usize).min(interior.len());
    for i in sample(&mut rng, interior.len(), count) {
        out.data_mut()[interior[i]] = if rng.random_bool(0.5) { 255.0 } else { 0.0 };
    }
    let mask = extreme_value_mask(&out)?;
    Ok((out, mask))
}

/// Interior pixels whose value is exactly 0 or 255.
pub fn extreme_value_mask(image: &PixelImage) -> Result<InpaintingMask> {
    let interior = interior_pixels(image.dims());
    let mut unknown = vec![false; image.len()];
    for i in interior {
        let v = image.data()[i];
        if v == 0.0 || v == 255.0 {
            unknown[i] = true;
        }
    }
    InpaintingMask::new(image.dims(), unknown)
}

/// `20 log₁₀(‖ref‖ / ‖ref − rec‖)` in dB; `+∞` when the images agree.
pub fn snr(reference: &PixelImage, reconstruction: &PixelImage) -> Result<f64> {
    if reference.dims() != reconstruction.dims() {
        return Err(Error::DimensionMismatch(format!(
            "reference {:?} vs reconstruction {:?}",
            reference.dims(),
            reconstruction.dims()
        )));
    }
    Ok(snr_slices(reference.data(), reconstruction.data()))
}

pub fn snr_slices(reference: &[f64], reconstruction: &[f64]) -> f64 {
    let signal = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    let error = reference
        .iter()
        .zip(reconstruction)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if error == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (signal / error).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Pgm,
    Png,
    MaskText,
}

fn format_for_write(path: &Path) -> Format {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("png") => Format::Png,
        Some("txt") | Some("rle") => Format::MaskText,
        _ => Format::Pgm,
    }
}

fn sniff(bytes: &[u8]) -> Option<Format> {
    if bytes.starts_with(b"\x89PNG") {
        Some(Format::Png)
    } else if bytes.starts_with(b"P5") {
        Some(Format::Pgm)
    } else if bytes.starts_with(b"mask") || bytes.starts_with(b"#") {
        Some(Format::MaskText)
    } else {
        None
    }
}

/// Reads an 8-bit grayscale PGM (P5) or PNG.
pub fn read_image(path: &Path) -> Result<PixelImage> {
    let bytes = std::fs::read(path)?;
    match sniff(&bytes) {
        Some(Format::Png) => decode_png(&bytes),
        Some(Format::Pgm) => decode_pgm(&bytes),
        _ => Err(Error::UnsupportedFormat(format!(
            "{} is neither binary PGM nor PNG",
            path.display()
        ))),
    }
}

/// Reads an image and checks its shape against `pixels`.
pub fn read_image_for(path: &Path, pixels: &PixelGrid) -> Result<PixelImage> {
    let img = read_image(path)?;
    if img.dims() != pixels.counts() {
        return Err(Error::DimensionMismatch(format!(
            "{} has shape {:?}, expected {:?}",
            path.display(),
            img.dims(),
            pixels.counts()
        )));
    }
    Ok(img)
}

/// Writes PNG for `.png` paths and binary PGM otherwise.
pub fn write_image(path: &Path, image: &PixelImage) -> Result<()> {
    if image.dims().len() != 2 {
        return Err(Error::UnsupportedFormat("only 2-d images can be written".into()));
    }
    let bytes = image.quantized();
    match format_for_write(path) {
        Format::Png => encode_png(path, image.height(), image.width(), &bytes),
        _ => encode_pgm(path, image.height(), image.width(), &bytes),
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<PixelImage> {
    // header: magic, width, height, maxval separated by whitespace and comments
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::UnsupportedFormat("truncated PGM header".into()));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).unwrap_or("").to_string());
    }
    pos += 1; // single whitespace before the raster
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::UnsupportedFormat(format!("bad PGM header field {s:?}")))
    };
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(Error::UnsupportedFormat(format!("PGM maxval {maxval} is not 8-bit")));
    }
    if w == 0 || h == 0 {
        return Err(Error::UnsupportedFormat("empty PGM image".into()));
    }
    let raster = bytes
        .get(pos..pos + w * h)
        .ok_or_else(|| Error::UnsupportedFormat("truncated PGM raster".into()))?;
    let scale = 255.0 / maxval as f64;
    let data = raster
        .iter()
        .map(|&b| {
            if maxval == 255 {
                b as f64
            } else {
                (b as f64 * scale).round()
            }
        })
        .collect();
    PixelImage::new(&[h, w], data)
}

fn encode_pgm(path: &Path, h: usize, w: usize, bytes: &[u8]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "P5\n{w} {h}\n255\n")?;
    out.write_all(bytes)?;
    out.flush()?;
    Ok(())
}

fn decode_png(bytes: &[u8]) -> Result<PixelImage> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::UnsupportedFormat(format!("PNG: {e}")))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::UnsupportedFormat(format!("PNG: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "PNG color type {other:?} is not grayscale"
            )))
        }
    };
    let data = buf[..info.line_size * h]
        .chunks(info.line_size)
        .flat_map(|line| line[..w * channels].chunks(channels).map(|px| px[0] as f64))
        .collect();
    PixelImage::new(&[h, w], data)
}

fn encode_png(path: &Path, h: usize, w: usize, bytes: &[u8]) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(file, w as u32, h as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::UnsupportedFormat(format!("PNG: {e}")))?;
    writer
        .write_image_data(bytes)
        .map_err(|e| Error::UnsupportedFormat(format!("PNG: {e}")))?;
    writer
        .finish()
        .map_err(|e| Error::UnsupportedFormat(format!("PNG: {e}")))?;
    Ok(())
}

/// Reads a mask: a grayscale image (nonzero = unknown) or a run-length list.
pub fn read_mask(path: &Path, dims: &[usize]) -> Result<InpaintingMask> {
    let mut head = [0u8; 8];
    let n = File::open(path)?.read(&mut head)?;
    let unknown = match sniff(&head[..n]) {
        Some(Format::MaskText) => read_mask_text(path)?,
        _ => {
            let img = read_image(path)?;
            if img.dims() != dims {
                return Err(Error::DimensionMismatch(format!(
                    "mask {} has shape {:?}, image has {dims:?}",
                    path.display(),
                    img.dims()
                )));
            }
            return InpaintingMask::new(dims, img.data().iter().map(|&v| v != 0.0).collect());
        }
    };
    if unknown.0 != dims {
        return Err(Error::DimensionMismatch(format!(
            "mask {} has shape {:?}, image has {dims:?}",
            path.display(),
            unknown.0
        )));
    }
    InpaintingMask::new(dims, unknown.1)
}

/// Parses the run-length text format:
///
/// ```text
/// mask <rows> <cols>
/// <first flat index> <run length>
/// ```
///
/// Lines starting with `#` are comments.
fn read_mask_text(path: &Path) -> Result<(Vec<usize>, Vec<bool>)> {
    let reader = BufReader::new(File::open(path)?);
    let bad = |msg: String| Error::UnsupportedFormat(format!("{}: {msg}", path.display()));
    let mut dims: Option<Vec<usize>> = None;
    let mut unknown = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match &dims {
            None => {
                if parts.next() != Some("mask") {
                    return Err(bad("missing `mask <rows> <cols>` header".into()));
                }
                let shape = parts
                    .map(|p| p.parse::<usize>().map_err(|_| bad(format!("bad dimension {p:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                if shape.is_empty() || shape.contains(&0) {
                    return Err(bad("empty mask shape".into()));
                }
                unknown = vec![false; shape.iter().product()];
                dims = Some(shape);
            }
            Some(_) => {
                let nums = parts
                    .map(|p| p.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad(format!("line {}: expected `start length`", lineno + 1)))?;
                let [start, len] = nums[..] else {
                    return Err(bad(format!("line {}: expected `start length`", lineno + 1)));
                };
                if start + len > unknown.len() {
                    return Err(bad(format!("line {}: run exceeds the image", lineno + 1)));
                }
                unknown[start..start + len].iter_mut().for_each(|u| *u = true);
            }
        }
    }
    let dims = dims.ok_or_else(|| bad("empty mask file".into()))?;
    Ok((dims, unknown))
}

/// Writes a mask as an image (unknown = 255) or, for `.txt`/`.rle`, as
/// run-length text.
pub fn write_mask(path: &Path, mask: &InpaintingMask) -> Result<()> {
    if format_for_write(path) == Format::MaskText {
        let mut out = BufWriter::new(File::create(path)?);
        let shape: Vec<String> = mask.dims().iter().map(usize::to_string).collect();
        writeln!(out, "mask {}", shape.join(" "))?;
        let flags = mask.as_slice();
        let mut i = 0;
        while i < flags.len() {
            if flags[i] {
                let start = i;
                while i < flags.len() && flags[i] {
                    i += 1;
                }
                writeln!(out, "{start} {}", i - start)?;
            } else {
                i += 1;
            }
        }
        out.flush()?;
        return Ok(());
    }
    let data = mask.as_slice().iter().map(|&u| if u { 255.0 } else { 0.0 }).collect();
    write_image(path, &PixelImage::new(mask.dims(), data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantization() {
        assert_eq!(quantize(300.0), 255);
        assert_eq!(quantize(-4.0), 0);
        assert_eq!(quantize(2.5), 3);
        assert_eq!(quantize(2.49), 2);
    }

    #[test]
    fn snr_definition() {
        let r = PixelImage::new(&[2, 2], vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        assert_eq!(snr(&r, &r).unwrap(), f64::INFINITY);
        let norm = r.data().iter().map(|v| v * v).sum::<f64>().sqrt();
        let e = norm / 10.0 / 2.0;
        let rec = PixelImage::new(&[2, 2], r.data().iter().map(|v| v + e).collect()).unwrap();
        assert_abs_diff_eq!(snr(&r, &rec).unwrap(), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn random_mask_count() {
        let m = make_mask(&MaskSpec::random(0.03, 1), &[128, 128]).unwrap();
        assert_eq!(m.num_unknown(), 491);
        assert!(make_mask(&MaskSpec::random(1.0, 1), &[16, 16]).is_err());
    }

    #[test]
    fn bresenham_endpoints() {
        let px = line_pixels(1, 1, 4, 9);
        assert_eq!(px.first(), Some(&(1, 1)));
        assert_eq!(px.last(), Some(&(4, 9)));
        assert_eq!(px.len(), 9);
    }

    #[test]
    fn noise_identity() {
        let img = PixelImage::new(&[4, 4], (0..16).map(|v| 10.0 + v as f64).collect()).unwrap();
        let (out, mask) = add_noise(
            &img,
            &NoiseSpec {
                sigma: 0.0,
                salt_pepper: 0.0,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(out, img);
        assert!(mask.is_empty());
    }
}
