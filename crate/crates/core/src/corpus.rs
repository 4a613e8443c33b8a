//! Deterministic cartoon test images: discs, boxes and triangles in flat
//! colors on a flat background. Intensities stay inside `[45, 205]` so salt
//! and pepper noise is distinguishable from image content.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imaging::PixelImage;

#[derive(Debug, Clone, Copy)]
enum Shape {
    Disc { cx: f64, cy: f64, r: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Triangle { p: [(f64, f64); 3] },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disc { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
            Shape::Triangle { p } => {
                let side = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
                let (s0, s1, s2) = (side(p[0], p[1]), side(p[1], p[2]), side(p[2], p[0]));
                (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0) || (s0 <= 0.0 && s1 <= 0.0 && s2 <= 0.0)
            }
        }
    }
}

/// Piecewise-constant image of `size × size` pixels.
pub fn cartoon(size: usize, seed: u64) -> PixelImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let palette = [45.0, 85.0, 125.0, 165.0, 205.0];
    let background = (100.0 + rng.random_range(-10.0f64..10.0)).round();
    let mut shapes = Vec::new();
    for i in 0..6 {
        let shape = match i % 3 {
            0 => Shape::Disc {
                cx: rng.random_range(0.2..0.8),
                cy: rng.random_range(0.2..0.8),
                r: rng.random_range(0.08..0.22),
            },
            1 => {
                let (x0, y0) = (rng.random_range(0.05..0.6), rng.random_range(0.05..0.6));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.random_range(0.15..0.35),
                    y1: y0 + rng.random_range(0.15..0.35),
                }
            }
            _ => {
                let c = (rng.random_range(0.25..0.75), rng.random_range(0.25..0.75));
                let mut p = [(0.0, 0.0); 3];
                for (k, v) in p.iter_mut().enumerate() {
                    let a = rng.random_range(0.0..0.6) + k as f64 * 2.1;
                    let r = rng.random_range(0.12..0.25);
                    *v = (c.0 + r * a.cos(), c.1 + r * a.sin());
                }
                Shape::Triangle { p }
            }
        };
        shapes.push((shape, palette[rng.random_range(0..palette.len())]));
    }
    let data = pixel_map(size, |x, y| {
        shapes
            .iter()
            .rev()
            .find(|(s, _)| s.contains(x, y))
            .map_or(background, |&(_, v)| v)
    });
    PixelImage::new(&[size, size], data).expect("finite image")
}

/// Evaluates `f` at the pixel centers of the unit square, `x` along columns.
fn pixel_map<F: FnMut(f64, f64) -> f64>(size: usize, mut f: F) -> Vec<f64> {
    let h = 1.0 / size as f64;
    let mut out = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            out.push(f((c as f64 + 0.5) * h, (r as f64 + 0.5) * h));
        }
    }
    out
}
