use std::f32::consts::PI;

use super::{into_result, Rgb, StreakSpec};
use crate::error::Result;
use crate::imagecore::{Canvas, EncodedImage, PixelRect, Point};

/// Half width at half maximum of a Gaussian in units of its sigma,
/// `sqrt(2 ln 2)`.
pub const HALF_MAX_PER_SIGMA: f32 = 1.177_410_0;

const STEP: f32 = 0.125;
/// Edge-blur kernels are truncated here, which also bounds the support.
const KERNEL_SIGMAS: f32 = 3.0;

/// Perpendicular profile, sampled every `STEP` pixels away from the ridge.
/// `pos` covers the sharp side (`v >= 0`), `neg` the soft side.
struct Profile {
    pos: Vec<Rgb>,
    neg: Vec<Rgb>,
}

impl Profile {
    fn build(spec: &StreakSpec) -> Self {
        let half = spec.width * 0.5;
        let core = |v: f32| -> Rgb {
            if v.abs() >= half {
                [0.0; 3]
            } else {
                spec.section_curve.eval(v.abs() / half)
            }
        };
        let side = |half_max: f32| -> Vec<Rgb> {
            let sigma = half_max / HALF_MAX_PER_SIGMA;
            if sigma <= 0.0 {
                let n = (half / STEP).ceil() as usize + 2;
                return (0..n).map(|i| core(i as f32 * STEP)).collect();
            }
            let reach = KERNEL_SIGMAS * sigma;
            let n = ((half + reach) / STEP).ceil() as usize + 2;
            let m = (half / STEP).ceil() as i64;
            let samples: Vec<(f32, Rgb)> = (-m..=m)
                .map(|j| {
                    let u = j as f32 * STEP;
                    (u, core(u))
                })
                .collect();
            let blurred: Vec<[f64; 3]> = (0..n)
                .map(|i| {
                    let v = i as f32 * STEP;
                    let mut acc = [0.0f64; 3];
                    for &(u, rgb) in &samples {
                        let d = v - u;
                        if d.abs() > reach {
                            continue;
                        }
                        let g = (-(d as f64).powi(2) / (2.0 * (sigma as f64).powi(2))).exp();
                        for c in 0..3 {
                            acc[c] += g * rgb[c] as f64;
                        }
                    }
                    acc
                })
                .collect();
            // Rescale so the ridge keeps its unblurred colour on both sides.
            let peak = core(0.0);
            blurred
                .iter()
                .map(|b| {
                    let mut out = [0.0f32; 3];
                    for c in 0..3 {
                        if blurred[0][c] > 0.0 {
                            out[c] = (b[c] / blurred[0][c] * peak[c] as f64) as f32;
                        }
                    }
                    out
                })
                .collect()
        };
        Self {
            pos: side(spec.sharp_side_blur),
            neg: side(spec.soft_side_blur),
        }
    }

    fn extent(&self) -> f32 {
        (self.pos.len().max(self.neg.len()) as f32) * STEP
    }

    fn at(&self, v: f32) -> Rgb {
        let lut = if v >= 0.0 { &self.pos } else { &self.neg };
        let f = v.abs() / STEP;
        let i = f.floor() as usize;
        if i + 1 >= lut.len() {
            return [0.0; 3];
        }
        let t = f - i as f32;
        let (a, b) = (lut[i], lut[i + 1]);
        [
            a[0] + (b[0] - a[0]) * t,
            a[1] + (b[1] - a[1]) * t,
            a[2] + (b[2] - a[2]) * t,
        ]
    }
}

/// A line segment through the source. Across the line the colour follows the
/// section curve with each edge blurred by its own Gaussian (the sharp side
/// lies toward `+normal`, where `normal` is the direction rotated a quarter
/// turn); along the line it follows the falloff curve.
pub fn render_streak(spec: &StreakSpec, source: Point, canvas: Canvas) -> Result<EncodedImage> {
    into_result(|out| spec.check("streak", out))?;
    let profile = Profile::build(spec);
    let theta = spec.direction.rem_euclid(PI);
    let (sin, cos) = theta.sin_cos();
    let half_len = spec.length * 0.5;
    let ext = profile.extent();

    let (w, h) = (canvas.width as usize, canvas.height as usize);
    let (rx, ry) = (
        half_len * cos.abs() + ext * sin.abs(),
        half_len * sin.abs() + ext * cos.abs(),
    );
    let rect = PixelRect::bounding(
        source.x - rx,
        source.y - ry,
        source.x + rx,
        source.y + ry,
        w,
        h,
    );
    EncodedImage::from_fn_in(w, h, 3, rect, |x, y, px| {
        let dx = x as f32 - source.x;
        let dy = y as f32 - source.y;
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        if u.abs() >= half_len {
            return;
        }
        let across = profile.at(v);
        let along = spec.falloff_curve.eval(u.abs() / half_len);
        for c in 0..3 {
            px[c] = across[c] * along[c];
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures;
    use super::*;

    fn canvas() -> Canvas {
        Canvas::new(200, 100)
    }

    fn source() -> Point {
        Point::new(100.0, 50.0)
    }

    fn column(img: &EncodedImage, x: usize) -> Vec<f32> {
        (0..img.height()).map(|y| img.get(x, y, 0)).collect()
    }

    #[test]
    fn ridge_passes_through_source() {
        let img = render_streak(&fixtures::streak(0.0), source(), canvas()).unwrap();
        for x in [70, 100, 130] {
            let col = column(&img, x);
            let arg = col
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(arg, 50);
        }
        let (mut m, mut my) = (0.0f64, 0.0f64);
        for y in 0..img.height() {
            for x in 0..img.width() {
                let v = img.get(x, y, 0) as f64;
                m += v;
                my += v * y as f64;
            }
        }
        assert!((my / m - 50.0).abs() < 1.0, "centroid {}", my / m);
    }

    #[test]
    fn sharp_side_is_narrower() {
        let img = render_streak(&fixtures::streak(0.0), source(), canvas()).unwrap();
        let col = column(&img, 100);
        let peak = col[50];
        let crossing = |dir: isize| {
            let mut k = 0isize;
            while col[(50 + dir * (k + 1)) as usize] >= peak * 0.5 {
                k += 1;
            }
            let a = col[(50 + dir * k) as usize];
            let b = col[(50 + dir * (k + 1)) as usize];
            k as f32 + (a - peak * 0.5) / (a - b)
        };
        let (sharp, soft) = (crossing(1), crossing(-1));
        assert!(sharp < soft, "sharp {sharp} soft {soft}");
    }

    #[test]
    fn opposite_directions_match() {
        let a = render_streak(&fixtures::streak(0.0), source(), canvas()).unwrap();
        let b = render_streak(&fixtures::streak(PI), source(), canvas()).unwrap();
        let max_diff = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f32::max);
        assert!(max_diff <= 1.0 / 65535.0);
    }

    #[test]
    fn support_is_bounded() {
        let spec = fixtures::streak(0.0);
        let img = render_streak(&spec, source(), canvas()).unwrap();
        let sigma = spec.soft_side_blur / HALF_MAX_PER_SIGMA;
        let bound = spec.width / 2.0 + KERNEL_SIGMAS * sigma + STEP;
        for y in 0..img.height() {
            for x in 0..img.width() {
                let (dx, dy) = (x as f32 - 100.0, y as f32 - 50.0);
                if dx.abs() >= spec.length / 2.0 || dy.abs() > bound {
                    assert_eq!(img.pixel(x, y), &[0.0; 3], "({x}, {y})");
                }
            }
        }
    }

    #[test]
    fn symmetric_blur_gives_symmetric_profile() {
        let mut spec = fixtures::streak(0.0);
        spec.sharp_side_blur = 2.0;
        spec.soft_side_blur = 2.0;
        let img = render_streak(&spec, source(), canvas()).unwrap();
        for k in 1..15 {
            assert_eq!(img.get(90, 50 + k, 1), img.get(90, 50 - k, 1));
        }
    }
}
