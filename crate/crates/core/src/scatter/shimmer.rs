use std::f32::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{into_result, ShimmerSpec};
use crate::error::Result;
use crate::imagecore::{fractal_noise_at, radial_blur, screen, Canvas, EncodedImage, PixelRect, Point};

/// Fraction of the spike spacing a spike's angle may be jittered by.
const ANGLE_JITTER: f32 = 0.1;
/// Angular sigma of one spike, as a fraction of the spacing.
const SPIKE_WIDTH: f32 = 0.12;
const NOISE_SEED_SALT: u64 = 0x5348_494D_4D45_5221;

/// `(angle, length factor)` for every spike, from the jitter seed.
pub fn spike_angles(spec: &ShimmerSpec) -> Vec<(f32, f32)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.angular_jitter_seed);
    let n = spec.spike_count.max(1);
    let spacing = TAU / n as f32;
    let phase = rng.random_range(0.0..spacing);
    (0..n)
        .map(|k| {
            let jitter = rng.random_range(-ANGLE_JITTER..=ANGLE_JITTER) * spacing;
            let len = rng.random_range(0.7..=1.0f32);
            (phase + k as f32 * spacing + jitter, len)
        })
        .collect()
}

fn angular_distance(a: f32, b: f32) -> f32 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Spiky radial lobes plus a radially blurred fractal-noise patch, screen
/// blended. Both are confined to `radius`.
pub fn render_shimmer(spec: &ShimmerSpec, source: Point, canvas: Canvas) -> Result<EncodedImage> {
    into_result(|out| spec.check("shimmer", out))?;
    let (w, h) = (canvas.width as usize, canvas.height as usize);
    let radius = spec.radius;
    let rect = PixelRect::around(source, radius, w, h);
    let spikes = spike_angles(spec);
    let sigma = SPIKE_WIDTH * TAU / spec.spike_count as f32;
    let window = |x: f32, y: f32| {
        let r = ((x - source.x).powi(2) + (y - source.y).powi(2)).sqrt();
        (1.0 - r / radius).max(0.0)
    };

    // Noise patch over the bounding box only; its content never leaves the
    // radius, so blurring the crop is exact.
    let noise = if rect.is_empty() || spec.noise_intensity == 0.0 {
        None
    } else {
        let (bw, bh) = (rect.x1 - rect.x0, rect.y1 - rect.y0);
        let seed = spec.angular_jitter_seed ^ NOISE_SEED_SALT;
        let base_scale = (radius / 6.0).max(2.0);
        let patch = EncodedImage::from_fn(bw, bh, 1, |x, y, o| {
            let (gx, gy) = ((x + rect.x0) as f32, (y + rect.y0) as f32);
            o[0] = spec.noise_intensity
                * fractal_noise_at(gx, gy, spec.noise_octaves, base_scale, seed)
                * window(gx, gy);
        })?;
        let local = Point::new(source.x - rect.x0 as f32, source.y - rect.y0 as f32);
        Some(radial_blur(&patch, local, spec.noise_radial_blur)?)
    };

    EncodedImage::from_fn_in(w, h, 3, rect, |x, y, px| {
        let (fx, fy) = (x as f32, y as f32);
        let win = window(fx, fy);
        if win <= 0.0 {
            return;
        }
        let (dx, dy) = (fx - source.x, fy - source.y);
        let r = (dx * dx + dy * dy).sqrt();
        let phi = dy.atan2(dx);
        let mut lobes = 0.0f32;
        for &(angle, len) in &spikes {
            let reach = (1.0 - r / (radius * len)).max(0.0);
            if reach == 0.0 {
                continue;
            }
            let d = angular_distance(phi, angle);
            lobes += (-(d * d) / (2.0 * sigma * sigma)).exp() * reach * reach;
        }
        let spike = spec.intensity * lobes.min(1.0);
        let n = noise
            .as_ref()
            .map(|p| p.get(x - rect.x0, y - rect.y0, 0) * win)
            .unwrap_or(0.0);
        for c in 0..3 {
            px[c] = screen(spike * spec.rgb[c], n * spec.rgb[c]);
        }
    })
}


#[cfg(test)]
mod tests {
    use super::super::fixtures;
    use super::*;

    fn canvas() -> Canvas {
        Canvas::new(160, 160)
    }

    fn center() -> Point {
        Point::new(80.0, 80.0)
    }

    #[test]
    fn deterministic_in_seed() {
        let a = render_shimmer(&fixtures::shimmer(9), center(), canvas()).unwrap();
        let b = render_shimmer(&fixtures::shimmer(9), center(), canvas()).unwrap();
        let c = render_shimmer(&fixtures::shimmer(10), center(), canvas()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_intensity_leaves_bounded_noise() {
        let mut spec = fixtures::shimmer(4);
        spec.intensity = 0.0;
        spec.noise_intensity = 0.5;
        let img = render_shimmer(&spec, center(), canvas()).unwrap();
        assert!(img.max_value() > 0.0);
        for y in 0..160 {
            for x in 0..160 {
                if Point::new(x as f32, y as f32).distance(center()) >= spec.radius {
                    assert_eq!(img.pixel(x, y), &[0.0; 3]);
                }
            }
        }
    }

    #[test]
    fn spikes_are_near_regular() {
        let spec = fixtures::shimmer(21);
        let a = spike_angles(&spec);
        let spacing = TAU / spec.spike_count as f32;
        for w in a.windows(2) {
            let gap = w[1].0 - w[0].0;
            assert!((gap - spacing).abs() <= 2.0 * ANGLE_JITTER * spacing + 1e-5);
        }
    }
}
