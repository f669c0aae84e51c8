use std::f32::consts::PI;

use super::{into_result, GlareSpec};
use crate::error::Result;
use crate::imagecore::{Canvas, EncodedImage, PixelRect, Point};

/// Glare opacity at the middle of the vanishing sector.
pub const VANISH_FLOOR: f32 = 0.2;

/// Wraps an angle difference into `[0, pi]`.
fn angular_distance(a: f32, b: f32) -> f32 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

impl GlareSpec {
    /// Opacity of the feathered vanishing-corner mask at angle `phi`.
    pub fn vanishing_opacity(&self, phi: f32) -> f32 {
        if self.vanishing_angle <= 0.0 {
            return 1.0;
        }
        let half = self.vanishing_angle * 0.5;
        let d = angular_distance(phi, self.vanishing_direction);
        if d <= half {
            VANISH_FLOOR
        } else if d < half + self.vanishing_feather {
            let s = (d - half) / self.vanishing_feather;
            VANISH_FLOOR + (1.0 - VANISH_FLOOR) * 0.5 * (1.0 - (PI * s).cos())
        } else {
            1.0
        }
    }
}

/// Radial gradient through the glare's colour curve: a pixel at distance
/// `d < radius` from the source gets `curve(d / radius)`.
pub fn render_glare(spec: &GlareSpec, source: Point, canvas: Canvas) -> Result<EncodedImage> {
    into_result(|out| spec.check("glare", out))?;
    let (w, h) = (canvas.width as usize, canvas.height as usize);
    let rect = PixelRect::around(source, spec.radius, w, h);
    EncodedImage::from_fn_in(w, h, 3, rect, |x, y, px| {
        let dx = x as f32 - source.x;
        let dy = y as f32 - source.y;
        let d = (dx * dx + dy * dy).sqrt();
        if d >= spec.radius {
            return;
        }
        let rgb = spec.curve.eval(d / spec.radius);
        let opacity = if d > 0.0 {
            spec.vanishing_opacity(dy.atan2(dx))
        } else {
            1.0
        };
        for c in 0..3 {
            px[c] = rgb[c] * opacity;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures;
    use super::*;

    #[test]
    fn center_and_support() {
        let spec = fixtures::glare(20.0);
        let img = render_glare(&spec, Point::new(30.0, 30.0), Canvas::new(64, 64)).unwrap();
        assert_eq!(img.pixel(30, 30), &spec.curve.eval(0.0));
        assert_eq!(img.pixel(50, 30), &[0.0; 3]);
        let outside = (0..64)
            .flat_map(|y| (0..64).map(move |x| (x, y)))
            .filter(|&(x, y)| Point::new(x as f32, y as f32).distance(Point::new(30.0, 30.0)) >= 20.0);
        for (x, y) in outside {
            assert_eq!(img.pixel(x, y), &[0.0; 3]);
        }
    }

    #[test]
    fn monotone_for_falling_curve() {
        let spec = fixtures::glare(25.0);
        let img = render_glare(&spec, Point::new(32.0, 32.0), Canvas::new(64, 64)).unwrap();
        for x in 32..63 {
            for c in 0..3 {
                assert!(img.get(x + 1, 32, c) <= img.get(x, 32, c));
            }
        }
    }

    #[test]
    fn vanishing_sector_dims_one_side() {
        let mut spec = fixtures::glare(30.0);
        spec.vanishing_angle = 0.6;
        spec.vanishing_direction = 0.0;
        spec.vanishing_feather = 0.3;
        let img = render_glare(&spec, Point::new(40.0, 40.0), Canvas::new(80, 80)).unwrap();
        let plain = render_glare(&fixtures::glare(30.0), Point::new(40.0, 40.0), Canvas::new(80, 80)).unwrap();
        // along +x: floored
        assert!((img.get(50, 40, 0) - plain.get(50, 40, 0) * VANISH_FLOOR).abs() < 1e-6);
        // along -x: untouched
        assert_eq!(img.get(30, 40, 0), plain.get(30, 40, 0));
        assert_eq!(img.pixel(40, 40), plain.pixel(40, 40));
    }

    #[test]
    fn feather_is_continuous() {
        let mut spec = fixtures::glare(30.0);
        spec.vanishing_angle = 1.0;
        spec.vanishing_feather = 0.4;
        let mut prev = spec.vanishing_opacity(0.0);
        for i in 1..=400 {
            let o = spec.vanishing_opacity(i as f32 * 0.005);
            assert!(o >= prev && o - prev < 0.02);
            prev = o;
        }
        assert_eq!(prev, 1.0);
    }
}
