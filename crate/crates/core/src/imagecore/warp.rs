use serde::{Deserialize, Serialize};

use super::image::{Domain, Image, Point};
use crate::error::{Error, Result};

/// Geometric augmentation. Applied as flip, scale, shear, rotation (all
/// about a center) and finally translation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    /// Radians, counter-clockwise on screen.
    pub rotation: f32,
    /// Pixels.
    pub translation: (f32, f32),
    /// Horizontal shear angle in radians.
    pub shear: f32,
    pub scale: f32,
    pub flip_h: bool,
    pub flip_v: bool,
}

impl Default for AffineParams {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineParams {
    pub const fn identity() -> Self {
        Self {
            rotation: 0.0,
            translation: (0.0, 0.0),
            shear: 0.0,
            scale: 1.0,
            flip_h: false,
            flip_v: false,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::param("scale", format!("{} must be > 0", self.scale)));
        }
        Ok(())
    }

    /// Forward linear part `R * Sh * S * F` as a row-major 2x2 matrix.
    fn linear(&self) -> [[f64; 2]; 2] {
        let fx = if self.flip_h { -1.0 } else { 1.0 };
        let fy = if self.flip_v { -1.0 } else { 1.0 };
        let s = self.scale as f64;
        let t = (self.shear as f64).tan();
        let (sin, cos) = (self.rotation as f64).sin_cos();
        // Sh * S * F
        let a = [[s * fx, t * s * fy], [0.0, s * fy]];
        [
            [cos * a[0][0] - sin * a[1][0], cos * a[0][1] - sin * a[1][1]],
            [sin * a[0][0] + cos * a[1][0], sin * a[0][1] + cos * a[1][1]],
        ]
    }

    fn inverse_linear(&self) -> [[f64; 2]; 2] {
        let m = self.linear();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]
    }

    /// Where a source point lands.
    pub fn apply(&self, p: Point, center: Point) -> Point {
        let m = self.linear();
        let (dx, dy) = ((p.x - center.x) as f64, (p.y - center.y) as f64);
        Point::new(
            (center.x as f64 + self.translation.0 as f64 + m[0][0] * dx + m[0][1] * dy) as f32,
            (center.y as f64 + self.translation.1 as f64 + m[1][0] * dx + m[1][1] * dy) as f32,
        )
    }
}

/// Warps `img` about `center`, keeping its shape. Bilinear sampling; pixels
/// mapped from outside the source are zero.
pub fn affine_warp<D: Domain>(img: &Image<D>, p: &AffineParams, center: Point) -> Result<Image<D>> {
    affine_warp_into(img, p, center, img.width(), img.height(), center)
}

/// Warps into a canvas of a different size: `src_center` lands on
/// `dst_center` (before translation).
pub fn affine_warp_into<D: Domain>(
    img: &Image<D>,
    p: &AffineParams,
    src_center: Point,
    width: usize,
    height: usize,
    dst_center: Point,
) -> Result<Image<D>> {
    p.validate()?;
    if p.is_identity()
        && (width, height) == (img.width(), img.height())
        && src_center == dst_center
    {
        return Ok(img.clone());
    }
    let inv = p.inverse_linear();
    let c = img.channels();
    let ox = dst_center.x as f64 + p.translation.0 as f64;
    let oy = dst_center.y as f64 + p.translation.1 as f64;
    let (sx, sy) = (src_center.x as f64, src_center.y as f64);
    Image::<D>::from_fn(width, height, c, |x, y, out| {
        let dx = x as f64 - ox;
        let dy = y as f64 - oy;
        let u = (sx + inv[0][0] * dx + inv[0][1] * dy) as f32;
        let v = (sy + inv[1][0] * dx + inv[1][1] * dy) as f32;
        for (ch, o) in out.iter_mut().enumerate() {
            *o = img.sample_bilinear(u, v, ch);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::LinearImage;

    fn impulse(n: usize, x: usize, y: usize) -> LinearImage {
        let mut data = vec![0.0; n * n];
        data[y * n + x] = 1.0;
        LinearImage::new(n, n, 1, data).unwrap()
    }

    fn argmax(img: &LinearImage) -> (usize, usize) {
        let i = img
            .data()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        (i % img.width(), i / img.width())
    }

    #[test]
    fn identity_is_exact() {
        let img = LinearImage::from_fn(17, 9, 3, |x, y, o| {
            o.iter_mut().enumerate().for_each(|(c, v)| *v = (x * 7 + y * 3 + c) as f32 * 0.01)
        })
        .unwrap();
        let out = affine_warp(&img, &AffineParams::identity(), Point::new(8.0, 4.0)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn half_turn_reflects_point() {
        let img = impulse(33, 16 + 7, 16);
        let p = AffineParams {
            rotation: std::f32::consts::PI,
            ..AffineParams::identity()
        };
        let out = affine_warp(&img, &p, Point::new(16.0, 16.0)).unwrap();
        assert_eq!(argmax(&out), (16 - 7, 16));
        assert!(out.get(9, 16, 0) > 0.99);
    }

    #[test]
    fn translation_and_flip() {
        let img = impulse(21, 12, 10);
        let p = AffineParams {
            translation: (3.0, -2.0),
            flip_h: true,
            ..AffineParams::identity()
        };
        let out = affine_warp(&img, &p, Point::new(10.0, 10.0)).unwrap();
        assert_eq!(argmax(&out), (8 + 3, 10 - 2));
        assert_eq!(p.apply(Point::new(12.0, 10.0), Point::new(10.0, 10.0)), Point::new(11.0, 8.0));
    }

    #[test]
    fn rotation_conserves_blob_mass() {
        let n = 64;
        let c = 31.5;
        let img = LinearImage::from_fn(n, n, 1, |x, y, o| {
            let (dx, dy) = (x as f32 - c - 4.0, y as f32 - c + 2.0);
            o[0] = (-(dx * dx + dy * dy) / (2.0 * 5.0 * 5.0)).exp();
        })
        .unwrap();
        let p = AffineParams {
            rotation: std::f32::consts::FRAC_PI_4,
            ..AffineParams::identity()
        };
        let out = affine_warp(&img, &p, Point::new(c, c)).unwrap();
        let (before, after) = (img.sum(), out.sum());
        assert!(((after - before) / before).abs() < 0.01, "{before} vs {after}");
    }

    #[test]
    fn scale_must_be_positive() {
        let img = impulse(4, 0, 0);
        let p = AffineParams {
            scale: 0.0,
            ..AffineParams::identity()
        };
        assert!(affine_warp(&img, &p, Point::new(1.5, 1.5)).is_err());
    }
}
