use super::image::{Domain, Image, Point};
use crate::error::{Error, Result};
use crate::par;

/// Normalized discrete Gaussian, truncated at `ceil(3 sigma)` taps.
pub(crate) fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i32;
    let two_s2 = 2.0 * (sigma as f64) * (sigma as f64);
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / two_s2).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| (w / total) as f32).collect()
}

/// Separable Gaussian blur with clamped edges. `sigma == 0` is the identity.
pub fn gaussian_blur<D: Domain>(img: &Image<D>, sigma: f32) -> Result<Image<D>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("{sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h, c) = img.dims();

    let src = img.data();
    let mut tmp = vec![0.0f32; src.len()];
    par::for_each_row(&mut tmp, w * c, |y, row| {
        let line = &src[y * w * c..(y + 1) * w * c];
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0f32;
                for (k, &wk) in kernel.iter().enumerate() {
                    let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                    acc += wk * line[sx * c + ch];
                }
                row[x * c + ch] = acc;
            }
        }
    });

    let mut out = vec![0.0f32; src.len()];
    par::for_each_row(&mut out, w * c, |y, row| {
        for (k, &wk) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let line = &tmp[sy * w * c..(sy + 1) * w * c];
            for (o, &v) in row.iter_mut().zip(line) {
                *o += wk * v;
            }
        }
        for o in row.iter_mut() {
            *o = D::sanitize(*o);
        }
    });
    Ok(Image::from_raw(w, h, c, out))
}

/// Sample count along one radial-blur ray.
pub(crate) fn radial_samples(amount: f32, r: f32) -> usize {
    ((amount * r).ceil() as usize).clamp(3, 64)
}

/// Zoom blur toward `center`: each pixel at distance `r` averages samples on
/// the segment from itself to radius `r * (1 - amount)` (floored at the
/// center). `amount == 0` is the identity.
pub fn radial_blur<D: Domain>(img: &Image<D>, center: Point, amount: f32) -> Result<Image<D>> {
    if !(amount >= 0.0) || !amount.is_finite() {
        return Err(Error::param("amount", format!("{amount} must be >= 0")));
    }
    if amount == 0.0 {
        return Ok(img.clone());
    }
    let c = img.channels();
    Image::<D>::from_fn(img.width(), img.height(), c, |x, y, out| {
        let dx = x as f32 - center.x;
        let dy = y as f32 - center.y;
        let r = (dx * dx + dy * dy).sqrt();
        if r == 0.0 {
            out.copy_from_slice(img.pixel(x, y));
            return;
        }
        let n = radial_samples(amount, r);
        out.fill(0.0);
        for k in 0..n {
            let f = (1.0 - amount * k as f32 / (n - 1) as f32).max(0.0);
            let (sx, sy) = (center.x + dx * f, center.y + dy * f);
            for (ch, o) in out.iter_mut().enumerate() {
                *o += img.sample_bilinear(sx, sy, ch);
            }
        }
        for o in out.iter_mut() {
            *o /= n as f32;
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::{EncodedImage, LinearImage};

    #[test]
    fn zero_sigma_and_constant_images() {
        let img = EncodedImage::new(3, 1, 1, vec![0.1, 0.9, 0.4]).unwrap();
        assert_eq!(gaussian_blur(&img, 0.0).unwrap(), img);
        let flat = LinearImage::new(16, 16, 3, vec![0.25; 16 * 16 * 3]).unwrap();
        let out = gaussian_blur(&flat, 2.5).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.25).abs() < 1e-6));
        assert!(gaussian_blur(&flat, -1.0).is_err());
    }

    #[test]
    fn kernel_is_normalized() {
        for s in [0.1f32, 0.7, 2.0, 3.0] {
            let k = gaussian_kernel(s);
            let total: f32 = k.iter().sum();
            assert!((total - 1.0).abs() < 1e-6);
            assert_eq!(k.len() % 2, 1);
        }
    }

    #[test]
    fn interior_mass_conserved() {
        let mut data = vec![0.0; 64 * 64];
        data[32 * 64 + 30] = 1.0;
        data[20 * 64 + 40] = 0.5;
        let img = LinearImage::new(64, 64, 1, data).unwrap();
        let out = gaussian_blur(&img, 3.0).unwrap();
        assert!((out.sum() - 1.5).abs() / 1.5 < 0.005);
    }

    #[test]
    fn radial_blur_identity_and_errors() {
        let img = EncodedImage::new(3, 1, 1, vec![0.1, 0.9, 0.4]).unwrap();
        assert_eq!(radial_blur(&img, Point::new(1.0, 0.0), 0.0).unwrap(), img);
        assert!(radial_blur(&img, Point::new(1.0, 0.0), -0.5).is_err());
    }

    #[test]
    fn sample_count_bounds() {
        assert_eq!(radial_samples(0.01, 10.0), 3);
        assert_eq!(radial_samples(0.5, 20.0), 10);
        assert_eq!(radial_samples(2.0, 400.0), 64);
    }
}
