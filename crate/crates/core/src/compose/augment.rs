use std::f32::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation};
use crate::imagecore::{affine_warp_into, gaussian_blur, AffineParams, EncodedImage, GammaCodec, LinearImage, Point};
use crate::scatter::into_result;

pub const ROTATION_RANGE: (f32, f32) = (0.0, TAU);
pub const TRANSLATION_RANGE: (f32, f32) = (-300.0, 300.0);
pub const SHEAR_RANGE: (f32, f32) = (-PI / 9.0, PI / 9.0);
pub const SCALE_RANGE: (f32, f32) = (0.8, 1.5);
pub const BLUR_RANGE: (f32, f32) = (0.1, 3.0);
pub const OFFSET_RANGE: (f32, f32) = (-0.02, 0.02);
pub const GAIN_RANGE: (f32, f32) = (0.5, 1.2);
pub const GAMMA_RANGE: (f32, f32) = (1.8, 2.2);
/// Noise variance is `NOISE_SCALE * z^2` with `z` standard normal.
pub const NOISE_SCALE: f32 = 0.01;

/// One draw of the photometric and geometric augmentation applied to a
/// training pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationParams {
    pub gamma: GammaCodec,
    /// Geometry shared by the flare and its light source; flips live here.
    pub affine: AffineParams,
    pub blur_sigma: f32,
    /// Added to the linear flare, per channel.
    pub color_offset: [f32; 3],
    pub bg_gain: f32,
    pub noise_variance: f32,
    /// Background crop position as fractions of the free margin.
    pub crop_origin: (f32, f32),
    pub noise_seed: u64,
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f32, f32)) -> f32 {
    rng.random_range(lo..hi)
}

impl AugmentationParams {
    /// Leaves everything untouched apart from linearization with `gamma`.
    pub fn identity(gamma: GammaCodec) -> Self {
        Self {
            gamma,
            affine: AffineParams::identity(),
            blur_sigma: 0.0,
            color_offset: [0.0; 3],
            bg_gain: 1.0,
            noise_variance: 0.0,
            crop_origin: (0.0, 0.0),
            noise_seed: 0,
        }
    }

    /// Checks every field against its sampling range.
    pub fn validate(&self) -> Result<()> {
        into_result(|out| {
            let mut range = |name: &str, v: f32, (lo, hi): (f32, f32), closed: bool| {
                let inside = v >= lo && (v < hi || (closed && v == hi));
                if !inside {
                    let close = if closed { ']' } else { ')' };
                    out.push(Violation::new(name, format!("{v} outside [{lo}, {hi}{close}")));
                }
            };
            let a = &self.affine;
            range("affine.rotation", a.rotation, ROTATION_RANGE, false);
            range("affine.translation[0]", a.translation.0, TRANSLATION_RANGE, true);
            range("affine.translation[1]", a.translation.1, TRANSLATION_RANGE, true);
            range("affine.shear", a.shear, SHEAR_RANGE, true);
            range("affine.scale", a.scale, SCALE_RANGE, true);
            range("blur_sigma", self.blur_sigma, BLUR_RANGE, true);
            for (i, &c) in self.color_offset.iter().enumerate() {
                range(&format!("color_offset[{i}]"), c, OFFSET_RANGE, true);
            }
            range("bg_gain", self.bg_gain, GAIN_RANGE, true);
            range("gamma", self.gamma.gamma(), GAMMA_RANGE, true);
            range("crop_origin[0]", self.crop_origin.0, (0.0, 1.0), true);
            range("crop_origin[1]", self.crop_origin.1, (0.0, 1.0), true);
            if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
                out.push(Violation::new("noise_variance", "must be finite and >= 0"));
            }
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("params serialize");
        hex::encode(Sha256::digest(&json))
    }
}

/// Draws augmentation parameters; deterministic in `seed`.
pub fn sample_augmentation(seed: u64) -> AugmentationParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = GammaCodec::new(uniform(&mut rng, GAMMA_RANGE)).expect("gamma range");
    let affine = AffineParams {
        rotation: uniform(&mut rng, ROTATION_RANGE),
        translation: (uniform(&mut rng, TRANSLATION_RANGE), uniform(&mut rng, TRANSLATION_RANGE)),
        shear: uniform(&mut rng, SHEAR_RANGE),
        scale: uniform(&mut rng, SCALE_RANGE),
        flip_h: rng.random_bool(0.5),
        flip_v: rng.random_bool(0.5),
    };
    let blur_sigma = uniform(&mut rng, BLUR_RANGE);
    let color_offset = [(); 3].map(|_| uniform(&mut rng, OFFSET_RANGE));
    let bg_gain = uniform(&mut rng, GAIN_RANGE);
    let z: f64 = StandardNormal.sample(&mut rng);
    let noise_variance = (NOISE_SCALE as f64 * z * z) as f32;
    let crop_origin = (rng.random::<f32>(), rng.random::<f32>());
    let noise_seed = rng.random();
    AugmentationParams {
        gamma,
        affine,
        blur_sigma,
        color_offset,
        bg_gain,
        noise_variance,
        crop_origin,
        noise_seed,
    }
}

fn image_center(w: usize, h: usize) -> Point {
    Point::new((w as f32 - 1.0) * 0.5, (h as f32 - 1.0) * 0.5)
}

/// Warp and blur, mapping the source center onto the center of a
/// `width x height` output.
pub(crate) fn geometric(img: &LinearImage, p: &AugmentationParams, width: usize, height: usize) -> Result<LinearImage> {
    let warped = affine_warp_into(
        img,
        &p.affine,
        image_center(img.width(), img.height()),
        width,
        height,
        image_center(width, height),
    )?;
    gaussian_blur(&warped, p.blur_sigma)
}

/// Linearizes the flare and its light source and applies identical
/// geometry to both; the color offset goes to the flare only. Output keeps
/// the input size.
pub fn augment_flare_pair(
    flare: &EncodedImage,
    light: &EncodedImage,
    p: &AugmentationParams,
) -> Result<(LinearImage, LinearImage)> {
    augment_flare_pair_into(flare, light, p, flare.width(), flare.height())
}

/// [`augment_flare_pair`] into a `width x height` frame.
pub fn augment_flare_pair_into(
    flare: &EncodedImage,
    light: &EncodedImage,
    p: &AugmentationParams,
    width: usize,
    height: usize,
) -> Result<(LinearImage, LinearImage)> {
    flare.ensure_same_shape(light)?;
    let f = geometric(&p.gamma.decode(&flare.to_rgb()), p, width, height)?;
    let l = geometric(&p.gamma.decode(&light.to_rgb()), p, width, height)?;
    let offset = p.color_offset;
    let mut data = f.into_data();
    for px in data.chunks_exact_mut(3) {
        for (v, o) in px.iter_mut().zip(offset) {
            *v = (*v + o).max(0.0);
        }
    }
    Ok((LinearImage::from_raw(width, height, 3, data), l))
}

/// Crops, linearizes, applies gain and Gaussian sensor noise.
pub fn augment_background(bg: &EncodedImage, p: &AugmentationParams, crop: usize) -> Result<LinearImage> {
    if bg.width() < crop || bg.height() < crop {
        return Err(Error::InvalidInput(format!(
            "background {}x{} smaller than the {crop}x{crop} crop",
            bg.width(),
            bg.height()
        )));
    }
    let pick = |free: usize, f: f32| ((free as f32 * f.clamp(0.0, 1.0)).round() as usize).min(free);
    let x0 = pick(bg.width() - crop, p.crop_origin.0);
    let y0 = pick(bg.height() - crop, p.crop_origin.1);
    let lin = p.gamma.decode(&bg.crop(x0, y0, crop, crop)?.to_rgb());
    let gain = p.bg_gain;
    if !(p.noise_variance >= 0.0) || !p.noise_variance.is_finite() {
        return Err(Error::param("noise_variance", "must be finite and >= 0"));
    }
    let mut data = lin.into_data();
    if p.noise_variance > 0.0 {
        let normal = Normal::new(0.0f32, p.noise_variance.sqrt()).map_err(|e| Error::param("noise_variance", e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(p.noise_seed);
        for v in data.iter_mut() {
            *v = (*v * gain + normal.sample(&mut rng)).max(0.0);
        }
    } else {
        for v in data.iter_mut() {
            *v = (*v * gain).max(0.0);
        }
    }
    Ok(LinearImage::from_raw(crop, crop, 3, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: usize, h: usize) -> EncodedImage {
        EncodedImage::from_fn(w, h, 3, |x, y, px| {
            px[0] = x as f32 / w as f32;
            px[1] = y as f32 / h as f32;
            px[2] = 0.5;
        })
        .unwrap()
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        assert_eq!(sample_augmentation(9), sample_augmentation(9));
        assert_ne!(sample_augmentation(9), sample_augmentation(10));
        for s in 0..500 {
            sample_augmentation(s).validate().unwrap();
        }
    }

    #[test]
    fn validate_reports_paths() {
        let mut p = sample_augmentation(1);
        p.affine.scale = 2.0;
        p.color_offset[2] = 0.5;
        let Err(Error::Validation(v)) = p.validate() else { panic!() };
        let paths: Vec<_> = v.iter().map(|v| v.path.as_str()).collect();
        assert_eq!(paths, ["affine.scale", "color_offset[2]"]);
    }

    #[test]
    fn identity_pair_is_plain_decode() {
        let codec = GammaCodec::new(2.2).unwrap();
        let f = gradient(40, 30);
        let l = f.map(|v| v * 0.5);
        let p = AugmentationParams::identity(codec);
        let (af, al) = augment_flare_pair(&f, &l, &p).unwrap();
        assert_eq!(af, codec.decode(&f));
        assert_eq!(al, codec.decode(&l));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let p = AugmentationParams::identity(GammaCodec::new(2.0).unwrap());
        assert!(augment_flare_pair(&gradient(10, 10), &gradient(10, 11), &p).is_err());
    }

    #[test]
    fn offset_shifts_channel_mean() {
        let codec = GammaCodec::new(2.0).unwrap();
        let f = gradient(32, 32).map(|v| 0.2 + 0.5 * v);
        let mut p = AugmentationParams::identity(codec);
        p.color_offset = [0.02, 0.0, 0.0];
        let (af, _) = augment_flare_pair(&f, &f, &p).unwrap();
        let plain = codec.decode(&f);
        let red = |img: &LinearImage| img.data().iter().step_by(3).map(|&v| v as f64).sum::<f64>() / 1024.0;
        assert!((red(&af) - red(&plain) - 0.02).abs() < 1e-6);
    }

    #[test]
    fn background_gain_and_crop() {
        let codec = GammaCodec::new(2.0).unwrap();
        let bg = gradient(80, 60);
        let mut p = AugmentationParams::identity(codec);
        p.crop_origin = (1.0, 0.5);
        let out = augment_background(&bg, &p, 40).unwrap();
        assert_eq!(out, codec.decode(&bg.crop(40, 10, 40, 40).unwrap()));
        p.bg_gain = 0.5;
        let half = augment_background(&bg, &p, 40).unwrap();
        for (a, b) in half.data().iter().zip(out.data()) {
            assert_eq!(*a, b * 0.5);
        }
        assert!(augment_background(&bg, &p, 61).is_err());
    }

    #[test]
    fn noise_is_reproducible() {
        let bg = gradient(64, 64).map(|v| 0.5 + 0.4 * v);
        let mut p = sample_augmentation(3);
        p.noise_variance = 0.001;
        assert_eq!(augment_background(&bg, &p, 64).unwrap(), augment_background(&bg, &p, 64).unwrap());
    }
}
