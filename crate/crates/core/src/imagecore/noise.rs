use super::image::EncodedImage;
use crate::error::{Error, Result};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lattice value in `[0, 1)` for one octave.
#[inline]
fn lattice(seed: u64, octave: u32, ix: i64, iy: i64) -> f32 {
    let h = splitmix64(
        seed ^ splitmix64((octave as u64) << 48 ^ (ix as u64).wrapping_mul(0x1656_67B1_9E37_79F9))
            ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F),
    );
    (h >> 40) as f32 / (1u64 << 24) as f32
}

#[inline]
fn fade(t: f32) -> f32 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise(x: f32, y: f32, seed: u64, octave: u32) -> f32 {
    let (x0, y0) = (x.floor(), y.floor());
    let (ix, iy) = (x0 as i64, y0 as i64);
    let (tx, ty) = (fade(x - x0), fade(y - y0));
    let v00 = lattice(seed, octave, ix, iy);
    let v10 = lattice(seed, octave, ix + 1, iy);
    let v01 = lattice(seed, octave, ix, iy + 1);
    let v11 = lattice(seed, octave, ix + 1, iy + 1);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Fractal value noise at pixel `(x, y)`: octaves of eased-bilinear lattice
/// noise, lattice spacing `base_scale` pixels at the first octave, halving
/// amplitude and doubling frequency per octave, normalized into `[0, 1]`.
pub fn fractal_noise_at(x: f32, y: f32, octaves: u32, base_scale: f32, seed: u64) -> f32 {
    let mut freq = 1.0 / base_scale;
    let mut amp = 1.0f32;
    let (mut sum, mut norm) = (0.0f32, 0.0f32);
    for o in 0..octaves {
        sum += amp * value_noise(x * freq, y * freq, seed, o);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    (sum / norm).clamp(0.0, 1.0)
}

/// Single-channel fractal value-noise image, deterministic in `seed`.
pub fn fractal_noise(
    width: usize,
    height: usize,
    octaves: u32,
    base_scale: f32,
    seed: u64,
) -> Result<EncodedImage> {
    if octaves == 0 {
        return Err(Error::param("octaves", "must be >= 1"));
    }
    if !(base_scale > 0.0) {
        return Err(Error::param("base_scale", format!("{base_scale} must be > 0")));
    }
    EncodedImage::from_fn(width, height, 1, |x, y, o| {
        o[0] = fractal_noise_at(x as f32, y as f32, octaves, base_scale, seed);
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = fractal_noise(64, 48, 4, 8.0, 11).unwrap();
        let b = fractal_noise(64, 48, 4, 8.0, 11).unwrap();
        assert_eq!(a, b);
        let c = fractal_noise(64, 48, 4, 8.0, 12).unwrap();
        let differing = a.data().iter().zip(c.data()).filter(|(x, y)| x != y).count();
        assert!(differing * 2 > a.data().len());
    }

    #[test]
    fn zero_sizes_rejected() {
        assert!(fractal_noise(0, 8, 4, 8.0, 1).is_err());
        assert!(fractal_noise(8, 8, 0, 8.0, 1).is_err());
    }

    #[test]
    fn values_in_unit_range() {
        let n = fractal_noise(32, 32, 6, 3.0, 5).unwrap();
        assert!(n.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
