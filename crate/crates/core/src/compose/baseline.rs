use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{gaussian_blur, EncodedImage};

/// Threshold-and-feather light source extraction, the usual hand-made
/// alternative to annotated light layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub threshold: f32,
    /// Disc radius of the morphological opening; 0 disables it.
    pub opening_radius: u32,
    pub feather_sigma: f32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            threshold: 0.97,
            opening_radius: 2,
            feather_sigma: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineOutput {
    /// Thresholded and opened, 0 or 1.
    pub binary: EncodedImage,
    /// `binary` after Gaussian feathering.
    pub mask: EncodedImage,
    /// `mask * input + (1 - mask) * restored`.
    pub blended: EncodedImage,
}

impl BaselineOutput {
    pub fn is_empty(&self) -> bool {
        self.mask.max_value() == 0.0
    }
}

fn disc_offsets(r: u32) -> Vec<(isize, isize)> {
    let r = r as isize;
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                v.push((dx, dy));
            }
        }
    }
    v
}

/// Erosion treats out-of-image pixels as unset.
fn erode(set: &[bool], w: usize, h: usize, se: &[(isize, isize)]) -> Vec<bool> {
    let at = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && set[y as usize * w + x as usize];
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            set[i] && se.iter().all(|&(dx, dy)| at(x + dx, y + dy))
        })
        .collect()
}

fn dilate(set: &[bool], w: usize, h: usize, se: &[(isize, isize)]) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for (i, _) in set.iter().enumerate().filter(|(_, &s)| s) {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for &(dx, dy) in se {
            let (nx, ny) = (x + dx, y + dy);
            if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                out[ny as usize * w + nx as usize] = true;
            }
        }
    }
    out
}

/// Morphological opening by a disc of radius `r`.
pub fn open(set: &[bool], w: usize, h: usize, r: u32) -> Vec<bool> {
    if r == 0 {
        return set.to_vec();
    }
    let se = disc_offsets(r);
    dilate(&erode(set, w, h, &se), w, h, &se)
}

/// Thresholds luminance of `input`, opens, feathers and pastes `input`
/// back over `restored` (defaults to `input` itself) through the mask.
pub fn extract_light_source_baseline(
    input: &EncodedImage,
    restored: Option<&EncodedImage>,
    cfg: &BaselineConfig,
) -> Result<BaselineOutput> {
    if !(0.0..=1.0).contains(&cfg.threshold) {
        return Err(Error::param("threshold", format!("{} outside [0, 1]", cfg.threshold)));
    }
    let input = input.to_rgb();
    let restored = match restored {
        Some(r) => {
            let r = r.to_rgb();
            input.ensure_same_shape(&r)?;
            r
        }
        None => input.clone(),
    };
    let (w, h) = (input.width(), input.height());
    let lum = input.luminance();
    let raw: Vec<bool> = lum.data().iter().map(|&v| v >= cfg.threshold).collect();
    let opened = open(&raw, w, h, cfg.opening_radius);
    let binary = EncodedImage::new(w, h, 1, opened.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())?;
    let mask = gaussian_blur(&binary, cfg.feather_sigma)?;
    let blended = EncodedImage::from_fn(w, h, 3, |x, y, px| {
        let m = mask.get(x, y, 0);
        for c in 0..3 {
            px[c] = m * input.get(x, y, c) + (1.0 - m) * restored.get(x, y, c);
        }
    })?;
    Ok(BaselineOutput { binary, mask, blended })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc_image(w: usize, cx: f32, cy: f32, r: f32) -> EncodedImage {
        EncodedImage::from_fn(w, w, 3, |x, y, px| {
            let d = ((x as f32 - cx).powi(2) + (y as f32 - cy).powi(2)).sqrt();
            let v = if d <= r { 1.0 } else { 0.1 };
            px.fill(v);
        })
        .unwrap()
    }

    #[test]
    fn dark_image_gives_empty_mask() {
        let img = EncodedImage::from_fn(32, 32, 3, |_, _, px| px.fill(0.5)).unwrap();
        let out = extract_light_source_baseline(&img, None, &BaselineConfig::default()).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.blended, img);
    }

    #[test]
    fn large_disc_survives_opening() {
        let img = disc_image(48, 24.0, 24.0, 8.0);
        let out = extract_light_source_baseline(&img, None, &BaselineConfig::default()).unwrap();
        let raw: Vec<bool> = img.luminance().data().iter().map(|&v| v >= 0.97).collect();
        let eroded = erode(&raw, 48, 48, &disc_offsets(2));
        for (i, &e) in eroded.iter().enumerate() {
            if e {
                assert_eq!(out.binary.data()[i], 1.0);
            }
        }
        assert!(!out.is_empty());
    }

    #[test]
    fn tiny_source_is_lost() {
        let img = disc_image(32, 16.0, 16.0, 1.0);
        let out = extract_light_source_baseline(&img, None, &BaselineConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn blend_pastes_through_mask() {
        let img = disc_image(40, 20.0, 20.0, 8.0);
        let restored = EncodedImage::zeros(40, 40, 3).unwrap();
        let out = extract_light_source_baseline(&img, Some(&restored), &BaselineConfig::default()).unwrap();
        assert!(out.blended.get(20, 20, 0) > 0.99);
        assert_eq!(out.blended.get(0, 0, 0), 0.0);
    }

    #[test]
    fn opening_removes_thin_lines_only() {
        let (w, h) = (20, 20);
        let mut set = vec![false; w * h];
        for x in 0..w {
            set[10 * w + x] = true;
        }
        for y in 2..9 {
            for x in 2..9 {
                set[y * w + x] = true;
            }
        }
        let o = open(&set, w, h, 1);
        assert!(!o[10 * w + 15]);
        assert!(o[5 * w + 5]);
        assert!(o.iter().zip(&set).all(|(a, b)| !a || *b));
    }
}
