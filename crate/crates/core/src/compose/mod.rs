//! Training-pair assembly. A flare/light pair and a background photo are
//! linearized and augmented, summed in linear light, clipped and
//! re-encoded, producing the flare-corrupted input, its flare-free target,
//! the flare ground truth, the light source and a segmentation map.

mod augment;
mod baseline;
mod masks;

use serde::{Deserialize, Serialize};

pub use augment::{
    augment_background, augment_flare_pair, augment_flare_pair_into, sample_augmentation, AugmentationParams,
    BLUR_RANGE, GAIN_RANGE, GAMMA_RANGE, NOISE_SCALE, OFFSET_RANGE, ROTATION_RANGE, SCALE_RANGE, SHEAR_RANGE,
    TRANSLATION_RANGE,
};
pub use baseline::{extract_light_source_baseline, open, BaselineConfig, BaselineOutput};
pub use masks::{derive_masks, MaskLayers, MaskThresholds, SegClass, SegMap, GLARE_REGION, STREAK_REGION};

use crate::error::{Error, Result};
use crate::imagecore::io::{encode_png, BitDepth};
use crate::imagecore::{screen_blend, EncodedImage, LinearImage};
use crate::scatter::FlareLayers;

/// Encoded component layers of a synthetic flare, used for annotation.
#[derive(Clone, Debug, PartialEq)]
pub struct FlareComponents {
    /// Glare, shimmer and reflective ghosts.
    pub glare: EncodedImage,
    pub streak: EncodedImage,
}

/// A flare image with its light source, synthetic or captured.
#[derive(Clone, Debug, PartialEq)]
pub struct FlareAsset {
    pub id: String,
    pub flare: EncodedImage,
    pub light: EncodedImage,
    pub components: Option<FlareComponents>,
}

impl FlareAsset {
    /// Wraps a scatter render, optionally screening in a reflective layer.
    pub fn from_layers(id: impl Into<String>, layers: &FlareLayers, reflect: Option<&EncodedImage>) -> Result<Self> {
        let mut flare = layers.flare.clone();
        let mut glare = screen_blend(&layers.glare_layer, &layers.shimmer_layer)?;
        if let Some(r) = reflect {
            flare = screen_blend(&flare, r)?;
            glare = screen_blend(&glare, r)?;
        }
        Ok(Self {
            id: id.into(),
            flare,
            light: layers.light_source.clone(),
            components: Some(FlareComponents {
                glare,
                streak: layers.streak_layer.clone(),
            }),
        })
    }

    /// A captured pair without component layers.
    pub fn captured(id: impl Into<String>, flare: EncodedImage, light: EncodedImage) -> Result<Self> {
        flare.ensure_same_shape(&light)?;
        Ok(Self {
            id: id.into(),
            flare,
            light,
            components: None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposeConfig {
    /// Side of the square output.
    pub crop: usize,
    pub thresholds: MaskThresholds,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        Self {
            crop: 512,
            thresholds: MaskThresholds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Template or imported-flare id.
    pub source_id: String,
    pub seed: u64,
    pub params: AugmentationParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    /// Flare-corrupted image.
    pub input: EncodedImage,
    /// Background with the light source, no flare.
    pub flare_free: EncodedImage,
    /// Linear flare without its light source, in `[0, 1]`.
    pub flare_gt: LinearImage,
    pub light_source: EncodedImage,
    pub seg: SegMap,
    pub provenance: Provenance,
}

/// PNG files of one sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PngBundle {
    pub input: Vec<u8>,
    pub gt: Vec<u8>,
    pub flare: Vec<u8>,
    pub light: Vec<u8>,
    pub mask: Vec<u8>,
}

impl PngBundle {
    /// `(file name, bytes)` in a fixed order.
    pub fn files(&self) -> [(&'static str, &[u8]); 5] {
        [
            ("input.png", &self.input),
            ("gt.png", &self.gt),
            ("flare.png", &self.flare),
            ("light.png", &self.light),
            ("mask.png", &self.mask),
        ]
    }
}

impl PairedSample {
    /// Flare ground truth encoded with the sample's own gamma.
    pub fn flare_gt_encoded(&self) -> EncodedImage {
        self.provenance.params.gamma.encode_clipped(&self.flare_gt)
    }

    /// 16-bit rasters, 8-bit paletted mask.
    pub fn to_pngs(&self) -> Result<PngBundle> {
        Ok(PngBundle {
            input: encode_png(&self.input, BitDepth::Sixteen)?,
            gt: encode_png(&self.flare_free, BitDepth::Sixteen)?,
            flare: encode_png(&self.flare_gt_encoded(), BitDepth::Sixteen)?,
            light: encode_png(&self.light_source, BitDepth::Sixteen)?,
            mask: self.seg.to_png()?,
        })
    }
}

/// Linear intermediates of [`compose_pair`], for checking.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposeTrace {
    pub background: LinearImage,
    /// Augmented flare including the light source.
    pub flare_full: LinearImage,
    pub light: LinearImage,
}

/// Composes a sample with augmentation drawn from `seed`.
pub fn compose_pair(bg: &EncodedImage, asset: &FlareAsset, seed: u64, cfg: &ComposeConfig) -> Result<PairedSample> {
    Ok(compose_pair_traced(bg, asset, seed, &sample_augmentation(seed), cfg)?.0)
}

/// Composes a sample with explicit augmentation parameters.
pub fn compose_pair_with_params(
    bg: &EncodedImage,
    asset: &FlareAsset,
    seed: u64,
    params: &AugmentationParams,
    cfg: &ComposeConfig,
) -> Result<PairedSample> {
    Ok(compose_pair_traced(bg, asset, seed, params, cfg)?.0)
}

/// Like [`compose_pair_with_params`], also returning linear intermediates.
///
/// With background `B`, flare `F_full` and light `L` (all linear and
/// augmented), the flare ground truth is `F = clamp(F_full - L, 0, 1)`,
/// the input is `clip(B + L + F)` and the flare-free target `clip(B + L)`.
/// Building the input from `F` rather than `F_full` keeps
/// `clip(I0 + F) == I` wherever `B + L <= 1`, even where the color offset
/// pulled the flare below its own light source.
pub fn compose_pair_traced(
    bg: &EncodedImage,
    asset: &FlareAsset,
    seed: u64,
    params: &AugmentationParams,
    cfg: &ComposeConfig,
) -> Result<(PairedSample, ComposeTrace)> {
    if cfg.crop == 0 {
        return Err(Error::param("crop", "must be > 0"));
    }
    asset.flare.ensure_same_shape(&asset.light)?;
    let n = cfg.crop;
    let codec = params.gamma;
    let background = augment_background(bg, params, n)?;
    let (flare_full, light) = augment_flare_pair_into(&asset.flare, &asset.light, params, n, n)?;

    let flare_gt = LinearImage::new(
        n,
        n,
        3,
        flare_full
            .data()
            .iter()
            .zip(light.data())
            .map(|(&f, &l)| (f - l).clamp(0.0, 1.0))
            .collect(),
    )?;
    let mut lit = Vec::with_capacity(n * n * 3);
    let mut full = Vec::with_capacity(n * n * 3);
    for ((&b, &l), &f) in background.data().iter().zip(light.data()).zip(flare_gt.data()) {
        let bl = b + l;
        lit.push(bl.min(1.0));
        full.push((bl + f).min(1.0));
    }
    let input = codec.encode(&LinearImage::new(n, n, 3, full)?)?;
    let flare_free = codec.encode(&LinearImage::new(n, n, 3, lit)?)?;
    let light_source = codec.encode_clipped(&light);

    let layers = match &asset.components {
        Some(c) => {
            let warp = |img: &EncodedImage| {
                augment::geometric(&codec.decode(&img.to_rgb()).luminance(), params, n, n)
            };
            MaskLayers {
                light: light.clone(),
                streak: Some(warp(&c.streak)?),
                glare: warp(&c.glare)?,
            }
        }
        None => MaskLayers {
            light: light.clone(),
            streak: None,
            glare: flare_gt.clone(),
        },
    };
    let seg = derive_masks(&layers, &cfg.thresholds)?;

    let sample = PairedSample {
        input,
        flare_free,
        flare_gt,
        light_source,
        seg,
        provenance: Provenance {
            source_id: asset.id.clone(),
            seed,
            params: params.clone(),
        },
    };
    Ok((
        sample,
        ComposeTrace {
            background,
            flare_full,
            light,
        },
    ))
}
