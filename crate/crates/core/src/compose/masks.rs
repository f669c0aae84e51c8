use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::io::{decode_png, encode_indexed_png, quantize8};
use crate::imagecore::{GammaCodec, LinearImage};
use crate::scatter::FlareLayers;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum SegClass {
    Background = 0,
    Glare = 1,
    Streak = 2,
    LightSource = 3,
}

impl SegClass {
    pub const ALL: [SegClass; 4] = [
        SegClass::Background,
        SegClass::Glare,
        SegClass::Streak,
        SegClass::LightSource,
    ];

    pub fn color(self) -> [u8; 3] {
        match self {
            SegClass::Background => [0, 0, 0],
            SegClass::Glare => [255, 255, 0],
            SegClass::Streak => [255, 0, 0],
            SegClass::LightSource => [0, 0, 255],
        }
    }

    pub fn from_color(rgb: [u8; 3]) -> Option<SegClass> {
        SegClass::ALL.into_iter().find(|c| c.color() == rgb)
    }
}

/// Classes scored by G-PSNR.
pub const GLARE_REGION: [SegClass; 2] = [SegClass::Glare, SegClass::Streak];
/// Classes scored by S-PSNR.
pub const STREAK_REGION: [SegClass; 1] = [SegClass::Streak];

/// One class per pixel, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegMap {
    width: usize,
    height: usize,
    classes: Vec<SegClass>,
}

impl SegMap {
    pub fn new(width: usize, height: usize, classes: Vec<SegClass>) -> Result<Self> {
        if width * height != classes.len() || classes.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} classes for a {width}x{height} map",
                classes.len()
            )));
        }
        Ok(Self { width, height, classes })
    }

    pub fn filled(width: usize, height: usize, class: SegClass) -> Result<Self> {
        Self::new(width, height, vec![class; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn classes(&self) -> &[SegClass] {
        &self.classes
    }

    pub fn get(&self, x: usize, y: usize) -> SegClass {
        self.classes[y * self.width + x]
    }

    pub fn count(&self, class: SegClass) -> usize {
        self.classes.iter().filter(|&&c| c == class).count()
    }

    /// Per-pixel membership in `classes`.
    pub fn select(&self, classes: &[SegClass]) -> Vec<bool> {
        self.classes.iter().map(|c| classes.contains(c)).collect()
    }

    /// Paletted 8-bit PNG in the yellow/red/blue convention.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let palette: Vec<[u8; 3]> = SegClass::ALL.iter().map(|c| c.color()).collect();
        let indices: Vec<u8> = self.classes.iter().map(|&c| c as u8).collect();
        encode_indexed_png(self.width, self.height, &indices, &palette)
    }

    /// Reads any RGB(A) or paletted PNG whose colors are exactly the class
    /// palette.
    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let img = decode_png(bytes)?.to_rgb();
        let mut classes = Vec::with_capacity(img.width() * img.height());
        for (i, px) in img.data().chunks_exact(3).enumerate() {
            let rgb = [quantize8(px[0]), quantize8(px[1]), quantize8(px[2])];
            let class = SegClass::from_color(rgb).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "mask pixel {} has color {rgb:?}, not a class color",
                    i
                ))
            })?;
            classes.push(class);
        }
        Self::new(img.width(), img.height(), classes)
    }
}

/// Luminance thresholds on linear component layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskThresholds {
    pub light: f32,
    pub streak: f32,
    pub glare: f32,
}

impl Default for MaskThresholds {
    fn default() -> Self {
        Self {
            light: 0.5,
            streak: 0.05,
            glare: 0.02,
        }
    }
}

/// Linear component layers in a common frame. Real captured flares have no
/// streak layer; their glare layer is the flare minus its light source.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskLayers {
    pub light: LinearImage,
    pub streak: Option<LinearImage>,
    pub glare: LinearImage,
}

impl MaskLayers {
    /// Linearizes rendered layers; shimmer counts as glare.
    pub fn from_flare_layers(layers: &FlareLayers, codec: GammaCodec) -> Result<Self> {
        let glare = codec.decode(&layers.glare_layer);
        let shimmer = codec.decode(&layers.shimmer_layer);
        let data = glare.data().iter().zip(shimmer.data()).map(|(a, b)| a + b).collect();
        let (w, h, c) = glare.dims();
        Ok(Self {
            light: codec.decode(&layers.light_source),
            streak: Some(codec.decode(&layers.streak_layer)),
            glare: LinearImage::new(w, h, c, data)?,
        })
    }
}

/// Priority light source > streak > glare > background, each by a
/// luminance threshold on its own layer.
pub fn derive_masks(layers: &MaskLayers, t: &MaskThresholds) -> Result<SegMap> {
    let light = layers.light.luminance();
    let glare = layers.glare.luminance();
    light.ensure_same_shape(&glare)?;
    let streak = match &layers.streak {
        Some(s) => {
            let s = s.luminance();
            light.ensure_same_shape(&s)?;
            Some(s)
        }
        None => None,
    };
    let classes = (0..light.data().len())
        .map(|i| {
            if light.data()[i] > t.light {
                SegClass::LightSource
            } else if streak.as_ref().is_some_and(|s| s.data()[i] > t.streak) {
                SegClass::Streak
            } else if glare.data()[i] > t.glare {
                SegClass::Glare
            } else {
                SegClass::Background
            }
        })
        .collect();
    SegMap::new(light.width(), light.height(), classes)
}
