use serde::{Deserialize, Serialize};

use super::image::{EncodedImage, LinearImage};
use crate::error::{Error, Result};

pub const GAMMA_MIN: f32 = 1.8;
pub const GAMMA_MAX: f32 = 2.2;

/// Power-law approximation of a camera response: `decode(x) = x^gamma`,
/// `encode(y) = y^(1/gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f32", into = "f32")]
pub struct GammaCodec {
    gamma: f32,
}

impl GammaCodec {
    pub fn new(gamma: f32) -> Result<Self> {
        if !(GAMMA_MIN..=GAMMA_MAX).contains(&gamma) {
            return Err(Error::param(
                "gamma",
                format!("{gamma} outside [{GAMMA_MIN}, {GAMMA_MAX}]"),
            ));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f32 {
        self.gamma
    }

    #[inline]
    pub fn decode_value(&self, x: f32) -> f32 {
        (x as f64).powf(self.gamma as f64) as f32
    }

    #[inline]
    pub fn encode_value(&self, y: f32) -> f32 {
        (y as f64).powf(1.0 / self.gamma as f64) as f32
    }

    /// Linearizes colour channels. A fourth (alpha) channel is dropped; use
    /// [`GammaCodec::decode_with_alpha`] to keep it.
    pub fn decode(&self, img: &EncodedImage) -> LinearImage {
        self.decode_with_alpha(img).0
    }

    /// Linearizes colour channels and returns any alpha channel untouched as
    /// a separate single-channel mask.
    pub fn decode_with_alpha(&self, img: &EncodedImage) -> (LinearImage, Option<EncodedImage>) {
        let (w, h, c) = img.dims();
        let colour = c.min(3);
        let mut data = Vec::with_capacity(w * h * colour);
        let mut alpha = (c == 4).then(|| Vec::with_capacity(w * h));
        for px in img.data().chunks_exact(c) {
            data.extend(px[..colour].iter().map(|&x| self.decode_value(x)));
            if let Some(a) = alpha.as_mut() {
                a.push(px[3]);
            }
        }
        (
            LinearImage::from_raw(w, h, colour, data),
            alpha.map(|a| EncodedImage::from_raw(w, h, 1, a)),
        )
    }

    /// Encodes linear values; every sample must already lie in `[0, 1]`.
    pub fn encode(&self, img: &LinearImage) -> Result<EncodedImage> {
        if let Some(i) = img.data().iter().position(|&v| v > 1.0) {
            return Err(Error::InvalidInput(format!(
                "linear sample {} at index {i} exceeds 1; clip before encoding",
                img.data()[i]
            )));
        }
        let (w, h, c) = img.dims();
        let data = img.data().iter().map(|&y| self.encode_value(y)).collect();
        Ok(EncodedImage::from_raw(w, h, c, data))
    }

    /// Clips to `[0, 1]` and encodes.
    pub fn encode_clipped(&self, img: &LinearImage) -> EncodedImage {
        let (w, h, c) = img.dims();
        let data = img
            .data()
            .iter()
            .map(|&y| self.encode_value(y.min(1.0)))
            .collect();
        EncodedImage::from_raw(w, h, c, data)
    }
}

impl TryFrom<f32> for GammaCodec {
    type Error = Error;
    fn try_from(g: f32) -> Result<Self> {
        Self::new(g)
    }
}

impl From<GammaCodec> for f32 {
    fn from(c: GammaCodec) -> f32 {
        c.gamma
    }
}
