use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{Domain, EncodedImage, GammaCodec, Image};

/// Mean absolute difference.
pub fn l1_loss<D: Domain>(a: &Image<D>, b: &Image<D>) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// A feature-space distance supplied by the host (for instance a VGG
/// feature loss). None ships with this crate.
pub trait PerceptualLoss: Send + Sync {
    fn distance(&self, a: &EncodedImage, b: &EncodedImage) -> Result<f64>;
}

/// `l1 + weight * perceptual`, or plain L1 without a perceptual term.
pub fn image_loss(
    pred: &EncodedImage,
    target: &EncodedImage,
    perceptual: Option<(&dyn PerceptualLoss, f64)>,
) -> Result<f64> {
    let l1 = l1_loss(pred, target)?;
    match perceptual {
        Some((p, w)) => Ok(l1 + w * p.distance(pred, target)?),
        None => Ok(l1),
    }
}

/// Re-synthesizes the input from predicted flare-free image and flare in
/// linear light and compares it to the observed input.
pub fn recon_loss(
    input: &EncodedImage,
    flare_free_pred: &EncodedImage,
    flare_pred: &EncodedImage,
    codec: GammaCodec,
) -> Result<f64> {
    input.ensure_same_shape(flare_free_pred)?;
    input.ensure_same_shape(flare_pred)?;
    let bg = codec.decode(flare_free_pred);
    let fl = codec.decode(flare_pred);
    let sum: f64 = input
        .data()
        .iter()
        .zip(bg.data().iter().zip(fl.data()))
        .map(|(&i, (&b, &f))| (i as f64 - codec.encode_value((b + f).min(1.0)) as f64).abs())
        .sum();
    Ok(sum / input.data().len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub background: f64,
    pub flare: f64,
    pub reconstruction: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            background: 0.5,
            flare: 0.5,
            reconstruction: 1.0,
        }
    }
}

pub fn total_loss(background: f64, flare: f64, reconstruction: f64, w: &LossWeights) -> Result<f64> {
    if w.background < 0.0 || w.flare < 0.0 || w.reconstruction < 0.0 {
        return Err(Error::param("weights", "must be >= 0"));
    }
    Ok(w.background * background + w.flare * flare + w.reconstruction * reconstruction)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct MeanShift;

    impl PerceptualLoss for MeanShift {
        fn distance(&self, a: &EncodedImage, b: &EncodedImage) -> Result<f64> {
            Ok((a.mean() - b.mean()).abs())
        }
    }

    fn img(v: f32) -> EncodedImage {
        EncodedImage::from_fn(4, 4, 3, |_, _, px| px.fill(v)).unwrap()
    }

    #[test]
    fn l1_and_total() {
        assert_eq!(l1_loss(&img(0.3), &img(0.3)).unwrap(), 0.0);
        assert!((l1_loss(&img(0.25), &img(0.75)).unwrap() - 0.5).abs() < 1e-12);
        let w = LossWeights::default();
        assert_eq!(total_loss(0.0, 0.0, 0.0, &w).unwrap(), 0.0);
        assert_eq!(total_loss(1.0, 1.0, 1.0, &w).unwrap(), 2.0);
        let neg = LossWeights { flare: -1.0, ..w };
        assert!(total_loss(1.0, 1.0, 1.0, &neg).is_err());
    }

    #[test]
    fn perceptual_hook() {
        let (a, b) = (img(0.25), img(0.75));
        assert_eq!(image_loss(&a, &b, None).unwrap(), 0.5);
        let v = image_loss(&a, &b, Some((&MeanShift, 0.1))).unwrap();
        assert!((v - 0.55).abs() < 1e-12);
    }

    #[test]
    fn recon_of_exact_split_is_small() {
        let codec = GammaCodec::new(2.2).unwrap();
        let b = img(0.4);
        let f = img(0.3);
        let sum = codec.decode_value(0.4) + codec.decode_value(0.3);
        let i = img(codec.encode_value(sum));
        assert!(recon_loss(&i, &b, &f, codec).unwrap() < 1e-6);
        assert!(recon_loss(&i, &b, &img(0.0), codec).unwrap() > 0.05);
    }
}
