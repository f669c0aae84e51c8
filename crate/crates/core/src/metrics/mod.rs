//! Full-reference image metrics and reference loss functions.
//!
//! All metrics take encoded images with peak value 1 and accumulate in
//! `f64`. PSNR of identical images is reported as [`PSNR_SENTINEL`] rather
//! than infinity so corpus means stay finite.

mod loss;
mod report;

pub use loss::{image_loss, l1_loss, recon_loss, total_loss, LossWeights, PerceptualLoss};
pub use report::{evaluate, EvalItem, EvalReport, EvalRow};

use crate::compose::{SegClass, SegMap};
use crate::error::{Error, Result};
use crate::imagecore::{Domain, EncodedImage, Image};

pub const PSNR_SENTINEL: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_SENTINEL
    } else {
        -10.0 * mse.log10()
    }
}

/// Mean squared error over every sample.
pub fn mse<D: Domain>(a: &Image<D>, b: &Image<D>) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

pub fn psnr(a: &EncodedImage, b: &EncodedImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// PSNR over all channels of the pixels whose class is in `classes`.
pub fn masked_psnr(a: &EncodedImage, b: &EncodedImage, seg: &SegMap, classes: &[SegClass]) -> Result<f64> {
    a.ensure_same_shape(b)?;
    if (seg.width(), seg.height()) != (a.width(), a.height()) {
        return Err(Error::ShapeMismatch {
            left: format!("{}x{} image", a.width(), a.height()),
            right: format!("{}x{} mask", seg.width(), seg.height()),
        });
    }
    let c = a.channels();
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for (i, class) in seg.classes().iter().enumerate() {
        if !classes.contains(class) {
            continue;
        }
        for k in i * c..(i + 1) * c {
            let d = a.data()[k] as f64 - b.data()[k] as f64;
            sum += d * d;
        }
        n += c;
    }
    if n == 0 {
        return Err(Error::EmptySelection);
    }
    Ok(psnr_from_mse(sum / n as f64))
}

fn ssim_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let x = i as f64 - r;
            (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let total: f64 = g.iter().sum();
    g.into_iter().map(|v| v / total).collect()
}

/// Gaussian-weighted sums over every valid window position.
fn window_filter(plane: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|i| k[i] * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity, averaged over channels. Dynamic range 1.
pub fn ssim(a: &EncodedImage, b: &EncodedImage) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let (w, h, c) = a.dims();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidInput(format!(
            "{w}x{h} image is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )));
    }
    let k = ssim_window();
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let mut total = 0.0;
    for ch in 0..c {
        let pa: Vec<f64> = a.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        let pb: Vec<f64> = b.data().iter().skip(ch).step_by(c).map(|&v| v as f64).collect();
        let prod = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>();
        let mu_a = window_filter(&pa, w, h, &k);
        let mu_b = window_filter(&pb, w, h, &k);
        let e_aa = window_filter(&prod(&pa, &pa), w, h, &k);
        let e_bb = window_filter(&prod(&pb, &pb), w, h, &k);
        let e_ab = window_filter(&prod(&pa, &pb), w, h, &k);
        let mut acc = 0.0;
        for i in 0..mu_a.len() {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = e_aa[i] - ma * ma;
            let vb = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
            let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            acc += (num / den).min(1.0);
        }
        total += acc / mu_a.len() as f64;
    }
    Ok(total / c as f64)
}
