use super::image::{EncodedImage, LinearImage};
use crate::error::Result;

/// `1 - (1 - a)(1 - b)`, evaluated as `hi + lo * (1 - hi)` so that 0 is an
/// exact identity, 1 an exact absorber, and argument order never matters.
#[inline]
pub fn screen(a: f32, b: f32) -> f32 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    (hi + lo * (1.0 - hi)).min(1.0)
}

pub fn screen_blend(a: &EncodedImage, b: &EncodedImage) -> Result<EncodedImage> {
    a.ensure_same_shape(b)?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| screen(x, y))
        .collect();
    let (w, h, c) = a.dims();
    Ok(EncodedImage::from_raw(w, h, c, data))
}

/// Screen-blends `src` into `dst` in place.
pub fn screen_into(dst: &mut EncodedImage, src: &EncodedImage) -> Result<()> {
    dst.ensure_same_shape(src)?;
    for (d, &s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d = screen(*d, s);
    }
    Ok(())
}

/// Linear-light addition followed by clipping to `[0, 1]`.
pub fn linear_add_clip(a: &LinearImage, b: &LinearImage) -> Result<LinearImage> {
    a.ensure_same_shape(b)?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x + y).clamp(0.0, 1.0))
        .collect();
    let (w, h, c) = a.dims();
    Ok(LinearImage::from_raw(w, h, c, data))
}
