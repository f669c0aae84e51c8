use std::fmt;
use std::marker::PhantomData;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Sample domain of an [`Image`].
pub trait Domain: Copy + Send + Sync + 'static {
    const NAME: &'static str;
    /// Whether a finite sample is legal in this domain.
    fn admits(x: f32) -> bool;
    /// Projects a resampled value back into the domain. Convex resampling
    /// can overshoot by an ulp; this absorbs that.
    fn sanitize(x: f32) -> f32;
    fn admits_channels(c: usize) -> bool;
}

/// Gamma-encoded samples in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Encoded;

/// Linear radiance, `>= 0`, possibly above 1 before clipping.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Linear;

impl Domain for Encoded {
    const NAME: &'static str = "encoded";
    fn admits(x: f32) -> bool {
        (0.0..=1.0).contains(&x)
    }
    fn sanitize(x: f32) -> f32 {
        x.clamp(0.0, 1.0)
    }
    fn admits_channels(c: usize) -> bool {
        matches!(c, 1 | 3 | 4)
    }
}

impl Domain for Linear {
    const NAME: &'static str = "linear";
    fn admits(x: f32) -> bool {
        x >= 0.0
    }
    fn sanitize(x: f32) -> f32 {
        x.max(0.0)
    }
    fn admits_channels(c: usize) -> bool {
        matches!(c, 1 | 3)
    }
}

/// Interleaved `f32` raster, row-major, tagged with its sample domain.
pub struct Image<D: Domain> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    _domain: PhantomData<D>,
}

pub type EncodedImage = Image<Encoded>;
pub type LinearImage = Image<Linear>;

impl<D: Domain> Clone for Image<D> {
    fn clone(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.clone(),
            _domain: PhantomData,
        }
    }
}

impl<D: Domain> PartialEq for Image<D> {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
            && self.data == other.data
    }
}

impl<D: Domain> fmt::Debug for Image<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("domain", &D::NAME)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl<D: Domain> Image<D> {
    /// Builds an image, checking the sample count and every sample.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        check_dims::<D>(width, height, channels)?;
        if data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
        }
        if let Some(i) = data.iter().position(|&x| !D::admits(x)) {
            return Err(Error::InvalidInput(format!(
                "sample {} at index {i} outside the {} domain",
                data[i],
                D::NAME
            )));
        }
        Ok(Self::from_raw(width, height, channels, data))
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self> {
        check_dims::<D>(width, height, channels)?;
        Ok(Self::from_raw(
            width,
            height,
            channels,
            vec![0.0; width * height * channels],
        ))
    }

    /// Fills every pixel with `f(x, y, out)`; out-of-domain values are
    /// projected with [`Domain::sanitize`].
    pub fn from_fn<F>(width: usize, height: usize, channels: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, usize, &mut [f32]) + Sync + Send,
    {
        let mut img = Self::zeros(width, height, channels)?;
        img.fill_with(f);
        Ok(img)
    }

    /// Like [`Image::from_fn`] but only evaluates pixels inside `rect`;
    /// everything else stays zero.
    pub(crate) fn from_fn_in<F>(
        width: usize,
        height: usize,
        channels: usize,
        rect: PixelRect,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(usize, usize, &mut [f32]) + Sync + Send,
    {
        let mut img = Self::zeros(width, height, channels)?;
        if rect.is_empty() {
            return Ok(img);
        }
        let c = channels;
        par::for_each_row(&mut img.data, width * c, |y, row| {
            if y < rect.y0 || y >= rect.y1 {
                return;
            }
            for x in rect.x0..rect.x1 {
                let px = &mut row[x * c..(x + 1) * c];
                f(x, y, px);
                for v in px.iter_mut() {
                    *v = if v.is_finite() { D::sanitize(*v) } else { 0.0 };
                }
            }
        });
        Ok(img)
    }

    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
            _domain: PhantomData,
        }
    }

    /// Parallel per-pixel fill; each row is independent.
    pub(crate) fn fill_with<F>(&mut self, f: F)
    where
        F: Fn(usize, usize, &mut [f32]) + Sync + Send,
    {
        let (w, c) = (self.width, self.channels);
        par::for_each_row(&mut self.data, w * c, |y, row| {
            for (x, px) in row.chunks_exact_mut(c).enumerate() {
                f(x, y, px);
                for v in px.iter_mut() {
                    *v = if v.is_finite() { D::sanitize(*v) } else { 0.0 };
                }
            }
        });
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Sample with zero outside the raster.
    #[inline]
    pub(crate) fn get_or_zero(&self, x: isize, y: isize, c: usize) -> f32 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.data[(y as usize * self.width + x as usize) * self.channels + c]
        }
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers sit on
    /// integers); zero outside the raster.
    #[inline]
    pub fn sample_bilinear(&self, x: f32, y: f32, c: usize) -> f32 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as isize, y0 as isize);
        let v00 = self.get_or_zero(xi, yi, c);
        let v10 = self.get_or_zero(xi + 1, yi, c);
        let v01 = self.get_or_zero(xi, yi + 1, c);
        let v11 = self.get_or_zero(xi + 1, yi + 1, c);
        let top = v00 + (v10 - v00) * fx;
        let bottom = v01 + (v11 - v01) * fx;
        top + (bottom - top) * fy
    }

    pub fn same_shape<E: Domain>(&self, other: &Image<E>) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn ensure_same_shape<E: Domain>(&self, other: &Image<E>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: format!("{}x{}x{}", self.width, self.height, self.channels),
                right: format!("{}x{}x{}", other.width, other.height, other.channels),
            })
        }
    }

    /// Per-sample map; the result is projected back into the domain.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        let data = self
            .data
            .iter()
            .map(|&v| {
                let r = f(v);
                if r.is_finite() {
                    D::sanitize(r)
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_raw(self.width, self.height, self.channels, data)
    }

    /// Rec. 709 luminance (single channel passes through).
    pub fn luminance(&self) -> Self {
        let data = match self.channels {
            1 => self.data.clone(),
            _ => self
                .data
                .chunks_exact(self.channels)
                .map(|p| D::sanitize(luminance(p[0], p[1], p[2])))
                .collect(),
        };
        Self::from_raw(self.width, self.height, 1, data)
    }

    /// Sub-rectangle copy.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidInput(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(width * height * c);
        for y in y0..y0 + height {
            let start = (y * self.width + x0) * c;
            data.extend_from_slice(&self.data[start..start + width * c]);
        }
        Ok(Self::from_raw(width, height, c, data))
    }

    /// Drops a fourth (alpha) channel, if any.
    pub fn to_rgb(&self) -> Self {
        match self.channels {
            3 => self.clone(),
            1 => {
                let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
                Self::from_raw(self.width, self.height, 3, data)
            }
            _ => {
                let data = self
                    .data
                    .chunks_exact(self.channels)
                    .flat_map(|p| [p[0], p[1], p[2]])
                    .collect();
                Self::from_raw(self.width, self.height, 3, data)
            }
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(0.0, f32::max)
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }
}

impl Image<Linear> {
    /// Pointwise `max(self - other, 0)`.
    pub fn saturating_sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).max(0.0))
            .collect();
        Ok(Self::from_raw(self.width, self.height, self.channels, data))
    }

    /// Pointwise clamp into `[0, 1]`.
    pub fn clipped(&self) -> Self {
        self.map(|v| v.min(1.0))
    }
}

pub fn luminance(r: f32, g: f32, b: f32) -> f32 {
    0.2126 * r + 0.7152 * g + 0.0722 * b
}

fn check_dims<D: Domain>(width: usize, height: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput(format!(
            "zero-sized image {width}x{height}"
        )));
    }
    if !D::admits_channels(channels) {
        return Err(Error::InvalidInput(format!(
            "{} images cannot have {channels} channels",
            D::NAME
        )));
    }
    Ok(())
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    /// Pixels within `radius` (plus one for safety) of `center`, clamped
    /// to a `width x height` raster.
    pub fn around(center: Point, radius: f32, width: usize, height: usize) -> Self {
        Self::bounding(
            center.x - radius,
            center.y - radius,
            center.x + radius,
            center.y + radius,
            width,
            height,
        )
    }

    pub fn bounding(min_x: f32, min_y: f32, max_x: f32, max_y: f32, width: usize, height: usize) -> Self {
        let lo = |v: f32, n: usize| ((v.floor() - 1.0).max(0.0) as usize).min(n);
        let hi = |v: f32, n: usize| ((v.ceil() + 2.0).max(0.0) as usize).min(n);
        Self {
            x0: lo(min_x, width),
            y0: lo(min_y, height),
            x1: hi(max_x, width),
            y1: hi(max_y, height),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }
}

/// Continuous pixel coordinate; pixel centers are at integer positions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f32,
    pub y: f32,
}

impl Point {
    pub const fn new(x: f32, y: f32) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f32 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

/// Pixel dimensions of a render target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Canvas {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= (self.width - 1) as f32 && p.y <= (self.height - 1) as f32
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.width as f32 - 1.0) * 0.5,
            (self.height as f32 - 1.0) * 0.5,
        )
    }

    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_samples() {
        assert!(EncodedImage::new(1, 1, 1, vec![f32::NAN]).is_err());
        assert!(EncodedImage::new(1, 1, 1, vec![1.5]).is_err());
        assert!(LinearImage::new(1, 1, 1, vec![1.5]).is_ok());
        assert!(LinearImage::new(1, 1, 1, vec![-0.1]).is_err());
        assert!(LinearImage::new(1, 1, 4, vec![0.0; 4]).is_err());
        assert!(EncodedImage::new(2, 2, 3, vec![0.0; 11]).is_err());
        assert!(EncodedImage::zeros(0, 4, 3).is_err());
    }

    #[test]
    fn bilinear_hits_pixel_centers() {
        let img = LinearImage::new(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(img.sample_bilinear(1.0, 1.0, 0), 3.0);
        assert_eq!(img.sample_bilinear(0.5, 0.5, 0), 1.5);
        assert_eq!(img.sample_bilinear(-1.0, 0.0, 0), 0.0);
    }

    #[test]
    fn crop_bounds() {
        let img = EncodedImage::zeros(8, 6, 3).unwrap();
        assert_eq!(img.crop(2, 1, 4, 4).unwrap().dims(), (4, 4, 3));
        assert!(img.crop(6, 0, 4, 4).is_err());
    }
}
