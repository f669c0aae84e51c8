//! PNG in and out. 8- and 16-bit, grey/RGB/RGBA, plus indexed colour for
//! segmentation masks. Encoding is deterministic: equal images give equal
//! bytes.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::image::EncodedImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

fn png_err(e: impl std::fmt::Display) -> Error {
    Error::Png(e.to_string())
}

pub fn quantize8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn quantize16(v: f32) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

pub fn encode_png(img: &EncodedImage, depth: BitDepth) -> Result<Vec<u8>> {
    let color = match img.channels() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        4 => png::ColorType::Rgba,
        c => return Err(Error::InvalidInput(format!("cannot write {c}-channel PNG"))),
    };
    let bytes: Vec<u8> = match depth {
        BitDepth::Eight => img.data().iter().map(|&v| quantize8(v)).collect(),
        BitDepth::Sixteen => img
            .data()
            .iter()
            .flat_map(|&v| quantize16(v).to_be_bytes())
            .collect(),
    };
    write_raw(
        img.width() as u32,
        img.height() as u32,
        color,
        match depth {
            BitDepth::Eight => png::BitDepth::Eight,
            BitDepth::Sixteen => png::BitDepth::Sixteen,
        },
        None,
        &bytes,
    )
}

/// 8-bit palette-indexed PNG.
pub fn encode_indexed_png(
    width: usize,
    height: usize,
    indices: &[u8],
    palette: &[[u8; 3]],
) -> Result<Vec<u8>> {
    if indices.len() != width * height {
        return Err(Error::InvalidInput("index count does not match dimensions".into()));
    }
    let flat: Vec<u8> = palette.iter().flatten().copied().collect();
    write_raw(
        width as u32,
        height as u32,
        png::ColorType::Indexed,
        png::BitDepth::Eight,
        Some(flat),
        indices,
    )
}

fn write_raw(
    width: u32,
    height: u32,
    color: png::ColorType,
    depth: png::BitDepth,
    palette: Option<Vec<u8>>,
    data: &[u8],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(color);
        enc.set_depth(depth);
        enc.set_compression(png::Compression::Fast);
        if let Some(p) = palette {
            enc.set_palette(p);
        }
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(data).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
    }
    Ok(out)
}

/// Decodes any grey/RGB/RGBA PNG (palettes are expanded) into `[0, 1]`
/// samples. Grey+alpha becomes RGBA.
pub fn decode_png(bytes: &[u8]) -> Result<EncodedImage> {
    let dynimg = image::load(Cursor::new(bytes), ImageFormat::Png).map_err(png_err)?;
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let data_of16 = |v: Vec<u16>| v.into_iter().map(|x| x as f32 / 65535.0).collect::<Vec<_>>();
    let data_of8 = |v: Vec<u8>| v.into_iter().map(|x| x as f32 / 255.0).collect::<Vec<_>>();
    let (c, data) = match dynimg {
        DynamicImage::ImageLuma8(b) => (1, data_of8(b.into_raw())),
        DynamicImage::ImageRgb8(b) => (3, data_of8(b.into_raw())),
        DynamicImage::ImageRgba8(b) => (4, data_of8(b.into_raw())),
        DynamicImage::ImageLumaA8(_) => (4, data_of8(dynimg.into_rgba8().into_raw())),
        DynamicImage::ImageLuma16(b) => (1, data_of16(b.into_raw())),
        DynamicImage::ImageRgb16(b) => (3, data_of16(b.into_raw())),
        DynamicImage::ImageRgba16(b) => (4, data_of16(b.into_raw())),
        DynamicImage::ImageLumaA16(_) => (4, data_of16(dynimg.into_rgba16().into_raw())),
        other => (4, data_of16(other.into_rgba16().into_raw())),
    };
    EncodedImage::new(w, h, c, data)
}

pub fn read_png(path: impl AsRef<Path>) -> Result<EncodedImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes).map_err(|e| match e {
        Error::Png(m) => Error::Png(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_png(img: &EncodedImage, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img, depth)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_bit_round_trip_is_exact_on_grid() {
        let data: Vec<f32> = (0..4 * 3 * 3).map(|i| (i * 1000) as f32 / 65535.0).collect();
        let img = EncodedImage::new(4, 3, 3, data).unwrap();
        let back = decode_png(&encode_png(&img, BitDepth::Sixteen).unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn eight_bit_rgba_round_trip() {
        let data: Vec<f32> = (0..2 * 2 * 4).map(|i| (i * 15) as f32 / 255.0).collect();
        let img = EncodedImage::new(2, 2, 4, data).unwrap();
        let back = decode_png(&encode_png(&img, BitDepth::Eight).unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn indexed_png_expands_to_palette_colours() {
        let palette = [[0, 0, 0], [255, 255, 0]];
        let bytes = encode_indexed_png(2, 1, &[0, 1], &palette).unwrap();
        let img = decode_png(&bytes).unwrap();
        assert_eq!(img.channels(), 3);
        assert_eq!(img.data(), &[0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn garbage_is_an_error() {
        assert!(decode_png(b"not a png").is_err());
    }
}
