//! Raster primitives shared by the renderers and the compositor.

mod blend;
mod blur;
mod gamma;
mod image;
pub mod io;
mod noise;
mod resize;
mod warp;

pub use blend::{linear_add_clip, screen, screen_blend, screen_into};
pub use blur::{gaussian_blur, radial_blur};
pub use gamma::{GammaCodec, GAMMA_MAX, GAMMA_MIN};
pub use image::{luminance, Canvas, Domain, Encoded, EncodedImage, Image, Linear, LinearImage, Point};
pub use noise::{fractal_noise, fractal_noise_at};
pub use resize::downscale_to_fit;
pub use warp::{affine_warp, affine_warp_into, AffineParams};

pub(crate) use image::PixelRect;
