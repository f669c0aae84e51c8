//! Procedural nighttime lens-flare synthesis.
//!
//! The crate is organised bottom-up:
//!
//! * [`imagecore`] holds the raster types and the pixel operations everything
//!   else is built on (gamma codec, blend modes, warps, blurs, noise, PNG IO).
//! * [`scatter`] renders scattering flares (glare, streaks, shimmer and the
//!   light source) from parametric templates.
//! * [`reflect`] renders reflective flares as chains of irises on the line
//!   through the light source and the optical center.
//! * [`compose`] turns a flare/light pair and a background into an annotated
//!   training sample.
//! * [`metrics`] provides PSNR/SSIM, component-masked PSNR and reference
//!   loss functions.
//! * [`catalog`] persists templates, imported real flares and dataset
//!   manifests, and drives deterministic batch generation.

pub mod catalog;
pub mod compose;
pub mod error;
pub mod imagecore;
pub mod metrics;
pub mod par;
pub mod reflect;
pub mod scatter;

pub use error::{Error, Result, Violation};
pub use imagecore::{EncodedImage, GammaCodec, LinearImage, Point};
