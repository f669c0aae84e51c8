use std::f32::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{into_result, LightSourceSpec};
use crate::error::{Result, Violation};
use crate::imagecore::{Canvas, EncodedImage, PixelRect, Point};

/// Outline of the overexposed core.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LightShape {
    Disc,
    /// Regular polygon with circumradius `core_radius`; a vertex points at
    /// `rotation`.
    Polygon {
        sides: u32,
        #[serde(default)]
        rotation: f32,
    },
}

impl LightShape {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if let LightShape::Polygon { sides, .. } = self {
            if *sides < 3 {
                out.push(Violation::new(
                    format!("{path}.sides"),
                    format!("must be >= 3, got {sides}"),
                ));
            }
        }
    }

    /// Distance from the center to the outline along angle `phi`.
    pub fn boundary(&self, radius: f32, phi: f32) -> f32 {
        match *self {
            LightShape::Disc => radius,
            LightShape::Polygon { sides, rotation } => {
                let sector = TAU / sides as f32;
                let a = (phi - rotation).rem_euclid(sector) - sector * 0.5;
                radius * (PI / sides as f32).cos() / a.cos()
            }
        }
    }

    pub fn area(&self, radius: f32) -> f64 {
        let r = radius as f64;
        match *self {
            LightShape::Disc => std::f64::consts::PI * r * r,
            LightShape::Polygon { sides, .. } => {
                let n = sides as f64;
                0.5 * n * r * r * (std::f64::consts::TAU / n).sin()
            }
        }
    }
}

/// Saturated core (all channels 1) with a tinted glow that decays
/// quadratically to zero at `glow_radius`.
pub fn render_light_source(spec: &LightSourceSpec, source: Point, canvas: Canvas) -> Result<EncodedImage> {
    into_result(|out| spec.check("light", out))?;
    let (w, h) = (canvas.width as usize, canvas.height as usize);
    let rect = PixelRect::around(source, spec.glow_radius, w, h);
    EncodedImage::from_fn_in(w, h, 3, rect, |x, y, px| {
        let dx = x as f32 - source.x;
        let dy = y as f32 - source.y;
        let d = (dx * dx + dy * dy).sqrt();
        let edge = spec.shape.boundary(spec.core_radius, dy.atan2(dx));
        if d <= edge {
            px.fill(1.0);
        } else if d < spec.glow_radius {
            let t = (d - edge) / (spec.glow_radius - edge);
            let g = (1.0 - t) * (1.0 - t);
            for c in 0..3 {
                px[c] = spec.rgb[c] * g;
            }
        }
    })
}
