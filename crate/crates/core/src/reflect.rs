//! Reflective flares (ghosts). Every iris sits on the line through the
//! optical center and the light source, at `center + k * (light - center)`;
//! negative `k` puts it on the far side of the center, so it moves opposite
//! to the light. Irises are screen-blended.

use std::f32::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::imagecore::{screen_into, Canvas, EncodedImage, PixelRect, Point};
use crate::scatter::{check_canvas, into_result, non_negative, positive, rgb_in_unit, unit_interval, Rgb};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IrisShape {
    Disc,
    /// Regular polygon of circumradius `size`; a vertex points at `rotation`.
    Polygon {
        sides: u32,
        #[serde(default)]
        rotation: f32,
    },
    /// Annulus between `inner_ratio * size` and `size`.
    Ring { inner_ratio: f32 },
    /// `rows x cols` discs of `cell_radius` on a square grid of `pitch`,
    /// centered on the iris position. Matrix LED lights produce these.
    Lattice {
        rows: u32,
        cols: u32,
        pitch: f32,
        cell_radius: f32,
    },
}

impl IrisShape {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        match *self {
            IrisShape::Disc => {}
            IrisShape::Polygon { sides, .. } => {
                if sides < 3 {
                    out.push(Violation::new(format!("{path}.sides"), format!("must be >= 3, got {sides}")));
                }
            }
            IrisShape::Ring { inner_ratio } => {
                if !(inner_ratio > 0.0 && inner_ratio < 1.0) {
                    out.push(Violation::new(
                        format!("{path}.inner_ratio"),
                        format!("must be in (0, 1), got {inner_ratio}"),
                    ));
                }
            }
            IrisShape::Lattice {
                rows,
                cols,
                pitch,
                cell_radius,
            } => {
                if rows == 0 {
                    out.push(Violation::new(format!("{path}.rows"), "must be >= 1"));
                }
                if cols == 0 {
                    out.push(Violation::new(format!("{path}.cols"), "must be >= 1"));
                }
                positive(pitch, &format!("{path}.pitch"), out);
                positive(cell_radius, &format!("{path}.cell_radius"), out);
            }
        }
    }

    /// Radius of a disc around the iris center containing the shape.
    pub fn extent(&self, size: f32) -> f32 {
        match *self {
            IrisShape::Lattice {
                rows,
                cols,
                pitch,
                cell_radius,
            } => {
                let hx = (cols.saturating_sub(1)) as f32 * pitch * 0.5;
                let hy = (rows.saturating_sub(1)) as f32 * pitch * 0.5;
                (hx * hx + hy * hy).sqrt() + cell_radius
            }
            _ => size,
        }
    }

    /// Signed distance (negative inside) from offset `(dx, dy)` to the
    /// outline, with the whole shape scaled by `scale`. Exact for discs and
    /// rings; for polygons, distance to the nearest edge line.
    pub fn signed_distance(&self, size: f32, scale: f32, dx: f32, dy: f32) -> f32 {
        let (x, y) = (dx / scale, dy / scale);
        let r = (x * x + y * y).sqrt();
        let d = match *self {
            IrisShape::Disc => r - size,
            IrisShape::Polygon { sides, rotation } => {
                let n = sides as f32;
                let sector = TAU / n;
                let phi = y.atan2(x) - rotation - PI / n;
                let folded = phi.rem_euclid(sector) - sector * 0.5;
                r * folded.cos() - size * (PI / n).cos()
            }
            IrisShape::Ring { inner_ratio } => (r - size).max(size * inner_ratio - r),
            IrisShape::Lattice {
                rows,
                cols,
                pitch,
                cell_radius,
            } => {
                let nearest = |v: f32, count: u32| {
                    let half = (count as f32 - 1.0) * 0.5;
                    ((v / pitch + half).round().clamp(0.0, count as f32 - 1.0) - half) * pitch
                };
                let (cx, cy) = (nearest(x, cols), nearest(y, rows));
                ((x - cx).powi(2) + (y - cy).powi(2)).sqrt() - cell_radius
            }
        };
        d * scale
    }

    /// Filled convex outline used when this iris masks another.
    fn mask_outline(&self) -> IrisShape {
        match *self {
            IrisShape::Polygon { .. } => *self,
            _ => IrisShape::Disc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caustics {
    /// Pattern opacity per pixel of iris-light distance.
    pub opacity_slope: f32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Clip {
    /// Iris-light distance (pixels) beyond which the iris gets clipped.
    pub threshold: f32,
    #[serde(default = "one")]
    pub mask_scale: f32,
}

fn one() -> f32 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IrisSpec {
    /// Signed position along the light axis.
    pub k: f32,
    /// Circumradius in pixels.
    pub size: f32,
    pub rgb: Rgb,
    pub opacity: f32,
    pub shape: IrisShape,
    #[serde(default)]
    pub edge_feather: f32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caustics: Option<Caustics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<Clip>,
}

impl IrisSpec {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if !self.k.is_finite() {
            out.push(Violation::new(format!("{path}.k"), "must be finite"));
        }
        positive(self.size, &format!("{path}.size"), out);
        rgb_in_unit(&self.rgb, &format!("{path}.rgb"), out);
        unit_interval(self.opacity, &format!("{path}.opacity"), out);
        self.shape.check(&format!("{path}.shape"), out);
        non_negative(self.edge_feather, &format!("{path}.edge_feather"), out);
        if let Some(c) = &self.caustics {
            non_negative(c.opacity_slope, &format!("{path}.caustics.opacity_slope"), out);
        }
        if let Some(c) = &self.clip {
            positive(c.threshold, &format!("{path}.clip.threshold"), out);
            positive(c.mask_scale, &format!("{path}.clip.mask_scale"), out);
        }
    }

    fn feather(&self) -> f32 {
        self.edge_feather.max(1.0)
    }

    /// Antialiased coverage in `[0, 1]` of the shape centered at `center`.
    fn coverage(&self, shape: &IrisShape, scale: f32, center: Point, x: f32, y: f32) -> f32 {
        let sd = shape.signed_distance(self.size, scale, x - center.x, y - center.y);
        (0.5 - sd / self.feather()).clamp(0.0, 1.0)
    }

    fn rect(&self, center: Point, scale: f32, canvas: Canvas) -> PixelRect {
        let reach = self.shape.extent(self.size) * scale + self.feather();
        PixelRect::around(center, reach, canvas.width as usize, canvas.height as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectTemplate {
    pub canvas: Canvas,
    pub optical_center: Point,
    pub irises: Vec<IrisSpec>,
}

impl ReflectTemplate {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        check_canvas(&self.canvas, &format!("{path}.canvas"), out);
        if !self.canvas.contains(self.optical_center) {
            out.push(Violation::new(
                format!("{path}.optical_center"),
                "must lie inside the canvas",
            ));
        }
        if self.irises.is_empty() {
            out.push(Violation::new(format!("{path}.irises"), "needs at least one iris"));
        }
        for (i, iris) in self.irises.iter().enumerate() {
            iris.check(&format!("{path}.irises[{i}]"), out);
        }
    }

    pub fn validate(&self) -> Result<()> {
        into_result(|out| self.check("", out))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlacedIris<'a> {
    pub spec: &'a IrisSpec,
    pub center: Point,
}

/// Positions each iris at `optical_center + k * (light - optical_center)`.
pub fn place_irises(t: &ReflectTemplate, light: Point) -> Vec<PlacedIris<'_>> {
    let (ax, ay) = (light.x - t.optical_center.x, light.y - t.optical_center.y);
    t.irises
        .iter()
        .map(|spec| PlacedIris {
            spec,
            center: Point::new(t.optical_center.x + spec.k * ax, t.optical_center.y + spec.k * ay),
        })
        .collect()
}

pub fn render_iris(spec: &IrisSpec, center: Point, canvas: Canvas) -> Result<EncodedImage> {
    into_result(|out| spec.check("iris", out))?;
    let (w, h) = (canvas.width as usize, canvas.height as usize);
    let gain = spec.rgb.map(|c| c * spec.opacity);
    EncodedImage::from_fn_in(w, h, 3, spec.rect(center, 1.0, canvas), |x, y, px| {
        let cov = spec.coverage(&spec.shape, 1.0, center, x as f32, y as f32);
        for c in 0..3 {
            px[c] = gain[c] * cov;
        }
    })
}

/// Clipping: once the iris is farther than `clip.threshold` from the light,
/// it is intersected with a second, unrendered iris shifted toward the light
/// by `size * (distance - threshold) / threshold`, erasing the far side.
pub fn apply_clipping(img: &EncodedImage, spec: &IrisSpec, center: Point, light: Point) -> Result<EncodedImage> {
    let clip = spec
        .clip
        .ok_or_else(|| Error::param("clip", "iris has no clipping parameters"))?;
    let distance = center.distance(light);
    if distance <= clip.threshold {
        return Ok(img.clone());
    }
    let offset = spec.size * (distance - clip.threshold) / clip.threshold;
    let (ux, uy) = ((center.x - light.x) / distance, (center.y - light.y) / distance);
    let mask_center = Point::new(center.x - ux * offset, center.y - uy * offset);
    let outline = spec.shape.mask_outline();
    let scale = clip.mask_scale;
    let c = img.channels();
    EncodedImage::from_fn(img.width(), img.height(), c, |x, y, px| {
        let m = spec.coverage(&outline, scale, mask_center, x as f32, y as f32);
        for (o, &v) in px.iter_mut().zip(img.pixel(x, y)) {
            *o = v * m;
        }
    })
}

/// Concentric interference rings inside the iris. Opacity is
/// `min(1, opacity_slope * distance)`, so it vanishes when the light sits on
/// the iris.
pub fn render_caustics(spec: &IrisSpec, center: Point, distance: f32, canvas: Canvas) -> Result<EncodedImage> {
    let caustics = spec
        .caustics
        .ok_or_else(|| Error::param("caustics", "iris has no caustics parameters"))?;
    let opacity = (caustics.opacity_slope * distance.max(0.0)).min(1.0);
    let (w, h) = (canvas.width as usize, canvas.height as usize);
    if opacity == 0.0 {
        return EncodedImage::zeros(w, h, 3);
    }
    let extent = spec.shape.extent(spec.size);
    let period = extent / 4.0;
    EncodedImage::from_fn_in(w, h, 3, spec.rect(center, 1.0, canvas), |x, y, px| {
        let (fx, fy) = (x as f32, y as f32);
        let cov = spec.coverage(&spec.shape, 1.0, center, fx, fy);
        if cov == 0.0 {
            return;
        }
        let r = Point::new(fx, fy).distance(center);
        let rings = 0.5 + 0.5 * (TAU * r / period).cos();
        let decay = (1.0 - r / extent).max(0.0);
        let v = opacity * rings * decay * cov;
        for c in 0..3 {
            px[c] = spec.rgb[c] * v;
        }
    })
}

/// Renders the whole iris chain for a light at `light`.
pub fn render_reflect(t: &ReflectTemplate, light: Point) -> Result<EncodedImage> {
    t.validate()?;
    if !t.canvas.contains(light) {
        return Err(Error::param("light_pos", "must lie inside the canvas"));
    }
    let mut acc = EncodedImage::zeros(t.canvas.width as usize, t.canvas.height as usize, 3)?;
    for placed in place_irises(t, light) {
        let spec = placed.spec;
        let mut img = render_iris(spec, placed.center, t.canvas)?;
        if spec.caustics.is_some() {
            let distance = placed.center.distance(light);
            screen_into(&mut img, &render_caustics(spec, placed.center, distance, t.canvas)?)?;
        }
        if spec.clip.is_some() {
            img = apply_clipping(&img, spec, placed.center, light)?;
        }
        screen_into(&mut acc, &img)?;
    }
    Ok(acc)
}
