//! Scattering flares: glare, streaks, shimmer and the light source, each
//! rendered from a parametric spec and combined with screen blending.
//!
//! All layers are gamma-encoded; blending happens on encoded values the way
//! a compositing tool would. Linearization is the compositor's job.

mod curve;
mod glare;
mod light;
mod shimmer;
mod streak;

use serde::{Deserialize, Serialize};

pub use curve::{ColorCurve, CurvePoint, Rgb};
pub use glare::{render_glare, VANISH_FLOOR};
pub use light::{render_light_source, LightShape};
pub use shimmer::{render_shimmer, spike_angles};
pub use streak::{render_streak, HALF_MAX_PER_SIGMA};

use crate::error::{Error, Result, Violation};
use crate::imagecore::{screen_into, Canvas, EncodedImage, Point};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlareSpec {
    /// Pixels.
    pub radius: f32,
    pub curve: ColorCurve,
    /// Angular width of the dimmed sector; 0 disables it.
    #[serde(default)]
    pub vanishing_angle: f32,
    #[serde(default)]
    pub vanishing_direction: f32,
    #[serde(default = "default_feather")]
    pub vanishing_feather: f32,
}

fn default_feather() -> f32 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreakSpec {
    /// Radians. A streak is a line, so `d` and `d + pi` render identically.
    pub direction: f32,
    pub length: f32,
    pub width: f32,
    /// Perpendicular colour profile over normalized distance from the ridge.
    pub section_curve: ColorCurve,
    /// Half-maximum distance of the edge blur on the sharp side.
    pub sharp_side_blur: f32,
    /// Half-maximum distance of the edge blur on the soft side.
    pub soft_side_blur: f32,
    /// Colour along the streak over normalized distance from the source.
    pub falloff_curve: ColorCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShimmerSpec {
    pub spike_count: u32,
    pub radius: f32,
    pub intensity: f32,
    pub angular_jitter_seed: u64,
    pub noise_octaves: u32,
    pub noise_radial_blur: f32,
    pub rgb: Rgb,
    /// Peak of the radial noise patch before tinting.
    #[serde(default = "default_noise_intensity")]
    pub noise_intensity: f32,
}

fn default_noise_intensity() -> f32 {
    0.35
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSourceSpec {
    pub shape: LightShape,
    pub core_radius: f32,
    pub glow_radius: f32,
    pub rgb: Rgb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterTemplate {
    pub canvas: Canvas,
    pub source_pos: Point,
    pub glare: GlareSpec,
    #[serde(default)]
    pub streaks: Vec<StreakSpec>,
    #[serde(default)]
    pub shimmer: Option<ShimmerSpec>,
    #[serde(default)]
    pub light: Option<LightSourceSpec>,
}

/// Rendered scattering flare with its annotation layers.
#[derive(Clone, Debug, PartialEq)]
pub struct FlareLayers {
    /// Every component, light source included, screen-blended.
    pub flare: EncodedImage,
    pub light_source: EncodedImage,
    pub glare_layer: EncodedImage,
    /// All streaks of the template screen-blended together.
    pub streak_layer: EncodedImage,
    pub shimmer_layer: EncodedImage,
}

impl FlareLayers {
    /// Every pixel saturated in the glare is saturated in the light source
    /// too, so thresholding can never mistake glare for the source.
    pub fn saturation_contained(&self) -> bool {
        let sat = |p: &[f32]| p.iter().all(|&v| v >= 1.0);
        self.glare_layer
            .data()
            .chunks_exact(3)
            .zip(self.light_source.data().chunks_exact(3))
            .all(|(g, l)| !sat(g) || sat(l))
    }
}

pub(crate) fn positive(v: f32, path: &str, out: &mut Vec<Violation>) {
    if !(v > 0.0) || !v.is_finite() {
        out.push(Violation::new(path, format!("must be > 0, got {v}")));
    }
}

pub(crate) fn non_negative(v: f32, path: &str, out: &mut Vec<Violation>) {
    if !(v >= 0.0) || !v.is_finite() {
        out.push(Violation::new(path, format!("must be >= 0, got {v}")));
    }
}

pub(crate) fn unit_interval(v: f32, path: &str, out: &mut Vec<Violation>) {
    if !(0.0..=1.0).contains(&v) {
        out.push(Violation::new(path, format!("must be in [0, 1], got {v}")));
    }
}

pub(crate) fn rgb_in_unit(rgb: &Rgb, path: &str, out: &mut Vec<Violation>) {
    for (i, &c) in rgb.iter().enumerate() {
        unit_interval(c, &format!("{path}[{i}]"), out);
    }
}

impl GlareSpec {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        positive(self.radius, &format!("{path}.radius"), out);
        self.curve.check(&format!("{path}.curve"), out);
        non_negative(self.vanishing_angle, &format!("{path}.vanishing_angle"), out);
        if self.vanishing_angle >= std::f32::consts::TAU {
            out.push(Violation::new(
                format!("{path}.vanishing_angle"),
                "must be < 2*pi",
            ));
        }
        if !self.vanishing_direction.is_finite() {
            out.push(Violation::new(
                format!("{path}.vanishing_direction"),
                "must be finite",
            ));
        }
        positive(self.vanishing_feather, &format!("{path}.vanishing_feather"), out);
    }
}

impl StreakSpec {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if !self.direction.is_finite() {
            out.push(Violation::new(format!("{path}.direction"), "must be finite"));
        }
        positive(self.length, &format!("{path}.length"), out);
        positive(self.width, &format!("{path}.width"), out);
        self.section_curve.check(&format!("{path}.section_curve"), out);
        self.falloff_curve.check(&format!("{path}.falloff_curve"), out);
        non_negative(self.sharp_side_blur, &format!("{path}.sharp_side_blur"), out);
        non_negative(self.soft_side_blur, &format!("{path}.soft_side_blur"), out);
        if self.sharp_side_blur > self.soft_side_blur {
            out.push(Violation::new(
                format!("{path}.sharp_side_blur"),
                format!(
                    "must not exceed soft_side_blur ({} > {})",
                    self.sharp_side_blur, self.soft_side_blur
                ),
            ));
        }
    }
}

impl ShimmerSpec {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if self.spike_count < 3 {
            out.push(Violation::new(
                format!("{path}.spike_count"),
                format!("must be >= 3, got {}", self.spike_count),
            ));
        }
        positive(self.radius, &format!("{path}.radius"), out);
        unit_interval(self.intensity, &format!("{path}.intensity"), out);
        unit_interval(self.noise_intensity, &format!("{path}.noise_intensity"), out);
        if self.noise_octaves == 0 {
            out.push(Violation::new(format!("{path}.noise_octaves"), "must be >= 1"));
        }
        non_negative(self.noise_radial_blur, &format!("{path}.noise_radial_blur"), out);
        rgb_in_unit(&self.rgb, &format!("{path}.rgb"), out);
    }
}

impl LightSourceSpec {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        self.shape.check(&format!("{path}.shape"), out);
        positive(self.core_radius, &format!("{path}.core_radius"), out);
        if !(self.glow_radius >= self.core_radius) {
            out.push(Violation::new(
                format!("{path}.glow_radius"),
                format!(
                    "must be >= core_radius ({} < {})",
                    self.glow_radius, self.core_radius
                ),
            ));
        }
        rgb_in_unit(&self.rgb, &format!("{path}.rgb"), out);
    }
}

impl ScatterTemplate {
    pub fn check(&self, path: &str, out: &mut Vec<Violation>) {
        check_canvas(&self.canvas, &format!("{path}.canvas"), out);
        if !self.canvas.contains(self.source_pos) {
            out.push(Violation::new(
                format!("{path}.source_pos"),
                format!(
                    "({}, {}) is outside the {}x{} canvas",
                    self.source_pos.x, self.source_pos.y, self.canvas.width, self.canvas.height
                ),
            ));
        }
        self.glare.check(&format!("{path}.glare"), out);
        for (i, s) in self.streaks.iter().enumerate() {
            s.check(&format!("{path}.streaks[{i}]"), out);
        }
        if let Some(s) = &self.shimmer {
            s.check(&format!("{path}.shimmer"), out);
        }
        if let Some(l) = &self.light {
            l.check(&format!("{path}.light"), out);
        }
    }

    pub fn validate(&self) -> Result<()> {
        into_result(|out| self.check("", out))
    }
}

pub(crate) fn check_canvas(c: &Canvas, path: &str, out: &mut Vec<Violation>) {
    if c.width == 0 || c.height == 0 {
        out.push(Violation::new(path, "canvas must be non-empty"));
    }
}

/// Runs a checker and turns any violations into [`Error::Validation`],
/// trimming the leading `.` of root-relative paths.
pub(crate) fn into_result(f: impl FnOnce(&mut Vec<Violation>)) -> Result<()> {
    let mut out = Vec::new();
    f(&mut out);
    if out.is_empty() {
        Ok(())
    } else {
        for v in &mut out {
            if let Some(p) = v.path.strip_prefix('.') {
                v.path = p.to_string();
            }
        }
        Err(Error::Validation(out))
    }
}

/// Renders every component and screen-blends them: glare, streaks and
/// shimmer into the flare body, then the light source on top.
pub fn render_scatter(t: &ScatterTemplate) -> Result<FlareLayers> {
    t.validate()?;
    let (w, h) = (t.canvas.width as usize, t.canvas.height as usize);
    let glare_layer = render_glare(&t.glare, t.source_pos, t.canvas)?;

    let mut streak_layer = EncodedImage::zeros(w, h, 3)?;
    for s in &t.streaks {
        screen_into(&mut streak_layer, &render_streak(s, t.source_pos, t.canvas)?)?;
    }
    let shimmer_layer = match &t.shimmer {
        Some(s) => render_shimmer(s, t.source_pos, t.canvas)?,
        None => EncodedImage::zeros(w, h, 3)?,
    };
    let light_source = match &t.light {
        Some(l) => render_light_source(l, t.source_pos, t.canvas)?,
        None => EncodedImage::zeros(w, h, 3)?,
    };

    let mut flare = glare_layer.clone();
    screen_into(&mut flare, &streak_layer)?;
    screen_into(&mut flare, &shimmer_layer)?;
    screen_into(&mut flare, &light_source)?;

    Ok(FlareLayers {
        flare,
        light_source,
        glare_layer,
        streak_layer,
        shimmer_layer,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn falling_curve(peak: Rgb) -> ColorCurve {
        ColorCurve::new(vec![
            CurvePoint { t: 0.0, rgb: peak },
            CurvePoint {
                t: 0.3,
                rgb: peak.map(|c| c * 0.45),
            },
            CurvePoint {
                t: 1.0,
                rgb: [0.0; 3],
            },
        ])
        .unwrap()
    }

    pub fn glare(radius: f32) -> GlareSpec {
        GlareSpec {
            radius,
            curve: falling_curve([0.9, 0.85, 1.0]),
            vanishing_angle: 0.0,
            vanishing_direction: 0.0,
            vanishing_feather: 0.2,
        }
    }

    pub fn streak(direction: f32) -> StreakSpec {
        StreakSpec {
            direction,
            length: 120.0,
            width: 12.0,
            section_curve: falling_curve([1.0, 0.9, 0.8]),
            sharp_side_blur: 1.0,
            soft_side_blur: 3.0,
            falloff_curve: falling_curve([1.0, 1.0, 1.0]),
        }
    }

    pub fn shimmer(seed: u64) -> ShimmerSpec {
        ShimmerSpec {
            spike_count: 8,
            radius: 60.0,
            intensity: 0.8,
            angular_jitter_seed: seed,
            noise_octaves: 4,
            noise_radial_blur: 0.3,
            rgb: [1.0, 0.95, 0.9],
            noise_intensity: 0.2,
        }
    }

    pub fn light(core: f32) -> LightSourceSpec {
        LightSourceSpec {
            shape: LightShape::Disc,
            core_radius: core,
            glow_radius: core * 3.0,
            rgb: [1.0, 0.8, 0.6],
        }
    }

    pub fn template() -> ScatterTemplate {
        ScatterTemplate {
            canvas: Canvas::new(160, 128),
            source_pos: Point::new(80.0, 64.0),
            glare: glare(50.0),
            streaks: vec![streak(0.1)],
            shimmer: Some(shimmer(3)),
            light: Some(light(6.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn only_glare_means_flare_is_glare() {
        let mut t = template();
        t.streaks.clear();
        t.shimmer = None;
        t.light = None;
        let layers = render_scatter(&t).unwrap();
        assert_eq!(layers.flare, layers.glare_layer);
    }

    #[test]
    fn flare_dominates_every_layer() {
        let layers = render_scatter(&template()).unwrap();
        for layer in [
            &layers.light_source,
            &layers.glare_layer,
            &layers.streak_layer,
            &layers.shimmer_layer,
        ] {
            assert!(layers.flare.data().iter().zip(layer.data()).all(|(f, l)| f >= l));
        }
        let sat = |p: &[f32]| p.iter().all(|&v| v >= 1.0);
        for (f, l) in layers
            .flare
            .data()
            .chunks_exact(3)
            .zip(layers.light_source.data().chunks_exact(3))
        {
            assert!(!sat(l) || sat(f));
        }
        assert!(layers.saturation_contained());
    }

    #[test]
    fn render_is_deterministic() {
        assert_eq!(render_scatter(&template()).unwrap(), render_scatter(&template()).unwrap());
    }

    #[test]
    fn validation_names_fields() {
        let mut t = template();
        t.glare.radius = -5.0;
        t.source_pos = Point::new(500.0, 10.0);
        t.streaks[0].sharp_side_blur = 9.0;
        let err = t.validate().unwrap_err();
        let Error::Validation(v) = err else { panic!() };
        let paths: Vec<_> = v.iter().map(|v| v.path.as_str()).collect();
        assert!(paths.contains(&"glare.radius"));
        assert!(paths.contains(&"source_pos"));
        assert!(paths.contains(&"streaks[0].sharp_side_blur"));
    }
}
