//! Built-in templates: a few street-light and headlight flares plus two
//! ghost chains, enough to generate a varied dataset out of the box.

use std::f32::consts::PI;

use super::template::{Metadata, TemplateBody, TemplateDoc};
use crate::imagecore::{Canvas, Point};
use crate::reflect::{Caustics, Clip, IrisShape, IrisSpec, ReflectTemplate};
use crate::scatter::{
    ColorCurve, CurvePoint, GlareSpec, LightShape, LightSourceSpec, Rgb, ScatterTemplate, ShimmerSpec, StreakSpec,
};

pub const LIBRARY_CANVAS: Canvas = Canvas::new(640, 640);
const CENTER: Point = Point::new(319.5, 319.5);

fn curve(points: &[(f32, Rgb)]) -> ColorCurve {
    ColorCurve {
        control_points: points.iter().map(|&(t, rgb)| CurvePoint { t, rgb }).collect(),
    }
}

fn meta(name: &str, tags: &[&str]) -> Metadata {
    Metadata {
        name: name.to_string(),
        tags: tags.iter().map(|t| t.to_string()).collect(),
        author: Some("flaresynth".to_string()),
        reference_image: None,
    }
}

fn streak(direction: f32, length: f32, width: f32, peak: Rgb, sharp: f32, soft: f32) -> StreakSpec {
    StreakSpec {
        direction,
        length,
        width,
        section_curve: curve(&[(0.0, peak), (0.4, peak.map(|c| c * 0.35)), (1.0, [0.0; 3])]),
        sharp_side_blur: sharp,
        soft_side_blur: soft,
        falloff_curve: curve(&[(0.0, [1.0; 3]), (0.25, [0.55, 0.55, 0.6]), (1.0, [0.0; 3])]),
    }
}

fn light(shape: LightShape, core: f32, glow: f32, rgb: Rgb) -> Option<LightSourceSpec> {
    Some(LightSourceSpec {
        shape,
        core_radius: core,
        glow_radius: glow,
        rgb,
    })
}

fn sodium_lamp() -> ScatterTemplate {
    ScatterTemplate {
        canvas: LIBRARY_CANVAS,
        source_pos: CENTER,
        glare: GlareSpec {
            radius: 220.0,
            curve: curve(&[
                (0.0, [1.0, 0.8, 0.45]),
                (0.12, [0.75, 0.5, 0.22]),
                (0.45, [0.25, 0.14, 0.05]),
                (1.0, [0.0; 3]),
            ]),
            vanishing_angle: 0.0,
            vanishing_direction: 0.0,
            vanishing_feather: 0.2,
        },
        streaks: vec![],
        shimmer: Some(ShimmerSpec {
            spike_count: 12,
            radius: 140.0,
            intensity: 0.35,
            angular_jitter_seed: 11,
            noise_octaves: 4,
            noise_radial_blur: 0.25,
            rgb: [1.0, 0.75, 0.4],
            noise_intensity: 0.3,
        }),
        light: light(LightShape::Disc, 9.0, 30.0, [1.0, 0.85, 0.6]),
    }
}

fn led_headlight() -> ScatterTemplate {
    ScatterTemplate {
        canvas: LIBRARY_CANVAS,
        source_pos: CENTER,
        glare: GlareSpec {
            radius: 160.0,
            curve: curve(&[
                (0.0, [0.85, 0.9, 1.0]),
                (0.2, [0.35, 0.4, 0.5]),
                (1.0, [0.0; 3]),
            ]),
            vanishing_angle: 0.9,
            vanishing_direction: PI / 2.0,
            vanishing_feather: 0.3,
        },
        streaks: vec![
            streak(0.05, 520.0, 9.0, [0.9, 0.95, 1.0], 0.8, 3.5),
            streak(0.05 + PI / 2.0, 300.0, 6.0, [0.7, 0.75, 0.85], 0.8, 2.5),
        ],
        shimmer: None,
        light: light(LightShape::Polygon { sides: 6, rotation: 0.0 }, 7.0, 22.0, [0.9, 0.95, 1.0]),
    }
}

fn starburst() -> ScatterTemplate {
    ScatterTemplate {
        canvas: LIBRARY_CANVAS,
        source_pos: CENTER,
        glare: GlareSpec {
            radius: 120.0,
            curve: curve(&[(0.0, [0.95, 0.95, 0.95]), (0.3, [0.3, 0.3, 0.32]), (1.0, [0.0; 3])]),
            vanishing_angle: 0.0,
            vanishing_direction: 0.0,
            vanishing_feather: 0.2,
        },
        streaks: (0..3)
            .map(|i| streak(0.3 + i as f32 * PI / 3.0, 360.0, 5.0, [0.85, 0.85, 0.9], 1.0, 2.0))
            .collect(),
        shimmer: Some(ShimmerSpec {
            spike_count: 24,
            radius: 200.0,
            intensity: 0.5,
            angular_jitter_seed: 5,
            noise_octaves: 5,
            noise_radial_blur: 0.4,
            rgb: [0.9, 0.92, 1.0],
            noise_intensity: 0.25,
        }),
        light: light(LightShape::Disc, 5.0, 16.0, [1.0, 1.0, 1.0]),
    }
}

fn neon_sign() -> ScatterTemplate {
    ScatterTemplate {
        canvas: LIBRARY_CANVAS,
        source_pos: CENTER,
        glare: GlareSpec {
            radius: 260.0,
            curve: curve(&[
                (0.0, [0.9, 0.3, 0.7]),
                (0.1, [0.55, 0.15, 0.45]),
                (0.5, [0.12, 0.03, 0.1]),
                (1.0, [0.0; 3]),
            ]),
            vanishing_angle: 0.0,
            vanishing_direction: 0.0,
            vanishing_feather: 0.2,
        },
        streaks: vec![streak(2.2, 420.0, 14.0, [0.8, 0.3, 0.7], 1.5, 5.0)],
        shimmer: None,
        light: light(LightShape::Disc, 12.0, 40.0, [1.0, 0.6, 0.9]),
    }
}

fn iris(k: f32, size: f32, rgb: Rgb, opacity: f32, shape: IrisShape) -> IrisSpec {
    IrisSpec {
        k,
        size,
        rgb,
        opacity,
        shape,
        edge_feather: 2.0,
        caustics: None,
        clip: None,
    }
}

fn hexagon_chain() -> ReflectTemplate {
    let hex = IrisShape::Polygon { sides: 6, rotation: 0.26 };
    let mut big = iris(-1.1, 46.0, [0.35, 0.7, 0.5], 0.35, hex);
    big.caustics = Some(Caustics { opacity_slope: 0.002 });
    big.clip = Some(Clip {
        threshold: 260.0,
        mask_scale: 1.1,
    });
    ReflectTemplate {
        canvas: LIBRARY_CANVAS,
        optical_center: Point::new(430.0, 250.0),
        irises: vec![
            iris(-0.35, 10.0, [0.6, 0.45, 0.9], 0.5, IrisShape::Disc),
            iris(-0.6, 22.0, [0.3, 0.55, 0.95], 0.3, hex),
            big,
            iris(0.4, 14.0, [0.9, 0.6, 0.3], 0.3, IrisShape::Ring { inner_ratio: 0.6 }),
        ],
    }
}

fn led_lattice() -> ReflectTemplate {
    ReflectTemplate {
        canvas: LIBRARY_CANVAS,
        optical_center: Point::new(230.0, 400.0),
        irises: vec![
            iris(
                -0.8,
                30.0,
                [0.55, 0.8, 1.0],
                0.45,
                IrisShape::Lattice {
                    rows: 3,
                    cols: 4,
                    pitch: 9.0,
                    cell_radius: 3.0,
                },
            ),
            iris(-0.45, 16.0, [0.4, 0.9, 0.6], 0.3, IrisShape::Disc),
        ],
    }
}

/// Every built-in template, in a fixed order.
pub fn builtin_templates() -> Vec<TemplateDoc> {
    vec![
        TemplateDoc::new("sodium-lamp", TemplateBody::Scatter(sodium_lamp()), meta("Sodium street lamp", &["glare", "shimmer"])),
        TemplateDoc::new("led-headlight", TemplateBody::Scatter(led_headlight()), meta("LED headlight", &["streak"])),
        TemplateDoc::new("starburst", TemplateBody::Scatter(starburst()), meta("Aperture starburst", &["streak", "shimmer"])),
        TemplateDoc::new("neon-sign", TemplateBody::Scatter(neon_sign()), meta("Neon sign", &["glare", "streak"])),
        TemplateDoc::new("hexagon-chain", TemplateBody::Reflect(hexagon_chain()), meta("Hexagonal ghost chain", &["ghost"])),
        TemplateDoc::new("led-lattice", TemplateBody::Reflect(led_lattice()), meta("LED matrix ghosts", &["ghost", "lattice"])),
    ]
}
