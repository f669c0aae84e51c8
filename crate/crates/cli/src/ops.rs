use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use flaresynth::catalog::{library, synthetic_asset, Catalog, TemplateBody, TemplateDoc};
use flaresynth::compose::{FlareAsset, PairedSample, SegClass};
use flaresynth::imagecore::io::{encode_png, BitDepth};
use flaresynth::imagecore::{downscale_to_fit, Canvas};
use flaresynth::reflect::render_reflect;
use flaresynth::scatter::render_scatter;
use flaresynth::{EncodedImage, Error, Point, Result};

pub const PREVIEW_MAX_SIDE: usize = 512;

/// Preview: at most 512 px on the long side, 8-bit. Full: native size,
/// 16-bit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    #[default]
    Preview,
    Full,
}

pub fn encode_image(img: &EncodedImage, encoding: Encoding) -> Result<Vec<u8>> {
    match encoding {
        Encoding::Preview => encode_png(&downscale_to_fit(img, PREVIEW_MAX_SIDE), BitDepth::Eight),
        Encoding::Full => encode_png(img, BitDepth::Sixteen),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RenderOptions {
    /// Light position for ghost chains, in output canvas coordinates.
    pub light_pos: Option<Point>,
    /// Renders on a different canvas, scaling template positions.
    pub canvas: Option<Canvas>,
}

fn rescale(p: Point, from: Canvas, to: Canvas) -> Point {
    Point::new(
        p.x * to.width as f32 / from.width as f32,
        p.y * to.height as f32 / from.height as f32,
    )
}

/// Renders a template to an encoded RGB image.
pub fn render_doc(doc: &TemplateDoc, opts: &RenderOptions) -> Result<EncodedImage> {
    match &doc.body {
        TemplateBody::Scatter(t) => {
            let mut t = t.clone();
            if let Some(c) = opts.canvas {
                t.source_pos = rescale(t.source_pos, t.canvas, c);
                t.canvas = c;
            }
            Ok(render_scatter(&t)?.flare)
        }
        TemplateBody::Reflect(t) => {
            let mut t = t.clone();
            if let Some(c) = opts.canvas {
                t.optical_center = rescale(t.optical_center, t.canvas, c);
                t.canvas = c;
            }
            let light = opts
                .light_pos
                .ok_or_else(|| Error::InvalidParameter {
                    name: "light_pos",
                    reason: "required for reflect templates".into(),
                })?;
            render_reflect(&t, light)
        }
    }
}

pub fn render_png(doc: &TemplateDoc, opts: &RenderOptions, encoding: Encoding) -> Result<Vec<u8>> {
    encode_image(&render_doc(doc, opts)?, encoding)
}

/// Opens `dir` as a catalog if it exists; otherwise the built-in library
/// is used read-only.
pub enum TemplateSource {
    Catalog(Catalog),
    Builtin,
}

impl TemplateSource {
    pub fn open(dir: &Path) -> Result<Self> {
        if dir.exists() {
            Ok(TemplateSource::Catalog(Catalog::open(dir)?))
        } else {
            Ok(TemplateSource::Builtin)
        }
    }

    pub fn get(&self, id: &str) -> Result<TemplateDoc> {
        match self {
            TemplateSource::Catalog(c) => c.get_template(id),
            TemplateSource::Builtin => library::builtin_templates()
                .into_iter()
                .find(|d| d.id == id)
                .ok_or_else(|| Error::NotFound(format!("template `{id}`"))),
        }
    }

    pub fn catalog(&self) -> Option<&Catalog> {
        match self {
            TemplateSource::Catalog(c) => Some(c),
            TemplateSource::Builtin => None,
        }
    }
}

/// Builds a composable asset from a scatter template (plus optional ghost
/// chain) or an imported flare.
pub fn asset_from(scatter: Option<&TemplateDoc>, reflect: Option<&TemplateDoc>, real: Option<(&Catalog, &str)>) -> Result<FlareAsset> {
    match (scatter, real) {
        (Some(doc), None) => {
            let TemplateBody::Scatter(st) = &doc.body else {
                return Err(Error::InvalidInput(format!("`{}` is not a scatter template", doc.id)));
            };
            let ghosts = match reflect {
                Some(r) => match &r.body {
                    TemplateBody::Reflect(rt) => Some((r.id.as_str(), rt)),
                    _ => return Err(Error::InvalidInput(format!("`{}` is not a reflect template", r.id))),
                },
                None => None,
            };
            synthetic_asset(&doc.id, st, ghosts)
        }
        (None, Some((catalog, id))) => {
            if reflect.is_some() {
                return Err(Error::InvalidInput("ghost chains only combine with scatter templates".into()));
            }
            catalog.load_real(id)
        }
        _ => Err(Error::InvalidInput("give exactly one of a scatter template or an imported flare".into())),
    }
}

/// Base64 PNGs of a sample, for the designer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreviewBundle {
    pub input: String,
    pub gt: String,
    pub flare: String,
    pub light: String,
    pub mask: String,
}

pub fn preview_bundle(sample: &PairedSample, encoding: Encoding) -> Result<PreviewBundle> {
    let b64 = |bytes: Vec<u8>| STANDARD.encode(bytes);
    Ok(PreviewBundle {
        input: b64(encode_image(&sample.input, encoding)?),
        gt: b64(encode_image(&sample.flare_free, encoding)?),
        flare: b64(encode_image(&sample.flare_gt_encoded(), encoding)?),
        light: b64(encode_image(&sample.light_source, encoding)?),
        mask: b64(sample.seg.to_png()?),
    })
}

/// Pixel count per segmentation class, keyed by class name.
pub fn class_counts(sample: &PairedSample) -> serde_json::Map<String, serde_json::Value> {
    SegClass::ALL
        .iter()
        .map(|&c| {
            let name = serde_json::to_value(c).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
            (name, sample.seg.count(c).into())
        })
        .collect()
}
