use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::library::builtin_templates;
use super::template::{parse_template, valid_id, validate_template, Metadata, TemplateDoc};
use crate::compose::FlareAsset;
use crate::error::{Error, Result};
use crate::imagecore::io::decode_png;
use crate::imagecore::EncodedImage;

/// Largest amount (in 8-bit steps) a light image may exceed its flare
/// before an import is flagged.
pub const DOMINANCE_TOLERANCE: f32 = 2.0 / 255.0;

/// Directory-backed store of template documents and captured flares:
///
/// ```text
/// templates/{id}.json
/// real/{id}/flare.png
/// real/{id}/light.png
/// real/{id}/meta.json
/// ```
#[derive(Debug)]
pub struct Catalog {
    root: PathBuf,
    writes: Mutex<()>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DominanceWarning {
    /// Pixels where some channel of the light exceeds the flare by more
    /// than the tolerance.
    pub pixels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealFlareMeta {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub metadata: Metadata,
    pub warning: Option<DominanceWarning>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub id: String,
    pub warning: Option<DominanceWarning>,
}

/// Pixels where `light` exceeds `flare` by more than the tolerance.
pub fn dominance_violations(flare: &EncodedImage, light: &EncodedImage) -> Result<usize> {
    let (f, l) = (flare.to_rgb(), light.to_rgb());
    f.ensure_same_shape(&l)?;
    Ok(f
        .data()
        .chunks_exact(3)
        .zip(l.data().chunks_exact(3))
        .filter(|(f, l)| f.iter().zip(l.iter()).any(|(a, b)| b - a > DOMINANCE_TOLERANCE + 1e-6))
        .count())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl Catalog {
    /// Opens (creating if needed) a catalog directory.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in ["templates", "real"] {
            let d = root.join(sub);
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        Ok(Self {
            root,
            writes: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes every built-in template not already present. Returns the ids
    /// written.
    pub fn install_builtin(&self) -> Result<Vec<String>> {
        let mut written = Vec::new();
        for doc in builtin_templates() {
            if !self.template_path(&doc.id).exists() {
                self.put_template(&doc)?;
                written.push(doc.id);
            }
        }
        Ok(written)
    }

    fn template_path(&self, id: &str) -> PathBuf {
        self.root.join("templates").join(format!("{id}.json"))
    }

    fn checked_id<'a>(&self, id: &'a str) -> Result<&'a str> {
        if valid_id(id) {
            Ok(id)
        } else {
            Err(Error::NotFound(format!("template `{id}`")))
        }
    }

    fn list_dir(&self, sub: &str, keep: impl Fn(&Path) -> Option<String>) -> Result<Vec<String>> {
        let dir = self.root.join(sub);
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            if let Some(id) = keep(&entry.path()) {
                ids.push(id);
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Sorted template ids.
    pub fn template_ids(&self) -> Result<Vec<String>> {
        self.list_dir("templates", |p| {
            (p.extension()? == "json").then(|| p.file_stem()?.to_str().map(str::to_string))?
        })
    }

    pub fn template_text(&self, id: &str) -> Result<String> {
        let path = self.template_path(self.checked_id(id)?);
        match fs::read_to_string(&path) {
            Ok(s) => Ok(s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::NotFound(format!("template `{id}`"))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    pub fn get_template(&self, id: &str) -> Result<TemplateDoc> {
        parse_template(&self.template_text(id)?)
    }

    /// Validates and stores `doc`. Returns whether the file changed.
    pub fn put_template(&self, doc: &TemplateDoc) -> Result<bool> {
        validate_template(doc)?;
        let text = doc.to_json();
        let path = self.template_path(&doc.id);
        let _guard = self.writes.lock().unwrap_or_else(|p| p.into_inner());
        if fs::read_to_string(&path).is_ok_and(|old| old == text) {
            return Ok(false);
        }
        write_atomic(&path, text.as_bytes())?;
        Ok(true)
    }

    /// Every stored template, sorted by id.
    pub fn templates(&self) -> Result<Vec<TemplateDoc>> {
        self.template_ids()?.iter().map(|id| self.get_template(id)).collect()
    }

    /// Stores a captured flare and its light-source annotation as given.
    /// The id is derived from the image bytes, so re-importing is a no-op.
    pub fn import_real_flare(
        &self,
        flare_png: &[u8],
        light_png: Option<&[u8]>,
        metadata: Metadata,
    ) -> Result<ImportReport> {
        let light_png = light_png.ok_or_else(|| {
            Error::InvalidInput("a light-source annotation image is required to import a flare".into())
        })?;
        let flare = decode_png(flare_png)?;
        let light = decode_png(light_png)?;
        if (flare.width(), flare.height()) != (light.width(), light.height()) {
            return Err(Error::ShapeMismatch {
                left: format!("{}x{} flare", flare.width(), flare.height()),
                right: format!("{}x{} light", light.width(), light.height()),
            });
        }
        let pixels = dominance_violations(&flare, &light)?;
        let warning = (pixels > 0).then_some(DominanceWarning { pixels });

        let mut h = Sha256::new();
        h.update((flare_png.len() as u64).to_le_bytes());
        h.update(flare_png);
        h.update(light_png);
        let id = format!("real-{}", &hex::encode(h.finalize())[..12]);

        let meta = RealFlareMeta {
            id: id.clone(),
            width: flare.width(),
            height: flare.height(),
            metadata,
            warning: warning.clone(),
        };
        let dir = self.root.join("real").join(&id);
        let _guard = self.writes.lock().unwrap_or_else(|p| p.into_inner());
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_atomic(&dir.join("flare.png"), flare_png)?;
        write_atomic(&dir.join("light.png"), light_png)?;
        let mut json = serde_json::to_string_pretty(&meta)?;
        json.push('\n');
        write_atomic(&dir.join("meta.json"), json.as_bytes())?;
        Ok(ImportReport { id, warning })
    }

    /// Sorted ids of imported flares.
    pub fn real_ids(&self) -> Result<Vec<String>> {
        self.list_dir("real", |p| {
            (p.is_dir() && p.join("meta.json").exists()).then(|| p.file_name()?.to_str().map(str::to_string))?
        })
    }

    fn real_dir(&self, id: &str) -> Result<PathBuf> {
        let dir = self.root.join("real").join(id);
        if !valid_id(id) || !dir.join("meta.json").exists() {
            return Err(Error::NotFound(format!("real flare `{id}`")));
        }
        Ok(dir)
    }

    pub fn real_meta(&self, id: &str) -> Result<RealFlareMeta> {
        let path = self.real_dir(id)?.join("meta.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Raw `(flare, light)` PNG bytes as imported.
    pub fn real_pngs(&self, id: &str) -> Result<(Vec<u8>, Vec<u8>)> {
        let dir = self.real_dir(id)?;
        let read = |name: &str| {
            let p = dir.join(name);
            fs::read(&p).map_err(|e| Error::io(&p, e))
        };
        Ok((read("flare.png")?, read("light.png")?))
    }

    pub fn load_real(&self, id: &str) -> Result<FlareAsset> {
        let (f, l) = self.real_pngs(id)?;
        FlareAsset::captured(id, decode_png(&f)?.to_rgb(), decode_png(&l)?.to_rgb())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::io::{encode_png, BitDepth};

    fn png(v: f32) -> Vec<u8> {
        let img = EncodedImage::from_fn(8, 6, 3, |x, _, px| px.fill(if x < 2 { v } else { 0.1 })).unwrap();
        encode_png(&img, BitDepth::Eight).unwrap()
    }

    #[test]
    fn templates_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        let written = cat.install_builtin().unwrap();
        assert_eq!(written.len(), builtin_templates().len());
        assert!(cat.install_builtin().unwrap().is_empty());
        let ids = cat.template_ids().unwrap();
        assert_eq!(ids.len(), written.len());
        let doc = cat.get_template(&ids[0]).unwrap();
        assert!(!cat.put_template(&doc).unwrap());
        assert!(matches!(cat.get_template("nope"), Err(Error::NotFound(_))));
        assert!(matches!(cat.get_template("../etc"), Err(Error::NotFound(_))));
    }

    #[test]
    fn import_checks_light() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        let (flare, light) = (png(0.8), png(0.5));
        let rep = cat.import_real_flare(&flare, Some(&light), Metadata::default()).unwrap();
        assert!(rep.id.starts_with("real-"));
        assert_eq!(rep.warning, None);
        assert_eq!(cat.real_pngs(&rep.id).unwrap(), (flare.clone(), light.clone()));
        assert_eq!(cat.real_ids().unwrap(), [rep.id.clone()]);

        let bright = png(1.0);
        let rep = cat.import_real_flare(&flare, Some(&bright), Metadata::default()).unwrap();
        assert_eq!(rep.warning, Some(DominanceWarning { pixels: 12 }));
        assert_eq!(cat.real_meta(&rep.id).unwrap().warning, rep.warning);

        assert!(matches!(
            cat.import_real_flare(&flare, None, Metadata::default()),
            Err(Error::InvalidInput(_))
        ));
        let small = encode_png(&EncodedImage::zeros(4, 4, 3).unwrap(), BitDepth::Eight).unwrap();
        assert!(cat.import_real_flare(&flare, Some(&small), Metadata::default()).is_err());
    }
}
