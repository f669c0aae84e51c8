use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::seeds::{mix64, SeedSpec};
use super::store::Catalog;
use super::template::TemplateBody;
use crate::compose::{compose_pair, AugmentationParams, ComposeConfig, FlareAsset};
use crate::error::{Error, Result};
use crate::imagecore::io::read_png;
use crate::imagecore::{EncodedImage, Point};
use crate::par::{map_indices, Execution};
use crate::reflect::{render_reflect, ReflectTemplate};
use crate::scatter::{render_scatter, ScatterTemplate};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const MANIFEST_FORMAT: u32 = 1;
const PLAN_SALT: u64 = 0x706c_616e_6e65_7273;
const CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub master_seed: u64,
    pub count: usize,
    /// Probability that a sample uses an imported real flare.
    pub mix_ratio: f64,
    /// Probability that a synthetic sample also gets a ghost chain.
    pub reflect_probability: f64,
    pub compose: ComposeConfig,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            master_seed: 0,
            count: 0,
            mix_ratio: 0.5,
            reflect_probability: 0.5,
            compose: ComposeConfig::default(),
        }
    }
}

impl DatasetSpec {
    fn check(&self) -> Result<()> {
        for (name, p) in [("mix_ratio", self.mix_ratio), ("reflect_probability", self.reflect_probability)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::param(name, format!("{p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Background images, sorted by file name.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl Corpus {
    /// Every `.png` directly inside `dir`.
    pub fn scan(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let mut files = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let p = entry.map_err(|e| Error::io(&dir, e))?.path();
            if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
                files.push(p);
            }
        }
        files.sort();
        if files.is_empty() {
            return Err(Error::Corpus(format!("no PNG backgrounds in {}", dir.display())));
        }
        Ok(Self { dir, files })
    }

    fn names(&self) -> Vec<String> {
        self.files
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
            .collect()
    }
}

/// Flare sources available to a dataset job.
#[derive(Clone, Debug, Default)]
pub struct FlareSources {
    pub scatter: Vec<(String, ScatterTemplate)>,
    pub reflect: Vec<(String, ReflectTemplate)>,
    pub real: Vec<String>,
}

impl FlareSources {
    pub fn from_catalog(catalog: &Catalog) -> Result<Self> {
        let mut s = FlareSources::default();
        for doc in catalog.templates()? {
            match doc.body {
                TemplateBody::Scatter(t) => s.scatter.push((doc.id, t)),
                TemplateBody::Reflect(t) => s.reflect.push((doc.id, t)),
            }
        }
        s.real = catalog.real_ids()?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FlareChoice {
    Synthetic { scatter: usize, reflect: Option<usize> },
    Real { index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedSample {
    pub index: usize,
    pub seed: u64,
    pub background: usize,
    pub flare: FlareChoice,
}

/// Chooses background and flare source for every sample from its seed.
pub fn plan_dataset(
    spec: &DatasetSpec,
    backgrounds: usize,
    scatter: usize,
    reflect: usize,
    real: usize,
) -> Result<Vec<PlannedSample>> {
    spec.check()?;
    if backgrounds == 0 {
        return Err(Error::Corpus("background corpus is empty".into()));
    }
    if spec.count > 0 && scatter == 0 && real == 0 {
        return Err(Error::Corpus("catalog has no scatter templates or imported flares".into()));
    }
    let seeds = SeedSpec::new(spec.master_seed).seeds(spec.count)?;
    Ok(seeds
        .into_iter()
        .enumerate()
        .map(|(index, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ PLAN_SALT));
            let use_real = match (scatter, real) {
                (_, 0) => false,
                (0, _) => true,
                _ => rng.random_bool(spec.mix_ratio),
            };
            let flare = if use_real {
                FlareChoice::Real {
                    index: rng.random_range(0..real),
                }
            } else {
                let s = rng.random_range(0..scatter);
                let r = (reflect > 0 && rng.random_bool(spec.reflect_probability)).then(|| rng.random_range(0..reflect));
                FlareChoice::Synthetic { scatter: s, reflect: r }
            };
            PlannedSample {
                index,
                seed,
                background: rng.random_range(0..backgrounds),
                flare,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the dataset directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub dir: String,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: u32,
    pub dataset_id: String,
    pub master_seed: u64,
    pub count: usize,
    pub mix_ratio: f64,
    pub reflect_probability: f64,
    pub crop: usize,
    pub corpus: CorpusRecord,
    pub templates: Vec<String>,
    pub real_flares: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub seed: u64,
    pub source_id: String,
    pub real: bool,
    pub background: String,
    pub params_digest: String,
    pub params: AugmentationParams,
    pub files: Vec<FileRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFooter {
    pub complete: bool,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ManifestLine {
    Header(ManifestHeader),
    Sample(SampleRecord),
    Footer(ManifestFooter),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub samples: Vec<SampleRecord>,
    /// `None` if the writer never got to close the manifest.
    pub footer: Option<ManifestFooter>,
}

impl DatasetManifest {
    pub fn is_complete(&self) -> bool {
        self.footer.as_ref().is_some_and(|f| f.complete && f.samples == self.samples.len())
    }

    pub fn real_count(&self) -> usize {
        self.samples.iter().filter(|s| s.real).count()
    }
}

/// Single writer for `manifest.jsonl`; lines are appended in index order.
struct ManifestWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl ManifestWriter {
    fn create(path: PathBuf) -> Result<Self> {
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out: BufWriter::new(f),
            path,
        })
    }

    fn line(&mut self, line: &ManifestLine) -> Result<()> {
        let mut s = serde_json::to_string(line)?;
        s.push('\n');
        self.out.write_all(s.as_bytes()).map_err(|e| Error::io(&self.path, e))
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum AssetKey {
    Synthetic(usize, Option<usize>),
    Real(usize),
}

impl From<FlareChoice> for AssetKey {
    fn from(c: FlareChoice) -> Self {
        match c {
            FlareChoice::Synthetic { scatter, reflect } => AssetKey::Synthetic(scatter, reflect),
            FlareChoice::Real { index } => AssetKey::Real(index),
        }
    }
}

/// Moves a ghost chain onto another canvas, keeping the optical center at
/// the same relative position.
fn fit_reflect(t: &ReflectTemplate, scatter: &ScatterTemplate) -> ReflectTemplate {
    let mut t = t.clone();
    if t.canvas != scatter.canvas {
        let sx = scatter.canvas.width as f32 / t.canvas.width as f32;
        let sy = scatter.canvas.height as f32 / t.canvas.height as f32;
        t.optical_center = Point::new(t.optical_center.x * sx, t.optical_center.y * sy);
        t.canvas = scatter.canvas;
    }
    t
}

/// Renders a scatter template, optionally with a ghost chain lit from the
/// same source, into a composable asset.
pub fn synthetic_asset(
    scatter_id: &str,
    scatter: &ScatterTemplate,
    reflect: Option<(&str, &ReflectTemplate)>,
) -> Result<FlareAsset> {
    let layers = render_scatter(scatter)?;
    match reflect {
        Some((rid, rt)) => {
            let ghosts = render_reflect(&fit_reflect(rt, scatter), scatter.source_pos)?;
            FlareAsset::from_layers(format!("{scatter_id}+{rid}"), &layers, Some(&ghosts))
        }
        None => FlareAsset::from_layers(scatter_id, &layers, None),
    }
}

fn build_asset(key: AssetKey, sources: &FlareSources, catalog: Option<&Catalog>) -> Result<FlareAsset> {
    match key {
        AssetKey::Synthetic(s, r) => {
            let (sid, st) = &sources.scatter[s];
            synthetic_asset(sid, st, r.map(|r| (sources.reflect[r].0.as_str(), &sources.reflect[r].1)))
        }
        AssetKey::Real(i) => {
            let id = &sources.real[i];
            catalog
                .ok_or_else(|| Error::NotFound(format!("real flare `{id}` (no catalog)")))?
                .load_real(id)
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn dataset_id(spec: &DatasetSpec, corpus: &[String], sources: &FlareSources) -> Result<String> {
    let key = serde_json::json!({
        "spec": spec,
        "corpus": corpus,
        "scatter": sources.scatter.iter().map(|(id, t)| (id, t)).collect::<Vec<_>>(),
        "reflect": sources.reflect.iter().map(|(id, t)| (id, t)).collect::<Vec<_>>(),
        "real": sources.real,
    });
    Ok(format!("ds-{}", &sha256_hex(&serde_json::to_vec(&key)?)[..16]))
}

fn write_sample(
    out_dir: &Path,
    plan: &PlannedSample,
    bg: &EncodedImage,
    bg_name: &str,
    asset: &FlareAsset,
    cfg: &ComposeConfig,
) -> Result<SampleRecord> {
    let sample = compose_pair(bg, asset, plan.seed, cfg)?;
    let pngs = sample.to_pngs()?;
    let rel = format!("{:06}", plan.index);
    let dir = out_dir.join(&rel);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::with_capacity(5);
    for (name, bytes) in pngs.files() {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
        files.push(FileRecord {
            path: format!("{rel}/{name}"),
            sha256: sha256_hex(bytes),
        });
    }
    let params = sample.provenance.params;
    Ok(SampleRecord {
        index: plan.index,
        seed: plan.seed,
        source_id: sample.provenance.source_id,
        real: matches!(plan.flare, FlareChoice::Real { .. }),
        background: bg_name.to_string(),
        params_digest: params.digest(),
        params,
        files,
    })
}

/// Writes `spec.count` samples and `manifest.jsonl` into `out_dir`.
///
/// Samples are produced in parallel (per `exec`) and recorded in index
/// order by a single manifest writer. If anything fails part-way, the
/// manifest is closed with `complete: false` and the error is returned.
pub fn generate_dataset(
    sources: &FlareSources,
    catalog: Option<&Catalog>,
    corpus: &Corpus,
    spec: &DatasetSpec,
    out_dir: &Path,
    exec: Execution,
) -> Result<DatasetManifest> {
    let plan = plan_dataset(
        spec,
        corpus.files.len(),
        sources.scatter.len(),
        sources.reflect.len(),
        sources.real.len(),
    )?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let names = corpus.names();
    let header = ManifestHeader {
        format: MANIFEST_FORMAT,
        dataset_id: dataset_id(spec, &names, sources)?,
        master_seed: spec.master_seed,
        count: spec.count,
        mix_ratio: spec.mix_ratio,
        reflect_probability: spec.reflect_probability,
        crop: spec.compose.crop,
        corpus: CorpusRecord {
            dir: corpus.dir.to_string_lossy().into_owned(),
            files: names.clone(),
        },
        templates: sources
            .scatter
            .iter()
            .map(|(id, _)| id.clone())
            .chain(sources.reflect.iter().map(|(id, _)| id.clone()))
            .collect(),
        real_flares: sources.real.clone(),
    };
    let mut writer = ManifestWriter::create(out_dir.join(MANIFEST_FILE))?;
    writer.line(&ManifestLine::Header(header.clone()))?;

    let mut samples = Vec::with_capacity(plan.len());
    let result = (|| -> Result<()> {
        let keys: Vec<AssetKey> = {
            let mut k: Vec<AssetKey> = plan.iter().map(|p| p.flare.into()).collect();
            k.sort();
            k.dedup();
            k
        };
        let built = map_indices(keys.len(), exec, |i| build_asset(keys[i], sources, catalog));
        let mut assets = BTreeMap::new();
        for (k, a) in keys.into_iter().zip(built) {
            assets.insert(k, a?);
        }
        for chunk in plan.chunks(CHUNK) {
            let records = map_indices(chunk.len(), exec, |j| {
                let p = &chunk[j];
                let bg = read_png(&corpus.files[p.background])?;
                write_sample(out_dir, p, &bg, &names[p.background], &assets[&p.flare.into()], &spec.compose)
            });
            for r in records {
                let r = r?;
                writer.line(&ManifestLine::Sample(r.clone()))?;
                samples.push(r);
            }
        }
        Ok(())
    })();

    let footer = ManifestFooter {
        complete: result.is_ok(),
        samples: samples.len(),
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    writer.line(&ManifestLine::Footer(footer.clone()))?;
    writer.finish()?;
    result?;
    Ok(DatasetManifest {
        header,
        samples,
        footer: Some(footer),
    })
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut header = None;
    let mut samples = Vec::new();
    let mut footer = None;
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ManifestLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        match parsed {
            ManifestLine::Header(h) => header = Some(h),
            ManifestLine::Sample(s) => samples.push(s),
            ManifestLine::Footer(f) => footer = Some(f),
        }
    }
    let header = header.ok_or_else(|| Error::Corpus(format!("{} has no header", path.display())))?;
    Ok(DatasetManifest { header, samples, footer })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub files_checked: usize,
    /// Human-readable problems; empty means the dataset verifies.
    pub problems: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Re-hashes every file listed in the manifest and checks the manifest is
/// complete with dense indices.
pub fn verify_manifest(dir: &Path) -> Result<VerifyReport> {
    let m = read_manifest(dir)?;
    let mut problems = Vec::new();
    if !m.is_complete() {
        problems.push("manifest is not marked complete".to_string());
    }
    if m.samples.len() != m.header.count && m.is_complete() {
        problems.push(format!("{} samples listed, header says {}", m.samples.len(), m.header.count));
    }
    let mut files_checked = 0;
    for (i, s) in m.samples.iter().enumerate() {
        if s.index != i {
            problems.push(format!("sample {} found at position {i}", s.index));
        }
        for f in &s.files {
            let p = dir.join(&f.path);
            files_checked += 1;
            match fs::read(&p) {
                Ok(bytes) if sha256_hex(&bytes) == f.sha256 => {}
                Ok(_) => problems.push(format!("{}: checksum mismatch", f.path)),
                Err(e) => problems.push(format!("{}: {e}", f.path)),
            }
        }
    }
    Ok(VerifyReport { files_checked, problems })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::library::builtin_templates;
    use crate::imagecore::io::{write_png, BitDepth};

    fn small_sources() -> FlareSources {
        let mut s = FlareSources::default();
        for doc in builtin_templates() {
            match doc.body {
                TemplateBody::Scatter(mut t) => {
                    t.canvas = crate::imagecore::Canvas::new(96, 96);
                    t.source_pos = Point::new(48.0, 48.0);
                    s.scatter.push((doc.id, t));
                }
                TemplateBody::Reflect(t) => s.reflect.push((doc.id, t)),
            }
        }
        s
    }

    fn corpus(dir: &Path) -> Corpus {
        let bgdir = dir.join("bg");
        fs::create_dir_all(&bgdir).unwrap();
        for i in 0..2 {
            let img = EncodedImage::from_fn(80, 72, 3, |x, y, px| {
                px[0] = (x as f32 / 80.0) * 0.5;
                px[1] = (y as f32 / 72.0) * 0.4;
                px[2] = 0.1 * i as f32;
            })
            .unwrap();
            write_png(&img, bgdir.join(format!("bg{i}.png")), BitDepth::Eight).unwrap();
        }
        Corpus::scan(&bgdir).unwrap()
    }

    fn spec(count: usize) -> DatasetSpec {
        DatasetSpec {
            master_seed: 4,
            count,
            compose: ComposeConfig {
                crop: 64,
                ..ComposeConfig::default()
            },
            ..DatasetSpec::default()
        }
    }

    #[test]
    fn plan_mix_and_errors() {
        let p = plan_dataset(&spec(2000), 3, 4, 2, 5).unwrap();
        let real = p.iter().filter(|s| matches!(s.flare, FlareChoice::Real { .. })).count();
        assert!((900..1100).contains(&real), "{real}");
        assert_eq!(p, plan_dataset(&spec(2000), 3, 4, 2, 5).unwrap());
        assert!(plan_dataset(&spec(1), 0, 4, 2, 5).is_err());
        assert!(plan_dataset(&spec(1), 1, 0, 2, 0).is_err());
        assert!(plan_dataset(&spec(0), 1, 0, 0, 0).unwrap().is_empty());
        let only_synth = plan_dataset(&spec(50), 1, 2, 0, 0).unwrap();
        assert!(only_synth.iter().all(|s| matches!(s.flare, FlareChoice::Synthetic { reflect: None, .. })));
    }

    #[test]
    fn empty_dataset_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let c = corpus(dir.path());
        let out = dir.path().join("out");
        let m = generate_dataset(&small_sources(), None, &c, &spec(0), &out, Execution::Parallel).unwrap();
        assert!(m.is_complete());
        assert!(verify_manifest(&out).unwrap().ok());
    }

    #[test]
    fn generation_verifies_and_repeats() {
        let dir = tempfile::tempdir().unwrap();
        let c = corpus(dir.path());
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        let ma = generate_dataset(&small_sources(), None, &c, &spec(6), &a, Execution::Parallel).unwrap();
        let mb = generate_dataset(&small_sources(), None, &c, &spec(6), &b, Execution::Sequential).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(fs::read(a.join(MANIFEST_FILE)).unwrap(), fs::read(b.join(MANIFEST_FILE)).unwrap());
        let report = verify_manifest(&a).unwrap();
        assert!(report.ok(), "{:?}", report.problems);
        assert_eq!(report.files_checked, 30);
        assert_eq!(read_manifest(&a).unwrap(), ma);

        fs::write(a.join("000002/mask.png"), b"tampered").unwrap();
        assert!(!verify_manifest(&a).unwrap().ok());
    }

    #[test]
    fn failure_leaves_incomplete_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let c = corpus(dir.path());
        let out = dir.path().join("out");
        fs::create_dir_all(&out).unwrap();
        fs::write(out.join("000003"), b"blocker").unwrap();
        let err = generate_dataset(&small_sources(), None, &c, &spec(6), &out, Execution::Sequential);
        assert!(err.is_err());
        let m = read_manifest(&out).unwrap();
        assert!(!m.is_complete());
        assert_eq!(m.footer.unwrap().samples, 3);
        assert!(!verify_manifest(&out).unwrap().ok());
    }

    #[test]
    fn empty_corpus_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Corpus::scan(dir.path()), Err(Error::Corpus(_))));
    }
}
