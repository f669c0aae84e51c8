use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use flaresynth::catalog::{
    generate_dataset, library, parse_template, verify_manifest, Catalog, Corpus, DatasetSpec, FlareSources, Metadata,
    TemplateBody,
};
use flaresynth::compose::{compose_pair, extract_light_source_baseline, BaselineConfig, ComposeConfig, SegMap};
use flaresynth::imagecore::io::{read_png, write_png, BitDepth};
use flaresynth::imagecore::Canvas;
use flaresynth::metrics::{evaluate, EvalItem};
use flaresynth::par::Execution;
use flaresynth::Point;

use crate::ops::{asset_from, class_counts, render_png, Encoding, RenderOptions, TemplateSource};
use crate::service::{self, AppState};

#[derive(Debug, Parser)]
#[command(name = "flaresynth", version, about = "Nighttime lens-flare synthesis and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Write a JSON report of the run here.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a template to PNG.
    Render(RenderArgs),
    /// Compose one paired sample from a background and a flare.
    Compose(ComposeArgs),
    /// Generate a paired dataset with a manifest.
    Dataset(DatasetArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Threshold-based light source extraction.
    ExtractLight(ExtractArgs),
    /// Check template files.
    Validate(ValidateArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Create a catalog holding the built-in templates.
    InitCatalog(CatalogArgs),
    /// Import a captured flare and its light-source annotation.
    ImportFlare(ImportArgs),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Render(a) => &a.common,
            Command::Compose(a) => &a.common,
            Command::Dataset(a) => &a.common,
            Command::Eval(a) => &a.common,
            Command::ExtractLight(a) => &a.common,
            Command::Validate(a) => &a.common,
            Command::Serve(a) => &a.common,
            Command::InitCatalog(a) => &a.common,
            Command::ImportFlare(a) => &a.common,
        }
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or("expected X,Y")?;
    let p = |v: &str| v.trim().parse::<f32>().map_err(|e| format!("`{v}`: {e}"));
    Ok(Point::new(p(x)?, p(y)?))
}

fn parse_canvas(s: &str) -> Result<Canvas, String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    let p = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("`{v}`: {e}"));
    let (w, h) = (p(w)?, p(h)?);
    if w == 0 || h == 0 {
        return Err("canvas sides must be positive".into());
    }
    Ok(Canvas::new(w, h))
}

#[derive(Debug, Clone, Args)]
#[group(id = "source", required = true, multiple = false, args = ["template", "id"])]
pub struct TemplateArg {
    /// Template JSON file.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Template id in the catalog.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub source: TemplateArg,
    /// Catalog directory; the built-in library is used if it does not exist.
    #[arg(long, default_value = "catalog")]
    pub catalog: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Light position X,Y for ghost chains.
    #[arg(long, value_parser = parse_point)]
    pub light_pos: Option<Point>,
    /// Render on a WIDTHxHEIGHT canvas instead of the template's.
    #[arg(long, value_parser = parse_canvas)]
    pub canvas: Option<Canvas>,
    /// 8-bit, at most 512 px on the long side.
    #[arg(long)]
    pub preview: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub background: PathBuf,
    /// Scatter template file.
    #[arg(long, conflicts_with_all = ["id", "real_id"])]
    pub template: Option<PathBuf>,
    /// Scatter template id.
    #[arg(long, conflicts_with = "real_id")]
    pub id: Option<String>,
    /// Ghost chain id added to the scatter template.
    #[arg(long)]
    pub reflect_id: Option<String>,
    /// Imported flare id.
    #[arg(long)]
    pub real_id: Option<String>,
    #[arg(long, default_value = "catalog")]
    pub catalog: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub crop: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Number of samples.
    #[arg(long, short)]
    pub n: usize,
    #[arg(long, default_value = "catalog")]
    pub catalog: PathBuf,
    /// Directory of background PNGs.
    #[arg(long, default_value = "backgrounds")]
    pub backgrounds: PathBuf,
    #[arg(long, default_value = "dataset")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub mix_ratio: f64,
    #[arg(long, default_value_t = 0.5)]
    pub reflect_probability: f64,
    #[arg(long, default_value_t = 512)]
    pub crop: usize,
    /// Single-threaded generation.
    #[arg(long)]
    pub sequential: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Directory of predicted PNGs.
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth PNGs with the same file names.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of segmentation masks with the same file names.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Also write per-image JSON lines here.
    #[arg(long)]
    pub jsonl: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Restored image to paste the source back into.
    #[arg(long)]
    pub restored: Option<PathBuf>,
    #[arg(long)]
    pub mask_out: PathBuf,
    #[arg(long)]
    pub blended_out: Option<PathBuf>,
    #[arg(long, default_value_t = BaselineConfig::default().threshold)]
    pub threshold: f32,
    #[arg(long, default_value_t = BaselineConfig::default().opening_radius)]
    pub opening_radius: u32,
    #[arg(long, default_value_t = BaselineConfig::default().feather_sigma)]
    pub feather: f32,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "catalog")]
    pub catalog: PathBuf,
    #[arg(long)]
    pub backgrounds: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8077")]
    pub addr: SocketAddr,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct CatalogArgs {
    #[arg(long, default_value = "catalog")]
    pub catalog: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub flare: PathBuf,
    /// Light-source annotation, same size as the flare.
    #[arg(long)]
    pub light: Option<PathBuf>,
    #[arg(long, default_value = "catalog")]
    pub catalog: PathBuf,
    #[arg(long, default_value = "")]
    pub name: String,
    #[command(flatten)]
    pub common: Common,
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Runs a parsed command line. Output goes to stdout; the optional report
/// is written last.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let common = cli.command.common().clone();
    let report = match cli.command {
        Command::Render(a) => render(a)?,
        Command::Compose(a) => compose(a)?,
        Command::Dataset(a) => dataset(a)?,
        Command::Eval(a) => eval(a)?,
        Command::ExtractLight(a) => extract(a)?,
        Command::Validate(a) => validate(a)?,
        Command::Serve(a) => serve(a)?,
        Command::InitCatalog(a) => init_catalog(a)?,
        Command::ImportFlare(a) => import_flare(a)?,
    };
    if let Some(path) = common.report {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write(&path, text.as_bytes())?;
    }
    Ok(())
}

fn render(a: RenderArgs) -> anyhow::Result<Value> {
    let doc = match (&a.source.template, &a.source.id) {
        (Some(path), _) => parse_template(&String::from_utf8(read(path)?)?).with_context(|| path.display().to_string())?,
        (None, Some(id)) => TemplateSource::open(&a.catalog)?.get(id)?,
        (None, None) => bail!("give --template or --id"),
    };
    let encoding = if a.preview { Encoding::Preview } else { Encoding::Full };
    let opts = RenderOptions {
        light_pos: a.light_pos,
        canvas: a.canvas,
    };
    let png = render_png(&doc, &opts, encoding)?;
    write(&a.out, &png)?;
    println!("wrote {}", a.out.display());
    Ok(json!({
        "command": "render",
        "id": doc.id,
        "kind": doc.body.kind(),
        "encoding": encoding,
        "out": a.out,
        "bytes": png.len(),
    }))
}

fn compose(a: ComposeArgs) -> anyhow::Result<Value> {
    let source = TemplateSource::open(&a.catalog)?;
    let scatter = match (&a.template, &a.id) {
        (Some(path), _) => Some(parse_template(&String::from_utf8(read(path)?)?)?),
        (None, Some(id)) => Some(source.get(id)?),
        (None, None) => None,
    };
    let reflect = a.reflect_id.as_deref().map(|id| source.get(id)).transpose()?;
    let real = match (&a.real_id, source.catalog()) {
        (Some(id), Some(cat)) => Some((cat, id.as_str())),
        (Some(_), None) => bail!("catalog {} does not exist", a.catalog.display()),
        (None, _) => None,
    };
    let asset = asset_from(scatter.as_ref(), reflect.as_ref(), real)?;
    let bg = read_png(&a.background)?;
    let cfg = ComposeConfig {
        crop: a.crop,
        ..ComposeConfig::default()
    };
    let sample = compose_pair(&bg, &asset, a.common.seed, &cfg)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let bundle = sample.to_pngs()?;
    for (name, bytes) in bundle.files() {
        write(&a.out_dir.join(name), bytes)?;
    }
    println!("wrote 5 images to {}", a.out_dir.display());
    Ok(json!({
        "command": "compose",
        "out_dir": a.out_dir,
        "provenance": sample.provenance,
        "class_counts": class_counts(&sample),
    }))
}

fn dataset(a: DatasetArgs) -> anyhow::Result<Value> {
    let catalog = match TemplateSource::open(&a.catalog)? {
        TemplateSource::Catalog(c) => Some(c),
        TemplateSource::Builtin => None,
    };
    let sources = match &catalog {
        Some(c) => FlareSources::from_catalog(c)?,
        None => {
            let mut s = FlareSources::default();
            for doc in library::builtin_templates() {
                match doc.body {
                    TemplateBody::Scatter(t) => s.scatter.push((doc.id, t)),
                    TemplateBody::Reflect(t) => s.reflect.push((doc.id, t)),
                }
            }
            s
        }
    };
    let corpus = Corpus::scan(&a.backgrounds)?;
    let spec = DatasetSpec {
        master_seed: a.common.seed,
        count: a.n,
        mix_ratio: a.mix_ratio,
        reflect_probability: a.reflect_probability,
        compose: ComposeConfig {
            crop: a.crop,
            ..ComposeConfig::default()
        },
    };
    let exec = if a.sequential { Execution::Sequential } else { Execution::default() };
    let manifest = generate_dataset(&sources, catalog.as_ref(), &corpus, &spec, &a.out, exec)?;
    let verify = verify_manifest(&a.out)?;
    if !verify.ok() {
        bail!("dataset failed verification: {}", verify.problems.join("; "));
    }
    println!(
        "wrote {} samples ({} real) to {}, dataset {}",
        manifest.samples.len(),
        manifest.real_count(),
        a.out.display(),
        manifest.header.dataset_id
    );
    Ok(json!({
        "command": "dataset",
        "dataset_id": manifest.header.dataset_id,
        "samples": manifest.samples.len(),
        "real": manifest.real_count(),
        "files_checked": verify.files_checked,
        "out": a.out,
    }))
}

fn png_names(dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let p = entry?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            names.extend(p.file_name().map(|n| n.to_string_lossy().into_owned()));
        }
    }
    names.sort();
    Ok(names)
}

fn eval(a: EvalArgs) -> anyhow::Result<Value> {
    let names = png_names(&a.pred)?;
    if names.is_empty() {
        bail!("no PNG predictions in {}", a.pred.display());
    }
    for n in &names {
        if !a.gt.join(n).is_file() {
            bail!("no ground truth for {n} in {}", a.gt.display());
        }
    }
    let report = evaluate(names.len(), Execution::default(), |i| {
        let name = &names[i];
        let mask = match &a.masks {
            Some(dir) if dir.join(name).is_file() => {
                let p = dir.join(name);
                let bytes = fs::read(&p).map_err(|e| flaresynth::Error::Io { path: p, source: e })?;
                Some(SegMap::from_png(&bytes)?)
            }
            _ => None,
        };
        Ok(EvalItem {
            name: name.clone(),
            prediction: read_png(a.pred.join(name))?,
            target: read_png(a.gt.join(name))?,
            mask,
        })
    })?;
    print!("{}", report.to_table());
    if let Some(path) = &a.jsonl {
        write(path, report.to_jsonl().as_bytes())?;
    }
    Ok(json!({ "command": "eval", "report": report }))
}

fn extract(a: ExtractArgs) -> anyhow::Result<Value> {
    let input = read_png(&a.input)?;
    let restored = a.restored.as_ref().map(read_png).transpose()?;
    let cfg = BaselineConfig {
        threshold: a.threshold,
        opening_radius: a.opening_radius,
        feather_sigma: a.feather,
    };
    let out = extract_light_source_baseline(&input, restored.as_ref(), &cfg)?;
    write_png(&out.mask, &a.mask_out, BitDepth::Sixteen)?;
    if let Some(p) = &a.blended_out {
        write_png(&out.blended, p, BitDepth::Sixteen)?;
    }
    if out.is_empty() {
        println!("no pixels above threshold {}; mask is empty", cfg.threshold);
    } else {
        println!("wrote {}", a.mask_out.display());
    }
    Ok(json!({
        "command": "extract-light",
        "config": cfg,
        "empty": out.is_empty(),
        "selected_pixels": out.binary.data().iter().filter(|&&v| v > 0.0).count(),
    }))
}

fn validate(a: ValidateArgs) -> anyhow::Result<Value> {
    let mut results = Vec::new();
    let mut bad = 0;
    for path in &a.files {
        let text = String::from_utf8(read(path)?).with_context(|| path.display().to_string())?;
        match parse_template(&text) {
            Ok(doc) => {
                println!("ok {} ({} `{}`)", path.display(), doc.body.kind(), doc.id);
                results.push(json!({ "file": path, "valid": true }));
            }
            Err(e) => {
                bad += 1;
                println!("invalid {}: {e}", path.display());
                results.push(json!({ "file": path, "valid": false, "error": e.to_string() }));
            }
        }
    }
    if bad > 0 {
        bail!("{bad} of {} templates invalid", a.files.len());
    }
    Ok(json!({ "command": "validate", "results": results }))
}

fn serve(a: ServeArgs) -> anyhow::Result<Value> {
    let catalog = Catalog::open(&a.catalog)?;
    if catalog.template_ids()?.is_empty() {
        catalog.install_builtin()?;
    }
    let corpus = a.backgrounds.as_ref().map(Corpus::scan).transpose()?;
    let state = Arc::new(AppState { catalog, corpus });
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(service::serve(state, a.addr))?;
    Ok(json!({ "command": "serve" }))
}

fn init_catalog(a: CatalogArgs) -> anyhow::Result<Value> {
    let catalog = Catalog::open(&a.catalog)?;
    let written = catalog.install_builtin()?;
    println!("{} templates written to {}", written.len(), a.catalog.display());
    Ok(json!({ "command": "init-catalog", "written": written }))
}

fn import_flare(a: ImportArgs) -> anyhow::Result<Value> {
    let catalog = Catalog::open(&a.catalog)?;
    let flare = read(&a.flare)?;
    let light = a.light.as_deref().map(read).transpose()?;
    let meta = Metadata {
        name: a.name,
        ..Metadata::default()
    };
    let rep = catalog.import_real_flare(&flare, light.as_deref(), meta)?;
    println!("imported {}", rep.id);
    if let Some(w) = &rep.warning {
        println!(
            "warning: light exceeds flare at {} pixels; stored as given",
            w.pixels
        );
    }
    Ok(json!({ "command": "import-flare", "id": rep.id, "warning": rep.warning }))
}
