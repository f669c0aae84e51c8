use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use flaresynth::catalog::{
    generate_dataset, library::builtin_templates, synthetic_asset, Corpus, DatasetSpec, FlareSources, TemplateBody,
};
use flaresynth::compose::{compose_pair, ComposeConfig, FlareAsset};
use flaresynth::imagecore::gaussian_blur;
use flaresynth::imagecore::io::{write_png, BitDepth};
use flaresynth::par::{map_indices, Execution};
use flaresynth::EncodedImage;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn background(seed: usize, side: usize) -> EncodedImage {
    EncodedImage::from_fn(side, side, 3, |x, y, px| {
        let v = ((x * 31 + y * 17 + seed * 101) % 97) as f32 / 97.0;
        px[0] = 0.05 + 0.3 * v;
        px[1] = 0.04 + 0.2 * v;
        px[2] = 0.08 + 0.25 * (1.0 - v);
    })
    .unwrap()
}

fn sources() -> FlareSources {
    let mut s = FlareSources::default();
    for d in builtin_templates() {
        match d.body {
            TemplateBody::Scatter(t) => s.scatter.push((d.id, t)),
            TemplateBody::Reflect(t) => s.reflect.push((d.id, t)),
        }
    }
    s
}

fn asset() -> FlareAsset {
    let s = sources();
    let (id, t) = &s.scatter[0];
    synthetic_asset(id, t, Some((&s.reflect[0].0, &s.reflect[0].1))).unwrap()
}

fn compose_batch(c: &mut Criterion) {
    let asset = asset();
    let bgs: Vec<_> = (0..4).map(|i| background(i, 640)).collect();
    let cfg = ComposeConfig::default();
    let mut g = c.benchmark_group("compose_batch_8");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                map_indices(8, exec, |i| compose_pair(&bgs[i % bgs.len()], &asset, i as u64, &cfg).unwrap())
            })
        });
    }
    g.finish();
}

fn blur(c: &mut Criterion) {
    let img = background(0, 640);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut g = c.benchmark_group("gaussian_blur_640");
    g.sample_size(20);
    g.bench_function(BenchmarkId::from_parameter("sequential"), |b| {
        b.iter(|| one.install(|| gaussian_blur(black_box(&img), 6.0).unwrap()))
    });
    g.bench_function(BenchmarkId::from_parameter("parallel"), |b| {
        b.iter(|| gaussian_blur(black_box(&img), 6.0).unwrap())
    });
    g.finish();
}

fn dataset(c: &mut Criterion) {
    let tmp = tempfile::tempdir().unwrap();
    let bg_dir = tmp.path().join("backgrounds");
    std::fs::create_dir_all(&bg_dir).unwrap();
    for i in 0..3 {
        write_png(&background(i, 600), bg_dir.join(format!("bg{i}.png")), BitDepth::Eight).unwrap();
    }
    let corpus = Corpus::scan(&bg_dir).unwrap();
    let sources = sources();
    let spec = DatasetSpec {
        master_seed: 9,
        count: 6,
        mix_ratio: 0.0,
        compose: ComposeConfig { crop: 256, ..ComposeConfig::default() },
        ..DatasetSpec::default()
    };
    let mut g = c.benchmark_group("dataset_6");
    g.sample_size(10).measurement_time(Duration::from_secs(30));
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let out = tmp.path().join(name);
                let _ = std::fs::remove_dir_all(&out);
                generate_dataset(&sources, None, &corpus, &spec, &out, exec).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, blur, compose_batch, dataset);
criterion_main!(benches);
