use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use flaresynth::catalog::library::builtin_templates;
use flaresynth::compose::SegMap;
use flaresynth::imagecore::io::{read_png, write_png, BitDepth};
use flaresynth::EncodedImage;
use flaresynth_cli::ops::{render_png, Encoding, RenderOptions};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flaresynth"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn backgrounds(dir: &Path, n: usize, side: usize) {
    fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let bg = EncodedImage::from_fn(side, side, 3, |x, y, px| {
            px.fill(0.08 + 0.1 * (((x * (i + 1) + y) % 50) as f32 / 50.0));
        })
        .unwrap();
        write_png(&bg, dir.join(format!("bg{i}.png")), BitDepth::Eight).unwrap();
    }
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["render", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["dataset", "--n", "lots"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["render", "--id", "hexagon-chain", "--out", "x.png"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: ") && err.contains("light_pos"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(!dir.path().join("x.png").exists());
}

#[test]
fn preview_render_matches_library_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["render", "--id", "starburst", "--preview", "--out", "p.png"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = builtin_templates().into_iter().find(|d| d.id == "starburst").unwrap();
    let expected = render_png(&doc, &RenderOptions::default(), Encoding::Preview).unwrap();
    assert_eq!(fs::read(dir.path().join("p.png")).unwrap(), expected);
}

#[test]
fn full_render_from_file_with_canvas_and_light() {
    let dir = tempfile::tempdir().unwrap();
    let doc = builtin_templates().into_iter().find(|d| d.id == "led-lattice").unwrap();
    fs::write(dir.path().join("t.json"), doc.to_json()).unwrap();
    let o = run(
        dir.path(),
        &["render", "--template", "t.json", "--canvas", "320x200", "--light-pos", "250,60", "--out", "f.png", "--report", "r.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let img = read_png(dir.path().join("f.png")).unwrap();
    assert_eq!((img.width(), img.height()), (320, 200));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "reflect");
    assert_eq!(report["encoding"], "full");
}

#[test]
fn validate_reports_each_file() {
    let dir = tempfile::tempdir().unwrap();
    let good = builtin_templates().remove(0).to_json();
    let bad = good.replace("\"radius\": 220.0", "\"radius\": -1.0");
    assert_ne!(good, bad);
    fs::write(dir.path().join("good.json"), &good).unwrap();
    fs::write(dir.path().join("bad.json"), &bad).unwrap();
    let o = run(dir.path(), &["validate", "good.json"]);
    assert!(o.status.success());
    let o = run(dir.path(), &["validate", "good.json", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("ok good.json"));
    assert!(out.contains("invalid bad.json") && out.contains("body.glare.radius"), "{out}");
}

#[test]
fn catalog_import_compose_eval() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(run(p, &["init-catalog"]).status.success());
    assert_eq!(fs::read_dir(p.join("catalog/templates")).unwrap().count(), 6);

    let flare = EncodedImage::from_fn(200, 200, 3, |x, y, px| {
        let d = ((x as f32 - 100.0).powi(2) + (y as f32 - 100.0).powi(2)).sqrt();
        px.fill((1.0 - d / 90.0).max(0.0));
    })
    .unwrap();
    let light = flare.map(|v| if v > 0.9 { 1.0 } else { 0.0 });
    write_png(&flare, p.join("flare.png"), BitDepth::Eight).unwrap();
    write_png(&light, p.join("light.png"), BitDepth::Eight).unwrap();
    let o = run(p, &["import-flare", "--flare", "flare.png", "--light", "light.png", "--name", "lamp", "--report", "imp.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("warning: light exceeds flare"), "{out}");
    let rep: Value = serde_json::from_str(&fs::read_to_string(p.join("imp.json")).unwrap()).unwrap();
    let id = rep["id"].as_str().unwrap().to_string();

    let o = run(p, &["import-flare", "--flare", "flare.png"]);
    assert_eq!(o.status.code(), Some(1));

    backgrounds(&p.join("bg"), 1, 300);
    let o = run(p, &["compose", "--background", "bg/bg0.png", "--real-id", &id, "--crop", "128", "--seed", "4", "--out-dir", "real"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(
        p,
        &["compose", "--background", "bg/bg0.png", "--id", "neon-sign", "--reflect-id", "hexagon-chain", "--crop", "128", "--out-dir", "syn", "--report", "c.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["input.png", "gt.png", "flare.png", "light.png", "mask.png"] {
        assert!(p.join("syn").join(name).is_file(), "{name}");
    }
    let rep: Value = serde_json::from_str(&fs::read_to_string(p.join("c.json")).unwrap()).unwrap();
    assert_eq!(rep["provenance"]["source_id"], "neon-sign+hexagon-chain");
    assert!(SegMap::from_png(&fs::read(p.join("syn/mask.png")).unwrap()).is_ok());

    for d in ["pred", "gt", "masks"] {
        fs::create_dir_all(p.join(d)).unwrap();
    }
    fs::copy(p.join("syn/input.png"), p.join("pred/a.png")).unwrap();
    fs::copy(p.join("syn/gt.png"), p.join("gt/a.png")).unwrap();
    fs::copy(p.join("syn/mask.png"), p.join("masks/a.png")).unwrap();
    fs::copy(p.join("syn/gt.png"), p.join("pred/b.png")).unwrap();
    fs::copy(p.join("syn/gt.png"), p.join("gt/b.png")).unwrap();
    let o = run(p, &["eval", "--pred", "pred", "--gt", "gt", "--masks", "masks", "--jsonl", "e.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("a.png") && table.contains("b.png") && table.contains("n/a"), "{table}");
    let lines = fs::read_to_string(p.join("e.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 3);

    fs::remove_file(p.join("gt/b.png")).unwrap();
    let o = run(p, &["eval", "--pred", "pred", "--gt", "gt"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn extract_light_loses_tiny_sources() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let img = |r2: f32| {
        EncodedImage::from_fn(64, 64, 3, move |x, y, px| {
            let d2 = (x as f32 - 32.0).powi(2) + (y as f32 - 32.0).powi(2);
            px.fill(if d2 <= r2 { 1.0 } else { 0.2 });
        })
        .unwrap()
    };
    write_png(&img(2.0), p.join("tiny.png"), BitDepth::Eight).unwrap();
    write_png(&img(64.0), p.join("big.png"), BitDepth::Eight).unwrap();
    let o = run(p, &["extract-light", "--input", "tiny.png", "--mask-out", "m1.png", "--report", "r1.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&fs::read_to_string(p.join("r1.json")).unwrap()).unwrap();
    assert_eq!(r["empty"], true);
    let o = run(p, &["extract-light", "--input", "big.png", "--mask-out", "m2.png", "--blended-out", "b.png"]);
    assert!(o.status.success());
    assert!(read_png(p.join("m2.png")).unwrap().max_value() > 0.9);
    assert!(p.join("b.png").is_file());
}

#[test]
fn sequential_and_parallel_datasets_match() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    backgrounds(&p.join("backgrounds"), 2, 160);
    let args = |out: &'static str, seq: bool| {
        let mut a = vec!["dataset", "--n", "6", "--seed", "5", "--crop", "128", "--out", out];
        if seq {
            a.push("--sequential");
        }
        a
    };
    let o = run(p, &args("par", false));
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(p, &args("seq", true));
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<_> = fs::read_dir(p.join("par")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 1);
    for n in names {
        let (a, b) = (p.join("par").join(&n), p.join("seq").join(&n));
        if a.is_dir() {
            for f in fs::read_dir(&a).unwrap() {
                let f = f.unwrap().file_name();
                assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{n:?}/{f:?}");
            }
        } else {
            assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{n:?}");
        }
    }
}

#[test]
fn dataset_without_backgrounds_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("backgrounds")).unwrap();
    let o = run(dir.path(), &["dataset", "--n", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: no PNG backgrounds"), "{}", stderr(&o));
}
