use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{masked_psnr, psnr, ssim, PSNR_SENTINEL};
use crate::compose::{SegMap, GLARE_REGION, STREAK_REGION};
use crate::error::{Error, Result};
use crate::imagecore::EncodedImage;
use crate::par::{map_indices, Execution};

/// One prediction/target pair, with its mask if there is one.
#[derive(Clone, Debug)]
pub struct EvalItem {
    pub name: String,
    pub prediction: EncodedImage,
    pub target: EncodedImage,
    pub mask: Option<SegMap>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
    /// `None` without a mask or when the mask has no such region.
    pub g_psnr: Option<f64>,
    pub s_psnr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub mean_g_psnr: Option<f64>,
    pub mean_s_psnr: Option<f64>,
    /// Rows whose PSNR is the identical-image sentinel.
    pub sentinel_rows: usize,
}

fn optional_region(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::EmptySelection) => Ok(None),
        Err(e) => Err(e),
    }
}

fn score(item: &EvalItem) -> Result<EvalRow> {
    let (p, t) = (item.prediction.to_rgb(), item.target.to_rgb());
    let (g_psnr, s_psnr) = match &item.mask {
        Some(m) => (
            optional_region(masked_psnr(&p, &t, m, &GLARE_REGION))?,
            optional_region(masked_psnr(&p, &t, m, &STREAK_REGION))?,
        ),
        None => (None, None),
    };
    Ok(EvalRow {
        name: item.name.clone(),
        psnr: psnr(&p, &t)?,
        ssim: ssim(&p, &t)?,
        g_psnr,
        s_psnr,
    })
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores `n` items produced by `load`; items are loaded and scored
/// independently, so memory stays bounded by the pool width.
pub fn evaluate<F>(n: usize, exec: Execution, load: F) -> Result<EvalReport>
where
    F: Fn(usize) -> Result<EvalItem> + Sync + Send,
{
    let rows = map_indices(n, exec, |i| load(i).and_then(|item| score(&item)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_rows(rows))
}

impl EvalReport {
    pub fn from_rows(rows: Vec<EvalRow>) -> Self {
        Self {
            mean_psnr: mean(rows.iter().map(|r| r.psnr)).unwrap_or(0.0),
            mean_ssim: mean(rows.iter().map(|r| r.ssim)).unwrap_or(0.0),
            mean_g_psnr: mean(rows.iter().filter_map(|r| r.g_psnr)),
            mean_s_psnr: mean(rows.iter().filter_map(|r| r.s_psnr)),
            sentinel_rows: rows.iter().filter(|r| r.psnr == PSNR_SENTINEL).count(),
            rows,
        }
    }

    /// Fixed-width table, one line per image plus a mean line.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.3}"));
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>7}  {:>9}  {:>9}", "image", "PSNR", "SSIM", "G-PSNR", "S-PSNR");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.3}  {:>7.4}  {:>9}  {:>9}",
                r.name,
                r.psnr,
                r.ssim,
                cell(r.g_psnr),
                cell(r.s_psnr)
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.3}  {:>7.4}  {:>9}  {:>9}",
            "mean",
            self.mean_psnr,
            self.mean_ssim,
            cell(self.mean_g_psnr),
            cell(self.mean_s_psnr)
        );
        if self.sentinel_rows > 0 {
            let _ = writeln!(
                out,
                "{} image(s) identical to target, PSNR reported as {PSNR_SENTINEL} dB",
                self.sentinel_rows
            );
        }
        out
    }

    /// One JSON object per image, then a summary object.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&serde_json::json!({"kind": "image", "row": r}).to_string());
            out.push('\n');
        }
        let summary = serde_json::json!({
            "kind": "mean",
            "psnr": self.mean_psnr,
            "ssim": self.mean_ssim,
            "g_psnr": self.mean_g_psnr,
            "s_psnr": self.mean_s_psnr,
            "images": self.rows.len(),
            "sentinel_rows": self.sentinel_rows,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::SegClass;

    fn item(i: usize, offset: f32) -> EvalItem {
        let t = EncodedImage::from_fn(16, 16, 3, |x, y, px| px.fill(((x + y + i) % 5) as f32 / 5.0)).unwrap();
        let p = t.map(|v| v + offset);
        let classes = (0..256).map(|k| if k < 64 { SegClass::Streak } else { SegClass::Background }).collect();
        EvalItem {
            name: format!("img{i}"),
            prediction: p,
            target: t,
            mask: Some(SegMap::new(16, 16, classes).unwrap()),
        }
    }

    #[test]
    fn identical_pairs_hit_sentinel() {
        let r = evaluate(3, Execution::Parallel, |i| Ok(item(i, 0.0))).unwrap();
        assert_eq!(r.sentinel_rows, 3);
        assert!(r.rows.iter().all(|r| r.psnr == PSNR_SENTINEL && r.ssim == 1.0));
        assert!(r.to_table().contains("100.000"));
        assert_eq!(r.to_jsonl().lines().count(), 4);
    }

    #[test]
    fn missing_regions_are_none() {
        let mut it = item(0, 0.05);
        it.mask = Some(SegMap::filled(16, 16, SegClass::Background).unwrap());
        let r = evaluate(1, Execution::Sequential, |_| Ok(it.clone())).unwrap();
        assert_eq!(r.rows[0].g_psnr, None);
        assert_eq!(r.mean_s_psnr, None);
        assert!(r.to_table().contains("n/a"));
    }

    #[test]
    fn sequential_matches_parallel() {
        let a = evaluate(4, Execution::Sequential, |i| Ok(item(i, 0.02))).unwrap();
        let b = evaluate(4, Execution::Parallel, |i| Ok(item(i, 0.02))).unwrap();
        assert_eq!(a, b);
    }
}
