//! Restoration metrics: PSNR, SSIM and character error rate.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::GrayImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::dataset::{load_gray, Manifest, Split};
use crate::error::{invalid, Error, Result};

fn check_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::Dimensions {
            expected_rows: a.height() as usize,
            expected_cols: a.width() as usize,
            rows: b.height() as usize,
            cols: b.width() as usize,
        });
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    check_dims(a, b)?;
    let n = a.as_raw().len();
    if n == 0 {
        return Err(invalid("empty image"));
    }
    let se: u64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    if se == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = se as f64 / n as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let c = (window as f64 - 1.0) / 2.0;
    let k: Vec<f64> = (0..window).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable filtering keeping only fully covered positions.
fn filter_valid(x: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (w + 1 - n, h + 1 - n);
    let mut tmp = vec![0.0; ow * h];
    for r in 0..h {
        let row = &x[r * w..(r + 1) * w];
        for c in 0..ow {
            tmp[r * ow + c] = k.iter().zip(&row[c..c + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = k.iter().enumerate().map(|(i, kv)| kv * tmp[(r + i) * ow + c]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean structural similarity over all fully covered Gaussian windows,
/// with dynamic range 255.
pub fn ssim_with(a: &GrayImage, b: &GrayImage, p: SsimParams) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < p.window || h < p.window || p.window == 0 {
        return Err(invalid(format!("image must be at least {0}x{0} for SSIM", p.window)));
    }
    let k = gaussian_kernel(p.window, p.sigma);
    let x: Vec<f64> = a.as_raw().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.as_raw().iter().map(|&v| v as f64).collect();
    let prod = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(p, q)| p * q).collect::<Vec<_>>();
    let inputs = [x.clone(), y.clone(), prod(&x, &x), prod(&y, &y), prod(&x, &y)];
    let f: Vec<Vec<f64>> = inputs.par_iter().map(|m| filter_valid(m, w, h, &k).0).collect();
    let c1 = (p.k1 * 255.0).powi(2);
    let c2 = (p.k2 * 255.0).powi(2);
    let n = f[0].len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (f[0][i], f[1][i]);
            let vx = f[2][i] - mx * mx;
            let vy = f[3][i] - my * my;
            let cxy = f[4][i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    ssim_with(a, b, SsimParams::default())
}

/// NFC normalization with whitespace runs collapsed to one space and the
/// ends trimmed.
pub fn normalize_text(s: &str) -> Vec<char> {
    let nfc: String = s.nfc().collect();
    let mut out = Vec::new();
    for word in nfc.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars());
    }
    out
}

/// Unit-cost Levenshtein distance.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character error rate: edit distance over the normalized reference length.
pub fn cer(reference: &str, hypothesis: &str) -> Result<f64> {
    let r = normalize_text(reference);
    if r.is_empty() {
        return Err(Error::EmptyReference);
    }
    let h = normalize_text(hypothesis);
    Ok(levenshtein(&r, &h) as f64 / r.len() as f64)
}

/// Per-image evaluation row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    /// `None` when the images are identical (infinite PSNR).
    pub psnr_db: Option<f64>,
    pub identical: bool,
    pub ssim: Option<f64>,
    pub cer: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub rows: usize,
    /// Mean over rows with finite PSNR.
    pub mean_psnr_db: Option<f64>,
    pub identical: usize,
    pub mean_ssim: Option<f64>,
    pub mean_cer: Option<f64>,
    pub missing_files: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub summary: EvalSummary,
}

/// Directories consumed by [`evaluate_corpus`].
#[derive(Clone, Debug)]
pub struct EvalInputs {
    /// Directory holding the manifest; record paths are relative to it.
    pub base: PathBuf,
    /// Restored images named `<id>.png`.
    pub restored_dir: PathBuf,
    /// OCR transcripts of the clean images, `<id>.txt`.
    pub ref_ocr_dir: PathBuf,
    /// OCR transcripts of the restored images, `<id>.txt`.
    pub hyp_ocr_dir: PathBuf,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn eval_row(id: &str, clean: &Path, io: &EvalInputs) -> Result<EvalRow> {
    let restored = io.restored_dir.join(format!("{id}.png"));
    let ref_txt = io.ref_ocr_dir.join(format!("{id}.txt"));
    let hyp_txt = io.hyp_ocr_dir.join(format!("{id}.txt"));
    let mut missing: Vec<PathBuf> = [clean, restored.as_path(), ref_txt.as_path(), hyp_txt.as_path()]
        .into_iter()
        .filter(|p| !p.exists())
        .map(Path::to_path_buf)
        .collect();
    let mut row = EvalRow {
        id: id.to_string(),
        psnr_db: None,
        identical: false,
        ssim: None,
        cer: None,
        missing: Vec::new(),
    };
    if clean.exists() && restored.exists() {
        let (a, b) = (load_gray(clean)?, load_gray(&restored)?);
        let p = psnr(&a, &b)?;
        row.identical = p.is_infinite();
        row.psnr_db = p.is_finite().then_some(p);
        row.ssim = Some(ssim(&a, &b)?);
    }
    if ref_txt.exists() && hyp_txt.exists() {
        let r = fs::read_to_string(&ref_txt)?;
        let h = fs::read_to_string(&hyp_txt)?;
        match cer(&r, &h) {
            Ok(c) => row.cer = Some(c),
            Err(Error::EmptyReference) => missing.push(ref_txt),
            Err(e) => return Err(e),
        }
    }
    row.missing = missing;
    Ok(row)
}

/// Evaluates every test-split record of a manifest. Missing files are
/// listed per row and skipped.
pub fn evaluate_corpus(manifest: &Manifest, io: &EvalInputs) -> Result<EvalReport> {
    let recs: Vec<_> = manifest.split(Split::Test).collect();
    let rows = recs
        .par_iter()
        .map(|r| eval_row(&r.id, &io.base.join(&r.clean_path), io))
        .collect::<Result<Vec<_>>>()?;
    let summary = EvalSummary {
        rows: rows.len(),
        mean_psnr_db: mean(rows.iter().filter_map(|r| r.psnr_db)),
        identical: rows.iter().filter(|r| r.identical).count(),
        mean_ssim: mean(rows.iter().filter_map(|r| r.ssim)),
        mean_cer: mean(rows.iter().filter_map(|r| r.cer)),
        missing_files: rows.iter().map(|r| r.missing.len()).sum(),
    };
    Ok(EvalReport { rows, summary })
}

impl EvalReport {
    /// One JSON object per row, then a final `{"summary": ...}` line.
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for r in &self.rows {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        serde_json::to_writer(&mut w, &serde_json::json!({ "summary": self.summary }))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Luma;

    #[test]
    fn psnr_hand_example() {
        let a = GrayImage::from_pixel(2, 2, Luma([0]));
        let mut b = a.clone();
        b.put_pixel(1, 1, Luma([255]));
        let p = psnr(&a, &b).unwrap();
        assert!((p - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert_eq!(psnr(&b, &a).unwrap(), p);
        assert!(psnr(&a, &a).unwrap().is_infinite());
        assert!(psnr(&a, &GrayImage::new(3, 2)).is_err());
    }

    #[test]
    fn ssim_identity_and_symmetry() {
        let a = GrayImage::from_fn(20, 16, |x, y| Luma([((x * 13 + y * 7) % 256) as u8]));
        let b = GrayImage::from_fn(20, 16, |x, y| Luma([((x * 5 + y * 11) % 256) as u8]));
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!(ssim(&GrayImage::new(10, 10), &GrayImage::new(10, 10)).is_err());
    }

    #[test]
    fn cer_examples() {
        assert_eq!(cer("abc", "abc").unwrap(), 0.0);
        assert!((cer("abc", "axc").unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(cer("ab", "  ab\n").unwrap(), 0.0);
        assert_eq!(cer("a  b", "a b").unwrap(), 0.0);
        assert_eq!(cer("ab", "abcdef").unwrap(), 2.0);
        assert_eq!(cer("e\u{301}", "\u{e9}").unwrap(), 0.0);
        assert!(matches!(cer(" \n", "x"), Err(Error::EmptyReference)));
    }
}
