//! Clean/degraded pair generation, countermeasure perturbations and the
//! dataset manifest.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{imageops, DynamicImage, GrayImage, Luma};
use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{detect_blanking, recenter_and_crop, resample_frame, FrameShift};
use crate::capture::{capture_periodic, CaptureConfig, Impairments};
use crate::dtcx::{self, DtcxHeader};
use crate::emission::{electrical_sum, serialize_frame, ChannelMode, PulseModel};
use crate::error::{invalid, Error, Result};
use crate::imaging::ComplexImage;
use crate::synth::{text_page, TextStyle};
use crate::timing::VideoTiming;

/// Gray level images are letterboxed onto.
pub const LETTERBOX_GRAY: u8 = 128;

/// Per-pixel mean of the RGB channels, rounded to nearest.
pub fn to_grayscale(img: &image::RgbImage) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let [r, g, b] = img.get_pixel(x, y).0;
        // A sum over three never has a fractional part of exactly one half.
        Luma([((r as u16 + g as u16 + b as u16 + 1) / 3) as u8])
    })
}

/// Converts a decoded image to grayscale. Gray images pass through, colour
/// images are averaged over R, G and B (alpha is ignored).
pub fn to_grayscale_dynamic(img: &DynamicImage) -> Result<GrayImage> {
    match img.color().channel_count() {
        1 => Ok(img.to_luma8()),
        3 | 4 => Ok(to_grayscale(&img.to_rgb8())),
        n => Err(Error::ChannelCount(n)),
    }
}

pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    to_grayscale_dynamic(&image::open(path)?)
}

/// Centres `img` on a `width x height` mid-gray canvas. Larger images are
/// first shrunk with their aspect ratio kept; smaller ones are not scaled.
pub fn letterbox(img: &GrayImage, width: u32, height: u32) -> GrayImage {
    if img.dimensions() == (width, height) {
        return img.clone();
    }
    let (w, h) = img.dimensions();
    let scaled;
    let src = if w > width || h > height {
        let s = (width as f64 / w as f64).min(height as f64 / h as f64);
        let nw = ((w as f64 * s).round() as u32).clamp(1, width);
        let nh = ((h as f64 * s).round() as u32).clamp(1, height);
        scaled = imageops::resize(img, nw, nh, imageops::FilterType::CatmullRom);
        &scaled
    } else {
        img
    };
    let mut out = GrayImage::from_pixel(width, height, Luma([LETTERBOX_GRAY]));
    let x0 = (width - src.width()) / 2;
    let y0 = (height - src.height()) / 2;
    imageops::replace(&mut out, src, x0 as i64, y0 as i64);
    out
}

/// Adds i.i.d. Gaussian noise of `sigma` gray levels, rounding and clamping.
pub fn perturb_noise(img: &GrayImage, sigma: f64, rng: &mut impl rand::Rng) -> Result<GrayImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid("noise sigma must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
    let mut out = img.clone();
    for p in out.pixels_mut() {
        let v = p.0[0] as f64 + normal.sample(rng);
        p.0[0] = v.round().clamp(0.0, 255.0) as u8;
    }
    Ok(out)
}

/// Subtracts a horizontal ramp rising from 0 at the left edge to
/// `ramp_max` at the right edge, clamping at zero.
pub fn perturb_gradient(img: &GrayImage, ramp_max: u8) -> GrayImage {
    let w = img.width();
    let denom = (w.max(2) - 1) as f64;
    GrayImage::from_fn(w, img.height(), |x, y| {
        let ramp = (ramp_max as f64 * x as f64 / denom).round() as i32;
        Luma([(img.get_pixel(x, y).0[0] as i32 - ramp).max(0) as u8])
    })
}

/// A countermeasure applied to the displayed image.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    None,
    Noise { sigma: f64 },
    Gradient { ramp_max: u8 },
}

impl Perturbation {
    pub fn apply(&self, img: &GrayImage, seed: u64) -> Result<GrayImage> {
        match *self {
            Perturbation::None => Ok(img.clone()),
            Perturbation::Noise { sigma } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2);
                perturb_noise(img, sigma, &mut rng)
            }
            Perturbation::Gradient { ramp_max } => Ok(perturb_gradient(img, ramp_max)),
        }
    }
}

impl FromStr for Perturbation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let bad = || invalid(format!("bad perturbation `{s}`; expected none, noise:SIGMA or gradient:MAX"));
        match kind {
            "none" if arg.is_empty() => Ok(Perturbation::None),
            "noise" => {
                let sigma: f64 = arg.parse().map_err(|_| bad())?;
                if !(sigma >= 0.0) {
                    return Err(bad());
                }
                Ok(Perturbation::Noise { sigma })
            }
            "gradient" => Ok(Perturbation::Gradient {
                ramp_max: arg.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::None => write!(f, "none"),
            Perturbation::Noise { sigma } => write!(f, "noise:{sigma}"),
            Perturbation::Gradient { ramp_max } => write!(f, "gradient:{ramp_max}"),
        }
    }
}

/// Everything needed to turn a clean image into its degraded capture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub timing: VideoTiming,
    pub pulse: PulseModel,
    pub capture: CaptureConfig,
    #[serde(default)]
    pub channels: ChannelMode,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        self.capture.validate()?;
        let tb = self.timing.bit_period();
        if ((self.pulse.bit_time - tb) / tb).abs() > 1e-9 {
            return Err(invalid("pulse bit time does not match the timing's bit period"));
        }
        Ok(())
    }
}

/// Provenance stored with each sample; fully determines regeneration of
/// the capture from the stored clean image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    #[serde(flatten)]
    pub spec: SimSpec,
    /// Countermeasure applied to the source before display; the stored
    /// clean image already includes it.
    pub perturbation: Perturbation,
    /// Realized random impairments, informational.
    pub impairments: Impairments,
    #[serde(default)]
    pub source: Option<String>,
}

/// An aligned clean/degraded pair.
#[derive(Clone, Debug)]
pub struct SamplePair {
    pub clean: GrayImage,
    pub degraded: ComplexImage,
    pub impairments: Impairments,
}

/// Runs the forward model on one displayed frame: serialization, capture
/// of a periodically repeated frame, line-grid resampling and cropping at
/// the known frame origin.
pub fn simulate_pair(clean: &GrayImage, spec: &SimSpec) -> Result<SamplePair> {
    spec.validate()?;
    let t = &spec.timing;
    let streams = serialize_frame(clean, t, spec.channels)?;
    let levels = electrical_sum(&streams);
    drop(streams);
    let cap = capture_periodic(&levels, t.bit_period(), 1, 0, &spec.pulse, &spec.capture)?;
    drop(levels);
    let grid = resample_frame(&cap, t, 0)?;
    if log::log_enabled!(log::Level::Debug) {
        match detect_blanking(&grid.magnitude(), t) {
            Ok(s) if s != FrameShift::default() => debug!("blanking detector disagrees with known origin: {s:?}"),
            Ok(_) => {}
            Err(e) => debug!("blanking cross-check: {e}"),
        }
    }
    let degraded = recenter_and_crop(&grid, FrameShift::default(), t)?;
    Ok(SamplePair {
        clean: clean.clone(),
        degraded,
        impairments: cap.origin.impairments.expect("simulated captures record impairments"),
    })
}

/// DTCX header for a simulated pair.
pub fn capture_header(pair: &SamplePair, meta: &SampleMeta) -> Result<DtcxHeader> {
    DtcxHeader::new(
        &pair.degraded,
        meta.spec.capture.fs,
        meta.spec.capture.fc,
        true,
        dtcx::meta_hash(meta)?,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub id: String,
    /// Relative to the manifest's directory.
    pub clean_path: PathBuf,
    pub capture_path: PathBuf,
    pub split: Split,
    pub meta: SampleMeta,
}

/// Ordered dataset records, stored as one JSON object per line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let file = fs::File::open(path)?;
        let mut records = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ManifestRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Config(format!("manifest line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        let m = Manifest { records };
        m.check_unique()?;
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.check_unique()?;
        let mut w = BufWriter::new(fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    fn check_unique(&self) -> Result<()> {
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate manifest id `{}`", w[0])));
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }
}

/// Fractions of the corpus assigned to train, val and test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split([',', ':', '/'])
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(format!("bad split ratios `{s}`")))?;
        let [train, val, test] = v[..] else {
            return Err(invalid(format!("expected three split ratios, got `{s}`")));
        };
        let r = SplitRatios { train, val, test };
        r.validate()?;
        Ok(r)
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.val, self.test];
        if all.iter().any(|v| !(*v >= 0.0)) || all.iter().sum::<f64>() <= 0.0 {
            return Err(invalid("split ratios must be non-negative with a positive sum"));
        }
        Ok(())
    }

    /// Deterministically assigns `n` items to splits. Counts for val and
    /// test are rounded down; the remainder goes to train.
    pub fn assign(&self, n: usize, seed: u64) -> Vec<Split> {
        let total = self.train + self.val + self.test;
        let n_val = (n as f64 * self.val / total).floor() as usize;
        let n_test = ((n as f64 * self.test / total).floor() as usize).min(n - n_val);
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        order.shuffle(&mut rng);
        let mut out = vec![Split::Train; n];
        for (rank, &i) in order.iter().enumerate() {
            if rank < n_test {
                out[i] = Split::Test;
            } else if rank < n_test + n_val {
                out[i] = Split::Val;
            }
        }
        out
    }
}

/// Where dataset items come from.
#[derive(Clone, Debug)]
pub enum SourceSet {
    /// Image files, letterboxed to the active area.
    Files(Vec<PathBuf>),
    /// Seeded random text pages; transcripts are written next to the
    /// clean images.
    SyntheticText { count: usize, style: TextStyle },
}

impl SourceSet {
    pub fn len(&self) -> usize {
        match self {
            SourceSet::Files(f) => f.len(),
            SourceSet::SyntheticText { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug)]
pub struct DatasetConfig {
    /// Template; the per-item seed replaces `capture.seed`.
    pub spec: SimSpec,
    pub perturbation: Perturbation,
    pub splits: SplitRatios,
    pub seed: u64,
}

/// Seed of item `index`, derived from the dataset seed.
pub fn item_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const CLEAN_DIR: &str = "clean";
pub const CAPTURE_DIR: &str = "captures";
pub const TEXT_DIR: &str = "text";
pub const MANIFEST_NAME: &str = "manifest.jsonl";

/// Generates a dataset under `out_dir` and writes its manifest. Items are
/// simulated in parallel; the manifest is written once, in item order.
pub fn generate_dataset(cfg: &DatasetConfig, sources: &SourceSet, out_dir: &Path) -> Result<Manifest> {
    cfg.spec.validate()?;
    cfg.splits.validate()?;
    for d in [CLEAN_DIR, CAPTURE_DIR, TEXT_DIR] {
        fs::create_dir_all(out_dir.join(d))?;
    }
    let n = sources.len();
    let splits = cfg.splits.assign(n, cfg.seed);
    let t = &cfg.spec.timing;
    let records = (0..n)
        .into_par_iter()
        .map(|i| {
            let id = format!("{i:06}");
            let seed = item_seed(cfg.seed, i);
            let (source_img, source) = match sources {
                SourceSet::Files(files) => (load_gray(&files[i])?, Some(files[i].display().to_string())),
                SourceSet::SyntheticText { style, .. } => {
                    let (img, lines) = text_page(seed, t.active_x as u32, t.active_y as u32, style);
                    fs::write(out_dir.join(TEXT_DIR).join(format!("{id}.txt")), lines.join("\n") + "\n")?;
                    (img, None)
                }
            };
            let displayed = cfg
                .perturbation
                .apply(&letterbox(&source_img, t.active_x as u32, t.active_y as u32), seed)?;
            let mut spec = cfg.spec.clone();
            spec.capture.seed = seed;
            let pair = simulate_pair(&displayed, &spec)?;
            let meta = SampleMeta {
                spec,
                perturbation: cfg.perturbation,
                impairments: pair.impairments,
                source,
            };
            let clean_path = PathBuf::from(CLEAN_DIR).join(format!("{id}.png"));
            let capture_path = PathBuf::from(CAPTURE_DIR).join(format!("{id}.dtcx"));
            pair.clean.save(out_dir.join(&clean_path))?;
            dtcx::write_capture(out_dir.join(&capture_path), &capture_header(&pair, &meta)?, &pair.degraded)?;
            debug!("generated {id}");
            Ok(ManifestRecord {
                id,
                clean_path,
                capture_path,
                split: splits[i],
                meta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { records };
    manifest.write(out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

/// Re-simulates a record from its stored clean image and meta and compares
/// the encoded capture with the stored file byte for byte.
pub fn verify_record(base: &Path, rec: &ManifestRecord) -> Result<bool> {
    let clean = load_gray(base.join(&rec.clean_path))?;
    let pair = simulate_pair(&clean, &rec.meta.spec)?;
    let bytes = dtcx::encode(&capture_header(&pair, &rec.meta)?, &pair.degraded)?;
    let stored = fs::read(base.join(&rec.capture_path))?;
    if bytes != stored {
        warn!("record {} does not regenerate bit-exactly", rec.id);
    }
    Ok(bytes == stored)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_rounding() {
        let mut img = image::RgbImage::new(3, 1);
        img.put_pixel(0, 0, image::Rgb([255, 255, 255]));
        img.put_pixel(1, 0, image::Rgb([255, 0, 0]));
        img.put_pixel(2, 0, image::Rgb([1, 1, 0]));
        let g = to_grayscale(&img);
        assert_eq!(g.as_raw(), &[255, 85, 1]);
    }

    #[test]
    fn gradient_edges() {
        let white = GrayImage::from_pixel(64, 4, Luma([255]));
        let g = perturb_gradient(&white, 127);
        assert_eq!(g.get_pixel(0, 0).0[0], 255);
        assert_eq!(g.get_pixel(63, 3).0[0], 128);
        assert_eq!(perturb_gradient(&white, 0), white);
    }

    #[test]
    fn perturbation_parsing() {
        assert_eq!("none".parse::<Perturbation>().unwrap(), Perturbation::None);
        assert_eq!("noise:3".parse::<Perturbation>().unwrap(), Perturbation::Noise { sigma: 3.0 });
        assert_eq!(
            "gradient:127".parse::<Perturbation>().unwrap(),
            Perturbation::Gradient { ramp_max: 127 }
        );
        assert!("gradient:300".parse::<Perturbation>().is_err());
        assert!("noise:-1".parse::<Perturbation>().is_err());
        assert!("blur".parse::<Perturbation>().is_err());
        for p in ["none", "noise:2.5", "gradient:64"] {
            assert_eq!(p.parse::<Perturbation>().unwrap().to_string(), p);
        }
    }

    #[test]
    fn letterbox_centres_without_scaling_small_images() {
        let img = GrayImage::from_pixel(4, 2, Luma([0]));
        let out = letterbox(&img, 8, 6);
        assert_eq!(out.get_pixel(2, 2).0[0], 0);
        assert_eq!(out.get_pixel(5, 3).0[0], 0);
        assert_eq!(out.get_pixel(1, 2).0[0], LETTERBOX_GRAY);
        assert_eq!(out.get_pixel(2, 1).0[0], LETTERBOX_GRAY);
    }

    #[test]
    fn letterbox_shrinks_keeping_aspect() {
        let img = GrayImage::from_pixel(200, 50, Luma([10]));
        let out = letterbox(&img, 100, 100);
        let dark = out.pixels().filter(|p| p.0[0] < 64).count();
        assert_eq!(dark, 100 * 25);
    }

    #[test]
    fn split_assignment() {
        let r = SplitRatios::default();
        let a = r.assign(50, 9);
        assert_eq!(a, r.assign(50, 9));
        assert_eq!(a.iter().filter(|s| **s == Split::Val).count(), 5);
        assert_eq!(a.iter().filter(|s| **s == Split::Test).count(), 5);
        assert_eq!("0.7,0.2,0.1".parse::<SplitRatios>().unwrap().val, 0.2);
        assert!("1,2".parse::<SplitRatios>().is_err());
    }
}
