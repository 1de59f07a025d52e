//! Dataset generation, regeneration and the cross-language file contract.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use image::{GrayImage, Luma};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tmds_leak::capture::CaptureConfig;
use tmds_leak::dataset::{
    capture_header, generate_dataset, perturb_noise, simulate_pair, verify_record, DatasetConfig, Manifest,
    Perturbation, SampleMeta, SimSpec, SourceSet, Split, SplitRatios, MANIFEST_NAME, TEXT_DIR,
};
use tmds_leak::dtcx;
use tmds_leak::emission::{ChannelMode, PulseKind, PulseModel};
use tmds_leak::metrics::psnr;
use tmds_leak::synth::{text_page, TextStyle};
use tmds_leak::timing::{timing_lookup, VideoTiming};

fn spec(t: &VideoTiming, kind: PulseKind, amplitude: f64, sigma: f64, seed: u64) -> SimSpec {
    SimSpec {
        timing: t.clone(),
        pulse: PulseModel::new(kind, t.bit_period(), amplitude).unwrap(),
        capture: CaptureConfig::impaired(t.harmonic(3).unwrap(), 50e6, sigma, seed),
        channels: ChannelMode::SingleChannel,
    }
}

fn hd() -> VideoTiming {
    timing_lookup("1280x720@60").unwrap()
}

fn page(t: &VideoTiming, seed: u64) -> GrayImage {
    text_page(seed, t.active_x as u32, t.active_y as u32, &TextStyle::default()).0
}

#[test]
fn zero_amplitude_without_noise_is_all_zero() {
    let t = hd();
    let pair = simulate_pair(&page(&t, 1), &spec(&t, PulseKind::Rect, 0.0, 0.0, 1)).unwrap();
    assert_eq!((pair.degraded.rows(), pair.degraded.cols()), (720, 1280));
    assert!(pair.degraded.data().iter().all(|c| c.re == 0.0 && c.im == 0.0));
}

#[test]
fn both_pulse_variants_produce_distinct_valid_pairs() {
    let t = hd();
    let img = page(&t, 2);
    let rect = simulate_pair(&img, &spec(&t, PulseKind::Rect, 1.0, 0.0, 2)).unwrap();
    let diff = simulate_pair(&img, &spec(&t, PulseKind::DelayedDifference { epsilon: 0.1 }, 1.0, 0.0, 2)).unwrap();
    for p in [&rect, &diff] {
        assert_eq!(p.clean, img);
        assert_eq!((p.degraded.rows(), p.degraded.cols()), (720, 1280));
        assert!(p.degraded.data().iter().all(|c| c.re.is_finite() && c.im.is_finite()));
    }
    assert_ne!(rect.degraded, diff.degraded);
}

#[test]
fn same_seed_regenerates_identical_file_bytes() {
    let t = hd();
    let img = page(&t, 3);
    let s = spec(&t, PulseKind::DelayedDifference { epsilon: 0.1 }, 1.0, 0.05, 9);
    let bytes = |s: &SimSpec| {
        let pair = simulate_pair(&img, s).unwrap();
        let meta = SampleMeta { spec: s.clone(), perturbation: Perturbation::None, impairments: pair.impairments, source: None };
        dtcx::encode(&capture_header(&pair, &meta).unwrap(), &pair.degraded).unwrap()
    };
    assert_eq!(bytes(&s), bytes(&s));
}

#[test]
fn noise_perturbation_statistics() {
    let gray = GrayImage::from_pixel(512, 512, Luma([128]));
    let noisy = perturb_noise(&gray, 3.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let n = noisy.as_raw().len() as f64;
    let mean = noisy.as_raw().iter().map(|&v| v as f64).sum::<f64>() / n;
    let sd = (noisy.as_raw().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!((sd / 3.0 - 1.0).abs() < 0.05, "std {sd}");
    let db = psnr(&gray, &noisy).unwrap();
    assert!((db - 20.0 * (255.0f64 / 3.0).log10()).abs() < 0.5, "psnr {db}");
    assert_eq!(perturb_noise(&gray, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap(), gray);
}

fn small_dataset(out: &Path, count: usize) -> Manifest {
    let t = hd();
    let cfg = DatasetConfig {
        spec: spec(&t, PulseKind::DelayedDifference { epsilon: 0.1 }, 1.0, 0.0, 0),
        perturbation: Perturbation::Gradient { ramp_max: 40 },
        splits: SplitRatios::default(),
        seed: 5,
    };
    let style = TextStyle { scale: 3, ..TextStyle::default() };
    generate_dataset(&cfg, &SourceSet::SyntheticText { count, style }, out).unwrap()
}

#[test]
fn generated_dataset_is_consistent_and_regenerates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let manifest = small_dataset(out, 10);
    assert_eq!(Manifest::read(out.join(MANIFEST_NAME)).unwrap(), manifest);
    let ids: HashSet<_> = manifest.records.iter().map(|r| r.id.clone()).collect();
    assert_eq!(ids.len(), 10);
    let per_split: Vec<usize> =
        [Split::Train, Split::Val, Split::Test].iter().map(|&s| manifest.split(s).count()).collect();
    assert_eq!(per_split.iter().sum::<usize>(), 10);
    assert!(per_split.iter().all(|&n| n > 0), "{per_split:?}");
    for rec in &manifest.records {
        assert!(out.join(&rec.clean_path).exists());
        assert!(out.join(&rec.capture_path).exists());
        assert!(out.join(TEXT_DIR).join(format!("{}.txt", rec.id)).exists());
        assert_eq!(rec.meta.perturbation, Perturbation::Gradient { ramp_max: 40 });
        let (h, img) = dtcx::read_capture(out.join(&rec.capture_path)).unwrap();
        assert!(h.cropped());
        assert_eq!(h.meta_hash, dtcx::meta_hash(&rec.meta).unwrap());
        assert_eq!((img.rows(), img.cols()), (720, 1280));
    }
    let first = &manifest.records[0];
    assert!(verify_record(out, first).unwrap());
    let path = out.join(&first.capture_path);
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    fs::write(&path, bytes).unwrap();
    assert!(!verify_record(out, first).unwrap());
}

#[test]
fn duplicate_manifest_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(dir.path(), 3);
    let mut dup = manifest.clone();
    dup.records[1].id = dup.records[0].id.clone();
    assert!(dup.write(dir.path().join("dup.jsonl")).is_err());
    let line = fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap();
    let first = line.lines().next().unwrap();
    fs::write(dir.path().join("dup.jsonl"), format!("{first}\n{first}\n")).unwrap();
    assert!(Manifest::read(dir.path().join("dup.jsonl")).is_err());
}

fn python_with_numpy() -> Option<&'static str> {
    ["python3", "python"].into_iter().find(|p| {
        Command::new(p).args(["-c", "import numpy"]).output().is_ok_and(|o| o.status.success())
    })
}

#[test]
fn numpy_reader_sees_identical_arrays() {
    let Some(py) = python_with_numpy() else {
        eprintln!("skipped: python with numpy not available");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_dataset(dir.path(), 2);
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let paths: Vec<PathBuf> = manifest.records.iter().map(|r| dir.path().join(&r.capture_path)).collect();
    let out = Command::new(py)
        .arg(root.join("crates/core/tests/python/dtcx_digest.py"))
        .arg(root.join("python"))
        .args(&paths)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(String::from).collect();
    for (path, line) in paths.iter().zip(&lines) {
        let (_, img) = dtcx::read_capture(path).unwrap();
        let mut hasher = Sha256::new();
        for c in img.data() {
            hasher.update(c.re.to_le_bytes());
            hasher.update(c.im.to_le_bytes());
        }
        let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(line, &format!("{} {} {digest}", img.rows(), img.cols()));
    }
}
