use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;
use tmds_leak::align::{detect_blanking, recenter_and_crop, resample_frame, samples_per_line, FrameShift};
use tmds_leak::baseline::envelope;
use tmds_leak::dataset::{
    capture_header, generate_dataset, letterbox, load_gray, simulate_pair, verify_record, DatasetConfig,
    SampleMeta, SourceSet, MANIFEST_NAME,
};
use tmds_leak::dtcx::{self, DtcxHeader};
use tmds_leak::emission::{estimate_psd, find_spectral_peaks, serialize_channel, BitStream, WelchConfig};
use tmds_leak::metrics::{evaluate_corpus, EvalInputs};
use tmds_leak::synth::TextStyle;
use tmds_leak::timing::VideoTiming;

use super::args::*;
use super::config::{self, Session};

pub fn dispatch(cli: Cli) -> Result<()> {
    let session = config::load(&cli.global)?;
    match cli.command {
        Command::Timings(a) => timings(&session, &a),
        Command::Psd(a) => psd(&session, &a),
        Command::Simulate(a) => simulate(&session, &a),
        Command::Dataset(a) => dataset(&session, &a),
        Command::RestoreBaseline(a) => restore(&a),
        Command::Eval(a) => eval(&session, &a),
        Command::Align(a) => align(&session, &a),
    }
}

fn describe(t: &VideoTiming, harmonics: u32) -> Result<String> {
    let mut s = format!(
        "{}\n  active {}x{}\n  Px={} Py={}\n  pixel clock {} MHz\n  bit rate {} MHz\n  line rate {:.3} kHz\n  frame rate {:.4} Hz\n  harmonics (MHz):",
        t.name,
        t.active_x,
        t.active_y,
        t.total_x,
        t.total_y,
        t.pixel_rate() / 1e6,
        t.bit_rate() / 1e6,
        t.line_rate() / 1e3,
        t.frame_rate(),
    );
    for n in 1..=harmonics {
        s.push_str(&format!(" {}", t.harmonic(n)? / 1e6));
    }
    Ok(s)
}

fn timings(session: &Session, a: &TimingsArgs) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match &a.name {
        Some(name) => writeln!(out, "{}", describe(session.timings.lookup(name)?, a.harmonics)?)?,
        None => {
            for t in session.timings.entries() {
                writeln!(out, "{t}")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PsdResolved<'a> {
    timing: &'a VideoTiming,
    pulse: tmds_leak::emission::PulseModel,
    image: &'a Path,
    frames: usize,
    segment_length: usize,
    overlap: usize,
    prominence: f64,
}

fn psd(session: &Session, a: &PsdArgs) -> Result<()> {
    let sim = config::merge_sim(
        &SimArgs {
            timing: a.timing.clone(),
            pulse: a.pulse,
            epsilon: a.epsilon,
            ..SimArgs::default()
        },
        &session.file.sim,
    );
    let t = config::timing(&session.timings, sim.timing.as_deref())?;
    let pm = config::pulse(&t, sim.pulse, sim.epsilon, sim.amplitude)?;
    let img = letterbox(&load_gray(&a.image)?, t.active_x as u32, t.active_y as u32);
    let frame = serialize_channel(&img, &t)?;
    let levels: Vec<i8> = frame.levels().iter().copied().cycle().take(frame.len() * a.frames.max(1)).collect();
    let bs = BitStream::new(levels, frame.bit_time())?;
    let cfg = match a.segment {
        Some(n) => WelchConfig::half_overlap(n),
        None => WelchConfig::for_timing(&t),
    };
    if let Some(out) = &a.out {
        config::echo(
            "psd",
            session.seed,
            &PsdResolved {
                timing: &t,
                pulse: pm,
                image: &a.image,
                frames: a.frames,
                segment_length: cfg.segment_length,
                overlap: cfg.overlap,
                prominence: a.prominence,
            },
            out,
        )?;
    }
    let est = estimate_psd(&bs, &pm, cfg)?;
    let max_f = a.max_freq.unwrap_or(t.bit_rate() / 2.0);
    let tp = t.pixel_period();
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "# peaks (Hz, multiple of 1/Tp)")?;
    for f in find_spectral_peaks(&est, a.prominence).into_iter().filter(|f| *f <= max_f) {
        writeln!(stdout, "{f:.1}\t{:.4}", f * tp)?;
    }
    if let Some(out) = &a.out {
        let mut w = std::io::BufWriter::new(fs::File::create(out)?);
        for (f, d) in est.frequencies.iter().zip(est.normalized()) {
            writeln!(w, "{f} {d:e}")?;
        }
        w.flush()?;
        info!("wrote {}", out.display());
    }
    Ok(())
}

fn simulate(session: &Session, a: &SimulateArgs) -> Result<()> {
    let merged = config::merge_sim(&a.sim, &session.file.sim);
    let resolved = config::resolve_sim(&session.timings, &merged, session.seed)?;
    let t = &resolved.spec.timing;
    let source = load_gray(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    config::echo("simulate", session.seed, &resolved, &a.out)?;
    let displayed = resolved
        .perturbation
        .apply(&letterbox(&source, t.active_x as u32, t.active_y as u32), session.seed)?;
    let pair = simulate_pair(&displayed, &resolved.spec)?;
    let meta = SampleMeta {
        spec: resolved.spec.clone(),
        perturbation: resolved.perturbation,
        impairments: pair.impairments,
        source: Some(a.input.display().to_string()),
    };
    dtcx::write_capture(&a.out, &capture_header(&pair, &meta)?, &pair.degraded)?;
    let meta_path = meta_sidecar(&a.out);
    fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    if let Some(p) = &a.clean_out {
        pair.clean.save(p)?;
    }
    info!("wrote {} ({}x{})", a.out.display(), pair.degraded.rows(), pair.degraded.cols());
    Ok(())
}

fn meta_sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

#[derive(Serialize)]
struct DatasetResolved<'a> {
    #[serde(flatten)]
    sim: &'a config::ResolvedSim,
    splits: tmds_leak::dataset::SplitRatios,
    source: String,
    text_scale: usize,
}

fn dataset(session: &Session, a: &DatasetArgs) -> Result<()> {
    let merged = config::merge_sim(&a.sim, &session.file.sim);
    let resolved = config::resolve_sim(&session.timings, &merged, session.seed)?;
    let splits = config::split_ratios(a.split_ratios.as_deref(), &session.file.dataset)?;
    let style = TextStyle {
        scale: a.text_scale.max(1),
        margin: 24,
        ..TextStyle::default()
    };
    let sources = match (&a.in_dir, a.synthetic) {
        (Some(dir), None) => {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)
                .with_context(|| format!("listing {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
                .collect();
            files.sort();
            if files.is_empty() {
                bail!("no png images in {}", dir.display());
            }
            SourceSet::Files(files)
        }
        (None, Some(count)) => SourceSet::SyntheticText { count, style },
        _ => bail!("give exactly one of --in-dir or --synthetic"),
    };
    fs::create_dir_all(&a.out)?;
    let source_desc = match &sources {
        SourceSet::Files(f) => format!("{} files", f.len()),
        SourceSet::SyntheticText { count, .. } => format!("{count} synthetic text pages"),
    };
    config::echo(
        "dataset",
        session.seed,
        &DatasetResolved {
            sim: &resolved,
            splits,
            source: source_desc,
            text_scale: style.scale,
        },
        &a.out.join(MANIFEST_NAME),
    )?;
    let cfg = DatasetConfig {
        spec: resolved.spec,
        perturbation: resolved.perturbation,
        splits,
        seed: session.seed,
    };
    let manifest = generate_dataset(&cfg, &sources, &a.out)?;
    info!("wrote {} records to {}", manifest.records.len(), a.out.display());
    if a.verify {
        let mut bad = Vec::new();
        for r in &manifest.records {
            if !verify_record(&a.out, r)? {
                bad.push(r.id.clone());
            }
        }
        if !bad.is_empty() {
            bail!("records do not regenerate bit-exactly: {}", bad.join(", "));
        }
        info!("all {} records regenerate bit-exactly", manifest.records.len());
    }
    Ok(())
}

fn restore(a: &RestoreArgs) -> Result<()> {
    let (_, img) = dtcx::read_capture(&a.capture).with_context(|| format!("reading {}", a.capture.display()))?;
    envelope(&img).save(&a.out)?;
    info!("wrote {}", a.out.display());
    Ok(())
}

fn eval(session: &Session, a: &EvalArgs) -> Result<()> {
    let manifest = tmds_leak::dataset::Manifest::read(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    let base = a.manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let inputs = EvalInputs {
        base,
        restored_dir: a.restored_dir.clone(),
        ref_ocr_dir: a.ref_ocr_dir.clone(),
        hyp_ocr_dir: a.hyp_ocr_dir.clone(),
    };
    config::echo("eval", session.seed, &format!("{inputs:?}"), &a.report)?;
    let report = evaluate_corpus(&manifest, &inputs)?;
    for r in report.rows.iter().filter(|r| !r.missing.is_empty()) {
        warn!("{}: missing {:?}", r.id, r.missing);
    }
    report.write_jsonl(&a.report)?;
    println!("{}", serde_json::to_string(&report.summary)?);
    Ok(())
}

fn align(session: &Session, a: &AlignArgs) -> Result<()> {
    let sidecar = a.sidecar.clone().unwrap_or_else(|| {
        let mut name = a.capture.file_name().unwrap_or_default().to_os_string();
        name.push(".json");
        a.capture.with_file_name(name)
    });
    let cap = dtcx::read_raw_iq(&a.capture, &sidecar)
        .with_context(|| format!("reading {} with sidecar {}", a.capture.display(), sidecar.display()))?;
    let name = a.timing.clone().or(cap.origin.timing.clone()).or(session.file.sim.timing.clone());
    let t = config::timing(&session.timings, name.as_deref())?;
    let spl = samples_per_line(cap.fs, &t);
    config::echo(
        "align",
        session.seed,
        &serde_json::json!({ "timing": t, "fs": cap.fs, "fc": cap.origin.fc, "frame": a.frame, "samples_per_line": spl }),
        &a.out,
    )?;
    info!("samples per line: {:.4} (m = {})", spl.exact, spl.rounded);
    let grid = resample_frame(&cap, &t, a.frame)?;
    let shift = match detect_blanking(&grid.magnitude(), &t) {
        Ok(s) => s,
        Err(e) if a.allow_fallback => {
            warn!("{e}; falling back to shift (0, 0)");
            FrameShift::default()
        }
        Err(e) => return Err(e.into()),
    };
    info!("active video starts at row {}, column {}", shift.row, shift.col);
    let img = recenter_and_crop(&grid, shift, &t)?;
    let hash = dtcx::meta_hash(&serde_json::json!({ "source": a.capture, "shift": shift }))?;
    dtcx::write_capture(&a.out, &DtcxHeader::new(&img, cap.fs, cap.origin.fc, true, hash)?, &img)?;
    if let Some(p) = &a.envelope {
        envelope(&img).save(p)?;
    }
    Ok(())
}
