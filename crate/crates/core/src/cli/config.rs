use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tmds_leak::capture::{CaptureConfig, FreqError, PhaseOffset, TimeOffset, DEFAULT_MAX_FREQ_ERROR};
use tmds_leak::dataset::{Perturbation, SimSpec, SplitRatios};
use tmds_leak::emission::{ChannelMode, PulseKind, PulseModel};
use tmds_leak::timing::{TimingTable, VideoTiming};

use super::args::{ChannelsArg, GlobalArgs, PulseArg, SimArgs};

pub const DEFAULT_TIMING: &str = "1600x900@60";
pub const DEFAULT_HARMONIC: u32 = 3;
pub const DEFAULT_FS: f64 = 50e6;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_TRANSITION: f64 = 0.05;

/// Contents of the `--config` TOML file. `[[timing]]` sections add timings.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub sim: SimArgs,
    pub dataset: DatasetFileConfig,
    #[serde(rename = "timing")]
    pub timings: Vec<toml::Value>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetFileConfig {
    pub split_ratios: Option<String>,
}

/// Global settings after applying flags over the config file.
pub struct Session {
    pub seed: u64,
    pub file: FileConfig,
    pub timings: TimingTable,
}

pub fn load(global: &GlobalArgs) -> Result<Session> {
    let mut timings = TimingTable::builtin();
    let file = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let file: FileConfig =
                toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            timings.extend_from_str(&text)?;
            file
        }
        None => FileConfig::default(),
    };
    let jobs = global.jobs.or(file.jobs);
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    Ok(Session {
        seed: global.seed.or(file.seed).unwrap_or(0),
        file,
        timings,
    })
}

macro_rules! merge_fields {
    ($flags:expr, $file:expr; $($f:ident),*) => {
        SimArgs { $($f: $flags.$f.clone().or($file.$f.clone())),* }
    };
}

/// Flags override the file, field by field.
pub fn merge_sim(flags: &SimArgs, file: &SimArgs) -> SimArgs {
    merge_fields!(flags, file; timing, fc_harmonic, fc, fs, pulse, epsilon, amplitude, noise_sigma,
        freq_error_max, time_offset, phase_offset, lowpass_transition, channels, perturb)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSim {
    pub spec: SimSpec,
    pub perturbation: Perturbation,
}

pub fn timing(table: &TimingTable, name: Option<&str>) -> Result<VideoTiming> {
    Ok(table.lookup(name.unwrap_or(DEFAULT_TIMING))?.clone())
}

pub fn pulse(t: &VideoTiming, kind: Option<PulseArg>, epsilon: Option<f64>, amplitude: Option<f64>) -> Result<PulseModel> {
    let kind = match kind.unwrap_or(PulseArg::Diff) {
        PulseArg::Rect => PulseKind::Rect,
        PulseArg::Diff => PulseKind::DelayedDifference {
            epsilon: epsilon.unwrap_or(DEFAULT_EPSILON),
        },
    };
    Ok(PulseModel::new(kind, t.bit_period(), amplitude.unwrap_or(1.0))?)
}

fn offset(text: Option<&str>, what: &str) -> Result<Option<f64>> {
    match text.unwrap_or("random") {
        "random" => Ok(None),
        v => Ok(Some(v.parse().with_context(|| format!("bad {what} `{v}`: expected `random` or a number"))?)),
    }
}

/// Resolves simulation flags (already merged with the file) to a spec.
pub fn resolve_sim(table: &TimingTable, a: &SimArgs, seed: u64) -> Result<ResolvedSim> {
    let t = timing(table, a.timing.as_deref())?;
    let pm = pulse(&t, a.pulse, a.epsilon, a.amplitude)?;
    let fc = match a.fc {
        Some(fc) => fc,
        None => t.harmonic(a.fc_harmonic.unwrap_or(DEFAULT_HARMONIC))?,
    };
    let fs = a.fs.unwrap_or(DEFAULT_FS);
    let capture = CaptureConfig {
        fc,
        fs,
        noise_sigma: a.noise_sigma.unwrap_or(0.0),
        freq_error: FreqError::RandomUniform(a.freq_error_max.unwrap_or(DEFAULT_MAX_FREQ_ERROR)),
        time_offset: match offset(a.time_offset.as_deref(), "time offset")? {
            None => TimeOffset::RandomUniform,
            Some(v) => TimeOffset::Fixed(v),
        },
        phase_offset: match offset(a.phase_offset.as_deref(), "phase offset")? {
            None => PhaseOffset::RandomUniform,
            Some(v) => PhaseOffset::Fixed(v.rem_euclid(2.0 * PI)),
        },
        seed,
        lowpass_transition: a.lowpass_transition.unwrap_or(DEFAULT_TRANSITION),
    };
    let channels = match a.channels.unwrap_or(ChannelsArg::Single) {
        ChannelsArg::Single => ChannelMode::SingleChannel,
        ChannelsArg::RgbSum => ChannelMode::RgbSum,
    };
    let spec = SimSpec {
        timing: t,
        pulse: pm,
        capture,
        channels,
    };
    spec.validate()?;
    let perturbation = a.perturb.as_deref().unwrap_or("none").parse()?;
    Ok(ResolvedSim { spec, perturbation })
}

pub fn split_ratios(flag: Option<&str>, file: &DatasetFileConfig) -> Result<SplitRatios> {
    match flag.or(file.split_ratios.as_deref()) {
        Some(s) => Ok(s.parse()?),
        None => Ok(SplitRatios::default()),
    }
}

/// Path of the resolved-config sidecar written next to an output.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    out.with_file_name(name)
}

/// Logs the resolved configuration and writes it next to `out`.
pub fn echo<T: Serialize>(command: &str, seed: u64, resolved: &T, out: &Path) -> Result<()> {
    let value = serde_json::json!({
        "command": command,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": resolved,
    });
    log::info!("resolved config: {value}");
    let path = sidecar_path(out);
    fs::write(&path, serde_json::to_string_pretty(&value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
