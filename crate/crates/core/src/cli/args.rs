use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "tmds-leak", version, about = "HDMI/DVI emanation simulator and dataset toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Base RNG seed (overrides the config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for batch work (default: logical cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// TOML config file; command-line flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (-v info is the default, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

impl GlobalArgs {
    pub fn log_level(&self) -> &'static str {
        match (self.quiet, self.verbose) {
            (true, _) => "warn",
            (false, 0 | 1) => "info",
            (false, 2) => "debug",
            _ => "trace",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List video timings or show one in detail.
    Timings(TimingsArgs),
    /// Power spectral density of a displayed image's emanation.
    Psd(PsdArgs),
    /// Simulate the capture of one image and write it as DTCX.
    Simulate(SimulateArgs),
    /// Generate a clean/degraded dataset with a manifest.
    Dataset(DatasetArgs),
    /// Envelope (magnitude) reconstruction of a capture.
    RestoreBaseline(RestoreArgs),
    /// PSNR, SSIM and CER over a dataset's test split.
    Eval(EvalArgs),
    /// Align a raw I/Q recording to the pixel grid and crop it.
    Align(AlignArgs),
}

#[derive(Debug, Args)]
pub struct TimingsArgs {
    /// Timing name such as 1600x900@60.
    #[arg(long)]
    pub name: Option<String>,
    /// Number of pixel-rate harmonics to list.
    #[arg(long, default_value_t = 3)]
    pub harmonics: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseArg {
    Rect,
    Diff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelsArg {
    Single,
    RgbSum,
}

/// Emission and receiver parameters shared by `simulate` and `dataset`.
#[derive(Debug, Args, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimArgs {
    /// Video timing name.
    #[arg(long)]
    pub timing: Option<String>,
    /// Tune to this harmonic of the pixel rate.
    #[arg(long)]
    pub fc_harmonic: Option<u32>,
    /// Tuning frequency in Hz (overrides --fc-harmonic).
    #[arg(long)]
    pub fc: Option<f64>,
    /// Sampling rate in Hz.
    #[arg(long)]
    pub fs: Option<f64>,
    /// Conforming pulse shape.
    #[arg(long, value_enum)]
    pub pulse: Option<PulseArg>,
    /// Misalignment of the differential pair, as a fraction of a bit.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Volts per bit unit.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Standard deviation of each complex noise component.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Bound of the uniform random tuning error, Hz.
    #[arg(long)]
    pub freq_error_max: Option<f64>,
    /// Sampling time offset: `random` or seconds in [0, 1/fs).
    #[arg(long)]
    pub time_offset: Option<String>,
    /// Carrier phase offset: `random` or radians in [0, 2 pi).
    #[arg(long)]
    pub phase_offset: Option<String>,
    /// Receiver low-pass roll-off width as a fraction of fs.
    #[arg(long)]
    pub lowpass_transition: Option<f64>,
    /// Which TMDS channels radiate.
    #[arg(long, value_enum)]
    pub channels: Option<ChannelsArg>,
    /// Countermeasure applied to the displayed image: none, noise:SIGMA or gradient:MAX.
    #[arg(long)]
    pub perturb: Option<String>,
}

#[derive(Debug, Args)]
pub struct PsdArgs {
    /// Video timing name.
    #[arg(long)]
    pub timing: Option<String>,
    /// Displayed image (letterboxed to the active area).
    #[arg(long)]
    pub image: PathBuf,
    /// Conforming pulse shape.
    #[arg(long, value_enum)]
    pub pulse: Option<PulseArg>,
    /// Misalignment of the differential pair, as a fraction of a bit.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of repeated frames to analyse.
    #[arg(long, default_value_t = 2)]
    pub frames: usize,
    /// Welch segment length (default: smallest power of two >= 10 * total_x).
    #[arg(long)]
    pub segment: Option<usize>,
    /// Minimum peak prominence relative to the maximum density.
    #[arg(long, default_value_t = 0.01)]
    pub prominence: f64,
    /// Only report peaks below this frequency, Hz (default: half the bit rate).
    #[arg(long)]
    pub max_freq: Option<f64>,
    /// Two-column text output: frequency in Hz and normalized density.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Displayed image.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output DTCX file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the displayed (letterboxed, perturbed) image here.
    #[arg(long)]
    pub clean_out: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Directory of source images (png).
    #[arg(long, conflicts_with = "synthetic")]
    pub in_dir: Option<PathBuf>,
    /// Generate this many random text pages instead of reading images.
    #[arg(long)]
    pub synthetic: Option<usize>,
    /// Font scale of synthetic pages (pixels per font dot).
    #[arg(long, default_value_t = 2)]
    pub text_scale: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Train, val and test fractions, e.g. 0.8,0.1,0.1.
    #[arg(long)]
    pub split_ratios: Option<String>,
    /// Re-simulate every record afterwards and check bit-exact regeneration.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    /// Input DTCX capture.
    #[arg(long)]
    pub capture: PathBuf,
    /// Output 8-bit grayscale image.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Restored images named <id>.png.
    #[arg(long)]
    pub restored_dir: PathBuf,
    /// OCR transcripts of the clean images, <id>.txt.
    #[arg(long)]
    pub ref_ocr_dir: PathBuf,
    /// OCR transcripts of the restored images, <id>.txt.
    #[arg(long)]
    pub hyp_ocr_dir: PathBuf,
    /// JSON-lines report output.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Raw little-endian f32 I/Q recording.
    #[arg(long)]
    pub capture: PathBuf,
    /// JSON sidecar with fs and fc (default: <capture>.json).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    /// Video timing name.
    #[arg(long)]
    pub timing: Option<String>,
    /// Which frame of the recording to align.
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    /// Use shift (0, 0) with a warning when no blanking is found.
    #[arg(long)]
    pub allow_fallback: bool,
    /// Output DTCX of the cropped active area.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the envelope of the aligned image.
    #[arg(long)]
    pub envelope: Option<PathBuf>,
}
