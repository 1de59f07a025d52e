//! Complex-baseband capture of the leaked PCM signal.
//!
//! A receiver tuned to `fc` with sampling rate `fs` sees the bit train
//! through the baseband channel `g(t) = F^-1{ Q(f + fc) H(f) }`, where `H`
//! is the receiver low-pass. Mixing also rotates bit `k` by
//! `exp(-j 2 pi fc k Tb)`, so the sampled sequence is
//!
//! ```text
//! y[l] = exp(j phi) * sum_k x[k] exp(-j 2 pi fc' k Tb) g(l / fs + tau - k Tb) + n[l]
//! ```
//!
//! with `fc' = fc + freq_error`, time offset `tau` and phase `phi`.
//! The channel is tabulated on a grid of [`GRID_PER_BIT`] points per bit
//! and linearly interpolated between grid points.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::emission::{electrical_sum, BitStream, PulseModel};
use crate::error::{invalid, Error, Result};

/// Channel grid points per bit period.
pub const GRID_PER_BIT: usize = 16;

/// Channel support half-width, in units of `1 / (transition * fs)`.
const SUPPORT_FACTOR: f64 = 8.0;

const KAISER_BETA: f64 = 8.0;

/// Default magnitude of the random tuning error, in hertz.
pub const DEFAULT_MAX_FREQ_ERROR: f64 = 1_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum TimeOffset {
    /// Uniform in `[0, 1/fs)`.
    RandomUniform,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum PhaseOffset {
    /// Uniform in `[0, 2 pi)`.
    RandomUniform,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum FreqError {
    /// Uniform in `[-max, max]` hertz.
    RandomUniform(f64),
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptureConfig {
    /// Tuning frequency in hertz.
    pub fc: f64,
    /// Sampling rate in hertz.
    pub fs: f64,
    /// Standard deviation of each noise component.
    pub noise_sigma: f64,
    pub freq_error: FreqError,
    pub time_offset: TimeOffset,
    pub phase_offset: PhaseOffset,
    pub seed: u64,
    /// Width of the low-pass roll-off as a fraction of `fs`.
    pub lowpass_transition: f64,
}

impl CaptureConfig {
    /// Ideal receiver: no noise, no offsets.
    pub fn ideal(fc: f64, fs: f64) -> Self {
        CaptureConfig {
            fc,
            fs,
            noise_sigma: 0.0,
            freq_error: FreqError::Fixed(0.0),
            time_offset: TimeOffset::Fixed(0.0),
            phase_offset: PhaseOffset::Fixed(0.0),
            seed: 0,
            lowpass_transition: 0.05,
        }
    }

    /// Receiver with all impairments drawn at random from `seed`.
    pub fn impaired(fc: f64, fs: f64, noise_sigma: f64, seed: u64) -> Self {
        CaptureConfig {
            noise_sigma,
            freq_error: FreqError::RandomUniform(DEFAULT_MAX_FREQ_ERROR),
            time_offset: TimeOffset::RandomUniform,
            phase_offset: PhaseOffset::RandomUniform,
            seed,
            ..Self::ideal(fc, fs)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(invalid(format!("sampling rate must be positive, got {}", self.fs)));
        }
        if !(self.fc > 0.0 && self.fc.is_finite()) {
            return Err(invalid(format!("tuning frequency must be positive, got {}", self.fc)));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(invalid("noise sigma must be non-negative"));
        }
        if !(self.lowpass_transition > 0.0 && self.lowpass_transition < 0.5) {
            return Err(invalid("low-pass transition must lie in (0, 0.5)"));
        }
        match self.time_offset {
            TimeOffset::Fixed(t) if !(0.0..1.0 / self.fs).contains(&t) => {
                return Err(invalid("fixed time offset must lie in [0, 1/fs)"))
            }
            _ => {}
        }
        match self.phase_offset {
            PhaseOffset::Fixed(p) if !(0.0..2.0 * PI).contains(&p) => {
                return Err(invalid("fixed phase offset must lie in [0, 2 pi)"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Draws the random impairments. The draw order is fixed so that the
    /// same seed always yields the same values.
    pub fn resolve(&self) -> Impairments {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let freq_error = match self.freq_error {
            FreqError::RandomUniform(max) => rng.random_range(-1.0..=1.0) * max,
            FreqError::Fixed(v) => v,
        };
        let time_offset = match self.time_offset {
            TimeOffset::RandomUniform => rng.random::<f64>() / self.fs,
            TimeOffset::Fixed(v) => v,
        };
        let phase_offset = match self.phase_offset {
            PhaseOffset::RandomUniform => rng.random::<f64>() * 2.0 * PI,
            PhaseOffset::Fixed(v) => v,
        };
        Impairments {
            freq_error,
            time_offset,
            phase_offset,
        }
    }

    fn noise_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

/// Realized impairment values of one capture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Impairments {
    pub freq_error: f64,
    pub time_offset: f64,
    pub phase_offset: f64,
}

/// `g(t)` tabulated on a uniform grid centred on `t = 0`.
#[derive(Clone, Debug)]
pub struct BasebandChannel {
    taps: Vec<Complex64>,
    /// Grid index of `t = 0`.
    center: usize,
    grid_rate: f64,
    bit_time: f64,
    /// Bit-rate subsampling of the taps: `g(j Tb)` for `j` in `-half..=half`.
    bit_taps: Vec<Complex64>,
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser(x: f64, beta: f64) -> f64 {
    // x in [-1, 1]
    bessel_i0(beta * (1.0 - x * x).max(0.0).sqrt()) / bessel_i0(beta)
}

/// Receiver low-pass: unity up to `fs/2 - transition*fs`, raised-cosine
/// roll-off to zero at `fs/2`.
pub fn lowpass_mask(f: f64, fs: f64, transition: f64) -> f64 {
    let edge = fs / 2.0;
    let width = transition * fs;
    let a = f.abs();
    if a >= edge {
        0.0
    } else if a <= edge - width {
        1.0
    } else {
        0.5 * (1.0 + (PI * (a - (edge - width)) / width).cos())
    }
}

impl BasebandChannel {
    /// Builds the channel for a receiver tuned at `fc`.
    pub fn new(pm: &PulseModel, fc: f64, fs: f64, transition: f64) -> Result<Self> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(invalid(format!("sampling rate must be positive, got {fs}")));
        }
        let tb = pm.bit_time;
        let grid_rate = GRID_PER_BIT as f64 / tb;
        let half_time = SUPPORT_FACTOR / (transition * fs);
        let half_bits = (half_time / tb).ceil().max(4.0) as usize;
        let half = half_bits * GRID_PER_BIT;
        let n = (4 * half + 1).next_power_of_two();
        if n > 1 << 26 {
            return Err(invalid("channel support too long; raise fs or the transition width"));
        }
        let df = grid_rate / n as f64;
        let mut spec = vec![Complex64::default(); n];
        let kmax = ((fs / 2.0) / df).ceil() as i64;
        for k in -kmax..=kmax {
            let f = k as f64 * df;
            let h = lowpass_mask(f, fs, transition);
            if h > 0.0 {
                spec[k.rem_euclid(n as i64) as usize] = pm.spectrum(f + fc) * h;
            }
        }
        FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut spec);
        let taps: Vec<Complex64> = (-(half as i64)..=half as i64)
            .map(|j| {
                let w = kaiser(j as f64 / half as f64, KAISER_BETA);
                spec[j.rem_euclid(n as i64) as usize] * (df * w)
            })
            .collect();
        let bit_taps = taps.iter().step_by(GRID_PER_BIT).copied().collect();
        Ok(BasebandChannel {
            taps,
            center: half,
            grid_rate,
            bit_time: tb,
            bit_taps,
        })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn grid_rate(&self) -> f64 {
        self.grid_rate
    }

    /// Time of the first tap, in seconds (negative).
    pub fn start_time(&self) -> f64 {
        -(self.center as f64) / self.grid_rate
    }

    /// Support half-width in bits.
    pub fn half_bits(&self) -> usize {
        self.center / GRID_PER_BIT
    }

    /// Tap at grid index `i` relative to `t = 0`, zero outside the support.
    pub fn grid_tap(&self, i: i64) -> Complex64 {
        let idx = i + self.center as i64;
        if idx < 0 || idx as usize >= self.taps.len() {
            Complex64::default()
        } else {
            self.taps[idx as usize]
        }
    }

    /// `g(t)` by linear interpolation between grid points.
    pub fn eval(&self, t: f64) -> Complex64 {
        let u = t * self.grid_rate;
        let i = u.floor();
        let w = u - i;
        let i = i as i64;
        self.grid_tap(i) * (1.0 - w) + self.grid_tap(i + 1) * w
    }

    /// Discrete-time Fourier transform of the taps scaled to approximate
    /// `G(f)`.
    pub fn frequency_response(&self, f: f64) -> Complex64 {
        let start = self.start_time();
        self.taps
            .iter()
            .enumerate()
            .map(|(j, &g)| {
                let t = start + j as f64 / self.grid_rate;
                g * Complex64::from_polar(1.0, -2.0 * PI * f * t)
            })
            .sum::<Complex64>()
            / self.grid_rate
    }
}

/// Channel for the nominal tuning frequency of `cc`.
pub fn build_baseband_channel(pm: &PulseModel, cc: &CaptureConfig) -> Result<BasebandChannel> {
    BasebandChannel::new(pm, cc.fc, cc.fs, cc.lowpass_transition)
}

/// Provenance of a capture.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CaptureOrigin {
    pub timing: Option<String>,
    pub fc: f64,
    pub seed: u64,
    pub impairments: Option<Impairments>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexCapture {
    pub samples: Vec<Complex32>,
    pub fs: f64,
    /// Time of sample 0 relative to the start of the first frame (or of
    /// bit 0 for plain streams), excluding the random time offset.
    pub start_time: f64,
    pub origin: CaptureOrigin,
}

impl ComplexCapture {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// Which evaluation route [`render`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Per-sample sum over the channel support.
    Direct,
    /// FFT filtering at the bit rate plus polyphase fractional resampling.
    Fast,
}

/// Source of bit levels indexed by (possibly negative) bit position.
pub trait LevelSource: Sync {
    fn level(&self, m: i64) -> f32;
}

impl<F: Fn(i64) -> f32 + Sync> LevelSource for F {
    fn level(&self, m: i64) -> f32 {
        self(m)
    }
}

/// Everything needed to evaluate the sampled channel output.
struct Renderer<'a, L: LevelSource> {
    levels: &'a L,
    bits: Range<i64>,
    channel: &'a BasebandChannel,
    /// Rotator frequency in cycles per bit.
    cycles_per_bit: f64,
    /// Time of output sample 0, relative to bit 0.
    t0: f64,
    fs: f64,
}

impl<L: LevelSource> Renderer<'_, L> {
    fn symbol(&self, m: i64) -> Complex64 {
        if !self.bits.contains(&m) {
            return Complex64::default();
        }
        let v = self.levels.level(m) as f64;
        if v == 0.0 {
            return Complex64::default();
        }
        let turns = (self.cycles_per_bit * m as f64).rem_euclid(1.0);
        Complex64::from_polar(v, -2.0 * PI * turns)
    }

    /// `symbol(m0 + k)` for `k < count`, with the rotator advanced by
    /// recurrence and re-anchored every 1024 bits.
    fn symbols(&self, m0: i64, count: usize) -> Vec<Complex64> {
        let step = Complex64::from_polar(1.0, -2.0 * PI * self.cycles_per_bit.rem_euclid(1.0));
        let mut rot = Complex64::default();
        (0..count as i64)
            .map(|k| {
                let m = m0 + k;
                if k % 1024 == 0 {
                    let turns = (self.cycles_per_bit * m as f64).rem_euclid(1.0);
                    rot = Complex64::from_polar(1.0, -2.0 * PI * turns);
                } else {
                    rot *= step;
                }
                if self.bits.contains(&m) {
                    rot * self.levels.level(m) as f64
                } else {
                    Complex64::default()
                }
            })
            .collect()
    }

    /// Output time in grid units relative to bit 0.
    fn grid_position(&self, l: usize) -> f64 {
        (self.t0 + l as f64 / self.fs) * self.channel.grid_rate
    }

    fn direct(&self, out: &mut [Complex64]) {
        let half = self.channel.half_bits() as i64;
        let g = GRID_PER_BIT as i64;
        for (l, y) in out.iter_mut().enumerate() {
            let u = self.grid_position(l);
            let i = u.floor();
            let w = u - i;
            let i = i as i64;
            let n = i.div_euclid(g);
            let mut acc = Complex64::default();
            for m in (n - half - 1)..=(n + half + 1) {
                let a = self.symbol(m);
                if a == Complex64::default() {
                    continue;
                }
                let j = i - g * m;
                acc += a * (self.channel.grid_tap(j) * (1.0 - w) + self.channel.grid_tap(j + 1) * w);
            }
            *y = acc;
        }
    }

    fn fast(&self, out: &mut [Complex64]) {
        let ch = self.channel;
        let half = ch.half_bits();
        let kernel_len = 2 * half + 1;
        let block = (4 * kernel_len).next_power_of_two().max(4096);
        let valid = block - 2 * half;
        let g = GRID_PER_BIT as i64;
        let bits_per_sample = 1.0 / (self.fs * ch.bit_time);
        // Stencil covers n-2..=n+3; keep one bit of slack for rounding.
        let per_chunk = (((valid - 8) as f64 / bits_per_sample).floor() as usize).max(1);

        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(block);
        let inv = planner.plan_fft_inverse(block);
        let mut kernel = vec![Complex64::default(); block];
        kernel[..kernel_len].copy_from_slice(&ch.bit_taps);
        fwd.process(&mut kernel);
        let scale = 1.0 / block as f64;
        for k in kernel.iter_mut() {
            *k *= scale;
        }
        let weights = lagrange_table();

        out.par_chunks_mut(per_chunk)
            .enumerate()
            .for_each(|(c, chunk)| {
                let l0 = c * per_chunk;
                let first = (self.grid_position(l0).floor() as i64).div_euclid(g);
                let n_lo = first - 2;
                let m0 = n_lo - half as i64;
                let mut buf = self.symbols(m0, block);
                fwd.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(&kernel) {
                    *b *= k;
                }
                inv.process(&mut buf);
                let z = &buf[2 * half..];
                for (off, y) in chunk.iter_mut().enumerate() {
                    let u = self.grid_position(l0 + off);
                    let i = u.floor();
                    let w = u - i;
                    let i = i as i64;
                    let n = i.div_euclid(g);
                    let p = i.rem_euclid(g) as usize;
                    let base = (n - 2 - n_lo) as usize;
                    let stencil = &z[base..base + 6];
                    let s0 = dot6(stencil, &weights[p]);
                    let s1 = dot6(stencil, &weights[p + 1]);
                    *y = s0 * (1.0 - w) + s1 * w;
                }
            });
    }
}

fn dot6(z: &[Complex64], w: &[f64; 6]) -> Complex64 {
    z.iter().zip(w).map(|(a, &b)| a * b).sum()
}

/// Degree-5 Lagrange weights on nodes -2..=3 for positions `p / 16`,
/// `p = 0..=16`.
fn lagrange_table() -> Vec<[f64; 6]> {
    (0..=GRID_PER_BIT)
        .map(|p| {
            let x = p as f64 / GRID_PER_BIT as f64;
            let mut w = [0.0; 6];
            for (j, wj) in w.iter_mut().enumerate() {
                let xj = j as f64 - 2.0;
                *wj = (0..6)
                    .filter(|&k| k != j)
                    .map(|k| {
                        let xk = k as f64 - 2.0;
                        (x - xk) / (xj - xk)
                    })
                    .product();
            }
            w
        })
        .collect()
}

/// Request for [`render`]: which bits are present and where to sample.
#[derive(Clone, Debug)]
pub struct RenderRequest {
    /// Bits outside this range are treated as absent (zero level).
    pub bits: Range<i64>,
    /// Time of output sample 0 relative to bit 0, before the time offset.
    pub t0: f64,
    pub samples: usize,
}

/// Renders the capture of an arbitrary level source. Returns the sample
/// vector and the realized impairments.
pub fn render<L: LevelSource>(
    levels: &L,
    req: &RenderRequest,
    pm: &PulseModel,
    cc: &CaptureConfig,
    route: Route,
) -> Result<(Vec<Complex32>, Impairments)> {
    cc.validate()?;
    if req.bits.is_empty() {
        return Err(Error::EmptyStream);
    }
    let imp = cc.resolve();
    let fc = cc.fc + imp.freq_error;
    let channel = BasebandChannel::new(pm, fc, cc.fs, cc.lowpass_transition)?;
    let renderer = Renderer {
        levels,
        bits: req.bits.clone(),
        channel: &channel,
        cycles_per_bit: fc * pm.bit_time,
        t0: req.t0 + imp.time_offset,
        fs: cc.fs,
    };
    let mut out = vec![Complex64::default(); req.samples];
    // The polyphase route needs a strongly oversampled bit-rate signal.
    let oversampled = cc.fs * pm.bit_time <= 0.1;
    match route {
        Route::Fast if oversampled => renderer.fast(&mut out),
        _ => renderer.direct(&mut out),
    }
    let rot = Complex64::from_polar(1.0, imp.phase_offset);
    let mut samples: Vec<Complex32> = out
        .into_iter()
        .map(|y| {
            let y = y * rot;
            Complex32::new(y.re as f32, y.im as f32)
        })
        .collect();
    if cc.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cc.noise_sigma).map_err(|e| invalid(e.to_string()))?;
        let mut rng = cc.noise_rng();
        for s in samples.iter_mut() {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            *s += Complex32::new(re as f32, im as f32);
        }
    }
    Ok((samples, imp))
}

fn sample_count(bits: usize, bit_time: f64, fs: f64) -> usize {
    // Guard against representation error pushing an exact product up.
    let x = bits as f64 * bit_time * fs;
    let r = x.round();
    if (x - r).abs() < 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn capture_with(levels: &[f32], bit_time: f64, pm: &PulseModel, cc: &CaptureConfig, route: Route) -> Result<ComplexCapture> {
    if levels.is_empty() {
        return Err(Error::EmptyStream);
    }
    let req = RenderRequest {
        bits: 0..levels.len() as i64,
        t0: 0.0,
        samples: sample_count(levels.len(), bit_time, cc.fs),
    };
    let src = |m: i64| levels[m as usize];
    let (samples, imp) = render(&src, &req, pm, cc, route)?;
    Ok(ComplexCapture {
        samples,
        fs: cc.fs,
        start_time: 0.0,
        origin: CaptureOrigin {
            timing: None,
            fc: cc.fc,
            seed: cc.seed,
            impairments: Some(imp),
        },
    })
}

fn stream_levels(bs: &BitStream) -> Vec<f32> {
    bs.levels().iter().map(|&v| v as f32).collect()
}

/// Captures a single bit stream.
pub fn capture(bs: &BitStream, pm: &PulseModel, cc: &CaptureConfig) -> Result<ComplexCapture> {
    fast_capture_path(bs, pm, cc)
}

/// FFT-based realization of [`capture`].
pub fn fast_capture_path(bs: &BitStream, pm: &PulseModel, cc: &CaptureConfig) -> Result<ComplexCapture> {
    capture_with(&stream_levels(bs), bs.bit_time(), pm, cc, Route::Fast)
}

/// Direct-sum realization of [`capture`]; slow, used as a reference.
pub fn capture_direct(bs: &BitStream, pm: &PulseModel, cc: &CaptureConfig) -> Result<ComplexCapture> {
    capture_with(&stream_levels(bs), bs.bit_time(), pm, cc, Route::Direct)
}

/// Captures arbitrary real bit amplitudes (sums of channels, scaled or
/// zeroed streams).
pub fn capture_levels(levels: &[f32], bit_time: f64, pm: &PulseModel, cc: &CaptureConfig) -> Result<ComplexCapture> {
    capture_with(levels, bit_time, pm, cc, Route::Fast)
}

/// Captures the electrical sum of several channel streams.
pub fn capture_channels(streams: &[BitStream], pm: &PulseModel, cc: &CaptureConfig) -> Result<ComplexCapture> {
    let first = streams.first().ok_or(Error::EmptyStream)?;
    capture_levels(&electrical_sum(streams), first.bit_time(), pm, cc)
}

/// Samples [`capture_periodic`] records before and after the nominal window.
pub const PERIODIC_MARGIN: usize = 8;

/// Captures `frames` periods of a continuously repeated frame, starting
/// `start_bit` bits into the frame. Bits before and after the window
/// follow the periodic repetition, so there are no edge transients.
/// [`PERIODIC_MARGIN`] extra samples are kept on each side of the window.
pub fn capture_periodic(
    frame: &[f32],
    bit_time: f64,
    frames: usize,
    start_bit: usize,
    pm: &PulseModel,
    cc: &CaptureConfig,
) -> Result<ComplexCapture> {
    if frame.is_empty() || frames == 0 {
        return Err(Error::EmptyStream);
    }
    let period = frame.len() as i64;
    let margin = PERIODIC_MARGIN as f64 / cc.fs;
    let guard_time = SUPPORT_FACTOR / (cc.lowpass_transition * cc.fs) + margin + 4.0 / cc.fs;
    let guard = (guard_time / bit_time).ceil() as i64 + 2;
    let start = start_bit as i64;
    let total = frames * frame.len();
    let req = RenderRequest {
        bits: (start - guard)..(start + total as i64 + guard),
        t0: start as f64 * bit_time - margin,
        samples: sample_count(total, bit_time, cc.fs) + 2 * PERIODIC_MARGIN,
    };
    let src = move |m: i64| frame[m.rem_euclid(period) as usize];
    let (samples, imp) = render(&src, &req, pm, cc, Route::Fast)?;
    Ok(ComplexCapture {
        samples,
        fs: cc.fs,
        start_time: start as f64 * bit_time - margin,
        origin: CaptureOrigin {
            timing: None,
            fc: cc.fc,
            seed: cc.seed,
            impairments: Some(imp),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TB: f64 = 1.0 / 1.08e9;

    #[test]
    fn mask_shape() {
        let fs = 50e6;
        assert_eq!(lowpass_mask(0.0, fs, 0.05), 1.0);
        assert_eq!(lowpass_mask(25e6, fs, 0.05), 0.0);
        assert_eq!(lowpass_mask(-30e6, fs, 0.05), 0.0);
        let mid = lowpass_mask(25e6 - 1.25e6, fs, 0.05);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn amplitude_is_linear() {
        let pm = PulseModel::delayed_difference(TB, 0.01).unwrap();
        let a = BasebandChannel::new(&pm, 324e6, 50e6, 0.05).unwrap();
        let b = BasebandChannel::new(&pm.with_amplitude(2.0), 324e6, 50e6, 0.05).unwrap();
        for (x, y) in a.taps().iter().zip(b.taps()) {
            assert!((x * 2.0 - y).norm() <= 1e-12 * x.norm().max(1e-30));
        }
    }

    #[test]
    fn rect_nulls_at_bit_rate_multiples() {
        let pm = PulseModel::rect(TB).unwrap();
        let fs = 2e6;
        let on_null = BasebandChannel::new(&pm, 1.0 / TB, fs, 0.05).unwrap();
        let off_null = BasebandChannel::new(&pm, 0.5 / TB, fs, 0.05).unwrap();
        let peak = |c: &BasebandChannel| c.taps().iter().map(|t| t.norm()).fold(0.0, f64::max);
        assert!(peak(&on_null) < 0.01 * peak(&off_null));
    }

    #[test]
    fn rejects_bad_rate() {
        let pm = PulseModel::rect(TB).unwrap();
        assert!(BasebandChannel::new(&pm, 1e8, 0.0, 0.05).is_err());
        let mut cc = CaptureConfig::ideal(1e8, 50e6);
        cc.fs = -1.0;
        assert!(cc.validate().is_err());
    }

    #[test]
    fn empty_stream_rejected() {
        let pm = PulseModel::rect(TB).unwrap();
        let cc = CaptureConfig::ideal(324e6, 50e6);
        let bs = BitStream::new(vec![], TB).unwrap();
        assert!(matches!(capture(&bs, &pm, &cc), Err(Error::EmptyStream)));
    }

    #[test]
    fn rotator_period_ten_at_third_harmonic() {
        let cycles = 3.0 / (10.0 * TB) * TB;
        let rot = |m: i64| Complex64::from_polar(1.0, -2.0 * PI * (cycles * m as f64).rem_euclid(1.0));
        for m in 0..100 {
            assert!((rot(m) - rot(m + 10)).norm() < 1e-9);
        }
        assert!((rot(1) - rot(0)).norm() > 0.1);
    }

    #[test]
    fn lagrange_reproduces_nodes() {
        let t = lagrange_table();
        assert!((t[0][2] - 1.0).abs() < 1e-15);
        assert!((t[16][3] - 1.0).abs() < 1e-15);
        for row in &t {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
