//! Leakage model of one TMDS channel.
//!
//! The differential pair radiates the sum of its two legs. With the
//! negative leg delayed by a fraction `epsilon` of the bit time, the
//! residual is a PCM signal whose conforming pulse is
//! `q(t) = p(t) - p(t - epsilon * Tb)` for a rectangular `p` of width `Tb`.
//! The rectangular variant uses `q = p` directly.

use std::f64::consts::PI;

use image::GrayImage;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::timing::VideoTiming;
use crate::tmds::{control_symbol, encode_line_symbols, TmdsSymbol};

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseKind {
    Rect,
    DelayedDifference { epsilon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseModel {
    #[serde(flatten)]
    pub kind: PulseKind,
    /// Bit duration in seconds.
    pub bit_time: f64,
    /// Volts per bit unit.
    pub amplitude: f64,
}

impl PulseModel {
    pub fn rect(bit_time: f64) -> Result<Self> {
        Self::new(PulseKind::Rect, bit_time, 1.0)
    }

    pub fn delayed_difference(bit_time: f64, epsilon: f64) -> Result<Self> {
        Self::new(PulseKind::DelayedDifference { epsilon }, bit_time, 1.0)
    }

    pub fn new(kind: PulseKind, bit_time: f64, amplitude: f64) -> Result<Self> {
        if !(bit_time > 0.0 && bit_time.is_finite()) {
            return Err(invalid(format!("bit time must be positive, got {bit_time}")));
        }
        if let PulseKind::DelayedDifference { epsilon } = kind {
            if !(epsilon > 0.0 && epsilon < 1.0) {
                return Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
            }
        }
        if !amplitude.is_finite() {
            return Err(invalid("amplitude must be finite"));
        }
        Ok(PulseModel {
            kind,
            bit_time,
            amplitude,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Fourier transform `Q(f)` of the conforming pulse. The rectangular
    /// pulse occupies `[0, Tb)`.
    pub fn spectrum(&self, f: f64) -> Complex64 {
        let tb = self.bit_time;
        let p = Complex64::from_polar(self.amplitude * tb * sinc(f * tb), -PI * f * tb);
        match self.kind {
            PulseKind::Rect => p,
            PulseKind::DelayedDifference { epsilon } => {
                p * (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -2.0 * PI * f * epsilon * tb))
            }
        }
    }

    /// `|Q(f)|^2 / Tb`, the factor relating the bit-sequence spectrum to
    /// the PSD of the radiated signal.
    pub fn power_spectrum(&self, f: f64) -> f64 {
        let tb = self.bit_time;
        let a2 = self.amplitude * self.amplitude;
        let s = sinc(f * tb);
        let base = tb * s * s * a2;
        match self.kind {
            PulseKind::Rect => base,
            PulseKind::DelayedDifference { epsilon } => {
                let sn = (PI * f * epsilon * tb).sin();
                4.0 * sn * sn * base
            }
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.kind {
            PulseKind::Rect => None,
            PulseKind::DelayedDifference { epsilon } => Some(epsilon),
        }
    }
}

/// Free-function form of [`PulseModel::power_spectrum`].
pub fn pulse_power_spectrum(pm: &PulseModel, f: f64) -> f64 {
    pm.power_spectrum(f)
}

/// Antipodal bit sequence (`-1` for a zero bit, `+1` for a one bit).
#[derive(Clone, Debug, PartialEq)]
pub struct BitStream {
    levels: Vec<i8>,
    bit_time: f64,
}

impl BitStream {
    /// Wraps a level sequence; every value must be `-1` or `+1`.
    pub fn new(levels: Vec<i8>, bit_time: f64) -> Result<Self> {
        if let Some(pos) = levels.iter().position(|&v| v != 1 && v != -1) {
            return Err(invalid(format!("level {} at index {pos} is not +-1", levels[pos])));
        }
        if !(bit_time > 0.0) {
            return Err(invalid("bit time must be positive"));
        }
        Ok(BitStream { levels, bit_time })
    }

    /// Maps 0/1 bits to -1/+1.
    pub fn from_bits(bits: &[u8], bit_time: f64) -> Result<Self> {
        Self::new(bits.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect(), bit_time)
    }

    pub fn levels(&self) -> &[i8] {
        &self.levels
    }

    pub fn bit_time(&self) -> f64 {
        self.bit_time
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Circularly advances the stream so that it starts at bit `offset`.
    pub fn rotated(&self, offset: usize) -> BitStream {
        let mut levels = self.levels.clone();
        if !levels.is_empty() {
            levels.rotate_left(offset % self.levels.len());
        }
        BitStream {
            levels,
            bit_time: self.bit_time,
        }
    }
}

/// How the three TMDS channels contribute to the radiated field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// One channel only.
    #[default]
    SingleChannel,
    /// Electrical sum of the red, green and blue channels.
    RgbSum,
}

fn push_symbol(out: &mut Vec<i8>, sym: TmdsSymbol) {
    out.extend(sym.wire_bits().map(|b| if b { 1i8 } else { -1 }));
}

/// Serializes one grayscale frame onto a single TMDS channel.
///
/// Raster order, one line per `total_x` pixels: the active pixels of the
/// line come first, followed by horizontal blanking. Rows past `active_y`
/// are vertical blanking. Blanking carries the ctl=00 control code.
pub fn serialize_channel(image: &GrayImage, timing: &VideoTiming) -> Result<BitStream> {
    let (w, h) = image.dimensions();
    if w as usize != timing.active_x || h as usize != timing.active_y {
        return Err(Error::Dimensions {
            expected_rows: timing.active_y,
            expected_cols: timing.active_x,
            rows: h as usize,
            cols: w as usize,
        });
    }
    let blank = control_symbol(0).expect("ctl 00 exists");
    let mut levels = Vec::with_capacity(timing.bits_per_frame());
    let raw = image.as_raw();
    for row in 0..timing.total_y {
        let mut used = 0;
        if row < timing.active_y {
            let line = &raw[row * timing.active_x..(row + 1) * timing.active_x];
            for sym in encode_line_symbols(line) {
                push_symbol(&mut levels, sym);
            }
            used = timing.active_x;
        }
        for _ in used..timing.total_x {
            push_symbol(&mut levels, blank);
        }
    }
    Ok(BitStream {
        levels,
        bit_time: timing.bit_period(),
    })
}

/// Serializes a grayscale frame for the given channel mode. With
/// [`ChannelMode::RgbSum`] the three (identical) channel streams are
/// returned; their electrical sum is formed by the capture stage.
pub fn serialize_frame(
    image: &GrayImage,
    timing: &VideoTiming,
    mode: ChannelMode,
) -> Result<Vec<BitStream>> {
    let single = serialize_channel(image, timing)?;
    Ok(match mode {
        ChannelMode::SingleChannel => vec![single],
        ChannelMode::RgbSum => vec![single.clone(), single.clone(), single],
    })
}

/// Serializes an RGB frame into its three channel streams (R, G, B).
pub fn serialize_frame_rgb(image: &image::RgbImage, timing: &VideoTiming) -> Result<[BitStream; 3]> {
    let (w, h) = image.dimensions();
    let plane = |c: usize| GrayImage::from_fn(w, h, |x, y| image::Luma([image.get_pixel(x, y).0[c]]));
    Ok([
        serialize_channel(&plane(0), timing)?,
        serialize_channel(&plane(1), timing)?,
        serialize_channel(&plane(2), timing)?,
    ])
}

/// Per-bit electrical sum of several channel streams.
pub fn electrical_sum(streams: &[BitStream]) -> Vec<f32> {
    let n = streams.iter().map(BitStream::len).max().unwrap_or(0);
    let mut sum = vec![0f32; n];
    for s in streams {
        for (acc, &v) in sum.iter_mut().zip(&s.levels) {
            *acc += v as f32;
        }
    }
    sum
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_length: usize,
    /// Overlap between consecutive segments, in samples.
    pub overlap: usize,
}

impl WelchConfig {
    /// Hann segments of the smallest power of two at least `10 * total_x`
    /// samples, overlapping by half.
    pub fn for_timing(timing: &VideoTiming) -> Self {
        Self::half_overlap((10 * timing.total_x).next_power_of_two())
    }

    pub fn half_overlap(segment_length: usize) -> Self {
        WelchConfig {
            segment_length,
            overlap: segment_length / 2,
        }
    }
}

/// A one-sided grid of spectral density values. Densities are the
/// two-sided PSD evaluated at the non-negative grid frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub density: Vec<f64>,
    pub segment_length: usize,
    pub overlap: usize,
}

impl PsdEstimate {
    pub fn bin_width(&self) -> f64 {
        if self.frequencies.len() < 2 {
            0.0
        } else {
            self.frequencies[1] - self.frequencies[0]
        }
    }

    /// Index of the grid point closest to `f`.
    pub fn bin_of(&self, f: f64) -> usize {
        let w = self.bin_width();
        if w <= 0.0 {
            return 0;
        }
        (((f - self.frequencies[0]) / w).round().max(0.0) as usize).min(self.frequencies.len() - 1)
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().cloned().fold(0.0, f64::max)
    }

    /// Density scaled so that its maximum is one.
    pub fn normalized(&self) -> Vec<f64> {
        let m = self.max_density();
        if m > 0.0 {
            self.density.iter().map(|d| d / m).collect()
        } else {
            self.density.clone()
        }
    }

    /// Trapezoidal integral of the density over the grid.
    pub fn integrate(&self) -> f64 {
        self.frequencies
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(f, d)| 0.5 * (f[1] - f[0]) * (d[0] + d[1]))
            .sum()
    }
}

/// Welch-averaged periodogram of a real sequence sampled at `sample_rate`.
///
/// Each Hann-windowed segment contributes `|X(f)|^2 / sum(w^2)`, so for a
/// white unit-power sequence the estimate is one at every frequency (in
/// per-sample units, independent of `sample_rate`).
pub fn welch<F>(len: usize, sample: F, sample_rate: f64, cfg: WelchConfig) -> Result<PsdEstimate>
where
    F: Fn(usize) -> f64,
{
    let n = cfg.segment_length;
    if n < 2 || cfg.overlap >= n {
        return Err(invalid(format!(
            "segment length {n} with overlap {} is not usable",
            cfg.overlap
        )));
    }
    if len < 2 * n {
        return Err(Error::TooShort {
            needed: 2 * n,
            got: len,
        });
    }
    let hop = n - cfg.overlap;
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect();
    let norm: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![0f64; bins];
    let mut buf = vec![Complex64::default(); n];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    let mut segments = 0usize;
    let mut start = 0;
    while start + n <= len {
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(sample(start + i) * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (a, x) in acc.iter_mut().zip(&buf) {
            *a += x.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (norm * segments as f64);
    Ok(PsdEstimate {
        frequencies: (0..bins).map(|k| k as f64 * sample_rate / n as f64).collect(),
        density: acc.into_iter().map(|a| a * scale).collect(),
        segment_length: n,
        overlap: cfg.overlap,
    })
}

/// PSD of the radiated signal: the Welch estimate of the bit-sequence
/// spectrum multiplied by `|Q(f)|^2 / Tb` on the same grid.
pub fn estimate_psd(bs: &BitStream, pm: &PulseModel, cfg: WelchConfig) -> Result<PsdEstimate> {
    let levels = bs.levels();
    let mut est = welch(levels.len(), |i| levels[i] as f64, 1.0 / bs.bit_time(), cfg)?;
    for (d, &f) in est.density.iter_mut().zip(&est.frequencies) {
        *d *= pm.power_spectrum(f);
    }
    Ok(est)
}

/// Welch estimate of the bit-sequence spectrum alone.
pub fn estimate_bit_spectrum(bs: &BitStream, cfg: WelchConfig) -> Result<PsdEstimate> {
    let levels = bs.levels();
    welch(levels.len(), |i| levels[i] as f64, 1.0 / bs.bit_time(), cfg)
}

/// Local maxima whose topographic prominence, relative to the global
/// maximum of the density, is at least `min_prominence`. Sorted by
/// frequency. Plateaus report their middle sample.
pub fn find_spectral_peaks(psd: &PsdEstimate, min_prominence: f64) -> Vec<f64> {
    peak_indices(&psd.density, min_prominence * psd.max_density())
        .into_iter()
        .map(|i| psd.frequencies[i])
        .collect()
}

/// Indices of local maxima with absolute prominence at least `min_prom`.
pub fn peak_indices(x: &[f64], min_prom: f64) -> Vec<usize> {
    let n = x.len();
    if n < 3 {
        return Vec::new();
    }
    // Candidate peaks: plateau runs higher than both neighbours.
    let mut candidates = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if x[i] > x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                candidates.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if candidates.is_empty() {
        return candidates;
    }
    let left_higher = nearest_greater(x, false);
    let right_higher = nearest_greater(x, true);
    let rmq = RangeMin::new(x);
    candidates
        .into_iter()
        .filter(|&p| {
            let left_base = match left_higher[p] {
                Some(l) => rmq.min(l, p),
                None => rmq.min(0, p),
            };
            let right_base = match right_higher[p] {
                Some(r) => rmq.min(p, r),
                None => rmq.min(p, n - 1),
            };
            x[p] - left_base.max(right_base) >= min_prom
        })
        .collect()
}

/// For each index, the closest index on one side holding a strictly
/// greater value.
fn nearest_greater(x: &[f64], to_right: bool) -> Vec<Option<usize>> {
    let n = x.len();
    let mut out = vec![None; n];
    let mut stack: Vec<usize> = Vec::new();
    let order: Box<dyn Iterator<Item = usize>> = if to_right {
        Box::new((0..n).rev())
    } else {
        Box::new(0..n)
    };
    for i in order {
        while let Some(&top) = stack.last() {
            if x[top] > x[i] {
                break;
            }
            stack.pop();
        }
        out[i] = stack.last().copied();
        stack.push(i);
    }
    out
}

/// Sparse table for inclusive range minima.
struct RangeMin {
    levels: Vec<Vec<f64>>,
}

impl RangeMin {
    fn new(x: &[f64]) -> Self {
        let mut levels = vec![x.to_vec()];
        let mut span = 1;
        while 2 * span <= x.len() {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = (0..=x.len() - 2 * span)
                .map(|i| prev[i].min(prev[i + span]))
                .collect();
            levels.push(next);
            span *= 2;
        }
        RangeMin { levels }
    }

    fn min(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let len = hi - lo + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let lvl = &self.levels[k];
        lvl[lo].min(lvl[hi + 1 - (1 << k)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timing::PixelClock;

    fn toy_timing() -> VideoTiming {
        // 4x2 active inside a 6x4 raster.
        VideoTiming::new("toy", (4, 2), (6, 4), PixelClock::hz(6 * 4 * 60), 60.0).unwrap()
    }

    #[test]
    fn pulse_dc_values() {
        let tb = 1e-9;
        let d = PulseModel::delayed_difference(tb, 0.002).unwrap();
        assert_eq!(d.power_spectrum(0.0), 0.0);
        let r = PulseModel::rect(tb).unwrap().with_amplitude(2.0);
        assert!((r.power_spectrum(0.0) - 4.0 * tb).abs() < 1e-24);
    }

    #[test]
    fn pulse_spectrum_matches_power_form() {
        let tb = 1.0 / 1.08e9;
        let pm = PulseModel::delayed_difference(tb, 0.1).unwrap();
        for k in 0..50 {
            let f = k as f64 * 3.7e7;
            let q = pm.spectrum(f);
            let lhs = q.norm_sqr() / tb;
            assert!((lhs - pm.power_spectrum(f)).abs() <= 1e-9 * lhs.max(1e-30), "f={f}");
        }
        // Nulls at multiples of 1/(epsilon Tb).
        assert!(pm.power_spectrum(1.0 / (0.1 * tb)) < 1e-25);
    }

    #[test]
    fn pulse_validation() {
        assert!(PulseModel::delayed_difference(1e-9, 0.0).is_err());
        assert!(PulseModel::delayed_difference(1e-9, 1.0).is_err());
        assert!(PulseModel::rect(0.0).is_err());
    }

    #[test]
    fn frame_layout_on_toy_timing() {
        let t = toy_timing();
        let img = GrayImage::from_pixel(4, 2, image::Luma([0]));
        let bs = serialize_channel(&img, &t).unwrap();
        assert_eq!(bs.len(), 10 * 6 * 4);
        let line = |r: usize| &bs.levels()[r * 60..(r + 1) * 60];
        // Identical content lines and identical blanking across lines.
        assert_eq!(line(0), line(1));
        assert_eq!(line(2), line(3));
        assert_eq!(&line(0)[40..], &line(2)[40..]);
        // Video region repeats every 20 bits after the first symbol.
        let v = &line(0)[..40];
        assert_eq!(&v[10..20], &v[30..40]);
    }

    #[test]
    fn dimension_mismatch() {
        let t = toy_timing();
        let img = GrayImage::new(3, 2);
        assert!(matches!(serialize_channel(&img, &t), Err(Error::Dimensions { .. })));
    }

    #[test]
    fn rgb_sum_of_gray_is_triple() {
        let t = toy_timing();
        let img = GrayImage::from_fn(4, 2, |x, y| image::Luma([(x * 40 + y * 7) as u8]));
        let single = serialize_frame(&img, &t, ChannelMode::SingleChannel).unwrap();
        let rgb = serialize_frame(&img, &t, ChannelMode::RgbSum).unwrap();
        let s1 = electrical_sum(&single);
        let s3 = electrical_sum(&rgb);
        assert!(s1.iter().zip(&s3).all(|(a, b)| 3.0 * a == *b));
        let rgb_img = image::RgbImage::from_fn(4, 2, |x, y| {
            let v = img.get_pixel(x, y).0[0];
            image::Rgb([v, v, v])
        });
        let chans = serialize_frame_rgb(&rgb_img, &t).unwrap();
        assert_eq!(electrical_sum(&chans), s3);
    }

    #[test]
    fn bitstream_rejects_non_antipodal() {
        assert!(BitStream::new(vec![1, 0, -1], 1.0).is_err());
        let bs = BitStream::from_bits(&[1, 0, 1], 1.0).unwrap();
        assert_eq!(bs.levels(), &[1, -1, 1]);
        assert_eq!(bs.rotated(1).levels(), &[-1, 1, 1]);
    }

    #[test]
    fn too_short_for_welch() {
        let bs = BitStream::new(vec![1; 100], 1.0).unwrap();
        let pm = PulseModel::rect(1.0).unwrap();
        assert!(matches!(
            estimate_psd(&bs, &pm, WelchConfig::half_overlap(64)),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn flat_density_has_no_peaks() {
        let psd = PsdEstimate {
            frequencies: (0..100).map(|i| i as f64).collect(),
            density: vec![1.0; 100],
            segment_length: 198,
            overlap: 99,
        };
        assert!(find_spectral_peaks(&psd, 0.01).is_empty());
    }

    #[test]
    fn prominence_filters_small_bumps() {
        let x = [0.0, 1.0, 0.9, 5.0, 0.0, 0.2, 0.1, 0.0];
        assert_eq!(peak_indices(&x, 0.0), vec![1, 3, 5]);
        assert_eq!(peak_indices(&x, 0.15), vec![3, 5]);
        assert_eq!(peak_indices(&x, 0.25), vec![3]);
        // Plateau reports its middle.
        assert_eq!(peak_indices(&[0.0, 2.0, 2.0, 2.0, 0.0], 1.0), vec![2]);
    }

    #[test]
    fn sinusoid_gives_one_peak() {
        let fs = 1000.0;
        let f0 = 125.0;
        let psd = welch(
            8192,
            |i| (2.0 * PI * f0 * i as f64 / fs).sin(),
            fs,
            WelchConfig::half_overlap(512),
        )
        .unwrap();
        let peaks = find_spectral_peaks(&psd, 0.01);
        assert_eq!(peaks.len(), 1, "{peaks:?}");
        assert!((peaks[0] - f0).abs() <= psd.bin_width());
    }
}
