//! Term-by-term evaluation of the sampled channel sum.

use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use tmds_leak::capture::{BasebandChannel, CaptureConfig};
use tmds_leak::emission::PulseModel;

/// y[l] = e^{j phi} sum_k x[k] e^{-j 2 pi fc' k Tb} g(l/fs + tau - k Tb)
pub fn brute_force(levels: &[f32], tb: f64, pm: &PulseModel, cc: &CaptureConfig) -> Vec<Complex64> {
    let imp = cc.resolve();
    let fc = cc.fc + imp.freq_error;
    let ch = BasebandChannel::new(pm, fc, cc.fs, cc.lowpass_transition).unwrap();
    let n_out = (levels.len() as f64 * tb * cc.fs).ceil() as usize;
    let support = ch.half_bits() as f64 * tb + 2.0 * tb;
    (0..n_out)
        .map(|l| {
            let t = l as f64 / cc.fs + imp.time_offset;
            let mut acc = Complex64::default();
            for (k, &x) in levels.iter().enumerate() {
                let dt = t - k as f64 * tb;
                if dt.abs() > support {
                    continue;
                }
                let rot = Complex64::from_polar(1.0, -2.0 * PI * fc * k as f64 * tb);
                acc += rot * ch.eval(dt) * x as f64;
            }
            acc * Complex64::from_polar(1.0, imp.phase_offset)
        })
        .collect()
}

pub fn rel_rms(a: &[Complex32], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (Complex64::new(x.re as f64, x.im as f64) - y).norm_sqr())
        .sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}
