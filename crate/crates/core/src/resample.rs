//! Windowed-sinc fractional interpolation with a polyphase table.

use std::f64::consts::PI;

use num_complex::Complex32;

/// Interpolates a uniformly sampled sequence at fractional positions.
///
/// Each phase holds `taps` Kaiser-windowed sinc coefficients. Positions
/// between table phases blend the two neighbouring phases linearly.
#[derive(Clone, Debug)]
pub struct PolyphaseInterpolator {
    taps: usize,
    phases: usize,
    table: Vec<f32>,
}

impl Default for PolyphaseInterpolator {
    fn default() -> Self {
        Self::new(16, 256, 10.0)
    }
}

fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..100 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

impl PolyphaseInterpolator {
    /// `taps` must be even; `phases` is the table resolution per sample.
    pub fn new(taps: usize, phases: usize, beta: f64) -> Self {
        assert!(taps >= 2 && taps % 2 == 0, "tap count must be even");
        assert!(phases >= 1);
        let half = (taps / 2) as f64;
        let norm = bessel_i0(beta);
        let mut table = Vec::with_capacity((phases + 1) * taps);
        for p in 0..=phases {
            let frac = p as f64 / phases as f64;
            for j in 0..taps {
                // Tap j sits at offset (j - taps/2 + 1) from floor(pos).
                let x = j as f64 - (half - 1.0) - frac;
                let sinc = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
                let r = x / half;
                let w = if r.abs() >= 1.0 {
                    0.0
                } else {
                    bessel_i0(beta * (1.0 - r * r).sqrt()) / norm
                };
                table.push((sinc * w) as f32);
            }
        }
        PolyphaseInterpolator { taps, phases, table }
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    fn phase(&self, p: usize) -> &[f32] {
        &self.table[p * self.taps..(p + 1) * self.taps]
    }

    /// Value at fractional position `pos`; samples outside the input are
    /// taken as zero.
    pub fn at(&self, x: &[Complex32], pos: f64) -> Complex32 {
        let base = pos.floor();
        let frac = pos - base;
        let base = base as i64;
        let ph = frac * self.phases as f64;
        let p0 = (ph.floor() as usize).min(self.phases - 1);
        let blend = (ph - p0 as f64) as f32;
        let (c0, c1) = (self.phase(p0), self.phase(p0 + 1));
        let first = base - (self.taps as i64 / 2 - 1);
        let mut acc = Complex32::default();
        for j in 0..self.taps {
            let idx = first + j as i64;
            if idx < 0 || idx as usize >= x.len() {
                continue;
            }
            let w = c0[j] + (c1[j] - c0[j]) * blend;
            acc += x[idx as usize] * w;
        }
        acc
    }

    /// Whether `pos` can be interpolated without touching missing samples.
    pub fn covers(&self, len: usize, pos: f64) -> bool {
        let base = pos.floor() as i64;
        base - (self.taps as i64 / 2 - 1) >= 0 && base + (self.taps as i64 / 2) < len as i64
    }
}
