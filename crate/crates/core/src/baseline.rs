//! Classical reconstruction: envelope detection and display normalization.

use image::{GrayImage, Luma};

use crate::error::{invalid, Result};
use crate::imaging::{ComplexImage, RealImage};

/// Lower and upper stretch percentiles of [`normalize_to_u8`].
pub const STRETCH_PERCENTILES: (f64, f64) = (1.0, 99.0);

/// Linear-interpolated percentile of unsorted data, `p` in `[0, 100]`.
pub fn percentile(values: &[f32], p: f64) -> f32 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f32::total_cmp);
    sorted_percentile(&v, p)
}

fn sorted_percentile(sorted: &[f32], p: f64) -> f32 {
    if sorted.is_empty() {
        return f32::NAN;
    }
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = (pos - lo as f64) as f32;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Stretches the 1st..99th percentile range linearly onto 0..255 and
/// clamps. A constant input maps to mid-gray.
pub fn normalize_to_u8(img: &RealImage) -> Result<GrayImage> {
    if img.data().iter().any(|v| !v.is_finite()) {
        return Err(invalid("image contains non-finite values"));
    }
    let mut sorted = img.data().to_vec();
    sorted.sort_unstable_by(f32::total_cmp);
    let lo = sorted_percentile(&sorted, STRETCH_PERCENTILES.0) as f64;
    let hi = sorted_percentile(&sorted, STRETCH_PERCENTILES.1) as f64;
    let (w, h) = (img.cols() as u32, img.rows() as u32);
    if !(hi > lo) {
        return Ok(GrayImage::from_pixel(w, h, Luma([128])));
    }
    let scale = 255.0 / (hi - lo);
    let px = img
        .data()
        .iter()
        .map(|&v| ((v as f64 - lo) * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok(GrayImage::from_raw(w, h, px).expect("buffer matches dimensions"))
}

/// Envelope detector: per-pixel magnitude, normalized for display.
pub fn envelope(y: &ComplexImage) -> GrayImage {
    normalize_to_u8(&y.magnitude()).expect("magnitudes of finite samples are finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex32;

    #[test]
    fn constant_maps_to_mid_gray() {
        let img = RealImage::new(3, 3, vec![4.2; 9]).unwrap();
        assert!(normalize_to_u8(&img).unwrap().pixels().all(|p| p.0[0] == 128));
    }

    #[test]
    fn full_range_ramp_is_near_identity() {
        let data: Vec<f32> = (0..256 * 40).map(|i| (i % 256) as f32).collect();
        let out = normalize_to_u8(&RealImage::new(40, 256, data.clone()).unwrap()).unwrap();
        for (a, b) in data.iter().zip(out.as_raw()) {
            assert!((*a - *b as f32).abs() <= 3.0);
        }
    }

    #[test]
    fn envelope_ignores_phase_and_conjugation() {
        let data: Vec<Complex32> = (0..64).map(|i| Complex32::new((i as f32).sin(), (i as f32 * 0.3).cos())).collect();
        let y = ComplexImage::new(8, 8, data).unwrap();
        let base = envelope(&y);
        let rot = Complex32::from_polar(1.0, 1.234);
        assert_eq!(envelope(&y.map(|c| c * rot)), base);
        assert_eq!(envelope(&y.map(|c| c.conj())), base);
    }

    #[test]
    fn rejects_non_finite() {
        let img = RealImage::new(1, 2, vec![0.0, f32::NAN]).unwrap();
        assert!(normalize_to_u8(&img).is_err());
    }
}
