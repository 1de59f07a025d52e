//! Line-grid resampling, blanking detection and recentering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capture::ComplexCapture;
use crate::error::{Error, Result};
use crate::imaging::{rotate_raster, ComplexImage, RealImage};
use crate::resample::PolyphaseInterpolator;
use crate::timing::VideoTiming;

/// Gradient magnitudes at or below this quantile are not edges.
pub const EDGE_QUANTILE: f64 = 0.90;
/// Minimum share of a boundary's length that must be edge pixels.
pub const LINE_FRACTION: f64 = 0.25;
/// Allowed deviation of a boundary pair from the nominal blanking size.
pub const PAIR_TOLERANCE: f64 = 2.0;
/// Search radius around a coarse column edge for the level crossing.
pub const REFINE_RADIUS: usize = 6;
/// Allowed mismatch between refined edge separation and blanking width.
pub const REFINE_TOLERANCE: f64 = 1.0;

/// Capture samples per video line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplesPerLine {
    pub exact: f64,
    pub rounded: usize,
}

pub fn samples_per_line(fs: f64, timing: &VideoTiming) -> SamplesPerLine {
    let exact = fs * timing.total_x as f64 * timing.pixel_period();
    SamplesPerLine {
        exact,
        rounded: exact.round() as usize,
    }
}

/// Resamples one frame of a capture onto the `total_y x total_x` pixel
/// grid. Grid pixel `(r, c)` sits at time `(r * total_x + c) * Tp` on the
/// capture's clock, so it uses the exact samples-per-line ratio.
pub fn resample_to_line_grid(cap: &ComplexCapture, timing: &VideoTiming) -> Result<ComplexImage> {
    resample_frame(cap, timing, 0)
}

/// Like [`resample_to_line_grid`] for frame number `frame` of the capture.
pub fn resample_frame(cap: &ComplexCapture, timing: &VideoTiming, frame: usize) -> Result<ComplexImage> {
    if !(cap.fs > 0.0) {
        return Err(Error::InvalidParameter("sample rate must be positive".into()));
    }
    let (tx, ty) = (timing.total_x, timing.total_y);
    let tp = timing.pixel_period();
    let frame_start = (frame * tx * ty) as f64 * tp;
    let pos_of = |j: usize| (frame_start + j as f64 * tp - cap.start_time) * cap.fs;
    let last = pos_of(tx * ty - 1);
    if last >= cap.len() as f64 || pos_of(0) < -1.0 {
        let needed = (last.max(0.0) + 1.0).ceil() as usize;
        return Err(Error::TooShort {
            needed,
            got: cap.len(),
        });
    }
    let interp = PolyphaseInterpolator::default();
    let mut data = vec![Default::default(); tx * ty];
    data.par_chunks_mut(tx).enumerate().for_each(|(r, row)| {
        for (c, out) in row.iter_mut().enumerate() {
            *out = interp.at(&cap.samples, pos_of(r * tx + c));
        }
    });
    ComplexImage::new(ty, tx, data)
}

/// Grid position of the first active pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameShift {
    pub row: usize,
    pub col: usize,
}

impl FrameShift {
    /// Raster offset of the active start on a grid `total_x` wide.
    pub fn linear(&self, total_x: usize) -> usize {
        self.row * total_x + self.col
    }
}

/// Rotates the full grid so that `shift` moves to (0, 0), treating the
/// grid as one raster of `rows * cols` pixels.
pub fn recenter(img: &ComplexImage, shift: FrameShift) -> Result<ComplexImage> {
    let data = rotate_raster(img.data(), shift.linear(img.cols()));
    ComplexImage::new(img.rows(), img.cols(), data)
}

/// Extracts the active `active_y x active_x` region that starts at `shift`.
/// Lines are consecutive on the raster, so a column offset carries into the
/// next row.
pub fn recenter_and_crop(img: &ComplexImage, shift: FrameShift, timing: &VideoTiming) -> Result<ComplexImage> {
    check_grid(img.rows(), img.cols(), timing)?;
    let tx = timing.total_x;
    let rotated = recenter(img, shift)?.into_data();
    let mut out = Vec::with_capacity(timing.active_x * timing.active_y);
    for r in 0..timing.active_y {
        out.extend_from_slice(&rotated[r * tx..r * tx + timing.active_x]);
    }
    ComplexImage::new(timing.active_y, timing.active_x, out)
}

fn check_grid(rows: usize, cols: usize, timing: &VideoTiming) -> Result<()> {
    if rows != timing.total_y || cols != timing.total_x {
        return Err(Error::Dimensions {
            expected_rows: timing.total_y,
            expected_cols: timing.total_x,
            rows,
            cols,
        });
    }
    Ok(())
}

/// Binary edge map with orientation.
struct EdgeMap {
    /// Edge whose gradient is mostly horizontal (a vertical line).
    vertical: Vec<bool>,
    /// Edge whose gradient is mostly vertical (a horizontal line).
    horizontal: Vec<bool>,
}

/// Sobel operator on the raster topology: the right neighbour of the last
/// column is the first pixel of the next line, and the frame wraps.
fn sobel(mag: &RealImage) -> (Vec<f32>, Vec<f32>) {
    let w = mag.cols() as i64;
    let n = mag.data().len() as i64;
    let d = mag.data();
    let at = |j: i64| d[j.rem_euclid(n) as usize];
    let mut gx = vec![0f32; n as usize];
    let mut gy = vec![0f32; n as usize];
    gx.par_iter_mut().zip(gy.par_iter_mut()).enumerate().for_each(|(j, (gx, gy))| {
        let j = j as i64;
        let (u, dn) = (j - w, j + w);
        *gx = (at(u + 1) - at(u - 1)) + 2.0 * (at(j + 1) - at(j - 1)) + (at(dn + 1) - at(dn - 1));
        *gy = (at(dn - 1) - at(u - 1)) + 2.0 * (at(dn) - at(u)) + (at(dn + 1) - at(u + 1));
    });
    (gx, gy)
}

fn edge_map(mag: &RealImage) -> EdgeMap {
    let (gx, gy) = sobel(mag);
    let g: Vec<f32> = gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect();
    let mut sorted = g.clone();
    let k = ((sorted.len() as f64 * EDGE_QUANTILE) as usize).min(sorted.len() - 1);
    let (_, thr, _) = sorted.select_nth_unstable_by(k, f32::total_cmp);
    let thr = *thr;
    let vertical = g.iter().zip(&gx).zip(&gy).map(|((m, x), y)| *m > thr && x.abs() >= y.abs()).collect();
    let horizontal = g.iter().zip(&gx).zip(&gy).map(|((m, x), y)| *m > thr && y.abs() > x.abs()).collect();
    EdgeMap { vertical, horizontal }
}

#[derive(Clone, Copy, Debug)]
struct LineCluster {
    center: f64,
    score: f64,
}

/// Groups above-threshold accumulator cells into circular runs.
fn clusters(acc: &[u32], threshold: f64) -> Vec<LineCluster> {
    let n = acc.len();
    let hot: Vec<bool> = acc.iter().map(|&v| v as f64 >= threshold).collect();
    if !hot.iter().any(|&h| h) {
        return Vec::new();
    }
    if hot.iter().all(|&h| h) {
        return Vec::new();
    }
    let start = (0..n).find(|&i| !hot[i]).unwrap_or(0);
    let mut out = Vec::new();
    let mut run: Vec<usize> = Vec::new();
    for k in 1..=n {
        let i = (start + k) % n;
        if hot[i] {
            run.push(start + k);
        } else if !run.is_empty() {
            let score: f64 = run.iter().map(|&u| acc[u % n] as f64).sum();
            let center = run.iter().map(|&u| u as f64 * acc[u % n] as f64).sum::<f64>() / score;
            out.push(LineCluster {
                center: center.rem_euclid(n as f64),
                score,
            });
            run.clear();
        }
    }
    out
}

/// Finds the boundary pair (end of active, start of active) whose circular
/// separation matches `blank`; returns the index of the first active cell.
fn best_pair(acc: &[u32], threshold: f64, blank: usize, axis: &str) -> Result<usize> {
    let n = acc.len() as f64;
    let cl = clusters(acc, threshold);
    let mut best: Option<(f64, f64)> = None;
    for (i, a) in cl.iter().enumerate() {
        for (j, b) in cl.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = (b.center - a.center).rem_euclid(n);
            if (d - blank as f64).abs() <= PAIR_TOLERANCE {
                let score = a.score + b.score;
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, b.center));
                }
            }
        }
    }
    let (_, center) = best.ok_or_else(|| {
        Error::AlignmentFailed(format!(
            "no {axis} boundary pair {blank} apart among {} candidate lines",
            cl.len()
        ))
    })?;
    Ok(((center + 0.5).round() as i64).rem_euclid(acc.len() as i64) as usize)
}

/// Mean magnitude of each grid column.
fn column_profile(mag: &RealImage) -> Vec<f64> {
    let mut p = vec![0.0; mag.cols()];
    for row in mag.data().chunks_exact(mag.cols()) {
        for (a, &v) in p.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    p.iter().map(|v| v / mag.rows() as f64).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Fractional position where the profile crosses midway between its levels
/// on either side of the boundary just before cell `edge`; the steepest
/// crossing within the search radius wins.
fn level_crossing(p: &[f64], edge: usize, blank: usize) -> Option<f64> {
    let n = p.len() as i64;
    let at = |k: i64| p[k.rem_euclid(n) as usize];
    let e = edge as i64;
    let reach = (blank as i64 / 2).clamp(3, 32);
    let guard = (REFINE_RADIUS as i64 + 2).min(reach - 1);
    let r = (REFINE_RADIUS as i64).min(guard);
    let before = median((e - reach..e - guard).map(at).collect());
    let after = median((e + guard..e + reach).map(at).collect());
    let mid = 0.5 * (before + after);
    (e - r..e + r)
        .filter_map(|k| {
            let (a, b) = (at(k - 1) - mid, at(k) - mid);
            (a != b && (a == 0.0 || a.signum() != b.signum())).then(|| ((k - 1) as f64 + a / (a - b), (a - b).abs()))
        })
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(pos, _)| pos)
}

/// Sub-pixel refinement of the active start column from the column-mean
/// profile; fails if the two refined edges disagree with the blanking width.
fn refine_column(mag: &RealImage, coarse: usize, timing: &VideoTiming) -> Result<usize> {
    let tx = timing.total_x;
    let blank = timing.blanking_x();
    let p = column_profile(mag);
    let end = (coarse + tx - blank) % tx;
    let (start_e, end_e) = match (level_crossing(&p, coarse, blank), level_crossing(&p, end, blank)) {
        (Some(s), Some(e)) => (s, e),
        _ => {
            return Err(Error::AlignmentFailed(format!(
                "no level crossing near columns {end} and {coarse}"
            )))
        }
    };
    let sep = (start_e - end_e).rem_euclid(tx as f64);
    if (sep - blank as f64).abs() > REFINE_TOLERANCE {
        return Err(Error::AlignmentFailed(format!(
            "refined column edges {end_e:.2} and {start_e:.2} are {sep:.2} apart, expected {blank}"
        )));
    }
    Ok(((start_e + 0.5).round() as i64).rem_euclid(tx as i64) as usize)
}

/// Locates the active region on a line-grid magnitude image by detecting the
/// straight edges of the blanking intervals.
pub fn detect_blanking(mag: &RealImage, timing: &VideoTiming) -> Result<FrameShift> {
    check_grid(mag.rows(), mag.cols(), timing)?;
    let (tx, ty) = (timing.total_x, timing.total_y);
    let edges = edge_map(mag);

    let mut col_acc = vec![0u32; tx];
    for (j, &e) in edges.vertical.iter().enumerate() {
        col_acc[j % tx] += e as u32;
    }
    let coarse = best_pair(&col_acc, LINE_FRACTION * timing.active_y as f64, timing.blanking_x(), "vertical")?;
    let col = refine_column(mag, coarse, timing)?;

    let n = tx * ty;
    let mut row_acc = vec![0u32; ty];
    for (j, &e) in edges.horizontal.iter().enumerate() {
        let k = (j + n - col) % n;
        if k % tx < timing.active_x {
            row_acc[k / tx] += e as u32;
        }
    }
    let row = best_pair(&row_acc, LINE_FRACTION * timing.active_x as f64, timing.blanking_y(), "horizontal")?;
    Ok(FrameShift { row, col })
}

/// Result of the full alignment chain.
#[derive(Clone, Debug)]
pub struct Aligned {
    pub image: ComplexImage,
    pub shift: FrameShift,
    pub samples_per_line: SamplesPerLine,
}

/// Resample, detect blanking and crop one frame of a capture.
pub fn align_capture(cap: &ComplexCapture, timing: &VideoTiming) -> Result<Aligned> {
    let grid = resample_to_line_grid(cap, timing)?;
    let shift = detect_blanking(&grid.magnitude(), timing)?;
    let image = recenter_and_crop(&grid, shift, timing)?;
    Ok(Aligned {
        image,
        shift,
        samples_per_line: samples_per_line(cap.fs, timing),
    })
}
