//! Stand-in OCR for synthetic text pages. It knows the page layout (font,
//! scale, margins) and only has to classify each character cell, so it is
//! more forgiving than a general OCR engine.

use image::GrayImage;
use tmds_leak::synth::{glyph, TextStyle, CHARSET, GLYPH_H, GLYPH_W};

/// Otsu threshold over an 8-bit histogram.
pub fn otsu(img: &GrayImage) -> u8 {
    let mut hist = [0u64; 256];
    for p in img.as_raw() {
        hist[*p as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &h)| i as f64 * h as f64).sum();
    let (mut w0, mut sum0, mut best, mut best_t) = (0u64, 0f64, -1f64, 0u8);
    for t in 0..256 {
        w0 += hist[t];
        sum0 += t as f64 * hist[t] as f64;
        if w0 == 0 || w0 == total {
            continue;
        }
        let w1 = total - w0;
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m0 - m1).powi(2);
        if between > best {
            best = between;
            best_t = t as u8;
        }
    }
    best_t
}

type Bitmap = [[bool; GLYPH_W]; GLYPH_H];

fn templates() -> Vec<(char, Bitmap)> {
    std::iter::once(' ').chain(CHARSET.chars()).map(|c| (c, glyph(c).unwrap())).collect()
}

/// Reads `rows x cols` character cells laid out with `style`.
pub fn read_page(img: &GrayImage, style: &TextStyle) -> String {
    let (cols, rows) = style.capacity(img.width() as usize, img.height() as usize);
    let thr = otsu(img);
    let dark = img.as_raw().iter().filter(|&&v| v <= thr).count();
    let ink_is_dark = dark * 2 <= img.as_raw().len();
    let s = style.scale;
    let tpl = templates();
    let mut lines = Vec::new();
    for li in 0..rows {
        let y0 = style.margin + li * style.line_height();
        let mut line = String::new();
        for ci in 0..cols {
            let x0 = style.margin + ci * style.cell_width();
            let mut cell: Bitmap = [[false; GLYPH_W]; GLYPH_H];
            for (gy, row) in cell.iter_mut().enumerate() {
                for (gx, dot) in row.iter_mut().enumerate() {
                    let mut acc = 0u32;
                    for dy in 0..s {
                        for dx in 0..s {
                            acc += img.get_pixel((x0 + gx * s + dx) as u32, (y0 + gy * s + dy) as u32).0[0] as u32;
                        }
                    }
                    let mean = acc as f64 / (s * s) as f64;
                    *dot = if ink_is_dark { mean <= thr as f64 } else { mean > thr as f64 };
                }
            }
            let best = tpl
                .iter()
                .min_by_key(|(_, t)| {
                    t.iter().flatten().zip(cell.iter().flatten()).filter(|(a, b)| a != b).count()
                })
                .unwrap();
            line.push(best.0);
        }
        lines.push(line.trim_end().to_string());
    }
    lines.join("\n")
}

/// Ink mask: Otsu threshold, with the minority side taken as ink.
fn ink_mask(img: &GrayImage) -> Vec<bool> {
    let thr = otsu(img);
    let dark = img.as_raw().iter().filter(|&&v| v <= thr).count();
    let ink_is_dark = dark * 2 <= img.as_raw().len();
    img.as_raw().iter().map(|&v| (v <= thr) == ink_is_dark).collect()
}

fn runs(profile: &[usize], min_count: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in profile.iter().chain(std::iter::once(&0)).enumerate() {
        match (v >= min_count && v > 0, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Ink column span of a template, inclusive.
fn ink_columns(t: &Bitmap) -> Option<(usize, usize)> {
    let used: Vec<usize> = (0..GLYPH_W).filter(|&x| t.iter().any(|r| r[x])).collect();
    Some((*used.first()?, *used.last()?))
}

/// Layout-free reader: finds text lines from the horizontal ink profile,
/// characters from the vertical profile inside each line, estimates the
/// font scale from the line height and classifies each character box
/// against the font templates.
pub fn read_text(img: &GrayImage) -> String {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let ink = ink_mask(img);
    let row_ink: Vec<usize> = (0..h).map(|y| ink[y * w..(y + 1) * w].iter().filter(|&&b| b).count()).collect();
    let bands: Vec<(usize, usize)> = runs(&row_ink, (w / 500).max(1)).into_iter().filter(|(a, b)| b - a >= 4).collect();
    if bands.is_empty() {
        return String::new();
    }
    let mut heights: Vec<usize> = bands.iter().map(|(a, b)| b - a).collect();
    heights.sort_unstable();
    let scale = ((heights[heights.len() / 2] as f64 / GLYPH_H as f64).round() as usize).max(1);
    let tpl: Vec<(char, Bitmap, (usize, usize))> = CHARSET
        .chars()
        .map(|c| {
            let g = glyph(c).unwrap();
            (c, g, ink_columns(&g).unwrap())
        })
        .collect();
    let mut lines = Vec::new();
    for &(top, bottom) in &bands {
        let col_ink: Vec<usize> = (0..w).map(|x| (top..bottom).filter(|&y| ink[y * w + x]).count()).collect();
        let segs = runs(&col_ink, 1);
        let mut line = String::new();
        let mut prev_end: Option<usize> = None;
        for (a, b) in segs {
            if let Some(p) = prev_end {
                if a - p >= 5 * scale {
                    line.push(' ');
                }
            }
            prev_end = Some(b);
            let dots = ((b - a) as f64 / scale as f64).round().max(1.0) as usize;
            let pieces = dots.div_ceil(GLYPH_W + 1).max(1);
            for k in 0..pieces {
                let x0 = a + k * (b - a) / pieces;
                let x1 = a + (k + 1) * (b - a) / pieces;
                let pw = ((x1 - x0) as f64 / scale as f64).round() as usize;
                let sample = |gy: usize, gx: usize| -> bool {
                    let mut n = 0;
                    let mut on = 0;
                    for dy in 0..scale {
                        for dx in 0..scale {
                            let (x, y) = (x0 + gx * scale + dx, top + gy * scale + dy);
                            if x < w && y < h {
                                n += 1;
                                on += ink[y * w + x] as usize;
                            }
                        }
                    }
                    2 * on > n
                };
                let best = tpl
                    .iter()
                    .min_by_key(|(_, g, (ta, tb))| {
                        let tw = tb - ta + 1;
                        let mut cost = pw.abs_diff(tw) * GLYPH_H;
                        for gy in 0..GLYPH_H {
                            for gx in 0..tw {
                                cost += (g[gy][ta + gx] != sample(gy, gx)) as usize;
                            }
                        }
                        cost
                    })
                    .unwrap();
                line.push(best.0);
            }
        }
        lines.push(line);
    }
    lines.join("\n")
}
