//! Plain row-major image containers used between pipeline stages.

use image::GrayImage;
use num_complex::Complex32;

use crate::error::{Error, Result};

/// Complex samples on a pixel grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexImage {
    rows: usize,
    cols: usize,
    data: Vec<Complex32>,
}

impl ComplexImage {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimensions {
                expected_rows: rows,
                expected_cols: cols,
                rows: data.len() / cols.max(1),
                cols,
            });
        }
        Ok(ComplexImage { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexImage {
            rows,
            cols,
            data: vec![Complex32::default(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex32> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex32 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[Complex32] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn magnitude(&self) -> RealImage {
        RealImage {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| c.norm()).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex32) -> Complex32) -> ComplexImage {
        ComplexImage {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&c| f(c)).collect(),
        }
    }
}

/// Real-valued image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealImage {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl RealImage {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimensions {
                expected_rows: rows,
                expected_cols: cols,
                rows: data.len() / cols.max(1),
                cols,
            });
        }
        Ok(RealImage { rows, cols, data })
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        RealImage {
            rows: img.height() as usize,
            cols: img.width() as usize,
            data: img.as_raw().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }
}

/// Circularly rotates a row-major buffer so that element `offset` comes
/// first. On a raster this is a shift of whole lines plus a remainder of
/// columns that carries into the next line.
pub(crate) fn rotate_raster<T: Copy>(data: &[T], offset: usize) -> Vec<T> {
    if data.is_empty() {
        return Vec::new();
    }
    let k = offset % data.len();
    let mut out = Vec::with_capacity(data.len());
    out.extend_from_slice(&data[k..]);
    out.extend_from_slice(&data[..k]);
    out
}
