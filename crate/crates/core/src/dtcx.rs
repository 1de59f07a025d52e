//! The DTCX complex-image container and raw I/Q ingestion.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset size field
//!      0    4 magic "DTCX"
//!      4    2 version (1)
//!      6    2 flags (bit 0: cropped to the active area)
//!      8    4 rows
//!     12    4 cols
//!     16    8 fs, f64
//!     24    8 fc, f64
//!     32   16 meta hash (first 16 bytes of SHA-256 of the meta JSON)
//!     48    - rows * cols * (I f32, Q f32), row-major
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex32;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::capture::{CaptureOrigin, ComplexCapture};
use crate::error::{invalid, Error, FormatError, Result};
use crate::imaging::ComplexImage;

pub const MAGIC: [u8; 4] = *b"DTCX";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 48;
/// Flag bit: the image is the cropped active area rather than the full grid.
pub const FLAG_CROPPED: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtcxHeader {
    pub version: u16,
    pub flags: u16,
    pub rows: u32,
    pub cols: u32,
    pub fs: f64,
    pub fc: f64,
    pub meta_hash: [u8; 16],
}

impl DtcxHeader {
    pub fn new(img: &ComplexImage, fs: f64, fc: f64, cropped: bool, meta_hash: [u8; 16]) -> Result<Self> {
        let dim = |v: usize| u32::try_from(v).map_err(|_| invalid("image dimension exceeds u32"));
        Ok(DtcxHeader {
            version: VERSION,
            flags: if cropped { FLAG_CROPPED } else { 0 },
            rows: dim(img.rows())?,
            cols: dim(img.cols())?,
            fs,
            fc,
            meta_hash,
        })
    }

    pub fn cropped(&self) -> bool {
        self.flags & FLAG_CROPPED != 0
    }

    pub fn payload_len(&self) -> u64 {
        self.rows as u64 * self.cols as u64 * 8
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4..6].copy_from_slice(&self.version.to_le_bytes());
        b[6..8].copy_from_slice(&self.flags.to_le_bytes());
        b[8..12].copy_from_slice(&self.rows.to_le_bytes());
        b[12..16].copy_from_slice(&self.cols.to_le_bytes());
        b[16..24].copy_from_slice(&self.fs.to_le_bytes());
        b[24..32].copy_from_slice(&self.fc.to_le_bytes());
        b[32..48].copy_from_slice(&self.meta_hash);
        b
    }

    fn parse(bytes: &[u8]) -> Result<Self, FormatError> {
        if bytes.len() < 4 || bytes[0..4] != MAGIC {
            let mut m = [0u8; 4];
            let n = bytes.len().min(4);
            m[..n].copy_from_slice(&bytes[..n]);
            return Err(FormatError::BadMagic(m));
        }
        if bytes.len() < HEADER_LEN {
            return Err(FormatError::Truncated {
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u16_at(4);
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        Ok(DtcxHeader {
            version,
            flags: u16_at(6),
            rows: u32_at(8),
            cols: u32_at(12),
            fs: f64_at(16),
            fc: f64_at(24),
            meta_hash: bytes[32..48].try_into().unwrap(),
        })
    }
}

/// First 16 bytes of the SHA-256 of `meta` serialized as compact JSON.
pub fn meta_hash<T: Serialize>(meta: &T) -> Result<[u8; 16]> {
    let json = serde_json::to_vec(meta)?;
    let digest = Sha256::digest(&json);
    Ok(digest[..16].try_into().unwrap())
}

/// Serializes a header and image into DTCX bytes.
pub fn encode(header: &DtcxHeader, img: &ComplexImage) -> Result<Vec<u8>> {
    if header.rows as usize != img.rows() || header.cols as usize != img.cols() {
        return Err(Error::Dimensions {
            expected_rows: header.rows as usize,
            expected_cols: header.cols as usize,
            rows: img.rows(),
            cols: img.cols(),
        });
    }
    if let Some(i) = img.data().iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(FormatError::NonFinite(i).into());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + img.data().len() * 8);
    out.extend_from_slice(&header.to_bytes());
    for c in img.data() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    Ok(out)
}

/// Parses DTCX bytes.
pub fn decode(bytes: &[u8]) -> Result<(DtcxHeader, ComplexImage)> {
    let header = DtcxHeader::parse(bytes)?;
    let expected = HEADER_LEN as u64 + header.payload_len();
    let found = bytes.len() as u64;
    if found < expected {
        return Err(FormatError::Truncated { expected, found }.into());
    }
    if found > expected {
        return Err(FormatError::TrailingData(found - expected).into());
    }
    let data = parse_iq(&bytes[HEADER_LEN..])?;
    let img = ComplexImage::new(header.rows as usize, header.cols as usize, data)?;
    Ok((header, img))
}

fn parse_iq(payload: &[u8]) -> Result<Vec<Complex32>, FormatError> {
    payload
        .chunks_exact(8)
        .enumerate()
        .map(|(i, b)| {
            let re = f32::from_le_bytes(b[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(b[4..8].try_into().unwrap());
            if re.is_finite() && im.is_finite() {
                Ok(Complex32::new(re, im))
            } else {
                Err(FormatError::NonFinite(i))
            }
        })
        .collect()
}

pub fn write_capture(path: impl AsRef<Path>, header: &DtcxHeader, img: &ComplexImage) -> Result<()> {
    let bytes = encode(header, img)?;
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_capture(path: impl AsRef<Path>) -> Result<(DtcxHeader, ComplexImage)> {
    decode(&fs::read(path)?)
}

/// Sidecar describing a raw interleaved-f32 I/Q recording.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub fs: f64,
    pub fc: f64,
    /// Timing name the recording is expected to contain.
    #[serde(default)]
    pub timing: Option<String>,
    /// Samples to skip at the start of the file.
    #[serde(default)]
    pub skip_samples: usize,
}

/// Reads a raw little-endian f32 I/Q recording plus its JSON sidecar.
pub fn read_raw_iq(path: impl AsRef<Path>, sidecar: impl AsRef<Path>) -> Result<ComplexCapture> {
    let meta: RawSidecar = serde_json::from_slice(&fs::read(sidecar)?)?;
    if !(meta.fs > 0.0) {
        return Err(invalid("sidecar fs must be positive"));
    }
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(FormatError::Truncated {
            expected: bytes.len().div_ceil(8) as u64 * 8,
            found: bytes.len() as u64,
        }
        .into());
    }
    let skip = (meta.skip_samples * 8).min(bytes.len());
    let samples = parse_iq(&bytes[skip..])?;
    Ok(ComplexCapture {
        samples,
        fs: meta.fs,
        start_time: 0.0,
        origin: CaptureOrigin {
            timing: meta.timing,
            fc: meta.fc,
            seed: 0,
            impairments: None,
        },
    })
}
