//! C ABI over the `tmds_leak` library.
//!
//! Every fallible function returns a [`TlStatus`]; on failure the message
//! is available from [`tl_last_error_message`] on the same thread. Objects
//! are opaque handles created by `*_new`/`*_lookup`/`*_read` functions and
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tmds_leak::capture::CaptureConfig;
use tmds_leak::dataset::{simulate_pair, SimSpec};
use tmds_leak::dtcx::{self, DtcxHeader};
use tmds_leak::emission::{ChannelMode, PulseKind, PulseModel};
use image::GrayImage;
use tmds_leak::Error;
use tmds_leak::imaging::ComplexImage;
use tmds_leak::timing::{timing_lookup, VideoTiming};
use tmds_leak::tmds::{decode_symbol, encode_byte, DisparityState, TmdsSymbol};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownTiming = 3,
    Format = 4,
    Io = 5,
    AlignmentFailed = 6,
    Dimensions = 7,
    Tmds = 8,
    BufferTooSmall = 9,
    Internal = 10,
}

/// Pulse shape selector for [`tl_simulator_new`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlPulse {
    Rect = 0,
    DelayedDifference = 1,
}

/// Plain description of a video timing.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TlTimingInfo {
    pub active_x: u32,
    pub active_y: u32,
    pub total_x: u32,
    pub total_y: u32,
    pub pixel_rate_hz: f64,
    pub frame_rate_hz: f64,
}

/// Opaque video timing.
pub struct TlTiming {
    inner: VideoTiming,
}

/// Opaque simulation settings.
pub struct TlSimulator {
    spec: SimSpec,
}

/// Opaque complex image.
pub struct TlComplexImage {
    inner: ComplexImage,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(TlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::UnknownTiming { .. } | Error::InvalidTiming { .. } => TlStatus::UnknownTiming,
            Error::Format(_) | Error::Json(_) | Error::Image(_) => TlStatus::Format,
            Error::Io(_) => TlStatus::Io,
            Error::AlignmentFailed(_) => TlStatus::AlignmentFailed,
            Error::Dimensions { .. } => TlStatus::Dimensions,
            Error::Tmds(_) => TlStatus::Tmds,
            _ => TlStatus::InvalidArgument,
        };
        Failure(code, e.to_string())
    }
}

fn fail(code: TlStatus, msg: impl Into<String>) -> Failure {
    Failure(code, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            TlStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(TlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(TlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(TlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`). Returns the full message length
/// excluding the terminator, or 0 if there is none.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn tl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Encodes one pixel byte. `disparity` is read as the running disparity
/// before the symbol and updated in place.
///
/// # Safety
/// `symbol` and `disparity` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tl_tmds_encode(byte: u8, disparity: *mut i32, symbol: *mut u16) -> TlStatus {
    guard(|| {
        let d = out(disparity, "disparity")?;
        let s = out(symbol, "symbol")?;
        let (sym, next) = encode_byte(byte, DisparityState::new(*d));
        *s = sym.bits();
        *d = next.count();
        Ok(())
    })
}

/// Decodes a 10-bit video symbol.
///
/// # Safety
/// `byte` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_tmds_decode(symbol: u16, byte: *mut u8) -> TlStatus {
    guard(|| {
        let b = out(byte, "byte")?;
        let sym = TmdsSymbol::from_bits(symbol)
            .ok_or_else(|| fail(TlStatus::InvalidArgument, "symbol wider than 10 bits"))?;
        *b = decode_symbol(sym).map_err(Error::from)?;
        Ok(())
    })
}

/// Looks up a built-in timing such as "1600x900@60".
///
/// # Safety
/// `name` must be a NUL-terminated string and `timing` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_timing_lookup(name: *const c_char, timing: *mut *mut TlTiming) -> TlStatus {
    guard(|| {
        let slot = out(timing, "timing")?;
        let t = timing_lookup(string(name, "name")?)?;
        *slot = Box::into_raw(Box::new(TlTiming { inner: t }));
        Ok(())
    })
}

/// # Safety
/// `timing` must come from [`tl_timing_lookup`] or be null.
#[no_mangle]
pub unsafe extern "C" fn tl_timing_free(timing: *mut TlTiming) {
    if !timing.is_null() {
        drop(Box::from_raw(timing));
    }
}

/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_timing_info(timing: *const TlTiming, info: *mut TlTimingInfo) -> TlStatus {
    guard(|| {
        let t = &borrow(timing, "timing")?.inner;
        *out(info, "info")? = TlTimingInfo {
            active_x: t.active_x as u32,
            active_y: t.active_y as u32,
            total_x: t.total_x as u32,
            total_y: t.total_y as u32,
            pixel_rate_hz: t.pixel_rate(),
            frame_rate_hz: t.frame_rate(),
        };
        Ok(())
    })
}

/// Creates simulation settings: tuning `fc` and sampling rate `fs` in Hz,
/// complex noise `noise_sigma` per component, and random time, phase and
/// tuning offsets drawn from `seed`. `epsilon` is ignored for the
/// rectangular pulse.
///
/// # Safety
/// `timing` and `simulator` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tl_simulator_new(
    timing: *const TlTiming,
    fc: f64,
    fs: f64,
    pulse: TlPulse,
    epsilon: f64,
    noise_sigma: f64,
    seed: u64,
    simulator: *mut *mut TlSimulator,
) -> TlStatus {
    guard(|| {
        let t = borrow(timing, "timing")?.inner.clone();
        let slot = out(simulator, "simulator")?;
        let kind = match pulse {
            TlPulse::Rect => PulseKind::Rect,
            TlPulse::DelayedDifference => PulseKind::DelayedDifference { epsilon },
        };
        let spec = SimSpec {
            pulse: PulseModel::new(kind, t.bit_period(), 1.0)?,
            capture: CaptureConfig::impaired(fc, fs, noise_sigma, seed),
            timing: t,
            channels: ChannelMode::SingleChannel,
        };
        spec.validate()?;
        *slot = Box::into_raw(Box::new(TlSimulator { spec }));
        Ok(())
    })
}

/// # Safety
/// `simulator` must come from [`tl_simulator_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn tl_simulator_free(simulator: *mut TlSimulator) {
    if !simulator.is_null() {
        drop(Box::from_raw(simulator));
    }
}

/// Simulates the aligned complex capture of an 8-bit grayscale image of
/// exactly the active size (row-major, `width * height` bytes).
///
/// # Safety
/// `pixels` must point to `width * height` bytes; the other pointers must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_simulate(
    simulator: *const TlSimulator,
    pixels: *const u8,
    width: u32,
    height: u32,
    image: *mut *mut TlComplexImage,
) -> TlStatus {
    guard(|| {
        let sim = borrow(simulator, "simulator")?;
        let slot = out(image, "image")?;
        if pixels.is_null() {
            return Err(fail(TlStatus::NullPointer, "pixels is null"));
        }
        let n = width as usize * height as usize;
        let data = std::slice::from_raw_parts(pixels, n).to_vec();
        let clean = GrayImage::from_raw(width, height, data)
            .ok_or_else(|| fail(TlStatus::InvalidArgument, "pixel buffer size"))?;
        let pair = simulate_pair(&clean, &sim.spec)?;
        *slot = Box::into_raw(Box::new(TlComplexImage { inner: pair.degraded }));
        Ok(())
    })
}

/// # Safety
/// `image` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn tl_image_free(image: *mut TlComplexImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `image` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tl_image_rows(image: *const TlComplexImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.rows())
}

/// Number of columns, or 0 for a null handle.
///
/// # Safety
/// `image` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tl_image_cols(image: *const TlComplexImage) -> usize {
    image.as_ref().map_or(0, |i| i.inner.cols())
}

/// Pointer to `rows * cols` interleaved (I, Q) floats, valid until the
/// handle is freed; null for a null handle.
///
/// # Safety
/// `image` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tl_image_data(image: *const TlComplexImage) -> *const f32 {
    image.as_ref().map_or(ptr::null(), |i| i.inner.data().as_ptr().cast())
}

/// Envelope baseline into `out` (`rows * cols` bytes).
///
/// # Safety
/// `out` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tl_envelope(image: *const TlComplexImage, out: *mut u8, len: usize) -> TlStatus {
    guard(|| {
        let img = &borrow(image, "image")?.inner;
        if out.is_null() {
            return Err(fail(TlStatus::NullPointer, "out is null"));
        }
        let env = tmds_leak::baseline::envelope(img);
        let raw = env.as_raw();
        if len < raw.len() {
            return Err(fail(TlStatus::BufferTooSmall, format!("need {} bytes", raw.len())));
        }
        ptr::copy_nonoverlapping(raw.as_ptr(), out, raw.len());
        Ok(())
    })
}

/// Reads a DTCX file; `fs` and `fc` receive the header rates when non-null.
///
/// # Safety
/// `path` must be a NUL-terminated string; `image` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_capture_read(
    path: *const c_char,
    image: *mut *mut TlComplexImage,
    fs: *mut f64,
    fc: *mut f64,
) -> TlStatus {
    guard(|| {
        let slot = out(image, "image")?;
        let (h, img) = dtcx::read_capture(string(path, "path")?)?;
        if let Some(p) = fs.as_mut() {
            *p = h.fs;
        }
        if let Some(p) = fc.as_mut() {
            *p = h.fc;
        }
        *slot = Box::into_raw(Box::new(TlComplexImage { inner: img }));
        Ok(())
    })
}

/// Writes a DTCX file marked as cropped, with an all-zero meta hash.
///
/// # Safety
/// `path` must be a NUL-terminated string; `image` a valid handle.
#[no_mangle]
pub unsafe extern "C" fn tl_capture_write(
    path: *const c_char,
    image: *const TlComplexImage,
    fs: f64,
    fc: f64,
) -> TlStatus {
    guard(|| {
        let img = &borrow(image, "image")?.inner;
        let h = DtcxHeader::new(img, fs, fc, true, [0; 16])?;
        dtcx::write_capture(string(path, "path")?, &h, img)?;
        Ok(())
    })
}

/// PSNR in dB between two 8-bit images of `width * height` bytes; writes
/// infinity for identical images.
///
/// # Safety
/// `a` and `b` must point to `width * height` bytes; `db` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_psnr(a: *const u8, b: *const u8, width: u32, height: u32, db: *mut f64) -> TlStatus {
    guard(|| {
        let res = out(db, "db")?;
        if a.is_null() || b.is_null() {
            return Err(fail(TlStatus::NullPointer, "image is null"));
        }
        let n = width as usize * height as usize;
        let mk = |p: *const u8| {
            GrayImage::from_raw(width, height, std::slice::from_raw_parts(p, n).to_vec())
                .ok_or_else(|| fail(TlStatus::InvalidArgument, "pixel buffer size"))
        };
        *res = tmds_leak::metrics::psnr(&mk(a)?, &mk(b)?)?;
        Ok(())
    })
}

/// Character error rate of `hypothesis` against `reference`.
///
/// # Safety
/// Both strings must be NUL-terminated UTF-8; `rate` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_cer(reference: *const c_char, hypothesis: *const c_char, rate: *mut f64) -> TlStatus {
    guard(|| {
        let res = out(rate, "rate")?;
        *res = tmds_leak::metrics::cer(string(reference, "reference")?, string(hypothesis, "hypothesis")?)?;
        Ok(())
    })
}
