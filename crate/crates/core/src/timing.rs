//! Video frame geometry and clocking.
//!
//! A timing describes the active raster (`active_x` by `active_y`), the
//! total raster including blanking, and the pixel clock. The clock is kept
//! as an exact rational number of hertz.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pixel clock in hertz as `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelClock {
    pub num: u64,
    pub den: u64,
}

impl PixelClock {
    pub const fn hz(hz: u64) -> Self {
        PixelClock { num: hz, den: 1 }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoTiming {
    pub name: String,
    pub active_x: usize,
    pub active_y: usize,
    pub total_x: usize,
    pub total_y: usize,
    pub pixel_clock: PixelClock,
    /// Nominal refresh rate, checked against the derived frame rate.
    pub nominal_refresh_hz: f64,
}

impl VideoTiming {
    pub fn new(
        name: impl Into<String>,
        (active_x, active_y): (usize, usize),
        (total_x, total_y): (usize, usize),
        pixel_clock: PixelClock,
        nominal_refresh_hz: f64,
    ) -> Result<Self> {
        let t = VideoTiming {
            name: name.into(),
            active_x,
            active_y,
            total_x,
            total_y,
            pixel_clock,
            nominal_refresh_hz,
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::InvalidTiming {
                name: self.name.clone(),
                reason,
            })
        };
        if self.active_x == 0 || self.active_y == 0 {
            return fail("active area must be non-empty".into());
        }
        if self.total_x <= self.active_x || self.total_y <= self.active_y {
            return fail("total raster must exceed the active area in both axes".into());
        }
        if self.pixel_clock.num == 0 || self.pixel_clock.den == 0 {
            return fail("pixel clock must be positive".into());
        }
        let rate = self.frame_rate();
        let rel = (rate - self.nominal_refresh_hz).abs() / self.nominal_refresh_hz;
        if !(rel <= 1e-3) {
            return fail(format!(
                "frame rate {rate:.4} Hz is not within 0.1% of nominal {} Hz",
                self.nominal_refresh_hz
            ));
        }
        Ok(())
    }

    /// Pixel period in seconds.
    pub fn pixel_period(&self) -> f64 {
        self.pixel_clock.den as f64 / self.pixel_clock.num as f64
    }

    /// TMDS bit period in seconds (ten bits per pixel).
    pub fn bit_period(&self) -> f64 {
        self.pixel_period() / 10.0
    }

    pub fn pixel_rate(&self) -> f64 {
        self.pixel_clock.as_f64()
    }

    pub fn bit_rate(&self) -> f64 {
        10.0 * self.pixel_rate()
    }

    pub fn line_rate(&self) -> f64 {
        self.pixel_rate() / self.total_x as f64
    }

    pub fn frame_rate(&self) -> f64 {
        self.pixel_rate() / (self.total_x * self.total_y) as f64
    }

    /// The `n`-th harmonic of the pixel rate.
    pub fn harmonic(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::ZeroHarmonic);
        }
        Ok(n as f64 * self.pixel_rate())
    }

    pub fn pixels_per_frame(&self) -> usize {
        self.total_x * self.total_y
    }

    pub fn bits_per_frame(&self) -> usize {
        10 * self.pixels_per_frame()
    }

    pub fn blanking_x(&self) -> usize {
        self.total_x - self.active_x
    }

    pub fn blanking_y(&self) -> usize {
        self.total_y - self.active_y
    }
}

impl fmt::Display for VideoTiming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: active {}x{}, total {}x{}, pixel clock {:.6} MHz",
            self.name,
            self.active_x,
            self.active_y,
            self.total_x,
            self.total_y,
            self.pixel_rate() / 1e6
        )
    }
}

/// One `[[timing]]` section of a timing config file.
#[derive(Debug, Deserialize)]
struct TimingEntry {
    name: String,
    active_x: usize,
    active_y: usize,
    total_x: usize,
    total_y: usize,
    pixel_clock_hz: u64,
    #[serde(default = "one")]
    pixel_clock_den: u64,
    refresh_hz: Option<f64>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
struct TimingFile {
    #[serde(default)]
    timing: Vec<TimingEntry>,
}

/// Lookup table of known timings: the built-in CEA-861 entries plus any
/// user-supplied ones.
#[derive(Clone, Debug)]
pub struct TimingTable {
    entries: Vec<VideoTiming>,
}

impl Default for TimingTable {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TimingTable {
    pub fn builtin() -> Self {
        let entry = |name: &str, active, total, clock| {
            VideoTiming::new(name, active, total, PixelClock::hz(clock), 60.0)
                .expect("built-in timing is valid")
        };
        TimingTable {
            entries: vec![
                entry("1920x1080@60", (1920, 1080), (2200, 1125), 148_500_000),
                entry("1600x900@60", (1600, 900), (1800, 1000), 108_000_000),
                entry("1280x720@60", (1280, 720), (1650, 750), 74_250_000),
            ],
        }
    }

    pub fn entries(&self) -> &[VideoTiming] {
        &self.entries
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|t| t.name.as_str()).collect()
    }

    pub fn lookup(&self, name: &str) -> Result<&VideoTiming> {
        self.entries
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::UnknownTiming {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    /// Adds or replaces an entry by name.
    pub fn insert(&mut self, timing: VideoTiming) {
        match self.entries.iter_mut().find(|t| t.name == timing.name) {
            Some(slot) => *slot = timing,
            None => self.entries.push(timing),
        }
    }

    /// Merges the `[[timing]]` sections of a config text into the table.
    pub fn extend_from_str(&mut self, text: &str) -> Result<()> {
        let file: TimingFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for e in file.timing {
            let refresh = match e.refresh_hz {
                Some(r) => r,
                None => refresh_from_name(&e.name).ok_or_else(|| {
                    Error::Config(format!(
                        "timing `{}` needs refresh_hz or an `@<rate>` name suffix",
                        e.name
                    ))
                })?,
            };
            let clock = PixelClock {
                num: e.pixel_clock_hz,
                den: e.pixel_clock_den,
            };
            self.insert(VideoTiming::new(
                e.name,
                (e.active_x, e.active_y),
                (e.total_x, e.total_y),
                clock,
                refresh,
            )?);
        }
        Ok(())
    }

    pub fn extend_from_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.extend_from_str(&text)
    }
}

fn refresh_from_name(name: &str) -> Option<f64> {
    name.rsplit_once('@')?.1.parse().ok()
}

/// Looks up a built-in timing by name.
pub fn timing_lookup(name: &str) -> Result<VideoTiming> {
    TimingTable::builtin().lookup(name).cloned()
}
