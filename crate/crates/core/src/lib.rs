//! Simulation of HDMI/DVI video emanations as seen by a software-defined
//! radio, plus the tooling around it: aligned clean/degraded dataset
//! generation, a magnitude (envelope) baseline and restoration metrics.
//!
//! The signal chain is
//! [`tmds`] → [`emission`] → [`capture`] → [`align`] → [`baseline`] / [`metrics`],
//! with [`dataset`] tying it together and defining the on-disk formats.

pub mod align;
pub mod baseline;
pub mod capture;
pub mod dataset;
pub mod dtcx;
pub mod emission;
pub mod error;
pub mod imaging;
pub mod metrics;
pub mod resample;
pub mod synth;
pub mod timing;
pub mod tmds;

pub use error::{Error, Result};
