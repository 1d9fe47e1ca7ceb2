//! SI-SDR between two WAV files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::wav;

/// Maps the core metric's failures onto CLI classes: length mismatch is a
/// usage error, a zero-energy signal leaves the metric undefined.
pub fn si_sdr(reference: &[f32], estimate: &[f32]) -> Result<f64> {
    ffsn_core::metrics::si_sdr(reference, estimate).map_err(|e| match e {
        ffsn_core::Error::Shape(msg) => Error::Usage(msg),
        ffsn_core::Error::Data(msg) => Error::UndefinedMetric(msg),
        other => Error::Model(other),
    })
}

pub fn si_sdr_files(reference: impl AsRef<Path>, estimate: impl AsRef<Path>) -> Result<f64> {
    let r = wav::read(reference)?;
    let e = wav::read(estimate)?;
    si_sdr(&r.samples, &e.samples)
}

/// Decibel value with two decimals, or `inf` for a perfect estimate.
pub fn format_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.2}")
    }
}
