//! Scale-invariant signal-to-distortion ratio.

use crate::error::{bail, check_finite};
use crate::Result;

/// SI-SDR of `estimate` against `reference` in dB.
///
/// Both signals are made zero-mean, the estimate is projected onto the
/// reference (`s = <est, ref> / <ref, ref> · ref`) and the ratio
/// `10·log10(|s|² / |est - s|²)` is returned. A zero residual gives `+inf`.
pub fn si_sdr(reference: &[f32], estimate: &[f32]) -> Result<f64> {
    if reference.len() != estimate.len() {
        bail!(Shape, "reference has {} samples, estimate has {}", reference.len(), estimate.len());
    }
    check_finite("reference", reference)?;
    check_finite("estimate", estimate)?;
    let n = reference.len().max(1) as f64;
    let mean_r = reference.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mean_e = estimate.iter().map(|&v| v as f64).sum::<f64>() / n;

    let (mut dot, mut energy) = (0.0f64, 0.0f64);
    for (&r, &e) in reference.iter().zip(estimate) {
        let (r, e) = (r as f64 - mean_r, e as f64 - mean_e);
        dot += r * e;
        energy += r * r;
    }
    if energy == 0.0 {
        bail!(Data, "reference has zero energy; SI-SDR is undefined");
    }
    let alpha = dot / energy;
    let (mut target, mut noise) = (0.0f64, 0.0f64);
    for (&r, &e) in reference.iter().zip(estimate) {
        let s = alpha * (r as f64 - mean_r);
        let residual = (e as f64 - mean_e) - s;
        target += s * s;
        noise += residual * residual;
    }
    if noise == 0.0 && target == 0.0 {
        bail!(Data, "estimate has zero energy; SI-SDR is undefined");
    }
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(target / noise))
}
