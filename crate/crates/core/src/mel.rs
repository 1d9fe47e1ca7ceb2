//! Linear-frequency to mel-frequency magnitude projection.
//!
//! Triangular filters with unit peaks, corner points equally spaced on the HTK
//! mel scale `mel(f) = 2595·log10(1 + f/700)`, evaluated at exact bin centre
//! frequencies. The matrix is also stored in weight files, so a loaded model
//! never depends on this construction matching the trainer's.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, check_len};
use crate::Result;

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// `n_mels × n_bins` non-negative projection matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_mels: usize,
    n_bins: usize,
    weights: Vec<f32>,
}

impl MelFilterbank {
    /// Builds `n_mels` triangular filters over `n_bins` linear bins.
    ///
    /// Bin `k` sits at `k·sample_rate / (2·(n_bins - 1))` Hz.
    pub fn build(n_bins: usize, n_mels: usize, sample_rate: u32, f_min: f64, f_max: f64) -> Result<Self> {
        let nyquist = sample_rate as f64 / 2.0;
        if n_mels < 2 || n_bins < 2 {
            bail!(Config, "need at least 2 mel bands and 2 bins, got {n_mels} and {n_bins}");
        }
        if !(f_min >= 0.0 && f_min < f_max && f_max <= nyquist) {
            bail!(Config, "invalid mel range [{f_min}, {f_max}] Hz for sample rate {sample_rate}");
        }
        let (mel_lo, mel_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
        let corners: Vec<f64> = (0..n_mels + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
            .collect();
        let bin_hz = nyquist / (n_bins - 1) as f64;

        let mut weights = vec![0.0f32; n_mels * n_bins];
        for (row, w) in weights.chunks_exact_mut(n_bins).enumerate() {
            let (left, center, right) = (corners[row], corners[row + 1], corners[row + 2]);
            for (k, v) in w.iter_mut().enumerate() {
                let f = k as f64 * bin_hz;
                let rising = (f - left) / (center - left);
                let falling = (right - f) / (right - center);
                *v = rising.min(falling).max(0.0) as f32;
            }
            if w.iter().all(|&v| v == 0.0) {
                bail!(Config, "mel filter {row} covers no frequency bin; too many bands for {n_bins} bins");
            }
        }
        Ok(Self { n_mels, n_bins, weights })
    }

    /// 64 bands over 257 bins, 0–8 kHz at 16 kHz.
    pub fn default_16k() -> Self {
        Self::build(257, 64, crate::SAMPLE_RATE, 0.0, 8000.0).expect("default filterbank is valid")
    }

    /// Wraps an existing matrix (e.g. one read from a weight file).
    pub fn from_weights(n_mels: usize, n_bins: usize, weights: Vec<f32>) -> Result<Self> {
        check_len("mel filterbank", n_mels * n_bins, weights.len())?;
        if let Some(i) = weights.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            bail!(Data, "mel filterbank entry {i} is negative or non-finite");
        }
        Ok(Self { n_mels, n_bins, weights })
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn row(&self, k: usize) -> &[f32] {
        &self.weights[k * self.n_bins..(k + 1) * self.n_bins]
    }

    /// Projects one magnitude frame onto the mel bands.
    pub fn apply(&self, magnitude: &[f32]) -> Result<Vec<f32>> {
        let mut out = vec![0.0; self.n_mels];
        self.apply_into(magnitude, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, magnitude: &[f32], out: &mut [f32]) -> Result<()> {
        check_len("magnitude frame", self.n_bins, magnitude.len())?;
        check_len("mel output", self.n_mels, out.len())?;
        if let Some(i) = magnitude.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            bail!(Data, "magnitude bin {i} is negative or non-finite");
        }
        for (o, row) in out.iter_mut().zip(self.weights.chunks_exact(self.n_bins)) {
            *o = row.iter().zip(magnitude).map(|(w, m)| w * m).sum();
        }
        Ok(())
    }
}
