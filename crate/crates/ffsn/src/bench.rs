//! Real-time-factor measurement on synthetic noise, single thread.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ffsn_core::dsp::AudioClip;
use ffsn_core::stream::StreamEnhancer;
use ffsn_core::{ModelConfig, ModelWeights, SAMPLE_RATE};

use crate::error::{bail, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RtfReport {
    pub descriptor: String,
    /// Seconds of audio processed per run.
    pub audio_duration: f64,
    /// Median wall-clock seconds over all runs.
    pub processing_time: f64,
    pub rtf: f64,
    /// Wall-clock seconds of each run, in execution order.
    pub runs: Vec<f64>,
}

impl fmt::Display for RtfReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: audio {:.2} s, processing {:.4} s (median of {}), RTF {:.5}",
            self.descriptor,
            self.audio_duration,
            self.processing_time,
            self.runs.len(),
            self.rtf
        )
    }
}

pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty set");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

pub fn noise_clip(duration_secs: f64, seed: u64) -> AudioClip {
    let len = (duration_secs * SAMPLE_RATE as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioClip::new((0..len).map(|_| rng.gen_range(-0.5f32..0.5)).collect(), SAMPLE_RATE)
}

/// Streams `clip` through the engine in `chunk`-sample pushes and returns the wall-clock seconds.
pub fn time_stream(weights: &ModelWeights, config: &ModelConfig, clip: &AudioClip, chunk: usize) -> Result<f64> {
    let start = Instant::now();
    let mut stream = StreamEnhancer::new(weights, config)?;
    let mut produced = 0usize;
    for piece in clip.samples.chunks(chunk.max(1)) {
        produced += std::hint::black_box(stream.push(piece)?).len();
    }
    produced += std::hint::black_box(stream.flush()?).len();
    let elapsed = start.elapsed().as_secs_f64();
    debug_assert_eq!(produced, clip.len());
    Ok(elapsed)
}

/// Median-of-`repeats` RTF over `duration_secs` of seeded noise, pushed one hop at a time.
pub fn run(weights: &ModelWeights, config: &ModelConfig, duration_secs: f64, repeats: usize, seed: u64) -> Result<RtfReport> {
    if !(duration_secs.is_finite() && duration_secs > 0.0) {
        bail!(Usage, "duration must be positive, got {duration_secs}");
    }
    if repeats == 0 {
        bail!(Usage, "repeats must be at least 1");
    }
    let clip = noise_clip(duration_secs, seed);
    let hop = ffsn_core::dsp::AnalysisConfig::default().hop();
    let runs = (0..repeats).map(|_| time_stream(weights, config, &clip, hop)).collect::<Result<Vec<_>>>()?;
    let processing_time = median(&runs);
    let audio_duration = clip.duration_secs();
    Ok(RtfReport {
        descriptor: format!("m={}", config.downsample),
        audio_duration,
        processing_time,
        rtf: processing_time / audio_duration,
        runs,
    })
}
