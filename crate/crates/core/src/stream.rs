//! Sample-level streaming wrapper around [`FrameEnhancer`].
//!
//! Output sample `n` is released once both frames that overlap it have been
//! enhanced, which needs input up to sample `n + (tau + 2)·hop - 1`. Over a
//! session (pushes plus [`StreamEnhancer::flush`]) the output has exactly as
//! many samples as the input, aligned sample for sample with it.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex32;

use crate::dsp::{check_clip, istft, stft, AnalysisConfig, AudioClip, OverlapAdd};
use crate::error::{bail, check_finite};
use crate::graph::{forward_offline, FrameEnhancer};
use crate::{ModelConfig, ModelWeights, Result, SAMPLE_RATE};

/// Streaming enhancement state. Single owner; independent streams may share weights.
#[derive(Debug, Clone)]
pub struct StreamEnhancer<'w> {
    analysis: AnalysisConfig,
    enhancer: FrameEnhancer<'w>,
    /// Padded input not yet consumed; starts with `window_len - hop` zeros.
    input: Vec<f32>,
    received: u64,
    frames_in: u64,
    ola: OverlapAdd,
    /// Leading padded samples still to drop from the synthesis output.
    skip: usize,
    emitted: u64,
    bins: Vec<Complex32>,
    synth: Vec<f32>,
    finished: bool,
}

impl<'w> StreamEnhancer<'w> {
    pub fn new(weights: &'w ModelWeights, config: &ModelConfig) -> Result<Self> {
        Self::with_analysis(weights, config, AnalysisConfig::default())
    }

    pub fn with_analysis(weights: &'w ModelWeights, config: &ModelConfig, analysis: AnalysisConfig) -> Result<Self> {
        if analysis.bins() != config.n_bins {
            bail!(Config, "analysis gives {} bins, model expects {}", analysis.bins(), config.n_bins);
        }
        let enhancer = FrameEnhancer::new(weights, config)?;
        Ok(Self {
            input: vec![0.0; analysis.left_pad()],
            ola: OverlapAdd::new(&analysis),
            skip: analysis.left_pad(),
            bins: vec![Complex32::new(0.0, 0.0); analysis.bins()],
            synth: vec![0.0; analysis.window_len()],
            analysis,
            enhancer,
            received: 0,
            frames_in: 0,
            emitted: 0,
            finished: false,
        })
    }

    /// Nominal algorithmic latency: one window plus `tau` hops.
    pub fn latency_samples(&self) -> usize {
        self.analysis.window_len() + self.enhancer.config().tau * self.analysis.hop()
    }

    pub fn samples_received(&self) -> u64 {
        self.received
    }

    pub fn samples_emitted(&self) -> u64 {
        self.emitted
    }

    pub fn has_subband_state(&self) -> bool {
        self.enhancer.has_subband_state()
    }

    /// Consumes a chunk of 16 kHz samples and returns every output sample that is now final.
    pub fn push(&mut self, samples: &[f32]) -> Result<Vec<f32>> {
        if self.finished {
            bail!(Contract, "push after flush");
        }
        check_finite("audio chunk", samples)?;
        self.received += samples.len() as u64;
        self.input.extend_from_slice(samples);
        let mut out = Vec::new();
        while self.input.len() >= self.analysis.window_len() {
            self.process_frame(&mut out)?;
        }
        Ok(out)
    }

    /// Ends the session and returns the remaining output. May be called once.
    pub fn flush(&mut self) -> Result<Vec<f32>> {
        if self.finished {
            bail!(Contract, "stream already flushed");
        }
        self.finished = true;
        let mut out = Vec::new();
        if self.received == 0 {
            return Ok(out);
        }
        if self.frames_in < self.received.div_ceil(self.analysis.hop() as u64) {
            self.input.resize(self.analysis.window_len(), 0.0);
            self.process_frame(&mut out)?;
        }
        for frame in self.enhancer.finish()? {
            self.synthesize(&frame, &mut out);
        }
        let tail = self.ola.drain();
        self.emit(&tail, &mut out);
        Ok(out)
    }

    fn process_frame(&mut self, out: &mut Vec<f32>) -> Result<()> {
        let window_len = self.analysis.window_len();
        self.analysis.analyze_frame(&self.input[..window_len], &mut self.bins);
        self.input.drain(..self.analysis.hop());
        self.frames_in += 1;
        if let Some(frame) = self.enhancer.push_frame(&self.bins)? {
            self.synthesize(&frame, out);
        }
        Ok(())
    }

    fn synthesize(&mut self, frame: &[Complex32], out: &mut Vec<f32>) {
        self.analysis.synthesize_frame(frame, &mut self.synth);
        self.ola.add_frame(&self.synth);
        let hop = self.ola.take_hop();
        self.emit(&hop, out);
    }

    fn emit(&mut self, samples: &[f32], out: &mut Vec<f32>) {
        let dropped = self.skip.min(samples.len());
        self.skip -= dropped;
        let remaining = (self.received - self.emitted) as usize;
        let take = (samples.len() - dropped).min(remaining);
        out.extend_from_slice(&samples[dropped..dropped + take]);
        self.emitted += take as u64;
    }
}

/// Enhances a clip through the offline path: STFT, whole-spectrogram model pass, inverse STFT.
pub fn enhance_offline(weights: &ModelWeights, config: &ModelConfig, clip: &AudioClip) -> Result<AudioClip> {
    check_clip(clip)?;
    if clip.is_empty() {
        return Ok(AudioClip::new(Vec::new(), SAMPLE_RATE));
    }
    let analysis = AnalysisConfig::default();
    let spec = stft(clip, &analysis)?;
    let enhanced = forward_offline(weights, config, &spec)?;
    istft(&enhanced, &analysis, clip.len())
}

/// Enhances a clip through [`StreamEnhancer`], pushing `chunk` samples at a time.
pub fn enhance_streaming(weights: &ModelWeights, config: &ModelConfig, clip: &AudioClip, chunk: usize) -> Result<AudioClip> {
    check_clip(clip)?;
    let mut stream = StreamEnhancer::new(weights, config)?;
    let mut out = Vec::with_capacity(clip.len());
    for piece in clip.samples.chunks(chunk.max(1)) {
        out.extend(stream.push(piece)?);
    }
    out.extend(stream.flush()?);
    Ok(AudioClip::new(out, SAMPLE_RATE))
}
