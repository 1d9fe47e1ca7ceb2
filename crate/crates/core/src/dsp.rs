//! Framing, windowing and the forward/inverse short-time Fourier transform.
//!
//! Framing convention: the signal is left-padded with `window_len - hop` zeros,
//! so frame `t` covers original samples `[t·hop - (window_len - hop), t·hop + hop)`.
//! Frame `t` therefore never looks past sample `(t + 1)·hop - 1`, which lets the
//! streaming engine produce it as soon as that sample arrives. The final partial
//! frame is zero-padded, giving `T = ceil(len / hop)` frames.
//!
//! Synthesis applies the same window again and divides by the overlapped sum of
//! squared windows, which reconstructs the input exactly wherever two frames
//! overlap.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::{Complex32, Complex64};

use crate::error::{bail, check_finite, check_len};
use crate::fft::Fft;
use crate::{Result, SAMPLE_RATE};

/// Samples whose overlapped squared-window sum is at or below this are emitted as zero.
const NORM_FLOOR: f32 = 1e-10;

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Frame geometry and window shared by analysis and synthesis.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    window_len: usize,
    hop: usize,
    window: Vec<f32>,
    window_sq: Vec<f32>,
    fft: Fft,
}

impl AnalysisConfig {
    /// Periodic Hann window of `window_len` samples advanced by `hop`.
    ///
    /// `window_len` must be a power of two and a multiple of `hop`.
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        if window_len < 2 || !window_len.is_power_of_two() {
            bail!(Config, "window length {window_len} must be a power of two >= 2");
        }
        if hop == 0 || hop > window_len || window_len % hop != 0 {
            bail!(Config, "hop {hop} must divide window length {window_len}");
        }
        let window: Vec<f32> = (0..window_len)
            .map(|n| {
                let phase = 2.0 * core::f64::consts::PI * n as f64 / window_len as f64;
                (0.5 * (1.0 - libm::cos(phase))) as f32
            })
            .collect();
        let window_sq = window.iter().map(|w| w * w).collect();
        Ok(Self { window_len, hop, window, window_sq, fft: Fft::new(window_len) })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> &[f32] {
        &self.window
    }

    /// Number of frequency bins, `window_len / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    /// Zero samples prepended before the first frame.
    pub fn left_pad(&self) -> usize {
        self.window_len - self.hop
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        len.div_ceil(self.hop)
    }

    /// Windowed real FFT of one `window_len`-sample frame.
    pub fn analyze_frame(&self, frame: &[f32], out: &mut [Complex32]) {
        assert_eq!(frame.len(), self.window_len);
        assert_eq!(out.len(), self.bins());
        let mut buf: Vec<Complex64> = frame
            .iter()
            .zip(&self.window)
            .map(|(&x, &w)| Complex64::new(x as f64 * w as f64, 0.0))
            .collect();
        self.fft.forward(&mut buf);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = Complex32::new(b.re as f32, b.im as f32);
        }
    }

    /// Inverse real FFT of one frame of bins, multiplied by the synthesis window.
    ///
    /// The imaginary parts of the DC and Nyquist bins do not contribute.
    pub fn synthesize_frame(&self, bins: &[Complex32], out: &mut [f32]) {
        assert_eq!(bins.len(), self.bins());
        assert_eq!(out.len(), self.window_len);
        let n = self.window_len;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (k, b) in bins.iter().enumerate() {
            buf[k] = Complex64::new(b.re as f64, b.im as f64);
        }
        for k in 1..n / 2 {
            buf[n - k] = buf[k].conj();
        }
        self.fft.inverse(&mut buf);
        let scale = 1.0 / n as f64;
        for ((o, b), &w) in out.iter_mut().zip(&buf).zip(&self.window) {
            *o = (b.re * scale * w as f64) as f32;
        }
    }
}

impl Default for AnalysisConfig {
    /// 512-sample (32 ms) window, 256-sample (16 ms) hop.
    fn default() -> Self {
        Self::new(512, 256).expect("default analysis config is valid")
    }
}

/// `T × F` complex spectrogram stored frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    frames: usize,
    bins: usize,
    data: Vec<Complex32>,
}

impl ComplexSpectrogram {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self { frames, bins, data: vec![Complex32::new(0.0, 0.0); frames * bins] }
    }

    pub fn from_vec(frames: usize, bins: usize, data: Vec<Complex32>) -> Result<Self> {
        check_len("spectrogram data", frames * bins, data.len())?;
        Ok(Self { frames, bins, data })
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn num_bins(&self) -> usize {
        self.bins
    }

    pub fn frame(&self, t: usize) -> &[Complex32] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex32] {
        &mut self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex32]> {
        self.data.chunks_exact(self.bins.max(1)).take(self.frames)
    }

    pub fn as_slice(&self) -> &[Complex32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex32> {
        self.data
    }
}

pub(crate) fn check_clip(clip: &AudioClip) -> Result<()> {
    if clip.sample_rate != SAMPLE_RATE {
        bail!(Config, "sample rate {} Hz, expected {SAMPLE_RATE} Hz", clip.sample_rate);
    }
    check_finite("audio", &clip.samples)
}

/// Forward STFT with causal left padding.
pub fn stft(clip: &AudioClip, config: &AnalysisConfig) -> Result<ComplexSpectrogram> {
    check_clip(clip)?;
    if clip.is_empty() {
        bail!(Data, "cannot analyze an empty clip");
    }
    let frames = config.frames_for(clip.len());
    let pad = config.left_pad();
    let mut padded = vec![0.0f32; (frames - 1) * config.hop + config.window_len];
    padded[pad..pad + clip.len()].copy_from_slice(&clip.samples);

    let mut spec = ComplexSpectrogram::zeros(frames, config.bins());
    for t in 0..frames {
        let start = t * config.hop;
        config.analyze_frame(&padded[start..start + config.window_len], spec.frame_mut(t));
    }
    Ok(spec)
}

/// Inverse STFT by weighted overlap-add; output is truncated or zero-padded to `out_len`.
pub fn istft(spec: &ComplexSpectrogram, config: &AnalysisConfig, out_len: usize) -> Result<AudioClip> {
    check_len("spectrogram bins", config.bins(), spec.num_bins())?;
    let mut ola = OverlapAdd::new(config);
    let mut padded = Vec::with_capacity(spec.num_frames() * config.hop + config.window_len);
    let mut frame = vec![0.0f32; config.window_len];
    for bins in spec.frames() {
        config.synthesize_frame(bins, &mut frame);
        ola.add_frame(&frame);
        padded.extend_from_slice(&ola.take_hop());
    }
    if spec.num_frames() > 0 {
        padded.extend_from_slice(&ola.drain());
    }
    let mut samples: Vec<f32> = padded.into_iter().skip(config.left_pad()).take(out_len).collect();
    samples.resize(out_len, 0.0);
    Ok(AudioClip::new(samples, SAMPLE_RATE))
}

/// Incremental overlap-add with squared-window normalization.
///
/// Each [`add_frame`](Self::add_frame) must be followed by
/// [`take_hop`](Self::take_hop), which returns the `hop` samples no later frame
/// can touch. Offline and streaming synthesis both go through this type, so
/// they round identically.
#[derive(Debug, Clone)]
pub struct OverlapAdd {
    hop: usize,
    window_sq: Vec<f32>,
    acc: Vec<f32>,
    norm: Vec<f32>,
}

impl OverlapAdd {
    pub fn new(config: &AnalysisConfig) -> Self {
        let n = config.window_len;
        Self { hop: config.hop, window_sq: config.window_sq.clone(), acc: vec![0.0; n], norm: vec![0.0; n] }
    }

    /// Adds one synthesized (already windowed) frame at the current position.
    pub fn add_frame(&mut self, frame: &[f32]) {
        assert_eq!(frame.len(), self.acc.len());
        for ((a, n), (&x, &w2)) in self.acc.iter_mut().zip(&mut self.norm).zip(frame.iter().zip(&self.window_sq)) {
            *a += x;
            *n += w2;
        }
    }

    /// Emits the next `hop` finished samples and advances by one hop.
    pub fn take_hop(&mut self) -> Vec<f32> {
        let out = self.finalize(self.hop);
        self.acc.rotate_left(self.hop);
        self.norm.rotate_left(self.hop);
        let n = self.acc.len();
        self.acc[n - self.hop..].fill(0.0);
        self.norm[n - self.hop..].fill(0.0);
        out
    }

    /// Emits the `window_len - hop` samples still pending after the last frame.
    pub fn drain(&mut self) -> Vec<f32> {
        let n = self.acc.len() - self.hop;
        let out = self.finalize(n);
        self.acc.fill(0.0);
        self.norm.fill(0.0);
        out
    }

    fn finalize(&self, count: usize) -> Vec<f32> {
        self.acc[..count]
            .iter()
            .zip(&self.norm[..count])
            .map(|(&a, &n)| if n > NORM_FLOOR { a / n } else { 0.0 })
            .collect()
    }
}
