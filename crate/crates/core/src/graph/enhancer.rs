use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex32;

use super::ops::{assemble_subband_inputs, l2m_forward, m2l_forward, sub_forward, BlockAverager, NormState};
use super::{Downsample, ModelConfig, ModelWeights};
use crate::cirm;
use crate::dsp::ComplexSpectrogram;
use crate::error::{bail, check_finite, check_len};
use crate::nn::{StackBatchState, StackState};
use crate::Result;

/// Intermediate values of one model step, for debugging and parity dumps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameTrace {
    /// Raw (un-normalized) mel magnitudes of the input frame.
    pub mel: Vec<f32>,
    /// Linear-to-mel embedding.
    pub embedding: Vec<f32>,
    /// Sub-band output fed to the mel-to-linear stack (empty without a sub-band path).
    pub sub: Vec<f32>,
    /// Compressed mask produced at this step. It applies to the frame `tau` steps back.
    pub mask: Vec<f32>,
    /// Whether this step emitted an enhanced frame.
    pub emitted: bool,
}

#[derive(Debug, Clone)]
struct SubbandPath {
    factor: usize,
    state: StackBatchState,
    block: BlockAverager,
    held: Vec<f32>,
}

/// Runs the model one STFT frame at a time.
///
/// Each call to [`push_frame`](Self::push_frame) consumes one noisy frame and,
/// once `tau` frames of look-ahead are available, returns the enhanced frame
/// from `tau` steps earlier. [`finish`](Self::finish) feeds `tau` zero frames
/// to release the remaining outputs.
///
/// The sub-band stack sees block averages ending at frames `t` with
/// `(t + 1) % m == 0`; its output is held for the next `m` frames and is zero
/// before the first block completes. A trailing partial block is averaged and
/// evaluated on the last zero-flush frame.
#[derive(Debug, Clone)]
pub struct FrameEnhancer<'w> {
    weights: &'w ModelWeights,
    config: ModelConfig,
    norm: NormState,
    l2m: StackState,
    sub: Option<SubbandPath>,
    m2l: StackState,
    pending: VecDeque<Vec<Complex32>>,
    steps: u64,
    finished: bool,
}

impl<'w> FrameEnhancer<'w> {
    pub fn new(weights: &'w ModelWeights, config: &ModelConfig) -> Result<Self> {
        weights.validate(config)?;
        let sub = match (config.downsample, &weights.sub) {
            (Downsample::Every(m), Some(stack)) => Some(SubbandPath {
                factor: m as usize,
                state: stack.initial_batch_state(config.n_mels),
                block: BlockAverager::new(config.n_mels, config.sub_input_dim()),
                held: vec![0.0; config.n_mels],
            }),
            _ => None,
        };
        Ok(Self {
            weights,
            config: config.clone(),
            norm: NormState::default(),
            l2m: weights.l2m.initial_state(),
            sub,
            m2l: weights.m2l.initial_state(),
            pending: VecDeque::with_capacity(config.tau + 1),
            steps: 0,
            finished: false,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Model steps taken so far, including zero-flush frames.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// True when the enhancer holds no sub-band recurrent state.
    pub fn has_subband_state(&self) -> bool {
        self.sub.is_some()
    }

    pub fn push_frame(&mut self, noisy: &[Complex32]) -> Result<Option<Vec<Complex32>>> {
        self.push_frame_traced(noisy, None)
    }

    pub fn push_frame_traced(&mut self, noisy: &[Complex32], trace: Option<&mut FrameTrace>) -> Result<Option<Vec<Complex32>>> {
        if self.finished {
            bail!(Contract, "frame pushed after finish");
        }
        check_len("noisy frame", self.config.n_bins, noisy.len())?;
        for c in noisy {
            if !(c.re.is_finite() && c.im.is_finite()) {
                bail!(Data, "non-finite spectrogram value");
            }
        }
        self.step(noisy, false, trace)
    }

    /// Flushes the look-ahead with `tau` zero frames and returns the last `tau` outputs.
    pub fn finish(&mut self) -> Result<Vec<Vec<Complex32>>> {
        self.finish_traced(|_| {})
    }

    pub fn finish_traced(&mut self, mut on_step: impl FnMut(&FrameTrace)) -> Result<Vec<Vec<Complex32>>> {
        if self.finished {
            bail!(Contract, "enhancer already finished");
        }
        let zero = vec![Complex32::new(0.0, 0.0); self.config.n_bins];
        let mut out = Vec::with_capacity(self.config.tau);
        for i in 0..self.config.tau {
            // Nothing to release if no real frame was ever pushed.
            if self.pending.is_empty() {
                break;
            }
            let last = i + 1 == self.config.tau;
            let mut trace = FrameTrace::default();
            if let Some(frame) = self.step(&zero, last, Some(&mut trace))? {
                out.push(frame);
            }
            on_step(&trace);
        }
        self.finished = true;
        Ok(out)
    }

    fn step(&mut self, noisy: &[Complex32], last: bool, trace: Option<&mut FrameTrace>) -> Result<Option<Vec<Complex32>>> {
        let weights = self.weights;
        let magnitude: Vec<f32> = noisy.iter().map(|c| c.norm()).collect();
        check_finite("magnitude", &magnitude)?;
        let mel = weights.mel.apply(&magnitude)?;
        let norm_mel = self.norm.normalize(&mel);
        let embedding = l2m_forward(weights, &norm_mel, &mut self.l2m)?;

        let sub_out = match &mut self.sub {
            Some(path) => {
                let feats = assemble_subband_inputs(&norm_mel, &embedding, self.config.neighbors)?;
                path.block.add(&feats)?;
                if path.block.count() == path.factor || (last && path.block.count() > 0) {
                    let avg = path.block.take()?;
                    path.held = sub_forward(weights, &avg, &mut path.state)?;
                }
                Some(path.held.as_slice())
            }
            None => None,
        };
        let mask = m2l_forward(weights, &embedding, sub_out, &mut self.m2l)?;
        let sub_trace = sub_out.map(<[f32]>::to_vec).unwrap_or_default();

        self.steps += 1;
        self.pending.push_back(noisy.to_vec());
        let emitted = if self.pending.len() > self.config.tau {
            let target = self.pending.pop_front().expect("queue is non-empty");
            let mut enhanced = vec![Complex32::new(0.0, 0.0); target.len()];
            cirm::apply_mask(&mask, &target, &mut enhanced)?;
            Some(enhanced)
        } else {
            None
        };

        if let Some(t) = trace {
            *t = FrameTrace { mel, embedding, sub: sub_trace, mask, emitted: emitted.is_some() };
        }
        Ok(emitted)
    }
}

/// Enhances a whole spectrogram; the output has the input's shape.
pub fn forward_offline(weights: &ModelWeights, config: &ModelConfig, noisy: &ComplexSpectrogram) -> Result<ComplexSpectrogram> {
    let mut enhancer = FrameEnhancer::new(weights, config)?;
    let mut out = Vec::with_capacity(noisy.as_slice().len());
    for frame in noisy.frames() {
        if let Some(e) = enhancer.push_frame(frame)? {
            out.extend(e);
        }
    }
    for e in enhancer.finish()? {
        out.extend(e);
    }
    ComplexSpectrogram::from_vec(noisy.num_frames(), noisy.num_bins(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_config(m: Downsample) -> ModelConfig {
        ModelConfig {
            n_bins: 33,
            n_mels: 10,
            neighbors: 2,
            l2m_hidden: [12, 11],
            sub_hidden: [8, 8],
            m2l_hidden: [14, 14],
            downsample: m,
            ..ModelConfig::default()
        }
    }

    fn random_spec(frames: usize, bins: usize, seed: u64) -> ComplexSpectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..frames * bins).map(|_| Complex32::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect();
        ComplexSpectrogram::from_vec(frames, bins, data).unwrap()
    }

    #[test]
    fn output_shape_matches_input() {
        for m in [Downsample::Every(1), Downsample::Every(3), Downsample::Never] {
            let cfg = small_config(m);
            let w = ModelWeights::random(&cfg, 1).unwrap();
            for frames in [1, 2, 3, 10] {
                let spec = random_spec(frames, 33, frames as u64);
                let out = forward_offline(&w, &cfg, &spec).unwrap();
                assert_eq!((out.num_frames(), out.num_bins()), (frames, 33));
            }
        }
    }

    #[test]
    fn zero_input_is_a_fixed_point() {
        let cfg = small_config(Downsample::Every(2));
        let w = ModelWeights::random(&cfg, 2).unwrap();
        let out = forward_offline(&w, &cfg, &ComplexSpectrogram::zeros(7, 33)).unwrap();
        assert!(out.as_slice().iter().all(|c| c.re == 0.0 && c.im == 0.0));
    }

    #[test]
    fn unit_mask_weights_pass_input_through() {
        // Zero weights except the m2l bias, set to compress(1 + 0i) on the real parts.
        let cfg = small_config(Downsample::Every(1));
        let mut w = ModelWeights::zeros(&cfg).unwrap();
        let (unit, _) = cirm::compress(Complex32::new(1.0, 0.0));
        for (i, b) in w.m2l.affine.bias.iter_mut().enumerate() {
            *b = if i % 2 == 0 { unit } else { 0.0 };
        }
        let spec = random_spec(6, 33, 5);
        let out = forward_offline(&w, &cfg, &spec).unwrap();
        for (a, b) in out.as_slice().iter().zip(spec.as_slice()) {
            assert!((a - b).norm() < 1e-4);
        }
    }

    #[test]
    fn subband_runs_once_per_block_and_holds_output() {
        let cfg = small_config(Downsample::Every(3));
        let w = ModelWeights::random(&cfg, 3).unwrap();
        let spec = random_spec(8, 33, 9);
        let mut e = FrameEnhancer::new(&w, &cfg).unwrap();
        let mut subs = Vec::new();
        for frame in spec.frames() {
            let mut t = FrameTrace::default();
            e.push_frame_traced(frame, Some(&mut t)).unwrap();
            subs.push(t.sub);
        }
        e.finish_traced(|t| subs.push(t.sub.clone())).unwrap();
        assert_eq!(subs.len(), 10);
        // frames 0, 1 see zeros; block 0 ends at frame 2 and is held through frame 4.
        assert!(subs[0].iter().chain(&subs[1]).all(|&v| v == 0.0));
        assert!(subs[2].iter().any(|&v| v != 0.0));
        assert_eq!(subs[2], subs[3]);
        assert_eq!(subs[3], subs[4]);
        assert_ne!(subs[4], subs[5]);
        assert_eq!(subs[5], subs[6]);
        assert_eq!(subs[6], subs[7]);
        // Block 2 ends at frame 8; frame 9 (last flush step) closes the partial block {9}.
        assert_ne!(subs[8], subs[7]);
        assert_ne!(subs[9], subs[8]);
    }

    #[test]
    fn m1_runs_subband_every_frame() {
        let cfg = small_config(Downsample::Every(1));
        let w = ModelWeights::random(&cfg, 3).unwrap();
        let spec = random_spec(5, 33, 1);
        let mut e = FrameEnhancer::new(&w, &cfg).unwrap();
        let mut prev: Option<Vec<f32>> = None;
        for frame in spec.frames() {
            let mut t = FrameTrace::default();
            e.push_frame_traced(frame, Some(&mut t)).unwrap();
            assert!(t.sub.iter().any(|&v| v != 0.0));
            if let Some(p) = prev {
                assert_ne!(p, t.sub);
            }
            prev = Some(t.sub);
        }
    }

    #[test]
    fn infinite_factor_has_no_subband_state() {
        let cfg = small_config(Downsample::Never);
        let w = ModelWeights::random(&cfg, 3).unwrap();
        let e = FrameEnhancer::new(&w, &cfg).unwrap();
        assert!(!e.has_subband_state());
        let cfg1 = small_config(Downsample::Every(1));
        assert!(matches!(FrameEnhancer::new(&w, &cfg1), Err(Error::Config(_))));
    }

    #[test]
    fn look_ahead_alignment() {
        let cfg = small_config(Downsample::Every(2));
        let w = ModelWeights::random(&cfg, 4).unwrap();
        let spec = random_spec(5, 33, 2);
        let mut e = FrameEnhancer::new(&w, &cfg).unwrap();
        let emitted: Vec<bool> = spec.frames().map(|f| e.push_frame(f).unwrap().is_some()).collect();
        assert_eq!(emitted, [false, false, true, true, true]);
        assert_eq!(e.finish().unwrap().len(), 2);
        assert!(matches!(e.finish(), Err(Error::Contract(_))));
        assert!(matches!(e.push_frame(spec.frame(0)), Err(Error::Contract(_))));
    }

    #[test]
    fn causal_with_look_ahead() {
        for m in [Downsample::Every(1), Downsample::Every(2), Downsample::Every(4), Downsample::Never] {
            let cfg = small_config(m);
            let w = ModelWeights::random(&cfg, 6).unwrap();
            let spec = random_spec(12, 33, 3);
            let base = forward_offline(&w, &cfg, &spec).unwrap();
            for t in 0..9 {
                let mut p = spec.clone();
                for k in t + cfg.tau + 1..12 {
                    for c in p.frame_mut(k) {
                        *c = *c * 0.5 + Complex32::new(1.0, -1.0);
                    }
                }
                let out = forward_offline(&w, &cfg, &p).unwrap();
                for k in 0..=t {
                    assert_eq!(base.frame(k), out.frame(k), "m={m} t={t} k={k}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_frames() {
        let cfg = small_config(Downsample::Every(1));
        let w = ModelWeights::random(&cfg, 3).unwrap();
        let mut e = FrameEnhancer::new(&w, &cfg).unwrap();
        assert!(matches!(e.push_frame(&[Complex32::new(0.0, 0.0); 5]), Err(Error::Shape(_))));
        let mut bad = vec![Complex32::new(0.0, 0.0); 33];
        bad[3].im = f32::NAN;
        assert!(matches!(e.push_frame(&bad), Err(Error::Data(_))));
    }
}
