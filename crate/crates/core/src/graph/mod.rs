//! Model configuration, weights and the frame-level enhancement graph.

mod enhancer;
mod ops;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::bail;
use crate::mel::MelFilterbank;
use crate::nn::{Affine, Lstm, LstmStack};
use crate::{Error, Result};

pub use enhancer::{forward_offline, FrameEnhancer, FrameTrace};
pub use ops::{
    assemble_subband_inputs, downsample_block, l2m_forward, m2l_forward, sub_forward, BlockAverager, NormState,
    SubbandFeatures,
};

/// STFT frames per second at 16 kHz with a 256-sample hop.
pub const FRAME_RATE: f64 = 62.5;

/// Temporal down-sampling factor `m` of the sub-band path.
///
/// `Every(m)` runs the sub-band stack once per `m` frames on the block average;
/// `Never` removes the sub-band stack altogether.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Downsample {
    Every(u32),
    Never,
}

impl Downsample {
    pub fn factor(m: u32) -> Result<Self> {
        if m == 0 {
            bail!(Config, "down-sampling factor must be at least 1");
        }
        Ok(Self::Every(m))
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Self::Every(_))
    }

    pub fn as_factor(self) -> Option<u32> {
        match self {
            Self::Every(m) => Some(m),
            Self::Never => None,
        }
    }
}

impl fmt::Display for Downsample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Every(m) => write!(f, "{m}"),
            Self::Never => f.write_str("inf"),
        }
    }
}

impl FromStr for Downsample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "none" => Ok(Self::Never),
            other => match other.parse::<u32>() {
                Ok(m) => Self::factor(m),
                Err(_) => bail!(Config, "invalid down-sampling factor {s:?} (expected a positive integer or \"inf\")"),
            },
        }
    }
}

/// Architecture hyper-parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    /// Linear frequency bins `F`.
    pub n_bins: usize,
    /// Mel bands `F_mel`.
    pub n_mels: usize,
    /// Neighbouring mel bands on each side fed to the sub-band stack (`N`).
    pub neighbors: usize,
    /// Output look-ahead in frames (`tau`).
    pub tau: usize,
    pub l2m_hidden: [usize; 2],
    pub sub_hidden: [usize; 2],
    pub m2l_hidden: [usize; 2],
    pub downsample: Downsample,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_bins: 257,
            n_mels: 64,
            neighbors: 5,
            tau: 2,
            l2m_hidden: [384, 257],
            sub_hidden: [384, 384],
            m2l_hidden: [512, 512],
            downsample: Downsample::Every(1),
        }
    }
}

impl ModelConfig {
    pub fn with_downsample(mut self, downsample: Downsample) -> Self {
        self.downsample = downsample;
        self
    }

    pub fn sub_band_present(&self) -> bool {
        self.downsample.is_finite()
    }

    /// `2N + 2`
    pub fn sub_input_dim(&self) -> usize {
        2 * self.neighbors + 2
    }

    /// `2·F_mel` with the sub-band path, `F_mel` without it.
    pub fn m2l_input_dim(&self) -> usize {
        if self.sub_band_present() {
            2 * self.n_mels
        } else {
            self.n_mels
        }
    }

    /// `2·F`
    pub fn mask_dim(&self) -> usize {
        2 * self.n_bins
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 || self.n_mels < 2 {
            bail!(Config, "need at least 2 bins and 2 mel bands");
        }
        if self.neighbors >= self.n_mels {
            bail!(Config, "neighbour count {} must be smaller than the mel band count {}", self.neighbors, self.n_mels);
        }
        let hidden = self.l2m_hidden.iter().chain(&self.sub_hidden).chain(&self.m2l_hidden);
        if hidden.into_iter().any(|&h| h == 0) {
            bail!(Config, "hidden sizes must be positive");
        }
        if self.downsample == Downsample::Every(0) {
            bail!(Config, "down-sampling factor must be at least 1");
        }
        Ok(())
    }
}

/// All learned tensors plus the mel projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub l2m: LstmStack,
    /// Absent for [`Downsample::Never`].
    pub sub: Option<LstmStack>,
    pub m2l: LstmStack,
    pub mel: MelFilterbank,
}

impl ModelWeights {
    /// All-zero weights with the default mel filterbank for `config`.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            l2m: LstmStack::zeros(config.n_mels, &config.l2m_hidden, config.n_mels),
            sub: config
                .sub_band_present()
                .then(|| LstmStack::zeros(config.sub_input_dim(), &config.sub_hidden, 1)),
            m2l: LstmStack::zeros(config.m2l_input_dim(), &config.m2l_hidden, config.mask_dim()),
            mel: default_filterbank(config)?,
        })
    }

    /// Uniform `±1/sqrt(fan)` initialization from a seed, deterministic across platforms.
    pub fn random(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut weights = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for stack in weights.stacks_mut() {
            for layer in &mut stack.layers {
                init_lstm(layer, &mut rng);
            }
            init_affine(&mut stack.affine, &mut rng);
        }
        Ok(weights)
    }

    pub fn stacks(&self) -> impl Iterator<Item = &LstmStack> {
        [Some(&self.l2m), self.sub.as_ref(), Some(&self.m2l)].into_iter().flatten()
    }

    pub fn stacks_mut(&mut self) -> impl Iterator<Item = &mut LstmStack> {
        [Some(&mut self.l2m), self.sub.as_mut(), Some(&mut self.m2l)].into_iter().flatten()
    }

    /// Learned parameters; the mel filterbank is not counted.
    pub fn param_count(&self) -> usize {
        self.stacks().map(LstmStack::param_count).sum()
    }

    /// Checks every tensor shape against `config`.
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        config.validate()?;
        if self.sub.is_some() != config.sub_band_present() {
            bail!(
                Config,
                "down-sampling factor {} is inconsistent with weights {} a sub-band stack",
                config.downsample,
                if self.sub.is_some() { "containing" } else { "without" }
            );
        }
        if self.mel.n_mels() != config.n_mels || self.mel.n_bins() != config.n_bins {
            bail!(
                Shape,
                "mel filterbank is {}x{}, config needs {}x{}",
                self.mel.n_mels(),
                self.mel.n_bins(),
                config.n_mels,
                config.n_bins
            );
        }
        check_stack("l2m", &self.l2m, config.n_mels, &config.l2m_hidden, config.n_mels)?;
        if let Some(sub) = &self.sub {
            check_stack("sub", sub, config.sub_input_dim(), &config.sub_hidden, 1)?;
        }
        check_stack("m2l", &self.m2l, config.m2l_input_dim(), &config.m2l_hidden, config.mask_dim())
    }
}

fn default_filterbank(config: &ModelConfig) -> Result<MelFilterbank> {
    let nyquist = crate::SAMPLE_RATE as f64 / 2.0;
    MelFilterbank::build(config.n_bins, config.n_mels, crate::SAMPLE_RATE, 0.0, nyquist)
}

fn check_stack(name: &str, stack: &LstmStack, input: usize, hidden: &[usize], output: usize) -> Result<()> {
    stack.validate().map_err(|e| match e {
        Error::Shape(msg) => Error::Shape(alloc::format!("{name}: {msg}")),
        other => other,
    })?;
    let dims: Vec<usize> = stack.layers.iter().map(Lstm::hidden_dim).collect();
    if stack.input_dim() != input || dims != hidden || stack.output_dim() != output {
        bail!(
            Shape,
            "{name}: stack is {} -> {:?} -> {}, config needs {input} -> {hidden:?} -> {output}",
            stack.input_dim(),
            dims,
            stack.output_dim()
        );
    }
    Ok(())
}

fn init_lstm(layer: &mut Lstm, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / libm::sqrtf(layer.hidden_dim() as f32);
    for v in layer
        .w_input
        .iter_mut()
        .chain(&mut layer.w_recurrent)
        .chain(&mut layer.bias_input)
        .chain(&mut layer.bias_recurrent)
    {
        *v = rng.gen_range(-bound..bound);
    }
}

fn init_affine(layer: &mut Affine, rng: &mut ChaCha8Rng) {
    let bound = 1.0 / libm::sqrtf(layer.in_dim() as f32);
    for v in layer.weight.iter_mut().chain(&mut layer.bias) {
        *v = rng.gen_range(-bound..bound);
    }
}
