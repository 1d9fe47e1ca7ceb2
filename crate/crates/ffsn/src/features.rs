//! Per-frame intermediate activations, written in the weight-file tensor encoding.
//!
//! A dump uses magic `FFST` and no header words, and holds one tensor
//! `features.<stage>` of shape `steps × width`. Row `t` is the value computed at
//! model step `t`, including the `tau` zero-flush steps at the end.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ffsn_core::dsp::{stft, AnalysisConfig, AudioClip};
use ffsn_core::graph::{FrameEnhancer, FrameTrace};
use ffsn_core::{ModelConfig, ModelWeights};

use crate::error::{bail, Error, Result};
use crate::tensor::{self, Tensor};

pub const MAGIC: &[u8; 4] = b"FFST";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Raw mel magnitudes, before normalization.
    Mel,
    /// Linear-to-mel embedding.
    L2m,
    /// Held sub-band outputs.
    Sub,
    /// Compressed mask, interleaved real/imaginary per bin.
    Mask,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Mel, Stage::L2m, Stage::Sub, Stage::Mask];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Mel => "mel",
            Stage::L2m => "l2m",
            Stage::Sub => "sub",
            Stage::Mask => "mask",
        }
    }

    pub fn width(self, config: &ModelConfig) -> usize {
        match self {
            Stage::Mel | Stage::L2m | Stage::Sub => config.n_mels,
            Stage::Mask => config.mask_dim(),
        }
    }

    fn pick(self, trace: &FrameTrace) -> &[f32] {
        match self {
            Stage::Mel => &trace.mel,
            Stage::L2m => &trace.embedding,
            Stage::Sub => &trace.sub,
            Stage::Mask => &trace.mask,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match Stage::ALL.into_iter().find(|st| st.name() == s) {
            Some(st) => Ok(st),
            None => bail!(Usage, "unknown stage {s:?} (expected mel, l2m, sub or mask)"),
        }
    }
}

/// Runs the model over `clip` and collects one stage's per-step values.
pub fn extract(weights: &ModelWeights, config: &ModelConfig, clip: &AudioClip, stage: Stage) -> Result<Tensor> {
    if stage == Stage::Sub && !config.sub_band_present() {
        bail!(Usage, "stage sub is unavailable without a sub-band stack");
    }
    let analysis = AnalysisConfig::default();
    let spec = stft(clip, &analysis)?;
    let mut enhancer = FrameEnhancer::new(weights, config)?;
    let width = stage.width(config);
    let mut data = Vec::with_capacity((spec.num_frames() + config.tau) * width);
    let mut trace = FrameTrace::default();
    for frame in spec.frames() {
        enhancer.push_frame_traced(frame, Some(&mut trace))?;
        data.extend_from_slice(stage.pick(&trace));
    }
    enhancer.finish_traced(|t| data.extend_from_slice(stage.pick(t)))?;
    let steps = data.len() / width;
    Ok(Tensor::new(format!("features.{stage}"), vec![steps, width], data))
}

pub fn encode(t: &Tensor) -> Vec<u8> {
    tensor::encode(MAGIC, &[], std::slice::from_ref(t))
}

pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    let (_, mut tensors) = tensor::decode(bytes, MAGIC, 0)?;
    if tensors.len() != 1 || tensors[0].dims.len() != 2 || !tensors[0].name.starts_with("features.") {
        bail!(Validation, "a feature dump holds exactly one rank-2 tensor named features.<stage>");
    }
    Ok(tensors.pop().expect("one tensor"))
}

pub fn save(t: &Tensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(t)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
