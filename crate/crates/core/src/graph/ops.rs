use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, check_len};
use crate::nn::{StackBatchState, StackState};
use crate::{ModelWeights, Result};

const NORM_EPS: f32 = 1e-10;

/// Cumulative mean of every mel value seen so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormState {
    pub running_sum: f64,
    pub running_count: u64,
}

impl NormState {
    /// Folds `mel` into the running mean, then returns `mel / (mean + 1e-10)`.
    pub fn normalize(&mut self, mel: &[f32]) -> Vec<f32> {
        self.running_sum += mel.iter().map(|&v| v as f64).sum::<f64>();
        self.running_count += mel.len() as u64;
        let mean = self.mean().unwrap_or(0.0) as f32;
        mel.iter().map(|&v| v / (mean + NORM_EPS)).collect()
    }

    pub fn mean(&self) -> Option<f64> {
        (self.running_count > 0).then(|| self.running_sum / self.running_count as f64)
    }
}

/// Per-band sub-band inputs for one frame: `n_freqs` rows of `width = 2N + 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandFeatures {
    n_freqs: usize,
    width: usize,
    data: Vec<f32>,
}

impl SubbandFeatures {
    pub fn zeros(n_freqs: usize, width: usize) -> Self {
        Self { n_freqs, width, data: vec![0.0; n_freqs * width] }
    }

    pub fn from_vec(n_freqs: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        check_len("sub-band features", n_freqs * width, data.len())?;
        Ok(Self { n_freqs, width, data })
    }

    pub fn n_freqs(&self) -> usize {
        self.n_freqs
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, f: usize) -> &[f32] {
        &self.data[f * self.width..(f + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}

/// Runs the linear-to-mel full-band stack on one normalized mel frame.
pub fn l2m_forward(weights: &ModelWeights, norm_mel: &[f32], state: &mut StackState) -> Result<Vec<f32>> {
    weights.l2m.forward(norm_mel, state)
}

/// Builds `[mel[f-N..=f+N], embedding[f]]` for every band, mirroring indices at the edges.
pub fn assemble_subband_inputs(mel: &[f32], embedding: &[f32], neighbors: usize) -> Result<SubbandFeatures> {
    let n = mel.len();
    check_len("l2m embedding", n, embedding.len())?;
    if neighbors >= n {
        bail!(Config, "neighbour count {neighbors} must be smaller than the band count {n}");
    }
    let width = 2 * neighbors + 2;
    let mut data = Vec::with_capacity(n * width);
    let last = n as isize - 1;
    for f in 0..n as isize {
        for offset in -(neighbors as isize)..=neighbors as isize {
            let mut i = f + offset;
            if i < 0 {
                i = -i;
            } else if i > last {
                i = 2 * last - i;
            }
            data.push(mel[i as usize]);
        }
        data.push(embedding[f as usize]);
    }
    Ok(SubbandFeatures { n_freqs: n, width, data })
}

/// Element-wise mean of a block of feature frames.
pub fn downsample_block(frames: &[SubbandFeatures]) -> Result<SubbandFeatures> {
    let Some(first) = frames.first() else {
        bail!(Contract, "cannot average an empty block");
    };
    let mut avg = BlockAverager::new(first.n_freqs, first.width);
    for frame in frames {
        avg.add(frame)?;
    }
    avg.take()
}

/// Streaming form of [`downsample_block`]: a running sum and count.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAverager {
    sum: SubbandFeatures,
    count: usize,
}

impl BlockAverager {
    pub fn new(n_freqs: usize, width: usize) -> Self {
        Self { sum: SubbandFeatures::zeros(n_freqs, width), count: 0 }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, frame: &SubbandFeatures) -> Result<()> {
        if (frame.n_freqs, frame.width) != (self.sum.n_freqs, self.sum.width) {
            bail!(
                Shape,
                "feature frame is {}x{}, block is {}x{}",
                frame.n_freqs,
                frame.width,
                self.sum.n_freqs,
                self.sum.width
            );
        }
        if self.count == 0 {
            self.sum.data.copy_from_slice(&frame.data);
        } else {
            for (s, v) in self.sum.data.iter_mut().zip(&frame.data) {
                *s += v;
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Returns the mean of the accumulated frames and resets the block.
    pub fn take(&mut self) -> Result<SubbandFeatures> {
        if self.count == 0 {
            bail!(Contract, "cannot average an empty block");
        }
        let scale = 1.0 / self.count as f32;
        let mut out = self.sum.clone();
        if self.count > 1 {
            for v in &mut out.data {
                *v *= scale;
            }
        }
        self.count = 0;
        Ok(out)
    }
}

/// Runs the shared sub-band stack once for every band; one scalar per band.
pub fn sub_forward(weights: &ModelWeights, features: &SubbandFeatures, state: &mut StackBatchState) -> Result<Vec<f32>> {
    let Some(sub) = &weights.sub else {
        bail!(Config, "these weights have no sub-band stack");
    };
    let batch = state.layers.first().map_or(0, |l| l.batch());
    if batch != features.n_freqs {
        bail!(Contract, "{} bands but {batch} sub-band states", features.n_freqs);
    }
    sub.forward_batch(&features.data, state)
}

/// Runs the mel-to-linear stack on `[embedding; sub_out]` (or `embedding` alone
/// without a sub-band path), returning the compressed mask frame.
pub fn m2l_forward(
    weights: &ModelWeights,
    embedding: &[f32],
    sub_out: Option<&[f32]>,
    state: &mut StackState,
) -> Result<Vec<f32>> {
    match sub_out {
        Some(sub) => {
            let mut input = Vec::with_capacity(embedding.len() + sub.len());
            input.extend_from_slice(embedding);
            input.extend_from_slice(sub);
            weights.m2l.forward(&input, state)
        }
        None => weights.m2l.forward(embedding, state),
    }
}
