//! Streaming inference core for a mel-domain full-band / sub-band speech
//! enhancement network.
//!
//! The pipeline runs in the STFT domain. Linear-frequency magnitudes are
//! projected onto a mel filterbank and fed through three cascaded recurrent
//! stacks:
//!
//! 1. a linear-to-mel full-band stack producing one embedding value per mel band,
//! 2. a sub-band stack shared across mel bands, evaluated on each band's
//!    neighbourhood (optionally on block-averaged frames, see [`Downsample`]),
//! 3. a mel-to-linear full-band stack predicting a compressed complex ratio mask
//!    for every linear bin.
//!
//! The mask is decompressed and applied to the noisy spectrum with a fixed
//! look-ahead of `tau` frames. [`stream::StreamEnhancer`] wraps the whole chain
//! for sample-level real-time use; [`graph::forward_offline`] runs the same
//! computation over a whole spectrogram.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, WAV handling and
//! the command-line tool live in the `ffsn` crate.

#![no_std]

extern crate alloc;

pub mod cirm;
pub mod complexity;
pub mod dsp;
mod error;
mod fft;
pub mod graph;
pub mod mel;
pub mod metrics;
pub mod nn;
pub mod stream;

pub use error::{Error, Result};
pub use graph::{Downsample, ModelConfig, ModelWeights};

/// The only sample rate the engine accepts.
pub const SAMPLE_RATE: u32 = 16_000;
