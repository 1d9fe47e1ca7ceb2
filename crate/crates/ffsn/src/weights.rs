//! `.ffsn` weight files: an 11-word config header followed by the canonical tensor set.
//!
//! Header words, in order: `n_bins, n_mels, neighbors, tau, l2m_hidden[0..2],
//! sub_hidden[0..2], m2l_hidden[0..2], sub_band_present`.

use std::collections::BTreeMap;
use std::path::Path;

use ffsn_core::mel::MelFilterbank;
use ffsn_core::nn::{Affine, Lstm, LstmStack};
use ffsn_core::{Downsample, ModelConfig, ModelWeights};

use crate::error::{bail, Error, Result};
use crate::tensor::{self, Tensor};

pub const MAGIC: &[u8; 4] = b"FFSN";
pub const EXTENSION: &str = "ffsn";
const HEADER_WORDS: usize = 11;
/// Largest look-ahead a file may declare.
pub const MAX_TAU: usize = 64;

struct StackLayout {
    prefix: &'static str,
    input: usize,
    hidden: [usize; 2],
    output: usize,
}

fn layouts(config: &ModelConfig) -> Vec<StackLayout> {
    let mut out = vec![StackLayout { prefix: "l2m", input: config.n_mels, hidden: config.l2m_hidden, output: config.n_mels }];
    if config.sub_band_present() {
        out.push(StackLayout { prefix: "sub", input: config.sub_input_dim(), hidden: config.sub_hidden, output: 1 });
    }
    out.push(StackLayout { prefix: "m2l", input: config.m2l_input_dim(), hidden: config.m2l_hidden, output: config.mask_dim() });
    out
}

/// Canonical tensor names and shapes for `config`, in file order.
pub fn expected_tensors(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = vec![("mel.filterbank".to_string(), vec![config.n_mels, config.n_bins])];
    for s in layouts(config) {
        let mut input = s.input;
        for (i, &h) in s.hidden.iter().enumerate() {
            let p = format!("{}.lstm{i}", s.prefix);
            out.push((format!("{p}.w_input"), vec![4 * h, input]));
            out.push((format!("{p}.w_recurrent"), vec![4 * h, h]));
            out.push((format!("{p}.bias_input"), vec![4 * h]));
            out.push((format!("{p}.bias_recurrent"), vec![4 * h]));
            input = h;
        }
        out.push((format!("{}.affine.weight", s.prefix), vec![s.output, input]));
        out.push((format!("{}.affine.bias", s.prefix), vec![s.output]));
    }
    out
}

fn header(config: &ModelConfig) -> Vec<u32> {
    let c = config;
    [
        c.n_bins,
        c.n_mels,
        c.neighbors,
        c.tau,
        c.l2m_hidden[0],
        c.l2m_hidden[1],
        c.sub_hidden[0],
        c.sub_hidden[1],
        c.m2l_hidden[0],
        c.m2l_hidden[1],
        c.sub_band_present() as usize,
    ]
    .iter()
    .map(|&v| v as u32)
    .collect()
}

fn config_from_header(h: &[u32]) -> Result<ModelConfig> {
    let u = |i: usize| h[i] as usize;
    let downsample = match h[10] {
        1 => Downsample::Every(1),
        0 => Downsample::Never,
        flag => bail!(Validation, "sub_band_present flag is {flag}, expected 0 or 1"),
    };
    let config = ModelConfig {
        n_bins: u(0),
        n_mels: u(1),
        neighbors: u(2),
        tau: u(3),
        l2m_hidden: [u(4), u(5)],
        sub_hidden: [u(6), u(7)],
        m2l_hidden: [u(8), u(9)],
        downsample,
    };
    config.validate().map_err(|e| Error::Validation(e.to_string()))?;
    if config.tau > MAX_TAU {
        bail!(Validation, "look-ahead {} exceeds the supported maximum {MAX_TAU}", config.tau);
    }
    Ok(config)
}

/// Flattens weights into the canonical tensor list.
pub fn to_tensors(weights: &ModelWeights, config: &ModelConfig) -> Result<Vec<Tensor>> {
    weights.validate(config)?;
    let mut data: Vec<&[f32]> = vec![weights.mel.weights()];
    for stack in weights.stacks() {
        for layer in &stack.layers {
            data.extend([&layer.w_input[..], &layer.w_recurrent, &layer.bias_input, &layer.bias_recurrent]);
        }
        data.extend([&stack.affine.weight[..], &stack.affine.bias]);
    }
    Ok(expected_tensors(config)
        .into_iter()
        .zip(data)
        .map(|((name, dims), values)| Tensor::new(name, dims, values.to_vec()))
        .collect())
}

pub fn encode(weights: &ModelWeights, config: &ModelConfig) -> Result<Vec<u8>> {
    Ok(tensor::encode(MAGIC, &header(config), &to_tensors(weights, config)?))
}

/// Parses and fully validates a weight file image.
///
/// The returned config has `downsample` set to `Every(1)` when the file holds a
/// sub-band stack and `Never` otherwise; callers pick the actual factor.
pub fn decode(bytes: &[u8]) -> Result<(ModelWeights, ModelConfig)> {
    let (header, tensors) = tensor::decode(bytes, MAGIC, HEADER_WORDS)?;
    let config = config_from_header(&header)?;
    let expected = expected_tensors(&config);

    let mut by_name = BTreeMap::new();
    for t in tensors {
        if !expected.iter().any(|(name, _)| *name == t.name) {
            bail!(Validation, "unknown tensor {:?}", t.name);
        }
        let name = t.name.clone();
        if by_name.insert(name.clone(), t).is_some() {
            bail!(Validation, "duplicate tensor {name:?}");
        }
    }
    for (name, dims) in &expected {
        match by_name.get(name) {
            None => bail!(Validation, "missing tensor {name:?}"),
            Some(t) if t.dims != *dims => bail!(Validation, "tensor {name:?} has shape {:?}, config needs {dims:?}", t.dims),
            Some(_) => {}
        }
    }

    let mut take = |name: &str| by_name.remove(name).expect("presence checked").data;
    let invalid = |e: ffsn_core::Error| Error::Validation(e.to_string());
    let mel = MelFilterbank::from_weights(config.n_mels, config.n_bins, take("mel.filterbank")).map_err(invalid)?;
    let mut stacks = Vec::new();
    for s in layouts(&config) {
        let mut layers = Vec::new();
        let mut input = s.input;
        for (i, &h) in s.hidden.iter().enumerate() {
            let p = format!("{}.lstm{i}", s.prefix);
            let layer = Lstm::new(
                input,
                h,
                take(&format!("{p}.w_input")),
                take(&format!("{p}.w_recurrent")),
                take(&format!("{p}.bias_input")),
                take(&format!("{p}.bias_recurrent")),
            )
            .map_err(|e| Error::Validation(format!("{p}: {e}")))?;
            layers.push(layer);
            input = h;
        }
        let affine = Affine::new(
            input,
            s.output,
            take(&format!("{}.affine.weight", s.prefix)),
            take(&format!("{}.affine.bias", s.prefix)),
        )
        .map_err(|e| Error::Validation(format!("{}.affine: {e}", s.prefix)))?;
        stacks.push(LstmStack { layers, affine });
    }
    let m2l = stacks.pop().expect("m2l layout");
    let sub = config.sub_band_present().then(|| stacks.pop().expect("sub layout"));
    let l2m = stacks.pop().expect("l2m layout");
    let weights = ModelWeights { l2m, sub, m2l, mel };
    weights.validate(&config).map_err(invalid)?;
    Ok((weights, config))
}

pub fn save(weights: &ModelWeights, config: &ModelConfig, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(weights, config)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<(ModelWeights, ModelConfig)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Applies a user-chosen down-sampling factor to a loaded config.
pub fn with_factor(config: &ModelConfig, downsample: Downsample) -> Result<ModelConfig> {
    if downsample.is_finite() != config.sub_band_present() {
        bail!(
            Validation,
            "m={downsample} needs {} sub-band stack, but the weight file has {}",
            if downsample.is_finite() { "a" } else { "no" },
            if config.sub_band_present() { "one" } else { "none" }
        );
    }
    Ok(config.clone().with_downsample(downsample))
}
