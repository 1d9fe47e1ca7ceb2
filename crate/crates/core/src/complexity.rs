//! Analytic parameter and multiply-accumulate accounting.
//!
//! Conventions:
//! - LSTM parameters: `4·(d_in·d_h + d_h² + 2·d_h)` (two bias vectors), or
//!   `4·(d_in·d_h + d_h² + d_h)` under [`ParamConvention::FusedBias`].
//! - LSTM MACs per step: `4·(d_in·d_h + d_h² + d_h) + 3·d_h`, i.e. the gate
//!   matrix products, one MAC per gate bias and three element-wise products
//!   for the cell and output updates. Activations are free.
//! - Affine: `d_in·d_out + d_out` parameters, `d_in·d_out` MACs.
//! - The mel filterbank is fixed, not learned, and is not counted.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write};
use core::str::FromStr;

use crate::error::bail;
use crate::graph::{Downsample, ModelConfig, FRAME_RATE};
use crate::{Error, Result};

/// Architectures whose cost can be analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Mel-domain cascade with sub-band down-sampling factor `m`.
    FastFullSubNet(Downsample),
    /// Linear-frequency full-band + 257-band sub-band baseline.
    FullSubNet,
    /// Four 512-unit LSTM layers on linear-frequency input.
    FullBand,
}

impl Preset {
    /// Every row of the reference comparison, in table order.
    pub fn all() -> Vec<Preset> {
        vec![
            Preset::FullSubNet,
            Preset::FullBand,
            Preset::FastFullSubNet(Downsample::Every(1)),
            Preset::FastFullSubNet(Downsample::Every(2)),
            Preset::FastFullSubNet(Downsample::Every(4)),
            Preset::FastFullSubNet(Downsample::Every(8)),
            Preset::FastFullSubNet(Downsample::Never),
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::FastFullSubNet(_) => "fast-fullsubnet",
            Preset::FullSubNet => "fullsubnet",
            Preset::FullBand => "full-band",
        }
    }

    fn factor_label(&self) -> String {
        match self {
            Preset::FastFullSubNet(m) => alloc::format!("{m}"),
            _ => String::from("-"),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::FastFullSubNet(m) => write!(f, "fast-fullsubnet:{m}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts `fullsubnet`, `full-band`, `fast-fullsubnet` (m = 1) and
    /// `fast-fullsubnet:<m>` / `fast:<m>` with `m` a positive integer or `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, factor) = match lower.split_once(':') {
            Some((n, m)) => (n, Some(m)),
            None => (lower.as_str(), None),
        };
        match (name, factor) {
            ("fullsubnet", None) => Ok(Preset::FullSubNet),
            ("full-band" | "fullband", None) => Ok(Preset::FullBand),
            ("fast-fullsubnet" | "fast", None) => Ok(Preset::FastFullSubNet(Downsample::Every(1))),
            ("fast-fullsubnet" | "fast", Some(m)) => Ok(Preset::FastFullSubNet(m.parse()?)),
            _ => bail!(Config, "unknown preset {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Recurrent,
    Affine,
}

/// One layer and how often it runs per STFT frame (`executions_num / executions_den`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerDescriptor {
    pub kind: LayerKind,
    pub input_dim: u64,
    /// Hidden size for recurrent layers.
    pub output_dim: u64,
    pub executions_num: u64,
    pub executions_den: u64,
}

impl LayerDescriptor {
    fn new(kind: LayerKind, input_dim: u64, output_dim: u64, num: u64, den: u64) -> Self {
        Self { kind, input_dim, output_dim, executions_num: num, executions_den: den }
    }

    pub fn executions_per_frame(&self) -> f64 {
        self.executions_num as f64 / self.executions_den as f64
    }

    pub fn params(&self, convention: ParamConvention) -> u64 {
        let (i, o) = (self.input_dim, self.output_dim);
        match self.kind {
            LayerKind::Recurrent => {
                let biases = match convention {
                    ParamConvention::SeparateBiases => 2,
                    ParamConvention::FusedBias => 1,
                };
                4 * (i * o + o * o + biases * o)
            }
            LayerKind::Affine => i * o + o,
        }
    }

    /// MACs of a single execution.
    pub fn macs_per_execution(&self) -> u64 {
        let (i, o) = (self.input_dim, self.output_dim);
        match self.kind {
            LayerKind::Recurrent => 4 * (i * o + o * o + o) + 3 * o,
            LayerKind::Affine => i * o,
        }
    }

    pub fn macs_per_frame(&self) -> f64 {
        self.macs_per_execution() as f64 * self.executions_per_frame()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackDescriptor {
    pub name: &'static str,
    pub layers: Vec<LayerDescriptor>,
}

/// How LSTM biases are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParamConvention {
    /// Input and recurrent bias vectors counted separately, matching the stored tensors.
    #[default]
    SeparateBiases,
    /// A single bias vector per LSTM layer.
    FusedBias,
}

fn stack(name: &'static str, input: u64, hidden: &[u64], output: u64, num: u64, den: u64) -> StackDescriptor {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut d = input;
    for &h in hidden {
        layers.push(LayerDescriptor::new(LayerKind::Recurrent, d, h, num, den));
        d = h;
    }
    layers.push(LayerDescriptor::new(LayerKind::Affine, d, output, num, den));
    StackDescriptor { name, layers }
}

/// Layer inventory of a preset with the default geometry (257 bins, 64 mel bands).
pub fn describe(preset: Preset) -> Vec<StackDescriptor> {
    match preset {
        Preset::FastFullSubNet(m) => describe_config(&ModelConfig::default().with_downsample(m)),
        Preset::FullSubNet => vec![
            stack("full-band", 257, &[512, 512], 257, 1, 1),
            stack("sub-band", 32, &[384, 384], 2, 257, 1),
        ],
        Preset::FullBand => vec![stack("full-band", 257, &[512, 512, 512, 512], 514, 1, 1)],
    }
}

/// Layer inventory of an arbitrary model configuration.
pub fn describe_config(config: &ModelConfig) -> Vec<StackDescriptor> {
    let h = |v: &[usize; 2]| [v[0] as u64, v[1] as u64];
    let mels = config.n_mels as u64;
    let mut stacks = vec![stack("l2m", mels, &h(&config.l2m_hidden), mels, 1, 1)];
    if let Downsample::Every(m) = config.downsample {
        stacks.push(stack("sub", config.sub_input_dim() as u64, &h(&config.sub_hidden), 1, mels, m as u64));
    }
    stacks.push(stack("m2l", config.m2l_input_dim() as u64, &h(&config.m2l_hidden), config.mask_dim() as u64, 1, 1));
    stacks
}

pub fn count_params(preset: Preset) -> u64 {
    count_params_with(preset, ParamConvention::default())
}

pub fn count_params_with(preset: Preset, convention: ParamConvention) -> u64 {
    params_of(&describe(preset), convention)
}

fn params_of(stacks: &[StackDescriptor], convention: ParamConvention) -> u64 {
    stacks.iter().flat_map(|s| &s.layers).map(|l| l.params(convention)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackCost {
    pub name: &'static str,
    pub params: u64,
    pub macs_per_frame: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub preset: Preset,
    pub params: u64,
    /// Fractional when the sub-band rate `F_mel / m` is not an integer.
    pub macs_per_frame: f64,
    pub macs_per_second: f64,
    pub stacks: Vec<StackCost>,
}

impl CostReport {
    pub fn params_millions(&self) -> f64 {
        self.params as f64 / 1e6
    }

    pub fn giga_macs_per_second(&self) -> f64 {
        self.macs_per_second / 1e9
    }
}

pub fn count_macs(preset: Preset, frame_rate: f64) -> CostReport {
    let stacks: Vec<StackCost> = describe(preset)
        .iter()
        .map(|s| StackCost {
            name: s.name,
            params: params_of(core::slice::from_ref(s), ParamConvention::default()),
            macs_per_frame: s.layers.iter().map(LayerDescriptor::macs_per_frame).sum(),
        })
        .collect();
    let params = stacks.iter().map(|s| s.params).sum();
    let macs_per_frame: f64 = stacks.iter().map(|s| s.macs_per_frame).sum();
    CostReport { preset, params, macs_per_frame, macs_per_second: macs_per_frame * frame_rate, stacks }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    #[default]
    Text,
    Csv,
}

/// Renders parameter and MAC columns for `presets`, with MAC ratios against
/// the FullSubNet preset.
pub fn compare(presets: &[Preset], format: TableFormat) -> String {
    let baseline = count_macs(Preset::FullSubNet, FRAME_RATE).macs_per_second;
    let mut out = String::new();
    match format {
        TableFormat::Text => {
            let _ = writeln!(
                out,
                "{:<16} {:>4} {:>11} {:>9} {:>14} {:>10} {:>8}",
                "preset", "m", "params", "params(M)", "MACs/frame", "MACs(G/s)", "ratio"
            );
        }
        TableFormat::Csv => out.push_str("preset,m,params,params_m,macs_per_frame,macs_g_per_s,macs_ratio\n"),
    }
    for &preset in presets {
        let r = count_macs(preset, FRAME_RATE);
        let ratio = r.macs_per_second / baseline;
        let _ = match format {
            TableFormat::Text => writeln!(
                out,
                "{:<16} {:>4} {:>11} {:>9.2} {:>14.0} {:>10.2} {:>8.3}",
                preset.name(),
                preset.factor_label(),
                r.params,
                r.params_millions(),
                r.macs_per_frame,
                r.giga_macs_per_second(),
                ratio
            ),
            TableFormat::Csv => writeln!(
                out,
                "{},{},{},{:.2},{:.0},{:.4},{:.4}",
                preset.name(),
                preset.factor_label(),
                r.params,
                r.params_millions(),
                r.macs_per_frame,
                r.giga_macs_per_second(),
                ratio
            ),
        };
    }
    out
}
