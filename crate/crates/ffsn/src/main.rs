use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use ffsn::features::{self, Stage};
use ffsn::ffsn_core::complexity::{self, Preset, TableFormat};
use ffsn::ffsn_core::stream::{enhance_offline, enhance_streaming};
use ffsn::ffsn_core::{Downsample, ModelConfig, ModelWeights};
use ffsn::{bench, metric, wav, weights, Error};

#[derive(Parser)]
#[command(name = "ffsn", version, about = "Streaming speech enhancement with a mel-domain sub-band/full-band cascade")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance a 16 kHz mono 16-bit WAV file.
    Enhance {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, env = "FFSN_WEIGHTS")]
        weights: PathBuf,
        /// Sub-band down-sampling factor (positive integer or "inf"). Defaults to 1, or inf for weights without a sub-band stack.
        #[arg(long)]
        m: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Stream)]
        mode: Mode,
        /// Samples per push in stream mode.
        #[arg(long, default_value_t = 256)]
        chunk: usize,
    },
    /// Measure the real-time factor on random noise.
    Bench {
        #[arg(long, env = "FFSN_WEIGHTS", required_unless_present = "random_weights")]
        weights: Option<PathBuf>,
        /// Use seeded random weights of the default size instead of a file.
        #[arg(long)]
        random_weights: bool,
        #[arg(long, default_value = "1")]
        m: String,
        /// Seconds of audio per run.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scale-invariant SDR of an estimate against a reference, in dB.
    Sisdr { reference: PathBuf, estimate: PathBuf },
    /// Parameter and MAC table for architecture presets.
    Complexity {
        /// e.g. fullsubnet, full-band, fast-fullsubnet:2, fast:inf. Repeatable; all presets when omitted.
        #[arg(long = "preset")]
        presets: Vec<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Dump one intermediate stage, one row per model step.
    Features {
        input: PathBuf,
        #[arg(long, env = "FFSN_WEIGHTS")]
        weights: PathBuf,
        #[arg(long)]
        m: Option<String>,
        #[arg(long)]
        stage: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a weight file with seeded random values and the default layout.
    InitWeights {
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Omit the sub-band stack (the m = inf variant).
        #[arg(long)]
        no_subband: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Stream,
    Offline,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

fn parse_factor(m: &str) -> ffsn::Result<Downsample> {
    m.parse::<Downsample>().map_err(|e| Error::Usage(e.to_string()))
}

fn load_model(path: &Path, m: Option<&str>) -> anyhow::Result<(ModelWeights, ModelConfig)> {
    let (w, cfg) = weights::load(path).with_context(|| format!("loading weights {}", path.display()))?;
    let downsample = match m {
        Some(m) => parse_factor(m)?,
        None => cfg.downsample,
    };
    let cfg = weights::with_factor(&cfg, downsample)?;
    Ok((w, cfg))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Enhance { input, output, weights, m, mode, chunk } => {
            let (w, cfg) = load_model(&weights, m.as_deref())?;
            let clip = wav::read(&input)?;
            let out = match mode {
                Mode::Stream => enhance_streaming(&w, &cfg, &clip, chunk),
                Mode::Offline => enhance_offline(&w, &cfg, &clip),
            }
            .map_err(Error::from)?;
            wav::write(&output, &out)?;
        }
        Command::Bench { weights, random_weights, m, duration, repeats, seed } => {
            let downsample = parse_factor(&m)?;
            let (w, cfg) = match weights {
                Some(path) if !random_weights => load_model(&path, Some(&m))?,
                _ => {
                    let cfg = ModelConfig::default().with_downsample(downsample);
                    (ModelWeights::random(&cfg, seed).map_err(Error::from)?, cfg)
                }
            };
            println!("{}", bench::run(&w, &cfg, duration, repeats, seed)?);
        }
        Command::Sisdr { reference, estimate } => {
            println!("{}", metric::format_db(metric::si_sdr_files(&reference, &estimate)?));
        }
        Command::Complexity { presets, format } => {
            let presets = if presets.is_empty() {
                Preset::all()
            } else {
                presets
                    .iter()
                    .map(|p| p.parse::<Preset>().map_err(|e| Error::Usage(e.to_string())))
                    .collect::<ffsn::Result<Vec<_>>>()?
            };
            let format = match format {
                Format::Text => TableFormat::Text,
                Format::Csv => TableFormat::Csv,
            };
            print!("{}", complexity::compare(&presets, format));
        }
        Command::Features { input, weights, m, stage, out } => {
            let stage: Stage = stage.parse()?;
            let (w, cfg) = load_model(&weights, m.as_deref())?;
            let clip = wav::read(&input)?;
            let t = features::extract(&w, &cfg, &clip, stage)?;
            features::save(&t, &out)?;
            eprintln!("wrote {} ({} x {})", out.display(), t.dims[0], t.dims[1]);
        }
        Command::InitWeights { output, seed, no_subband } => {
            let m = if no_subband { Downsample::Never } else { Downsample::Every(1) };
            let cfg = ModelConfig::default().with_downsample(m);
            let w = ModelWeights::random(&cfg, seed).map_err(Error::from)?;
            weights::save(&w, &cfg, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
