//! 16-bit PCM mono 16 kHz WAV files, nothing else.

use std::io::{Read, Seek, Write};
use std::path::Path;

use ffsn_core::dsp::AudioClip;
use ffsn_core::SAMPLE_RATE;

use crate::error::{bail, Error, Result};

pub const SCALE: f32 = 32768.0;

fn spec() -> hound::WavSpec {
    hound::WavSpec { channels: 1, sample_rate: SAMPLE_RATE, bits_per_sample: 16, sample_format: hound::SampleFormat::Int }
}

/// hound reports short reads as `Other`/`UnexpectedEof` I/O errors; those are malformed files.
fn classify(path: &Path, e: hound::Error) -> Error {
    use std::io::ErrorKind;
    match e {
        hound::Error::IoError(io) if !matches!(io.kind(), ErrorKind::UnexpectedEof | ErrorKind::Other) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

pub fn read_from<R: Read>(reader: R, label: &Path) -> Result<AudioClip> {
    let mut wav = hound::WavReader::new(reader).map_err(|e| classify(label, e))?;
    let s = wav.spec();
    if s != spec() {
        bail!(
            Format,
            "{}: {} channel(s), {} Hz, {}-bit {:?}; only mono 16000 Hz 16-bit PCM is supported",
            label.display(),
            s.channels,
            s.sample_rate,
            s.bits_per_sample,
            s.sample_format
        );
    }
    let samples = wav
        .samples::<i16>()
        .map(|v| v.map(|v| v as f32 / SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| classify(label, e))?;
    Ok(AudioClip::new(samples, SAMPLE_RATE))
}

pub fn read(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_from(std::io::BufReader::new(file), path)
}

/// Quantizes to 16 bits with rounding; values outside `[-1, 1)` are clipped.
pub fn quantize(v: f32) -> i16 {
    (v * SCALE).round().clamp(i16::MIN as f32, i16::MAX as f32) as i16
}

pub fn write_to<W: Write + Seek>(writer: W, clip: &AudioClip, label: &Path) -> Result<()> {
    if clip.sample_rate != SAMPLE_RATE {
        bail!(Usage, "cannot write {} Hz audio; only {SAMPLE_RATE} Hz is supported", clip.sample_rate);
    }
    let mut wav = hound::WavWriter::new(writer, spec()).map_err(|e| classify(label, e))?;
    for &v in &clip.samples {
        wav.write_sample(quantize(v)).map_err(|e| classify(label, e))?;
    }
    wav.finalize().map_err(|e| classify(label, e))
}

pub fn write(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_to(std::io::BufWriter::new(file), clip, path)
}
